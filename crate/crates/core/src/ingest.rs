//! From raw consumption logs or playlists to a cleaned co-occurrence count matrix.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SparseSymmetricMatrix;
use crate::rng;
use crate::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub owner: String,
    pub timestamp: f64,
    pub item: String,
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub records: Vec<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    Session,
    Playlist,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub owner: String,
    pub items: Vec<String>,
}

impl Group {
    /// Drops repeated items, keeping first occurrences in order.
    pub fn dedup(&mut self) {
        let mut seen = HashSet::with_capacity(self.items.len());
        self.items.retain(|it| seen.insert(it.clone()));
    }

    pub fn distinct_count(&self) -> usize {
        self.items.iter().collect::<HashSet<_>>().len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedCorpus {
    pub kind: CorpusKind,
    pub groups: Vec<Group>,
}

impl GroupedCorpus {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Deduplicates every group and drops groups left with fewer than two items.
    pub fn deduplicated(mut self) -> Self {
        for g in &mut self.groups {
            g.dedup();
        }
        self.groups.retain(|g| g.items.len() >= 2);
        self
    }
}

/// Splits each owner's stream into sessions.
///
/// Records shorter than `skip_threshold` are removed first; a gap strictly
/// greater than `gap` seconds between consecutive remaining records starts a
/// new session. Sessions with fewer than two distinct items are dropped.
pub fn sessionize(log: &EventLog, gap: f64, skip_threshold: f64) -> Result<GroupedCorpus> {
    if !(gap > 0.0) {
        return Err(Error::invalid(format!("session gap must be positive, got {gap}")));
    }
    if !(skip_threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "skip threshold must be non-negative, got {skip_threshold}"
        )));
    }
    for r in &log.records {
        if r.item.is_empty() {
            return Err(Error::invalid(format!("empty item id for owner {:?}", r.owner)));
        }
        if !r.timestamp.is_finite() {
            return Err(Error::invalid(format!("non-finite timestamp for owner {:?}", r.owner)));
        }
        if let Some(d) = r.duration {
            if !(d >= 0.0) {
                return Err(Error::invalid(format!(
                    "negative duration {d} for owner {:?} item {:?}",
                    r.owner, r.item
                )));
            }
        }
    }

    let has_durations = log.records.iter().any(|r| r.duration.is_some());
    if !has_durations && skip_threshold > 0.0 && !log.records.is_empty() {
        log::warn!("event log carries no durations; skip filtering disabled");
    }

    let mut records: Vec<&Event> = log
        .records
        .iter()
        .filter(|r| r.duration.is_none_or(|d| d >= skip_threshold))
        .collect();
    records.sort_by(|a, b| {
        a.owner
            .cmp(&b.owner)
            .then(a.timestamp.total_cmp(&b.timestamp))
            .then_with(|| a.item.cmp(&b.item))
    });

    let mut groups = Vec::new();
    let mut current: Option<(String, f64, Vec<String>)> = None;
    for r in records {
        match current.as_mut() {
            Some((owner, last, items)) if *owner == r.owner && r.timestamp - *last <= gap => {
                items.push(r.item.clone());
                *last = r.timestamp;
            }
            _ => {
                if let Some((owner, _, items)) = current.take() {
                    groups.push(Group { owner, items });
                }
                current = Some((r.owner.clone(), r.timestamp, vec![r.item.clone()]));
            }
        }
    }
    if let Some((owner, _, items)) = current {
        groups.push(Group { owner, items });
    }

    Ok(GroupedCorpus {
        kind: CorpusKind::Session,
        groups,
    }
    .deduplicated())
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Removes over-long playlists (raw length above `length_sigma_mult · σ`) and
/// playlists with fewer than `min_unique` distinct items, then deduplicates.
pub fn clean_playlists(
    playlists: &GroupedCorpus,
    min_unique: usize,
    length_sigma_mult: f64,
) -> Result<GroupedCorpus> {
    if playlists.kind != CorpusKind::Playlist {
        return Err(Error::invalid("clean_playlists expects a playlist corpus"));
    }
    if playlists.groups.len() < 2 {
        return Err(Error::InsufficientCorpus(format!(
            "{} playlist(s); length deviation undefined",
            playlists.groups.len()
        )));
    }
    let lengths: Vec<f64> = playlists.groups.iter().map(|g| g.items.len() as f64).collect();
    let cutoff = length_sigma_mult * population_std(&lengths);

    let groups = playlists
        .groups
        .iter()
        .filter(|g| (g.items.len() as f64) <= cutoff)
        .filter(|g| g.distinct_count() >= min_unique)
        .cloned()
        .collect();
    Ok(GroupedCorpus {
        kind: CorpusKind::Playlist,
        groups,
    }
    .deduplicated())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceCounts {
    pub matrix: SparseSymmetricMatrix,
    pub vocab: Vocab,
}

/// Counts within-group item pairs.
///
/// Pairs whose raw count summed over all owners is below `min_count` are
/// removed before any per-owner normalization. With `per_owner_normalize`,
/// each owner's counts are divided by that owner's group count and the
/// owner matrices are summed.
pub fn build_cooccurrence(
    corpus: &GroupedCorpus,
    per_owner_normalize: bool,
    min_count: u64,
) -> Result<CooccurrenceCounts> {
    if corpus.is_empty() {
        return Err(Error::InsufficientCorpus("empty corpus".into()));
    }
    let mut ids: Vec<&str> = corpus
        .groups
        .iter()
        .flat_map(|g| g.items.iter().map(String::as_str))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    ids.sort_unstable();
    let vocab = Vocab::new(ids.iter().map(|s| s.to_string()).collect())?;

    // Owner order is fixed by name so the floating-point sums are reproducible.
    let mut by_owner: BTreeMap<&str, Vec<Vec<usize>>> = BTreeMap::new();
    for g in &corpus.groups {
        let mut items: Vec<usize> = g
            .items
            .iter()
            .map(|it| vocab.index_of(it).expect("vocab built from corpus"))
            .collect();
        items.sort_unstable();
        items.dedup();
        by_owner.entry(g.owner.as_str()).or_default().push(items);
    }

    let mut owner_counts: Vec<(usize, HashMap<(usize, usize), u64>)> = Vec::new();
    let mut totals: HashMap<(usize, usize), u64> = HashMap::new();
    for groups in by_owner.values() {
        let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
        for items in groups {
            for (a, &i) in items.iter().enumerate() {
                for &j in &items[a + 1..] {
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
        for (&k, &c) in &counts {
            *totals.entry(k).or_insert(0) += c;
        }
        owner_counts.push((groups.len(), counts));
    }

    let kept = |k: &(usize, usize)| totals[k] >= min_count;
    let cells: BTreeMap<(usize, usize), f64> = if per_owner_normalize {
        let mut cells = BTreeMap::new();
        for (n_groups, counts) in &owner_counts {
            let mut keys: Vec<_> = counts.keys().filter(|k| kept(k)).copied().collect();
            keys.sort_unstable();
            for k in keys {
                *cells.entry(k).or_insert(0.0) += counts[&k] as f64 / *n_groups as f64;
            }
        }
        cells
    } else {
        totals
            .iter()
            .filter(|(k, _)| kept(k))
            .map(|(&k, &c)| (k, c as f64))
            .collect()
    };

    let matrix = SparseSymmetricMatrix::from_canonical(
        vocab.len(),
        cells.into_iter().filter(|&(_, w)| w > 0.0),
    );
    Ok(CooccurrenceCounts { matrix, vocab })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub communities: usize,
    pub nodes_per_community: usize,
    pub groups: usize,
    pub intra_prob: f64,
    pub min_group_size: usize,
    pub max_group_size: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            communities: 4,
            nodes_per_community: 125,
            groups: 20_000,
            intra_prob: 0.9,
            min_group_size: 3,
            max_group_size: 8,
            seed: 0,
        }
    }
}

/// Generator ground truth retained alongside a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    /// Community of every node, indexed by node number.
    pub community: Vec<usize>,
    /// Home community of every generated group.
    pub home: Vec<usize>,
}

impl SynthTruth {
    pub fn item_id(node: usize) -> String {
        format!("n{node:06}")
    }

    pub fn node_of(item: &str) -> Option<usize> {
        item.strip_prefix('n')?.parse().ok()
    }

    /// `(item-id, community label)` pairs for a label file.
    pub fn labels(&self) -> Vec<(String, String)> {
        self.community
            .iter()
            .enumerate()
            .map(|(n, c)| (Self::item_id(n), format!("c{c}")))
            .collect()
    }
}

/// Planted-community playlist corpus.
///
/// Each group picks a uniform home community and a uniform size in
/// `[min_group_size, max_group_size]`; every draw comes from the home
/// community with probability `intra_prob`, otherwise uniformly from all
/// nodes. Draws repeat until the group holds `size` distinct items.
pub fn synth_corpus(p: &SynthParams) -> Result<(GroupedCorpus, SynthTruth)> {
    if p.communities == 0 || p.nodes_per_community == 0 {
        return Err(Error::invalid("synthetic corpus needs at least one community and node"));
    }
    if !(0.0..=1.0).contains(&p.intra_prob) {
        return Err(Error::invalid(format!("intra_prob {} outside [0, 1]", p.intra_prob)));
    }
    let total = p.communities * p.nodes_per_community;
    if p.min_group_size < 2 || p.min_group_size > p.max_group_size {
        return Err(Error::invalid("group size range must satisfy 2 <= min <= max"));
    }
    if p.max_group_size > total || (p.intra_prob == 1.0 && p.max_group_size > p.nodes_per_community) {
        return Err(Error::invalid("group size exceeds the number of reachable nodes"));
    }

    let community: Vec<usize> = (0..total).map(|n| n / p.nodes_per_community).collect();
    let mut rng = rng::stage_rng(p.seed, "synth-corpus");
    let mut groups = Vec::with_capacity(p.groups);
    let mut home = Vec::with_capacity(p.groups);
    for g in 0..p.groups {
        let c = rng.random_range(0..p.communities);
        let size = rng.random_range(p.min_group_size..=p.max_group_size);
        let mut seen = HashSet::with_capacity(size);
        let mut items = Vec::with_capacity(size);
        while items.len() < size {
            let node = if rng.random::<f64>() < p.intra_prob {
                c * p.nodes_per_community + rng.random_range(0..p.nodes_per_community)
            } else {
                rng.random_range(0..total)
            };
            if seen.insert(node) {
                items.push(SynthTruth::item_id(node));
            }
        }
        groups.push(Group {
            owner: format!("g{g}"),
            items,
        });
        home.push(c);
    }
    Ok((
        GroupedCorpus {
            kind: CorpusKind::Playlist,
            groups,
        },
        SynthTruth { community, home },
    ))
}
