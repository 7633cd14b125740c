//! Neighbourhood attraction: how strongly each proximity cell of a target
//! node is drawn toward it in embedding space, relative to a null model.

mod distance;
mod sigmoid;

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use distance::{build_distance_index, cell_is_plottable, hit_curve, window_series, DistanceIndex, WindowSeries};
pub use sigmoid::{
    abscissae, delta_integral, fit_sigmoid, logistic, normalize_delta, sigmoid_area, SigmoidFit,
    GROWTH_MAX, GROWTH_MIN, MAX_ITERATIONS, X_MAX, X_MIN,
};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::proximity::{Network, ProximityStack, WEIGHT_CLASSES};
use crate::rng;
use crate::vocab::Vocab;

/// Which neighbourhood a record describes: a weight class of one network, or
/// the shared control set `W0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellId {
    Class { network: Network, class: u8 },
    Control,
}

impl CellId {
    pub fn network_label(&self) -> String {
        match self {
            CellId::Class { network, .. } => network.to_string(),
            CellId::Control => "W0".to_string(),
        }
    }

    pub fn class(&self) -> u8 {
        match self {
            CellId::Class { class, .. } => *class,
            CellId::Control => 0,
        }
    }

    fn parse(network: &str, class: &str) -> Option<CellId> {
        if network == "W0" {
            return (class == "0").then_some(CellId::Control);
        }
        let network = Network::parse(network)?;
        let class: u8 = class.parse().ok()?;
        (1..=WEIGHT_CLASSES as u8)
            .contains(&class)
            .then_some(CellId::Class { network, class })
    }

    /// The twelve class cells followed by the control cell.
    pub fn all() -> Vec<CellId> {
        let mut cells: Vec<CellId> = Network::ALL
            .into_iter()
            .flat_map(|network| {
                (1..=WEIGHT_CLASSES as u8).map(move |class| CellId::Class { network, class })
            })
            .collect();
        cells.push(CellId::Control);
        cells
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.network_label(), self.class())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractionRecord {
    pub target: usize,
    pub cell: CellId,
    pub size: usize,
    pub fit: Option<SigmoidFit>,
    pub delta: Option<f64>,
    pub delta_dot: Option<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModel {
    /// Mean hit curve of the full neighbourhood over all targets.
    pub curve: Vec<f64>,
    pub fit: SigmoidFit,
    pub delta: f64,
}

/// Null attraction `δ̃`: the sigmoid area of the target-averaged hit curve of
/// each target's full neighbourhood `V ∖ {t}`.
pub fn null_delta(idx: &DistanceIndex, w: &WindowSeries) -> Result<NullModel> {
    let n = idx.len();
    let partial: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|t| {
            distance::capture_counts(
                w,
                idx.row(t)
                    .iter()
                    .enumerate()
                    .filter(|&(v, _)| v != t)
                    .map(|(_, &d)| d),
            )
        })
        .collect();
    let mut total = vec![0u64; w.values.len()];
    for counts in partial {
        for (a, c) in total.iter_mut().zip(counts) {
            *a += c;
        }
    }
    // Every target contributes n − 1 pairs, so the mean proportion is a ratio of totals.
    let pairs = (n * (n - 1)) as f64;
    let curve: Vec<f64> = total.into_iter().map(|c| c as f64 / pairs).collect();
    let fit = fit_sigmoid(&curve)?;
    if !fit.converged {
        return Err(Error::invalid("null-model sigmoid fit did not converge"));
    }
    let delta = delta_integral(&fit);
    Ok(NullModel { curve, fit, delta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttractionConfig {
    /// Control cells larger than this are subsampled per target. `None` keeps
    /// every control node.
    pub control_cap: Option<usize>,
    pub seed: u64,
}

impl Default for AttractionConfig {
    fn default() -> Self {
        AttractionConfig {
            control_cap: Some(5000),
            seed: 0,
        }
    }
}

/// Target-averaged hit curve of one cell over its valid records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCurve {
    pub cell: CellId,
    pub count: usize,
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractionRun {
    pub null: NullModel,
    pub records: Vec<AttractionRecord>,
    pub mean_curves: Vec<MeanCurve>,
}

impl AttractionRun {
    pub fn valid_records(&self) -> impl Iterator<Item = &AttractionRecord> {
        self.records.iter().filter(|r| r.valid)
    }
}

fn score_cell(
    idx: &DistanceIndex,
    w: &WindowSeries,
    null: f64,
    t: usize,
    cell: CellId,
    members: &[usize],
) -> (AttractionRecord, Option<Vec<f64>>) {
    let mut rec = AttractionRecord {
        target: t,
        cell,
        size: members.len(),
        fit: None,
        delta: None,
        delta_dot: None,
        valid: false,
    };
    let Some(h) = hit_curve(idx, t, members, w) else {
        return (rec, None);
    };
    let Ok(fit) = fit_sigmoid(&h) else {
        return (rec, None);
    };
    rec.fit = Some(fit);
    if fit.converged {
        let delta = delta_integral(&fit);
        rec.delta = Some(delta);
        if let Ok(dd) = normalize_delta(delta, null) {
            rec.delta_dot = Some(dd);
            rec.valid = delta > 0.0 && delta < X_MAX - X_MIN;
        }
    }
    let curve = rec.valid.then_some(h);
    (rec, curve)
}

/// Scores every cell of every target: twelve weight-class cells (for
/// segmented networks) and the control cell.
pub fn compute_attraction(
    stack: &ProximityStack,
    embedding: &EmbeddingMatrix,
    cfg: &AttractionConfig,
) -> Result<AttractionRun> {
    let n = stack.dim();
    if embedding.len() != n {
        return Err(Error::VocabMismatch(format!(
            "embedding has {} rows, proximity stack has {} nodes",
            embedding.len(),
            n
        )));
    }
    let idx = build_distance_index(embedding)?;
    let w = window_series(&idx)?;
    let null = null_delta(&idx, &w)?;
    let control_seed = rng::derive_seed(cfg.seed, "control-sample");

    let cells = CellId::all();
    let per_target: Vec<Vec<(AttractionRecord, Option<Vec<f64>>)>> = (0..n)
        .into_par_iter()
        .map(|t| {
            let part = stack.neighborhood_partition(t);
            let mut out = Vec::with_capacity(cells.len());
            for &cell in &cells {
                match cell {
                    CellId::Class { network, class } => {
                        if !stack.network(network).is_segmented() {
                            continue;
                        }
                        let members = part.cell(network, class as usize);
                        out.push(score_cell(&idx, &w, null.delta, t, cell, members));
                    }
                    CellId::Control => {
                        let members = match cfg.control_cap {
                            Some(cap) if part.control.len() > cap => {
                                let mut r = rng::seeded(rng::derive_index(control_seed, t as u64));
                                let mut picked: Vec<usize> =
                                    rand::seq::index::sample(&mut r, part.control.len(), cap)
                                        .into_iter()
                                        .map(|k| part.control[k])
                                        .collect();
                                picked.sort_unstable();
                                picked
                            }
                            _ => part.control.clone(),
                        };
                        out.push(score_cell(&idx, &w, null.delta, t, cell, &members));
                    }
                }
            }
            out
        })
        .collect();

    let mut sums: Vec<(CellId, usize, Vec<f64>)> = cells
        .iter()
        .map(|&c| (c, 0, vec![0.0; w.values.len()]))
        .collect();
    let mut records = Vec::with_capacity(n * cells.len());
    for (rec, curve) in per_target.into_iter().flatten() {
        if let Some(h) = curve {
            let slot = sums.iter_mut().find(|(c, _, _)| *c == rec.cell).expect("known cell");
            slot.1 += 1;
            for (a, v) in slot.2.iter_mut().zip(h) {
                *a += v;
            }
        }
        records.push(rec);
    }
    let mean_curves = sums
        .into_iter()
        .filter(|(_, count, _)| *count > 0)
        .map(|(cell, count, sum)| MeanCurve {
            cell,
            count,
            curve: sum.into_iter().map(|x| x / count as f64).collect(),
        })
        .collect();

    Ok(AttractionRun {
        null,
        records,
        mean_curves,
    })
}

pub const RECORDS_HEADER: &str = "target,network,class,size,g,s,residual,delta,delta_dot,valid";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// CSV with one row per record; fields of invalid records may be empty.
pub fn format_records_csv(records: &[AttractionRecord], vocab: &Vocab) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            vocab.id(r.target),
            r.cell.network_label(),
            r.cell.class(),
            r.size,
            opt(r.fit.map(|f| f.g)),
            opt(r.fit.map(|f| f.s)),
            opt(r.fit.map(|f| f.residual)),
            opt(r.delta),
            opt(r.delta_dot),
            r.valid
        )
        .unwrap();
    }
    out
}

/// Parses [`format_records_csv`] output. Fits read back as converged exactly
/// when the record is valid; iteration counts are not stored.
pub fn parse_records_csv(text: &str, path: &Path, vocab: &Vocab) -> Result<Vec<AttractionRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == RECORDS_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header `{RECORDS_HEADER}`"))),
    }
    let mut records = Vec::new();
    for (k, l) in lines {
        let line = k + 1;
        let f: Vec<&str> = l.trim().split(',').collect();
        if f.len() != 10 {
            return Err(Error::parse(path, line, format!("expected 10 fields, got {}", f.len())));
        }
        let target = vocab
            .index_of(f[0])
            .ok_or_else(|| Error::parse(path, line, format!("unknown item id {:?}", f[0])))?;
        let cell = CellId::parse(f[1], f[2])
            .ok_or_else(|| Error::parse(path, line, format!("bad cell {}/{}", f[1], f[2])))?;
        let size: usize = f[3]
            .parse()
            .map_err(|_| Error::parse(path, line, "bad size"))?;
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::parse(path, line, format!("bad number {s:?}")))
            }
        };
        let valid: bool = f[9]
            .parse()
            .map_err(|_| Error::parse(path, line, "bad validity flag"))?;
        let fit = match (num(f[4])?, num(f[5])?, num(f[6])?) {
            (Some(g), Some(s), Some(residual)) => Some(SigmoidFit {
                g,
                s,
                residual,
                converged: valid,
                iterations: 0,
            }),
            _ => None,
        };
        records.push(AttractionRecord {
            target,
            cell,
            size,
            fit,
            delta: num(f[7])?,
            delta_dot: num(f[8])?,
            valid,
        });
    }
    Ok(records)
}
