//! Interpretability scoring: z-normalised attraction histograms per weight
//! class, pairwise Jensen–Shannon distances, the `I` score, KS significance
//! and cross-model ranking.

mod ks;

use serde::{Deserialize, Serialize};

pub use ks::{kolmogorov_survival, ks_statistic, ks_two_sample, KsResult};

use crate::attraction::{AttractionRecord, CellId};
use crate::error::{Error, Result};
use crate::proximity::Network;

/// `Δ_0` (control) through `Δ_4`.
pub const CLASSES: usize = 5;
pub const BINS: usize = 80;
pub const Z_RANGE: f64 = 10.0;
pub const BIN_WIDTH: f64 = 2.0 * Z_RANGE / BINS as f64;
pub const CLASS_PAIRS: usize = CLASSES * (CLASSES - 1) / 2;

/// Valid normalised attraction scores of one network, split by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScoreSets {
    pub classes: [Vec<f64>; CLASSES],
}

impl ClassScoreSets {
    /// `Δ_0` from the control cell, `Δ_j` from class `j` of `network`.
    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a AttractionRecord>,
        network: Network,
    ) -> Self {
        let mut classes: [Vec<f64>; CLASSES] = Default::default();
        for r in records {
            let (true, Some(dd)) = (r.valid, r.delta_dot) else {
                continue;
            };
            match r.cell {
                CellId::Control => classes[0].push(dd),
                CellId::Class { network: n, class } if n == network => classes[class as usize].push(dd),
                _ => {}
            }
        }
        ClassScoreSets { classes }
    }

    pub fn means(&self) -> [Option<f64>; CLASSES] {
        std::array::from_fn(|j| {
            let c = &self.classes[j];
            (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64)
        })
    }

    /// Mean and population standard deviation of the non-empty class means.
    pub fn mean_spread(&self) -> Result<(f64, f64)> {
        let means: Vec<f64> = self.means().into_iter().flatten().collect();
        if means.len() < 2 {
            return Err(Error::IndistinguishableClasses(format!(
                "{} non-empty class(es)",
                means.len()
            )));
        }
        let k = means.len() as f64;
        let center = means.iter().sum::<f64>() / k;
        let spread = (means.iter().map(|m| (m - center).powi(2)).sum::<f64>() / k).sqrt();
        Ok((center, spread))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub sets: ClassScoreSets,
    /// Mean of the class means subtracted from every score.
    pub center: f64,
    /// Standard deviation of the class means used as the unit.
    pub scale: f64,
}

/// Maps every score to `(x − ⟨μ⟩) / σ_μ`.
pub fn znormalize(sets: &ClassScoreSets) -> Result<ZScores> {
    let (center, scale) = sets.mean_spread()?;
    if !(scale > 0.0) {
        return Err(Error::IndistinguishableClasses("all class means are equal".into()));
    }
    let classes = std::array::from_fn(|j| {
        sets.classes[j]
            .iter()
            .map(|x| (x - center) / scale)
            .collect()
    });
    Ok(ZScores {
        sets: ClassScoreSets { classes },
        center,
        scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub probs: Vec<f64>,
}

/// Bin of `z` on the fixed grid; out-of-range values land in the end bins.
pub fn bin_index(z: f64) -> usize {
    let k = ((z + Z_RANGE) / BIN_WIDTH).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(BINS - 1)
    }
}

impl Histogram {
    pub fn from_samples(z: &[f64]) -> Option<Self> {
        if z.is_empty() {
            return None;
        }
        let mut counts = vec![0u64; BINS];
        for &x in z {
            counts[bin_index(x)] += 1;
        }
        let n = z.len() as f64;
        Some(Histogram {
            probs: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }
}

pub fn build_histograms(z: &ZScores) -> Result<[Histogram; CLASSES]> {
    let mut out = Vec::with_capacity(CLASSES);
    for (j, c) in z.sets.classes.iter().enumerate() {
        out.push(Histogram::from_samples(c).ok_or(Error::EmptyClass(j))?);
    }
    Ok(out.try_into().expect("five classes"))
}

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).log2())
        .sum()
}

/// Jensen–Shannon distance (square root of the base-2 divergence), in `[0, 1]`.
pub fn js_distance(p: &Histogram, q: &Histogram) -> f64 {
    assert_eq!(p.probs.len(), q.probs.len(), "histogram grids differ");
    let m: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| 0.5 * (a + b)).collect();
    let div = 0.5 * (kl_to_mixture(&p.probs, &m) + kl_to_mixture(&q.probs, &m));
    div.clamp(0.0, 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsPair {
    pub a: usize,
    pub b: usize,
    pub js: f64,
}

pub fn pairwise_js(hists: &[Histogram; CLASSES]) -> Vec<JsPair> {
    let mut out = Vec::with_capacity(CLASS_PAIRS);
    for a in 0..CLASSES {
        for b in a + 1..CLASSES {
            out.push(JsPair {
                a,
                b,
                js: js_distance(&hists[a], &hists[b]),
            });
        }
    }
    out
}

/// Mean Jensen–Shannon distance over the ten class pairs.
pub fn interpretability_i(hists: &[Histogram; CLASSES]) -> f64 {
    pairwise_js(hists).iter().map(|p| p.js).sum::<f64>() / CLASS_PAIRS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsPair {
    pub a: usize,
    pub b: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// `p < alpha / 10`.
    pub significant: bool,
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsMatrix {
    pub alpha: f64,
    pub pairs: Vec<KsPair>,
    /// Every pair significant after Bonferroni correction.
    pub starred: bool,
}

pub fn ks_matrix(z: &ZScores, alpha: f64) -> Result<KsMatrix> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    if let Some(j) = z.sets.classes.iter().position(|c| c.len() < 2) {
        return Err(Error::invalid(format!("class {j} has fewer than two samples")));
    }
    let threshold = alpha / CLASS_PAIRS as f64;
    let mut pairs = Vec::with_capacity(CLASS_PAIRS);
    for a in 0..CLASSES {
        for b in a + 1..CLASSES {
            let r = ks_two_sample(&z.sets.classes[a], &z.sets.classes[b])?;
            pairs.push(KsPair {
                a,
                b,
                statistic: r.statistic,
                p_value: r.p_value,
                significant: r.p_value < threshold,
                approximate: r.approximate,
            });
        }
    }
    let starred = pairs.iter().all(|p| p.significant);
    Ok(KsMatrix {
        alpha,
        pairs,
        starred,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStat {
    pub class: usize,
    pub count: usize,
    /// Mean and population standard deviation of the raw scores.
    pub mean: f64,
    pub std: f64,
}

/// Interpretability of one model with respect to one proximity network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilityReport {
    pub network: Network,
    pub i_score: f64,
    /// Population standard deviation of the ten pairwise distances.
    pub js_std: f64,
    pub js_pairs: Vec<JsPair>,
    /// `None` when some class has fewer than two samples to test.
    pub ks: Option<KsMatrix>,
    pub class_stats: Vec<ClassStat>,
    pub z_center: f64,
    pub z_scale: f64,
}

impl InterpretabilityReport {
    pub fn starred(&self) -> bool {
        self.ks.as_ref().is_some_and(|k| k.starred)
    }
}

pub fn evaluate_network(
    records: &[AttractionRecord],
    network: Network,
    alpha: f64,
) -> Result<InterpretabilityReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let sets = ClassScoreSets::from_records(records, network);
    let z = znormalize(&sets)?;
    let hists = build_histograms(&z)?;
    let js_pairs = pairwise_js(&hists);
    let i_score = js_pairs.iter().map(|p| p.js).sum::<f64>() / CLASS_PAIRS as f64;
    let js_std = (js_pairs.iter().map(|p| (p.js - i_score).powi(2)).sum::<f64>()
        / CLASS_PAIRS as f64)
        .sqrt();
    let ks = if z.sets.classes.iter().any(|c| c.len() < 2) {
        log::warn!("network {network}: a class has fewer than two scores, KS tests skipped");
        None
    } else {
        Some(ks_matrix(&z, alpha)?)
    };
    let class_stats = sets
        .classes
        .iter()
        .enumerate()
        .map(|(class, c)| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let std = (c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            ClassStat {
                class,
                count: c.len(),
                mean,
                std,
            }
        })
        .collect();
    Ok(InterpretabilityReport {
        network,
        i_score,
        js_std,
        js_pairs,
        ks,
        class_stats,
        z_center: z.center,
        z_scale: z.scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedNetwork {
    pub network: Network,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub null_delta: Option<f64>,
    pub networks: Vec<InterpretabilityReport>,
    pub skipped: Vec<SkippedNetwork>,
}

impl ModelReport {
    pub fn get(&self, network: Network) -> Option<&InterpretabilityReport> {
        self.networks.iter().find(|r| r.network == network)
    }
}

/// Evaluates every network; networks that cannot be scored are listed with
/// the reason instead of failing the model.
pub fn evaluate_model(
    model: &str,
    records: &[AttractionRecord],
    null_delta: Option<f64>,
    alpha: f64,
) -> ModelReport {
    let mut networks = Vec::new();
    let mut skipped = Vec::new();
    for network in Network::ALL {
        match evaluate_network(records, network, alpha) {
            Ok(r) => networks.push(r),
            Err(e) => skipped.push(SkippedNetwork {
                network,
                reason: e.to_string(),
            }),
        }
    }
    ModelReport {
        model: model.to_string(),
        null_delta,
        networks,
        skipped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub model: String,
    /// Rank per shared network (1 = highest `I`), in `networks` order.
    pub ranks: Vec<usize>,
    pub mean_rank: f64,
    pub mean_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub networks: Vec<Network>,
    pub entries: Vec<RankEntry>,
}

/// Orders models by mean per-network rank of `I`, then by mean `I`
/// (descending), then by name. Equal `I` values share a rank.
pub fn rank_models(reports: &[ModelReport]) -> Result<Ranking> {
    if reports.len() < 2 {
        return Err(Error::invalid("ranking needs at least two models"));
    }
    let networks: Vec<Network> = Network::ALL
        .into_iter()
        .filter(|&n| reports.iter().all(|r| r.get(n).is_some()))
        .collect();
    if networks.is_empty() {
        return Err(Error::invalid("models share no scored network"));
    }
    let score = |r: &ModelReport, n: Network| r.get(n).expect("shared network").i_score;
    let mut entries: Vec<RankEntry> = reports
        .iter()
        .map(|r| {
            let ranks: Vec<usize> = networks
                .iter()
                .map(|&n| 1 + reports.iter().filter(|o| score(o, n) > score(r, n)).count())
                .collect();
            let k = networks.len() as f64;
            RankEntry {
                model: r.model.clone(),
                mean_rank: ranks.iter().sum::<usize>() as f64 / k,
                mean_i: networks.iter().map(|&n| score(r, n)).sum::<f64>() / k,
                ranks,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.mean_rank
            .total_cmp(&b.mean_rank)
            .then(b.mean_i.total_cmp(&a.mean_i))
            .then_with(|| a.model.cmp(&b.model))
    });
    Ok(Ranking { networks, entries })
}
