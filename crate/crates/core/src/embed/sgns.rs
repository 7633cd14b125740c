//! Skip-gram with negative sampling over walk corpora.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, WalkCorpus};
use crate::error::{Error, Result};
use crate::rng;
use crate::vocab::Vocab;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SgnsMode {
    /// Single-threaded, reproducible for a fixed seed.
    #[default]
    Deterministic,
    /// Lock-free asynchronous updates across threads. Not reproducible.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    /// Context positions on each side of the centre.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial rate; decays linearly to `learning_rate * min_rate_fraction`.
    pub learning_rate: f64,
    pub min_rate_fraction: f64,
    /// Exponent applied to corpus frequencies for negative sampling.
    pub sampling_power: f64,
    /// Size of the fixed batch whose loss is traced after every epoch.
    pub monitor_pairs: usize,
    pub seed: u64,
    pub mode: SgnsMode,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 128,
            window: 10,
            negatives: 5,
            epochs: 100,
            learning_rate: 0.025,
            min_rate_fraction: 1e-4,
            sampling_power: 0.75,
            monitor_pairs: 1000,
            seed: 0,
            mode: SgnsMode::Deterministic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Mean monitor-batch loss before training and after each epoch.
    pub monitor_loss: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `−ln σ(u_o·v_c) − Σ_k ln σ(−u_k·v_c)` for one centre vector, its context
/// output vector and negative output vectors.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(context, center))
        - negatives
            .iter()
            .map(|u| log_sigmoid(-dot(u, center)))
            .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`] with respect to every argument.
pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let pos = sigmoid(dot(context, center)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| pos * u).collect();
    let g_context = center.iter().map(|v| pos * v).collect();
    let mut g_neg = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = sigmoid(dot(u, center));
        for (g, x) in g_center.iter_mut().zip(u.iter()) {
            *g += s * x;
        }
        g_neg.push(center.iter().map(|v| s * v).collect());
    }
    SgnsGradients {
        center: g_center,
        context: g_context,
        negatives: g_neg,
    }
}

/// Parameter storage shared by the sequential and asynchronous trainers.
trait Params {
    fn get(&self, k: usize) -> f64;
    fn add(&self, k: usize, delta: f64);
}

impl Params for [Cell<f64>] {
    fn get(&self, k: usize) -> f64 {
        self[k].get()
    }
    fn add(&self, k: usize, delta: f64) {
        self[k].set(self[k].get() + delta);
    }
}

impl Params for [AtomicU64] {
    fn get(&self, k: usize) -> f64 {
        f64::from_bits(self[k].load(Ordering::Relaxed))
    }
    // Racy read-modify-write; lost updates are the accepted cost of Hogwild.
    fn add(&self, k: usize, delta: f64) {
        let v = f64::from_bits(self[k].load(Ordering::Relaxed)) + delta;
        self[k].store(v.to_bits(), Ordering::Relaxed);
    }
}

/// Cumulative unigram^power table for negative draws.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(freq: &[u64], power: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = freq
            .iter()
            .map(|&f| {
                if f > 0 {
                    acc += (f as f64).powf(power);
                }
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let r = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1)
    }
}

struct Trainer<'a, P: ?Sized> {
    input: &'a P,
    output: &'a P,
    dim: usize,
}

impl<P: Params + ?Sized> Trainer<'_, P> {
    /// One SGD step on `(center, context)` plus sampled negatives.
    fn step<R: Rng>(
        &self,
        center: usize,
        context: usize,
        cfg: &SgnsConfig,
        table: &NegativeTable,
        lr: f64,
        rng: &mut R,
        grad: &mut [f64],
    ) {
        let d = self.dim;
        let ci = center * d;
        grad.fill(0.0);
        for k in 0..=cfg.negatives {
            let (target, label) = if k == 0 {
                (context, 1.0)
            } else {
                let t = table.sample(rng);
                if t == context {
                    continue;
                }
                (t, 0.0)
            };
            let ti = target * d;
            let mut score = 0.0;
            for x in 0..d {
                score += self.input.get(ci + x) * self.output.get(ti + x);
            }
            let g = (label - sigmoid(score)) * lr;
            for x in 0..d {
                grad[x] += g * self.output.get(ti + x);
                self.output.add(ti + x, g * self.input.get(ci + x));
            }
        }
        for (x, g) in grad.iter().enumerate() {
            self.input.add(ci + x, *g);
        }
    }

    fn loss(&self, batch: &[(usize, usize, Vec<usize>)]) -> f64 {
        let d = self.dim;
        let row = |p: &P, i: usize| (0..d).map(|x| p.get(i * d + x)).collect::<Vec<_>>();
        let total: f64 = batch
            .iter()
            .map(|(c, o, negs)| {
                let nv: Vec<Vec<f64>> = negs.iter().map(|&k| row(self.output, k)).collect();
                let refs: Vec<&[f64]> = nv.iter().map(Vec::as_slice).collect();
                sgns_loss(&row(self.input, *c), &row(self.output, *o), &refs)
            })
            .sum();
        total / batch.len().max(1) as f64
    }
}

fn context_pairs(walk: &[u32], window: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..walk.len()).flat_map(move |i| {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(walk.len());
        (lo..hi)
            .filter(move |&j| j != i)
            .map(move |j| (walk[i] as usize, walk[j] as usize))
    })
}

/// Trains input vectors on `(centre, context)` pairs within `window` of each
/// other in the walks; the input matrix is returned as the embedding.
pub fn train_sgns(
    corpus: &WalkCorpus,
    vocab: &Vocab,
    cfg: &SgnsConfig,
) -> Result<(EmbeddingMatrix, TrainingTrace)> {
    if cfg.window == 0 || cfg.epochs == 0 || cfg.dim == 0 {
        return Err(Error::invalid("window, epochs and dim must all be at least 1"));
    }
    let n = vocab.len();
    let mut freq = vec![0u64; n];
    for w in &corpus.walks {
        for &v in w {
            let v = v as usize;
            if v >= n {
                return Err(Error::VocabMismatch(format!(
                    "walk visits node {v} but the vocabulary has {n} entries"
                )));
            }
            freq[v] += 1;
        }
    }
    let pairs_per_epoch: usize = corpus
        .walks
        .iter()
        .map(|w| context_pairs(w, cfg.window).count())
        .sum();
    if pairs_per_epoch == 0 {
        return Err(Error::invalid("walk corpus yields no training pairs"));
    }

    let d = cfg.dim;
    let table = NegativeTable::new(&freq, cfg.sampling_power);
    let mut rng = rng::stage_rng(cfg.seed, "sgns");
    let mut input: Vec<f64> = (0..n * d)
        .map(|_| (rng.random::<f64>() - 0.5) / d as f64)
        .collect();
    let mut output = vec![0.0; n * d];

    let all_pairs: Vec<(usize, usize)> = corpus
        .walks
        .iter()
        .flat_map(|w| context_pairs(w, cfg.window))
        .collect();
    let mut monitor_rng = rng::stage_rng(cfg.seed, "sgns-monitor");
    let monitor: Vec<(usize, usize, Vec<usize>)> = (0..cfg.monitor_pairs)
        .map(|_| {
            let (c, o) = all_pairs[monitor_rng.random_range(0..all_pairs.len())];
            let negs = (0..cfg.negatives)
                .map(|_| table.sample(&mut monitor_rng))
                .filter(|&k| k != o)
                .collect();
            (c, o, negs)
        })
        .collect();
    drop(all_pairs);

    let total_steps = (pairs_per_epoch * cfg.epochs) as f64;
    let rate = |step: usize| {
        let frac = (step as f64 / total_steps).min(1.0);
        cfg.learning_rate * (1.0 - frac * (1.0 - cfg.min_rate_fraction))
    };

    let mut trace = TrainingTrace {
        monitor_loss: Vec::with_capacity(cfg.epochs + 1),
    };
    match cfg.mode {
        SgnsMode::Deterministic => {
            let input = Cell::from_mut(input.as_mut_slice()).as_slice_of_cells();
            let output = Cell::from_mut(output.as_mut_slice()).as_slice_of_cells();
            let trainer = Trainer { input, output, dim: d };
            trace.monitor_loss.push(trainer.loss(&monitor));
            let mut grad = vec![0.0; d];
            let mut step = 0usize;
            for _ in 0..cfg.epochs {
                for w in &corpus.walks {
                    for (c, o) in context_pairs(w, cfg.window) {
                        trainer.step(c, o, cfg, &table, rate(step), &mut rng, &mut grad);
                        step += 1;
                    }
                }
                trace.monitor_loss.push(trainer.loss(&monitor));
            }
        }
        SgnsMode::Parallel => {
            let to_atomic = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect::<Vec<_>>();
            let (ai, ao) = (to_atomic(&input), to_atomic(&output));
            let trainer = Trainer {
                input: ai.as_slice(),
                output: ao.as_slice(),
                dim: d,
            };
            trace.monitor_loss.push(trainer.loss(&monitor));
            let progress = AtomicUsize::new(0);
            let base = rng::derive_seed(cfg.seed, "sgns-parallel");
            for epoch in 0..cfg.epochs {
                corpus.walks.par_iter().enumerate().for_each_init(
                    || vec![0.0; d],
                    |grad, (k, w)| {
                        let mut r = rng::seeded(rng::derive_index(base, (epoch * corpus.walks.len() + k) as u64));
                        for (c, o) in context_pairs(w, cfg.window) {
                            let step = progress.fetch_add(1, Ordering::Relaxed);
                            trainer.step(c, o, cfg, &table, rate(step), &mut r, grad);
                        }
                    },
                );
                trace.monitor_loss.push(trainer.loss(&monitor));
            }
            input = ai.iter().map(|a| f64::from_bits(a.load(Ordering::Relaxed))).collect();
        }
    }
    let emb = EmbeddingMatrix::new(vocab.clone(), d, input)?;
    Ok((emb, trace))
}
