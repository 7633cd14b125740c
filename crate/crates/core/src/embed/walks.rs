use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SparseSymmetricMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WalkStrategy {
    /// First-order walk, next node proportional to edge weight.
    Uniform,
    /// Second-order biased walk with return parameter `p` and in-out parameter `q`.
    Node2vec { p: f64, q: f64 },
}

impl WalkStrategy {
    /// Return-biased setting tuned on session networks.
    pub const SESSION_PRESET: WalkStrategy = WalkStrategy::Node2vec { p: 0.25, q: 1.0 };
    /// Breadth-biased setting tuned on playlist networks.
    pub const PLAYLIST_PRESET: WalkStrategy = WalkStrategy::Node2vec { p: 1.0, q: 4.0 };

    pub fn preset(name: &str) -> Option<WalkStrategy> {
        match name {
            "session" | "sessions" => Some(Self::SESSION_PRESET),
            "playlist" | "playlists" => Some(Self::PLAYLIST_PRESET),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub strategy: WalkStrategy,
}

/// One walk per line, node indices separated by spaces.
pub fn format_walks(c: &WalkCorpus) -> String {
    let mut out = String::new();
    for w in &c.walks {
        for (k, v) in w.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn pick_weighted<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let mut r = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        if w > 0.0 {
            last = k;
            if r < w {
                return k;
            }
            r -= w;
        }
    }
    last
}

/// Unnormalized node2vec weight of stepping `prev -> cur -> next`.
fn biased_weight(
    g: &SparseSymmetricMatrix,
    prev: usize,
    next: usize,
    w: f64,
    p: f64,
    q: f64,
) -> f64 {
    if next == prev {
        w / p
    } else if g.contains(prev, next) {
        w
    } else {
        w / q
    }
}

fn walk_from<R: Rng>(
    g: &SparseSymmetricMatrix,
    start: usize,
    length: usize,
    strategy: WalkStrategy,
    rng: &mut R,
) -> Vec<u32> {
    let mut walk = vec![start as u32];
    while walk.len() < length {
        let cur = *walk.last().unwrap() as usize;
        let (idx, vals) = g.row(cur);
        if idx.is_empty() {
            break;
        }
        let k = match (strategy, walk.len()) {
            (WalkStrategy::Uniform, _) | (WalkStrategy::Node2vec { .. }, 1) => {
                pick_weighted(rng, vals.iter().copied())
            }
            (WalkStrategy::Node2vec { p, q }, len) => {
                let prev = walk[len - 2] as usize;
                pick_weighted(
                    rng,
                    idx.iter()
                        .zip(vals)
                        .map(|(&j, &w)| biased_weight(g, prev, j as usize, w, p, q)),
                )
            }
        };
        walk.push(idx[k]);
    }
    walk
}

/// `walks_per_node` walks of at most `walk_length` nodes from every node.
///
/// Each walk draws from its own generator derived from `(seed, round, node)`,
/// so the corpus does not depend on thread scheduling.
pub fn generate_walks(
    g: &SparseSymmetricMatrix,
    strategy: WalkStrategy,
    walks_per_node: usize,
    walk_length: usize,
    seed: u64,
) -> Result<WalkCorpus> {
    if walk_length < 2 {
        return Err(Error::invalid(format!("walk length {walk_length} < 2")));
    }
    if let WalkStrategy::Node2vec { p, q } = strategy {
        if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::invalid(format!("node2vec parameters p={p}, q={q} must be positive")));
        }
    }
    let n = g.dim();
    let base = rng::derive_seed(seed, "walks");
    let walks = (0..walks_per_node * n)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::seeded(rng::derive_index(base, k as u64));
            walk_from(g, k % n, walk_length, strategy, &mut r)
        })
        .collect();
    Ok(WalkCorpus {
        walks,
        walks_per_node,
        walk_length,
        strategy,
    })
}
