use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

/// All-pairs cosine distances `1 − cos` with per-target ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceIndex {
    n: usize,
    dist: Vec<f64>,
    /// Row `t` lists the other nodes by ascending distance to `t`.
    order: Vec<u32>,
    min: f64,
    max: f64,
}

impl DistanceIndex {
    /// Builds from a symmetric `n × n` row-major distance matrix. The
    /// diagonal is ignored.
    pub fn from_distance_matrix(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("distance index needs at least two nodes"));
        }
        if dist.len() != n * n {
            return Err(Error::invalid(format!("expected {} distances, got {}", n * n, dist.len())));
        }
        if dist.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("non-finite distance"));
        }
        let order: Vec<u32> = (0..n)
            .into_par_iter()
            .flat_map_iter(|t| {
                let row = &dist[t * n..(t + 1) * n];
                let mut others: Vec<u32> = (0..n as u32).filter(|&v| v as usize != t).collect();
                others.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
                others
            })
            .collect();
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..n {
            for v in 0..n {
                if v != t {
                    min = min.min(dist[t * n + v]);
                    max = max.max(dist[t * n + v]);
                }
            }
        }
        Ok(DistanceIndex {
            n,
            dist,
            order,
            min,
            max,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, t: usize, v: usize) -> f64 {
        self.dist[t * self.n + v]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.dist[t * self.n..(t + 1) * self.n]
    }

    /// `(distance, node)` pairs for every `v != t`, ascending by distance.
    pub fn neighbors(&self, t: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
        let m = self.n - 1;
        self.order[t * m..(t + 1) * m]
            .iter()
            .map(move |&v| (self.distance(t, v as usize), v as usize))
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// Exact all-pairs cosine distances of the embedding rows.
pub fn build_distance_index(e: &EmbeddingMatrix) -> Result<DistanceIndex> {
    let n = e.len();
    let norms: Vec<f64> = (0..n)
        .map(|i| e.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::DegenerateRow(e.vocab().id(i).to_string()));
    }
    let dist: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|t| {
            let a = e.row(t);
            let norms = &norms;
            (0..n).map(move |v| {
                if v == t {
                    return 0.0;
                }
                let b = e.row(v);
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (1.0 - dot / (norms[t] * norms[v])).clamp(0.0, 2.0)
            })
        })
        .collect();
    DistanceIndex::from_distance_matrix(n, dist)
}

/// `|V| + 1` evenly spaced window radii from `min(D)` to `max(D)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSeries {
    pub values: Vec<f64>,
}

impl WindowSeries {
    pub fn stride(&self) -> f64 {
        let n = self.values.len() - 1;
        (self.values[n] - self.values[0]) / n as f64
    }

    /// Smallest window index `i` counting a point at distance `d`: strict
    /// `d < w_i` below the last window, `d <= w_last` at the last one.
    pub(crate) fn first_capturing(&self, d: f64) -> Option<usize> {
        let last = self.values.len() - 1;
        let i = self.values[..last].partition_point(|&w| w <= d);
        if i < last {
            Some(i)
        } else if d <= self.values[last] {
            Some(last)
        } else {
            None
        }
    }
}

pub fn window_series(idx: &DistanceIndex) -> Result<WindowSeries> {
    let (lo, hi) = (idx.min(), idx.max());
    // Rounding in the cosine leaves spreads of a few ulps between parallel rows.
    if !(hi - lo > 1e-12) {
        return Err(Error::DegenerateDistances);
    }
    let n = idx.len();
    let mut values: Vec<f64> = (0..=n)
        .map(|i| lo + i as f64 * (hi - lo) / n as f64)
        .collect();
    values[n] = hi;
    Ok(WindowSeries { values })
}

/// Cumulative capture counts over the windows for the given distances.
pub(crate) fn capture_counts(w: &WindowSeries, distances: impl Iterator<Item = f64>) -> Vec<u64> {
    let mut counts = vec![0u64; w.values.len()];
    for d in distances {
        if let Some(i) = w.first_capturing(d) {
            counts[i] += 1;
        }
    }
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    counts
}

/// Share of `cell` within each window around `t`.
///
/// Returns `None` when the cell holds no more than `0.005 · |V|` nodes.
pub fn hit_curve(
    idx: &DistanceIndex,
    t: usize,
    cell: &[usize],
    w: &WindowSeries,
) -> Option<Vec<f64>> {
    if !cell_is_plottable(cell.len(), idx.len()) {
        return None;
    }
    let counts = capture_counts(w, cell.iter().map(|&v| idx.distance(t, v)));
    let size = cell.len() as f64;
    Some(counts.into_iter().map(|c| c as f64 / size).collect())
}

pub fn cell_is_plottable(size: usize, nodes: usize) -> bool {
    size > 0 && size as f64 > 0.005 * nodes as f64
}
