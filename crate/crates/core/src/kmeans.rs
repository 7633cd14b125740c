//! Globally optimal one-dimensional k-means.
//!
//! Optimal clusters are contiguous in sorted order, so the problem reduces to
//! splitting the sorted distinct values into `k` runs. The dynamic program
//! uses divide-and-conquer over monotone split points, `O(k · n log n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Cluster means, strictly ascending.
    pub centroids: Vec<f64>,
    /// Smallest and largest member value of each cluster.
    pub ranges: Vec<(f64, f64)>,
    /// Within-cluster sum of squared deviations.
    pub sse: f64,
}

impl Segmentation {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// 1-based class of `w`. Exact for values that were segmented; other values
    /// go to the nearest centroid.
    pub fn class_of(&self, w: f64) -> usize {
        if let Some(c) = self.ranges.iter().position(|&(lo, hi)| lo <= w && w <= hi) {
            return c + 1;
        }
        let mut best = 0;
        for (c, m) in self.centroids.iter().enumerate() {
            if (w - m).abs() < (w - self.centroids[best]).abs() {
                best = c;
            }
        }
        best + 1
    }
}

/// Weighted prefix sums over sorted distinct values, centred for stability.
struct Prefix {
    count: Vec<f64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Prefix {
    fn new(values: &[f64], mult: &[f64]) -> Self {
        let total: f64 = mult.iter().sum();
        let shift = values.iter().zip(mult).map(|(v, m)| v * m).sum::<f64>() / total;
        let mut p = Prefix {
            count: vec![0.0],
            sum: vec![0.0],
            sum_sq: vec![0.0],
        };
        for (v, m) in values.iter().zip(mult) {
            let x = v - shift;
            p.count.push(p.count.last().unwrap() + m);
            p.sum.push(p.sum.last().unwrap() + m * x);
            p.sum_sq.push(p.sum_sq.last().unwrap() + m * x * x);
        }
        p
    }

    /// SSE of distinct values `lo..=hi`.
    fn cost(&self, lo: usize, hi: usize) -> f64 {
        let n = self.count[hi + 1] - self.count[lo];
        let s = self.sum[hi + 1] - self.sum[lo];
        let sq = self.sum_sq[hi + 1] - self.sum_sq[lo];
        (sq - s * s / n).max(0.0)
    }
}

fn fill_layer(
    prefix: &Prefix,
    prev: &[f64],
    cur: &mut [f64],
    arg: &mut [usize],
    (jlo, jhi): (usize, usize),
    (olo, ohi): (usize, usize),
) {
    if jlo > jhi {
        return;
    }
    let mid = (jlo + jhi) / 2;
    let mut best = (f64::INFINITY, olo);
    // Cluster starts at `start`, previous clusters cover `..start`.
    for start in olo..=ohi.min(mid) {
        let c = prev[start - 1] + prefix.cost(start, mid);
        if c < best.0 {
            best = (c, start);
        }
    }
    cur[mid] = best.0;
    arg[mid] = best.1;
    if mid > jlo {
        fill_layer(prefix, prev, cur, arg, (jlo, mid - 1), (olo, best.1));
    }
    fill_layer(prefix, prev, cur, arg, (mid + 1, jhi), (best.1, ohi));
}

/// Segments `weights` into `k` classes with minimum total SSE. Returns the
/// 1-based class of every input weight alongside the segmentation.
pub fn kmeans_1d_segment(weights: &[f64], k: usize) -> Result<(Vec<usize>, Segmentation)> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("non-finite weight"));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    for w in sorted {
        if values.last() == Some(&w) {
            *mult.last_mut().unwrap() += 1.0;
        } else {
            values.push(w);
            mult.push(1.0);
        }
    }
    let n = values.len();
    if n < k {
        return Err(Error::DegenerateWeights { distinct: n, k });
    }

    let prefix = Prefix::new(&values, &mult);
    // layers[c][j]: best cost of covering values 0..=j with c + 1 clusters.
    let mut layers = vec![(0..n).map(|j| prefix.cost(0, j)).collect::<Vec<_>>()];
    let mut args = vec![vec![0usize; n]];
    for c in 1..k {
        let mut cur = vec![f64::INFINITY; n];
        let mut arg = vec![0usize; n];
        fill_layer(&prefix, &layers[c - 1], &mut cur, &mut arg, (c, n - 1), (c, n - 1));
        layers.push(cur);
        args.push(arg);
    }

    let mut bounds = vec![0usize; k + 1];
    bounds[k] = n;
    let mut end = n - 1;
    for c in (1..k).rev() {
        let start = args[c][end];
        bounds[c] = start;
        end = start - 1;
    }

    let mut centroids = Vec::with_capacity(k);
    let mut ranges = Vec::with_capacity(k);
    for c in 0..k {
        let (lo, hi) = (bounds[c], bounds[c + 1]);
        let m: f64 = mult[lo..hi].iter().sum();
        let s: f64 = values[lo..hi].iter().zip(&mult[lo..hi]).map(|(v, m)| v * m).sum();
        centroids.push(s / m);
        ranges.push((values[lo], values[hi - 1]));
    }
    let seg = Segmentation {
        centroids,
        ranges,
        sse: layers[k - 1][n - 1],
    };
    let classes = weights.iter().map(|&w| seg.class_of(w)).collect();
    Ok((classes, seg))
}
