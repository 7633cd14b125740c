//! Symmetric sparse non-negative matrices.
//!
//! Every undirected edge `(i, j)` with `i != j` is stored in both rows so that
//! row access is a contiguous slice. Rows are sorted by column index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    pub fn empty(dim: usize) -> Self {
        SparseSymmetricMatrix {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(i, j, w)` triplets in either orientation.
    ///
    /// Duplicate cells are summed. Zero-valued cells are dropped. Diagonal
    /// entries, negative or non-finite weights and out-of-range indices are
    /// rejected.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) out of range for dimension {dim}"
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("diagonal entry at node {i}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!("weight {w} at ({i}, {j})")));
            }
            let key = if i < j { (i, j) } else { (j, i) };
            *cells.entry(key).or_insert(0.0) += w;
        }
        Ok(Self::from_canonical(
            dim,
            cells.into_iter().filter(|&(_, w)| w != 0.0),
        ))
    }

    /// Builds from upper-triangle entries `i < j` that are known to be unique
    /// and non-zero.
    pub(crate) fn from_canonical<I>(dim: usize, upper: I) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let upper: Vec<((usize, usize), f64)> = upper.into_iter().collect();
        let mut counts = vec![0usize; dim];
        for &((i, j), _) in &upper {
            debug_assert!(i < j);
            counts[i] += 1;
            counts[j] += 1;
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        indptr.push(0);
        for c in &counts {
            indptr.push(indptr.last().unwrap() + c);
        }
        let nnz = *indptr.last().unwrap();
        let mut indices = vec![0u32; nnz];
        let mut values = vec![0.0; nnz];
        let mut cursor = indptr[..dim].to_vec();
        for &((i, j), w) in &upper {
            indices[cursor[i]] = j as u32;
            values[cursor[i]] = w;
            cursor[i] += 1;
            indices[cursor[j]] = i as u32;
            values[cursor[j]] = w;
            cursor[j] += 1;
        }
        let mut m = SparseSymmetricMatrix {
            dim,
            indptr,
            indices,
            values,
        };
        m.sort_rows();
        m
    }

    /// Builds from per-row adjacency lists whose union is symmetric.
    pub(crate) fn from_upper_rows(dim: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let upper = rows.into_iter().enumerate().flat_map(|(i, row)| {
            row.into_iter()
                .map(move |(j, w)| ((i, j as usize), w))
        });
        Self::from_canonical(dim, upper)
    }

    fn sort_rows(&mut self) {
        for i in 0..self.dim {
            let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
            let mut pairs: Vec<(u32, f64)> = self.indices[lo..hi]
                .iter()
                .copied()
                .zip(self.values[lo..hi].iter().copied())
                .collect();
            pairs.sort_by_key(|&(j, _)| j);
            for (k, (j, w)) in pairs.into_iter().enumerate() {
                self.indices[lo + k] = j;
                self.values[lo + k] = w;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(i);
        idx.iter().map(|&j| j as usize).zip(val.iter().copied())
    }

    /// Position of `(i, j)` in the flat value storage, if present.
    pub(crate) fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (idx, _) = self.row(i);
        idx.binary_search(&(j as u32))
            .ok()
            .map(|k| self.indptr[i] + k)
    }

    pub(crate) fn row_offset(&self, i: usize) -> usize {
        self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.dim || j >= self.dim {
            return 0.0;
        }
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.dim && j < self.dim && self.position(i, j).is_some()
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            self.row_iter(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Unweighted degree.
    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    /// Sum of weights over unordered edges.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// All stored weights, each undirected edge once.
    pub fn edge_weights(&self) -> Vec<f64> {
        self.edges().map(|(_, _, w)| w).collect()
    }

    /// Induced subgraph on `keep` (ascending original indices), re-indexed densely.
    pub fn induced(&self, keep: &[usize]) -> SparseSymmetricMatrix {
        let mut remap = vec![u32::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        let upper = self.edges().filter_map(|(i, j, w)| {
            let (a, b) = (remap[i], remap[j]);
            (a != u32::MAX && b != u32::MAX).then(|| {
                let (a, b) = (a as usize, b as usize);
                if a < b {
                    ((a, b), w)
                } else {
                    ((b, a), w)
                }
            })
        });
        Self::from_canonical(keep.len(), upper)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (i, j, w) in self.edges() {
            out[i][j] = w;
            out[j][i] = w;
        }
        out
    }

    /// `y = A x` for a row-major dense block `x` of shape `dim × cols`.
    pub fn mul_dense(&self, x: &[f64], cols: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.dim * cols];
        for i in 0..self.dim {
            let out = &mut y[i * cols..(i + 1) * cols];
            for (j, w) in self.row_iter(i) {
                let src = &x[j * cols..(j + 1) * cols];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        y
    }
}
