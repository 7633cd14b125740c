use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::matrix::SparseSymmetricMatrix;
use crate::vocab::Vocab;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdMethod {
    /// Dense decomposition up to `dense_cutoff` nodes, randomized above.
    #[default]
    Auto,
    Dense,
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvdConfig {
    pub method: SvdMethod,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub dense_cutoff: usize,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            method: SvdMethod::Auto,
            oversampling: 10,
            power_iterations: 4,
            dense_cutoff: 512,
        }
    }
}

/// Rank-`d` factors `A ≈ B Σ Cᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// `B Σ`, `n × d`.
    pub scaled_left: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// `C`, `n × d`.
    pub right: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.scaled_left * self.right.transpose()
    }
}

fn to_dense(s: &SparseSymmetricMatrix) -> DMatrix<f64> {
    let n = s.dim();
    let mut a = DMatrix::zeros(n, n);
    for (i, j, w) in s.edges() {
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    a
}

/// Descending singular triplets of a small dense matrix `rows × cols`.
fn sorted_svd(m: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let v = svd.v_t.expect("right vectors requested").transpose();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    let sv = order.iter().map(|&k| svd.singular_values[k]).collect();
    (u, sv, v)
}

fn sparse_mul(s: &SparseSymmetricMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, cols) = (x.nrows(), x.ncols());
    // nalgebra is column-major; go through a row-major buffer.
    let row_major: Vec<f64> = (0..n)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| x[(r, c)])
        .collect();
    let y = s.mul_dense(&row_major, cols);
    DMatrix::from_row_slice(n, cols, &y)
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn randomized(s: &SparseSymmetricMatrix, d: usize, seed: u64, cfg: &SvdConfig) -> TruncatedSvd {
    let n = s.dim();
    let width = (d + cfg.oversampling).min(n);
    let mut rng = crate::rng::stage_rng(seed, "svd-sketch");
    let omega = DMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(sparse_mul(s, &omega));
    for _ in 0..cfg.power_iterations {
        // A is symmetric, so Aᵀ Q = A Q.
        let z = orthonormal_basis(sparse_mul(s, &q));
        q = orthonormal_basis(sparse_mul(s, &z));
    }
    // B = Qᵀ A  (width × n), formed as (A Q)ᵀ.
    let b = sparse_mul(s, &q).transpose();
    let (ub, sv, vb) = sorted_svd(b);
    let u = &q * ub;
    finish(u, sv, vb, d)
}

fn finish(u: DMatrix<f64>, sv: Vec<f64>, v: DMatrix<f64>, d: usize) -> TruncatedSvd {
    let n = u.nrows();
    let mut left = u.columns(0, d).into_owned();
    let mut right = v.columns(0, d).into_owned();
    for c in 0..d {
        // Largest-magnitude entry of each left column made positive.
        let mut arg = 0;
        for r in 0..n {
            if left[(r, c)].abs() > left[(arg, c)].abs() {
                arg = r;
            }
        }
        if left[(arg, c)] < 0.0 {
            left.column_mut(c).neg_mut();
            right.column_mut(c).neg_mut();
        }
        left.column_mut(c).scale_mut(sv[c]);
    }
    TruncatedSvd {
        scaled_left: left,
        singular_values: sv[..d].to_vec(),
        right,
    }
}

pub fn truncated_svd(
    s: &SparseSymmetricMatrix,
    d: usize,
    seed: u64,
    cfg: &SvdConfig,
) -> Result<TruncatedSvd> {
    let n = s.dim();
    if d > n {
        return Err(Error::DimensionTooLarge { dim: d, nodes: n });
    }
    if d == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    let dense = match cfg.method {
        SvdMethod::Dense => true,
        SvdMethod::Randomized => false,
        SvdMethod::Auto => n <= cfg.dense_cutoff,
    };
    // A sketch as wide as the matrix gains nothing over the dense route.
    if dense || d + cfg.oversampling >= n {
        let (u, sv, v) = sorted_svd(to_dense(s));
        Ok(finish(u, sv, v, d))
    } else {
        Ok(randomized(s, d, seed, cfg))
    }
}

/// `B Σ` of the rank-`d` truncated SVD of `s`.
pub fn svd_embed(
    s: &SparseSymmetricMatrix,
    vocab: &Vocab,
    d: usize,
    seed: u64,
    cfg: &SvdConfig,
) -> Result<EmbeddingMatrix> {
    if vocab.len() != s.dim() {
        return Err(Error::VocabMismatch(format!(
            "vocabulary has {} ids, matrix has {} rows",
            vocab.len(),
            s.dim()
        )));
    }
    let t = truncated_svd(s, d, seed, cfg)?;
    let n = s.dim();
    let data = (0..n)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .map(|(r, c)| t.scaled_left[(r, c)])
        .collect();
    EmbeddingMatrix::new(vocab.clone(), d, data)
}
