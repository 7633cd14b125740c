//! PPMI weighting, low-degree filtering, label modularity and connectivity.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CooccurrenceCounts;
use crate::matrix::SparseSymmetricMatrix;

/// PPMI values at or below this are treated as exact zeros.
const PPMI_EPS: f64 = 1e-12;

/// Positive pointwise mutual information of a co-occurrence matrix.
///
/// `p(i, j) = w_ij / W` and `p(i) = Σ_j w_ij / W`, where `W` sums every
/// unordered pair once, so `p(i)` is the share of co-occurrences involving `i`.
pub fn ppmi_transform(counts: &CooccurrenceCounts) -> Result<SparseSymmetricMatrix> {
    ppmi_matrix(&counts.matrix)
}

pub fn ppmi_matrix(m: &SparseSymmetricMatrix) -> Result<SparseSymmetricMatrix> {
    let total = m.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let row_sums: Vec<f64> = (0..m.dim()).map(|i| m.weighted_degree(i)).collect();
    let upper = m.edges().filter_map(|(i, j, w)| {
        let v = (w * total / (row_sums[i] * row_sums[j])).log2();
        (v > PPMI_EPS).then_some(((i, j), v))
    });
    Ok(SparseSymmetricMatrix::from_canonical(m.dim(), upper))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeFilter {
    pub graph: SparseSymmetricMatrix,
    pub gamma: usize,
    /// Original indices of surviving nodes, ascending.
    pub kept: Vec<usize>,
}

/// Largest integer `γ` such that removing all nodes of unweighted degree `< γ`
/// removes at most `max_removal_fraction` of the nodes.
pub fn select_gamma(degrees: &[usize], max_removal_fraction: f64) -> usize {
    let n = degrees.len();
    if n == 0 {
        return 0;
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let budget = max_removal_fraction * n as f64;
    // The answer is the smallest degree value d with #{deg <= d} > budget.
    let mut k = 0;
    while k < n {
        let d = sorted[k];
        let upto = sorted.partition_point(|&x| x <= d);
        if upto as f64 > budget {
            return d;
        }
        k = upto;
    }
    // Only reachable when the budget covers every node.
    sorted[n - 1] + 1
}

/// Single-pass removal of low-degree nodes with automatic threshold choice.
pub fn low_degree_filter(
    g: &SparseSymmetricMatrix,
    max_removal_fraction: f64,
) -> Result<DegreeFilter> {
    if !(0.0..1.0).contains(&max_removal_fraction) {
        return Err(Error::invalid(format!(
            "max_removal_fraction {max_removal_fraction} outside [0, 1)"
        )));
    }
    let degrees: Vec<usize> = (0..g.dim()).map(|i| g.degree(i)).collect();
    let gamma = select_gamma(&degrees, max_removal_fraction);
    let kept: Vec<usize> = (0..g.dim()).filter(|&i| degrees[i] >= gamma).collect();
    Ok(DegreeFilter {
        graph: g.induced(&kept),
        gamma,
        kept,
    })
}

/// Weighted Newman modularity of a node labelling.
///
/// With `restrict_to_labeled`, unlabeled nodes and their edges are removed
/// before computing `m` and degrees; otherwise they stay in the null model but
/// never share a community.
pub fn modularity(
    g: &SparseSymmetricMatrix,
    labels: &BTreeMap<usize, String>,
    restrict_to_labeled: bool,
) -> Result<f64> {
    let counted = |i: usize| !restrict_to_labeled || labels.contains_key(&i);
    let mut two_m = 0.0;
    let mut labeled_edges = false;
    let mut internal: BTreeMap<&str, f64> = BTreeMap::new();
    let mut strength: BTreeMap<&str, f64> = BTreeMap::new();
    for i in (0..g.dim()).filter(|&i| counted(i)) {
        let li = labels.get(&i).map(String::as_str);
        for (j, w) in g.row_iter(i).filter(|&(j, _)| counted(j)) {
            two_m += w;
            if let Some(li) = li {
                *strength.entry(li).or_insert(0.0) += w;
                if labels.get(&j).map(String::as_str) == Some(li) {
                    *internal.entry(li).or_insert(0.0) += w;
                }
                if labels.contains_key(&j) {
                    labeled_edges = true;
                }
            }
        }
    }
    if !labeled_edges || two_m <= 0.0 {
        return Err(Error::NoLabeledEdges);
    }
    let q = strength
        .iter()
        .map(|(c, k)| internal.get(c).copied().unwrap_or(0.0) / two_m - (k / two_m).powi(2))
        .sum();
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// Components sorted by size (descending), then by smallest member.
    pub components: Vec<Vec<usize>>,
    /// Mean unweighted shortest-path length within the largest component.
    pub largest_mean_shortest_path: Option<f64>,
}

fn bfs_distances(g: &SparseSymmetricMatrix, src: usize, dist: &mut [usize]) {
    dist.fill(usize::MAX);
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for (v, _) in g.row_iter(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

pub fn connected_components(g: &SparseSymmetricMatrix) -> Vec<Vec<usize>> {
    let n = g.dim();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for (v, _) in g.row_iter(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// Components plus the mean shortest path of the largest one (all-pairs BFS).
pub fn component_report(g: &SparseSymmetricMatrix) -> ComponentReport {
    let components = connected_components(g);
    let largest_mean_shortest_path = components.first().filter(|c| c.len() > 1).map(|c| {
        let total: u64 = c
            .par_iter()
            .map_init(
                || vec![0; g.dim()],
                |dist, &s| {
                    bfs_distances(g, s, dist);
                    c.iter().map(|&t| dist[t] as u64).sum::<u64>()
                },
            )
            .sum();
        let pairs = (c.len() * (c.len() - 1)) as f64;
        total as f64 / pairs
    });
    ComponentReport {
        components,
        largest_mean_shortest_path,
    }
}
