//! First-, second- and higher-order proximity networks, their weight classes,
//! and per-target neighbourhood partitions.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kmeans::{kmeans_1d_segment, Segmentation};
use crate::matrix::SparseSymmetricMatrix;

pub const WEIGHT_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Network {
    S,
    P,
    H,
}

impl Network {
    pub const ALL: [Network; 3] = [Network::S, Network::P, Network::H];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Network> {
        match s {
            "S" | "s" => Some(Network::S),
            "P" | "p" => Some(Network::P),
            "H" | "h" => Some(Network::H),
            _ => None,
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Network::S => "S",
            Network::P => "P",
            Network::H => "H",
        })
    }
}

/// Which supports the higher-order network is masked against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskingRule {
    /// A pair belongs only to the lowest order it appears in: `H` excludes
    /// both `S` and `P`.
    #[default]
    Prose,
    /// `H` excludes `P` only; `H` may then overlap `S`.
    Formula,
}

/// Cosine similarity between rows, self-pairs excluded. Only values strictly
/// above `threshold` become edges.
pub fn row_cosine_network(m: &SparseSymmetricMatrix, threshold: f64) -> SparseSymmetricMatrix {
    let n = m.dim();
    let norms: Vec<f64> = (0..n).map(|i| m.row_norm(i)).collect();
    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; n], Vec::<usize>::new()),
            |(acc, touched), i| {
                if norms[i] == 0.0 {
                    return Vec::new();
                }
                for (k, wik) in m.row_iter(i) {
                    for (j, wkj) in m.row_iter(k) {
                        if j > i {
                            if acc[j] == 0.0 {
                                touched.push(j);
                            }
                            acc[j] += wik * wkj;
                        }
                    }
                }
                touched.sort_unstable();
                let mut row = Vec::with_capacity(touched.len());
                for &j in touched.iter() {
                    let cos = (acc[j] / (norms[i] * norms[j])).min(1.0);
                    if cos > threshold {
                        row.push((j as u32, cos));
                    }
                    acc[j] = 0.0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    SparseSymmetricMatrix::from_upper_rows(n, rows)
}

/// Keeps the entries of `candidate` that are absent from every `forbid` matrix.
pub fn mask_in_absentia(
    candidate: &SparseSymmetricMatrix,
    forbid: &[&SparseSymmetricMatrix],
) -> SparseSymmetricMatrix {
    let upper = candidate
        .edges()
        .filter(|&(i, j, _)| forbid.iter().all(|f| !f.contains(i, j)))
        .map(|(i, j, w)| ((i, j), w));
    SparseSymmetricMatrix::from_canonical(candidate.dim(), upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityNetwork {
    pub matrix: SparseSymmetricMatrix,
    /// `None` when the network has fewer than four distinct weights.
    pub segmentation: Option<Segmentation>,
    /// Class (1..=4) of every stored entry, aligned with the matrix's row storage.
    classes: Vec<u8>,
}

impl ProximityNetwork {
    pub fn new(matrix: SparseSymmetricMatrix) -> Self {
        let segmentation = match kmeans_1d_segment(&matrix.edge_weights(), WEIGHT_CLASSES) {
            Ok((_, seg)) => Some(seg),
            Err(e) => {
                log::warn!("weight classes unavailable: {e}");
                None
            }
        };
        let classes = match &segmentation {
            Some(seg) => (0..matrix.dim())
                .flat_map(|i| matrix.row(i).1.iter().map(|&w| seg.class_of(w) as u8))
                .collect(),
            None => Vec::new(),
        };
        ProximityNetwork {
            matrix,
            segmentation,
            classes,
        }
    }

    pub fn is_segmented(&self) -> bool {
        self.segmentation.is_some()
    }

    /// Class of edge `(i, j)`, if it is an edge and the network is segmented.
    pub fn class_of(&self, i: usize, j: usize) -> Option<usize> {
        let k = self.matrix.position(i, j)?;
        self.classes.get(k).map(|&c| c as usize)
    }

    /// `(neighbour, class)` for every edge of row `i`.
    pub fn row_classes(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let off = self.matrix.row_offset(i);
        let (idx, _) = self.matrix.row(i);
        idx.iter()
            .enumerate()
            .filter_map(move |(k, &j)| self.classes.get(off + k).map(|&c| (j as usize, c as usize)))
    }

    /// Mean weight of each class.
    pub fn class_means(&self) -> Option<Vec<f64>> {
        self.segmentation.as_ref().map(|s| s.centroids.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityStack {
    pub networks: [ProximityNetwork; 3],
    pub masking: MaskingRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximityConfig {
    pub threshold: f64,
    pub masking: MaskingRule,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        ProximityConfig {
            threshold: 0.0,
            masking: MaskingRule::Prose,
        }
    }
}

impl ProximityStack {
    /// `P` is the masked row-cosine of `S`; `H` is the masked row-cosine of
    /// the masked `P`.
    pub fn build(s: &SparseSymmetricMatrix, cfg: &ProximityConfig) -> Result<Self> {
        if !(cfg.threshold >= 0.0) {
            return Err(crate::error::Error::invalid(format!(
                "cosine threshold {} must be non-negative",
                cfg.threshold
            )));
        }
        let p_hat = row_cosine_network(s, cfg.threshold);
        let p = mask_in_absentia(&p_hat, &[s]);
        let h_hat = row_cosine_network(&p, cfg.threshold);
        let h = match cfg.masking {
            MaskingRule::Prose => mask_in_absentia(&h_hat, &[s, &p]),
            MaskingRule::Formula => mask_in_absentia(&h_hat, &[&p]),
        };
        Ok(Self::from_matrices(s.clone(), p, h, cfg.masking))
    }

    pub fn from_matrices(
        s: SparseSymmetricMatrix,
        p: SparseSymmetricMatrix,
        h: SparseSymmetricMatrix,
        masking: MaskingRule,
    ) -> Self {
        ProximityStack {
            networks: [
                ProximityNetwork::new(s),
                ProximityNetwork::new(p),
                ProximityNetwork::new(h),
            ],
            masking,
        }
    }

    pub fn dim(&self) -> usize {
        self.networks[0].matrix.dim()
    }

    pub fn network(&self, n: Network) -> &ProximityNetwork {
        &self.networks[n.index()]
    }

    /// Lowest-order network containing `(i, j)` with its class (0 when the
    /// network is unsegmented), or `None` for control pairs.
    pub fn cell_of(&self, i: usize, j: usize) -> Option<(Network, usize)> {
        Network::ALL.into_iter().find_map(|n| {
            let net = self.network(n);
            net.matrix
                .contains(i, j)
                .then(|| (n, net.class_of(i, j).unwrap_or(0)))
        })
    }

    pub fn neighborhood_partition(&self, t: usize) -> NeighborhoodPartition {
        neighborhood_partition(self, t)
    }
}

/// The neighbours of one target split into thirteen disjoint cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodPartition {
    pub target: usize,
    /// `cells[network][class - 1]`.
    pub cells: [[Vec<usize>; WEIGHT_CLASSES]; 3],
    /// Edges of unsegmented networks; they belong to no weight class.
    pub unclassed: [Vec<usize>; 3],
    /// Control pairs: nodes linked to the target in no network.
    pub control: Vec<usize>,
}

impl NeighborhoodPartition {
    pub fn cell(&self, n: Network, class: usize) -> &[usize] {
        &self.cells[n.index()][class - 1]
    }

    pub fn total(&self) -> usize {
        self.cells.iter().flatten().map(Vec::len).sum::<usize>()
            + self.unclassed.iter().map(Vec::len).sum::<usize>()
            + self.control.len()
    }
}

pub fn neighborhood_partition(stack: &ProximityStack, t: usize) -> NeighborhoodPartition {
    let n = stack.dim();
    assert!(t < n, "target {t} outside node set of size {n}");
    let mut assigned = vec![false; n];
    assigned[t] = true;
    let mut cells: [[Vec<usize>; WEIGHT_CLASSES]; 3] = Default::default();
    let mut unclassed: [Vec<usize>; 3] = Default::default();
    for net in Network::ALL {
        let pn = stack.network(net);
        if pn.is_segmented() {
            for (v, class) in pn.row_classes(t) {
                if !assigned[v] {
                    assigned[v] = true;
                    cells[net.index()][class - 1].push(v);
                }
            }
        } else {
            for (v, _) in pn.matrix.row_iter(t) {
                if !assigned[v] {
                    assigned[v] = true;
                    unclassed[net.index()].push(v);
                }
            }
        }
    }
    let control = (0..n).filter(|&v| !assigned[v]).collect();
    NeighborhoodPartition {
        target: t,
        cells,
        unclassed,
        control,
    }
}
