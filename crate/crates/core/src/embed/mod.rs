//! Node embeddings: truncated SVD, random-walk skip-gram (DeepWalk/node2vec)
//! and text import/export for externally trained models.

mod io;
mod sgns;
mod svd;
mod walks;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::Vocab;

pub use io::{load_embedding, parse_embedding, store_embedding, format_embedding};
pub use sgns::{sgns_gradients, sgns_loss, train_sgns, SgnsConfig, SgnsGradients, SgnsMode, TrainingTrace};
pub use svd::{svd_embed, truncated_svd, SvdConfig, SvdMethod, TruncatedSvd};
pub use walks::{format_walks, generate_walks, WalkCorpus, WalkStrategy};

/// `|V| × d` row-major node vectors sharing the graph's vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    vocab: Vocab,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vocab, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != vocab.len() * dim {
            return Err(Error::invalid(format!(
                "embedding data has {} values, expected {} × {}",
                data.len(),
                vocab.len(),
                dim
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite embedding value for node {}",
                vocab.id(k / dim.max(1))
            )));
        }
        Ok(EmbeddingMatrix { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// I.i.d. standard normal rows; the null baseline for interpretability.
    pub fn gaussian(vocab: Vocab, dim: usize, seed: u64) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::seeded(seed);
        let data = (0..vocab.len() * dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        EmbeddingMatrix { vocab, dim, data }
    }
}
