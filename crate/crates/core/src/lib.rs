//! Interpretability of inter-node distances in node embeddings.
//!
//! The pipeline runs from raw co-occurrence data to a PPMI network
//! ([`ingest`], [`graph`]), builds first-, second- and higher-order proximity
//! networks with weight classes ([`proximity`], [`kmeans`]), embeds the
//! network ([`embed`]), measures how strongly each weight class attracts
//! a node in the embedding ([`attraction`]) and scores the separation of
//! those attractions ([`interp`]).

pub mod attraction;
pub mod embed;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod interp;
pub mod kmeans;
pub mod matrix;
pub mod proximity;
pub mod rng;
pub mod textio;
pub mod vocab;

pub use error::{Error, Result};
pub use matrix::SparseSymmetricMatrix;
pub use vocab::Vocab;
