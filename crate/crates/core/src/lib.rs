//! Cross-modal contrastive recommendation on the unit hypersphere.
//!
//! A graph encoder (LightGCN or NGCF) produces interaction representations
//! that are aligned with precomputed review-text embeddings through a
//! symmetric NCE loss whose denominator skips every in-batch item the
//! anchor's user is already known to have interacted with. Embeddings are
//! L2-normalized before every loss so that magnitude, which tends to track
//! popularity, cannot drive the ranking.
//!
//! The crate is organised as a pipeline:
//!
//! * [`dataio`]: ingestion, k-core filtering, temporal split, normalized
//!   adjacency, false-negative masks and the binary embedding file format.
//! * [`synth`]: planted-cluster synthetic data with a subjective axis.
//! * [`encoder`]: LightGCN and NGCF propagation with hand-written backward passes.
//! * [`objective`]: every loss term with closed-form gradients.
//! * [`trainer`]: parameter ownership, Adam, checkpoints.
//! * [`evaluator`]: all-ranking HR@K / NDCG@K.
//! * [`diagnostics`]: geometric statistics of trained embeddings.
//! * [`cli`]: the `symcere` command line.

pub mod cli;
pub mod config;
pub mod dataio;
pub mod diagnostics;
pub mod encoder;
mod error;
pub mod evaluator;
pub mod linalg;
pub mod objective;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
