//! Adversarial sampling and adversarial training for semi-supervised ranking
//! with implicit feedback.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense vector/matrix helpers, stable elementwise functions,
//!   seeded randomness and a central-difference gradient oracle.
//! - [`losses`]: pointwise cross entropy, pairwise preference loss and the
//!   Bernoulli KL divergence used by virtual adversarial training.
//! - [`models`]: the three differentiable scorers (two-layer ReLU network,
//!   matrix factorization, cosine over mean-pooled embeddings).
//! - [`perturb`]: adversarial and virtual-adversarial input perturbations.
//! - [`sampling`]: uniform and adversarial (softmax over model scores) negative samplers.
//! - [`trainer`]: the training objectives and the SGD loop.
//! - [`data`]: LETOR and MovieLens ingestion, label compilation, splits.
//! - [`eval`]: Precision@N, NDCG@N, paired t-test and report files.
//! - [`experiment`]: the declarative experiment driver behind the CLI.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod losses;
pub mod models;
pub mod numerics;
pub mod perturb;
pub mod sampling;
pub mod trainer;

pub use error::{Error, Result};
