//! Mixed-membership stochastic block model for hypergraphs.
//!
//! Hyperedge weights are Poisson with rate `λ_e / κ_|e|`, where
//! `λ_e = Σ_{i<j∈e} u_iᵀ w u_j` combines node memberships `u` (N×K) through a
//! symmetric affinity `w` (K×K). The crate provides:
//!
//! - [`hypergraph`]: canonical weighted hypergraphs, the text format, `κ` and the
//!   size-summed constants `C`, `C′`;
//! - [`model`]: rates, likelihood/posterior, per-hyperedge pmf, expected degrees;
//! - [`inference`]: multiplicative EM/MAP updates with multi-restart driver;
//! - [`sampler`]: exact Poisson sampling over every candidate hyperedge and
//!   planted-partition benchmarks;
//! - [`evaluation`]: train/test splits, AUC, recovery similarity, assortative
//!   comparison, K selection and CP profiles.

pub mod error;
pub mod evaluation;
pub mod hypergraph;
pub mod inference;
pub mod model;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use hypergraph::Hypergraph;
pub use inference::{infer, InferenceConfig, InferenceReport};
pub use model::{ModelParams, PriorRates};
