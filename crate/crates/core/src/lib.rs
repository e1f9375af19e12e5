//! Bayesian hierarchical models of network structure.
//!
//! Vertices of a graph sit at the leaves of a random multifurcating tree
//! drawn from a Gibbs fragmentation prior. Each internal node owns the
//! vertex pairs whose lowest common ancestor it is, and a link probability
//! shared over all of them (`pooled`) or one per pair of children
//! (`unpooled`). Link probabilities are integrated out, and the tree is
//! sampled by Metropolis-Hastings with prune-and-regraft proposals. A flat
//! blockmodel (`irm`) fitted by collapsed Gibbs sampling serves as a
//! baseline.
//!
//! Density code is generic over [`Real`] (`f64` or `f32`); the aliases
//! below fix the common `f64` instantiation.

pub mod error;
pub mod evalmetrics;
pub mod graphstats;
pub mod models;
pub mod partition;
pub mod prior;
pub mod sampler;
pub mod scalar;
pub mod tree;

pub use error::{Error, Result};
pub use graphstats::{BlockStats, Counts, Graph};
pub use models::{BetaParams, ModelKind, Structure};
pub use partition::FlatPartition;
pub use prior::GibbsParams;
pub use sampler::{ChainConfig, PosteriorSample};
pub use scalar::Real;
pub use tree::{FragTree, InsertSite, MoveType, NodeRef, SprEdit};

pub type GibbsParamsF64 = prior::GibbsParams<f64>;
pub type GibbsParamsF32 = prior::GibbsParams<f32>;
pub type BetaParamsF64 = models::BetaParams<f64>;
pub type BetaParamsF32 = models::BetaParams<f32>;
pub type ChainConfigF64 = sampler::ChainConfig<f64>;
pub type ChainConfigF32 = sampler::ChainConfig<f32>;
