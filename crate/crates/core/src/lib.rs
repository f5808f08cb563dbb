//! Bayesian reconstruction of hypergraphs (2-edges and 3-edges) and of graphs
//! with weak and strong edges from noisy pairwise count data.
//!
//! The observation model assigns each vertex pair a label in {0, 1, 2} and
//! draws its count from a Poisson distribution with the label's mean. The
//! latent structure, the rates and the structural densities are sampled
//! jointly with a Metropolis-Hastings-within-Gibbs scheme ([`inference`]);
//! [`estimators`] turns retained samples into point estimates and
//! diagnostics, [`generators`] builds synthetic structures and [`pipeline`]
//! runs complete experiments.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod generators;
pub mod inference;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod special;

pub use distributions::{Hyperparams, TruncGammaOptions, TruncInterval};
pub use error::{Error, Result};
pub use estimators::{ConfusionMatrix, EvalOptions, MetricsReport, Percentiles, ResidualSummary};
pub use generators::{BetaModelParams, GeneratorSpec, SbmParams};
pub use inference::{ChainTrace, Init, InitState, McmcConfig, PosteriorSample};
pub use model::{
    CategoricalGraph, Hypergraph, LabelMatrix, ModelKind, ObservationMatrix, RateParams, Structure, StructureProbs,
    SufficientStats,
};
pub use pipeline::{ExperimentSpec, InitMode, ResultBundle, RunConfig};
