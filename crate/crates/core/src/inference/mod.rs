//! Metropolis-Hastings-within-Gibbs posterior sampling for both structural
//! models.

pub mod categorical_kernel;
pub mod chain;
pub mod collections;
pub mod conditionals;
pub mod config;
pub mod data;
pub mod em;
pub mod hypergraph_kernel;
pub mod theta;

pub use categorical_kernel::{CategoricalState, GraphProposal, LabelDirection};
pub use chain::{
    check_convergence, convergence_status, empirical_probs, mixture_init, run_chain, run_inference,
    window_relative_change, ChainTrace, ConvergenceStatus, InferenceResult, Init, InitState, MoveCount,
    PosteriorSample, Sampler,
};
pub use conditionals::{
    log_joint, log_joint_from_stats, log_param_prior, log_structure_prior, rate_interval, resample_probs_from_counts,
    resample_rate, resample_rates, resample_structure_probs, structure_counts,
};
pub use config::{IterationUnit, McmcConfig, Schedule};
pub use data::DataContext;
pub use em::{poisson_mixture_em, MixtureFit};
pub use hypergraph_kernel::{HyperMove, HyperMoveClass, HyperProposal, HypergraphState};
pub use theta::ThetaCache;
