//! Gibbs iterations, convergence detection and multi-chain orchestration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::categorical_kernel::{CategoricalState, LabelDirection};
use super::conditionals::{log_joint, log_joint_from_stats, resample_probs_from_counts, resample_rates};
use super::config::{McmcConfig, Schedule};
use super::data::DataContext;
use super::em::poisson_mixture_em;
use super::hypergraph_kernel::{HyperMoveClass, HypergraphState};
use super::theta::ThetaCache;
use crate::distributions::Hyperparams;
use crate::error::{invalid_param, Error, Result};
use crate::model::{
    n_pairs, n_triplets, CategoricalGraph, Hypergraph, ModelKind, ObservationMatrix, RateParams, Structure,
    StructureProbs, SufficientStats,
};
use crate::rng::{chain_seed, rng_from_seed};

/// One retained state of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub structure: Structure,
    pub mu: RateParams,
    pub probs: StructureProbs,
    /// Unnormalized log joint posterior (without `P(X)` and `Σ log x!`).
    pub log_joint: f64,
    /// Full Poisson log-likelihood.
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCount {
    pub kind: String,
    pub proposed: u64,
    pub accepted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub model: ModelKind,
    pub seed: u64,
    /// Log-likelihood after every Gibbs iteration (burn-in and sampling).
    pub loglik_history: Vec<f64>,
    pub samples: Vec<PosteriorSample>,
    /// Iteration (1-based sweep count) at which the convergence criterion was
    /// met; `None` if the iteration cap was reached first.
    pub converged_at: Option<usize>,
    pub moves: Vec<MoveCount>,
}

impl ChainTrace {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    /// Mean log-likelihood over the retained samples.
    pub fn mean_sample_log_likelihood(&self) -> Option<f64> {
        if self.samples.is_empty() {
            None
        } else {
            Some(self.samples.iter().map(|s| s.log_likelihood).sum::<f64>() / self.samples.len() as f64)
        }
    }
}

/// Starting point of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitState {
    pub structure: Structure,
    pub mu: RateParams,
    pub probs: StructureProbs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Init {
    /// No 3-edges (strong edges), 2-edges (weak edges) wherever `x_ij > 0`,
    /// and parameters from a three-component Poisson mixture fit.
    Mixture,
    /// Explicit starting state, e.g. the ground truth.
    Given(InitState),
}

enum Kernel {
    Hyper(HypergraphState),
    Categorical(CategoricalState),
}

/// A chain's mutable state: structure kernel plus parameters, with the log
/// joint posterior tracked incrementally.
pub struct Sampler<'a> {
    ctx: &'a DataContext,
    cfg: &'a McmcConfig,
    hp: &'a Hyperparams,
    schedule: Schedule,
    kernel: Kernel,
    mu: RateParams,
    probs: StructureProbs,
    log_joint: f64,
    proposed: Vec<u64>,
    accepted: Vec<u64>,
}

impl<'a> Sampler<'a> {
    pub fn new(ctx: &'a DataContext, cfg: &'a McmcConfig, hp: &'a Hyperparams, init: &InitState) -> Result<Self> {
        cfg.validate()?;
        hp.validate()?;
        let model = init.structure.model();
        if init.probs.model() != model {
            return Err(invalid_param("structure and structure probabilities belong to different models"));
        }
        init.probs.validate()?;
        init.mu.validate(model)?;
        if init.mu.mu.iter().any(|&m| m <= 0.0) {
            return Err(invalid_param(format!("initial rates {:?} must be positive", init.mu.mu)));
        }
        let (kernel, n_kinds) = match &init.structure {
            Structure::Hypergraph(h) => (Kernel::Hyper(HypergraphState::new(ctx, h)?), 6),
            Structure::Categorical(g) => (Kernel::Categorical(CategoricalState::new(ctx, g)?), 2),
        };
        let mut s = Sampler {
            ctx,
            cfg,
            hp,
            schedule: cfg.schedule(ctx.n_pairs()),
            kernel,
            mu: init.mu,
            probs: init.probs,
            log_joint: 0.0,
            proposed: vec![0; n_kinds],
            accepted: vec![0; n_kinds],
        };
        s.log_joint = s.log_joint_from_stats();
        Ok(s)
    }

    pub fn model(&self) -> ModelKind {
        match self.kernel {
            Kernel::Hyper(_) => ModelKind::Hypergraph,
            Kernel::Categorical(_) => ModelKind::Categorical,
        }
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn mu(&self) -> RateParams {
        self.mu
    }

    pub fn probs(&self) -> StructureProbs {
        self.probs
    }

    fn stats(&self) -> &SufficientStats {
        match &self.kernel {
            Kernel::Hyper(s) => s.stats(),
            Kernel::Categorical(s) => s.stats(),
        }
    }

    fn edge_counts(&self) -> (u64, u64) {
        match &self.kernel {
            Kernel::Hyper(s) => s.counts(),
            Kernel::Categorical(s) => s.counts(),
        }
    }

    pub fn labels(&self) -> &[u8] {
        match &self.kernel {
            Kernel::Hyper(s) => s.labels(),
            Kernel::Categorical(s) => s.labels(),
        }
    }

    pub fn structure(&self) -> Structure {
        match &self.kernel {
            Kernel::Hyper(s) => Structure::Hypergraph(s.to_hypergraph(self.ctx)),
            Kernel::Categorical(s) => Structure::Categorical(s.to_graph(self.ctx)),
        }
    }

    /// Incrementally tracked log joint posterior.
    pub fn log_joint(&self) -> f64 {
        self.log_joint
    }

    fn log_joint_from_stats(&self) -> f64 {
        log_joint_from_stats(
            self.model(),
            self.ctx.n(),
            self.edge_counts(),
            self.stats(),
            &self.mu,
            &self.probs,
            self.hp,
        )
    }

    /// Log joint posterior recomputed from the explicit structure.
    pub fn recompute_log_joint(&self, x: &ObservationMatrix) -> Result<f64> {
        log_joint(x, &self.structure(), &self.mu, &self.probs, self.hp)
    }

    /// Full log-likelihood of the current labels.
    pub fn log_likelihood(&self) -> f64 {
        match &self.kernel {
            Kernel::Hyper(s) => s.log_likelihood(self.ctx, &self.mu),
            Kernel::Categorical(s) => s.log_likelihood(self.ctx, &self.mu),
        }
    }

    /// One sweep of structure proposals at fixed parameters.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let theta = ThetaCache::new(&self.mu, &self.probs);
        let ctx = self.ctx;
        let cfg = self.cfg;
        for _ in 0..self.schedule.proposals_per_sweep {
            let (kind, delta) = match &mut self.kernel {
                Kernel::Hyper(s) => {
                    let (class, d) = s.step(ctx, &theta, cfg, rng);
                    (class.index(), d)
                }
                Kernel::Categorical(s) => {
                    let (dir, d) = s.step(ctx, &theta, cfg, rng);
                    (dir as usize, d)
                }
            };
            self.proposed[kind] += 1;
            if let Some(d) = delta {
                self.accepted[kind] += 1;
                self.log_joint += d;
            }
        }
    }

    /// Resamples φ, then μ, from their full conditionals.
    pub fn resample_parameters<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.probs = resample_probs_from_counts(self.model(), self.ctx.n(), self.edge_counts(), self.hp, rng)?;
        self.mu = resample_rates(self.model(), self.stats(), &self.mu, self.hp, &self.cfg.trunc_gamma, rng)?;
        self.log_joint = self.log_joint_from_stats();
        Ok(())
    }

    /// One Gibbs iteration: a sweep of structure proposals, then φ, then μ.
    pub fn gibbs_iteration<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.sweep(rng);
        self.resample_parameters(rng)
    }

    pub fn sample(&self) -> PosteriorSample {
        PosteriorSample {
            structure: self.structure(),
            mu: self.mu,
            probs: self.probs,
            log_joint: self.log_joint,
            log_likelihood: self.log_likelihood(),
        }
    }

    pub fn move_counts(&self) -> Vec<MoveCount> {
        let names: Vec<String> = match self.kernel {
            Kernel::Hyper(_) => HyperMoveClass::ALL
                .iter()
                .map(|c| serde_json::to_value(c).unwrap().as_str().unwrap().to_string())
                .collect(),
            Kernel::Categorical(_) => [LabelDirection::Increment, LabelDirection::Decrement]
                .iter()
                .map(|c| serde_json::to_value(c).unwrap().as_str().unwrap().to_string())
                .collect(),
        };
        names
            .into_iter()
            .enumerate()
            .map(|(i, kind)| MoveCount {
                kind,
                proposed: self.proposed[i],
                accepted: self.accepted[i],
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Running,
    Converged,
    IterationCap,
}

/// Relative change between the mean of the last `window` values and the
/// mean of the `window` values before them.
pub fn window_relative_change(history: &[f64], window: usize) -> Option<f64> {
    if window == 0 || history.len() < 2 * window {
        return None;
    }
    let len = history.len();
    let last = &history[len - window..];
    let prev = &history[len - 2 * window..len - window];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (a, b) = (mean(last), mean(prev));
    Some(if a == b { 0.0 } else { (a - b).abs() / b.abs() })
}

pub fn convergence_status(history: &[f64], schedule: &Schedule, tol: f64) -> ConvergenceStatus {
    let len = history.len();
    let eligible = len >= schedule.min_sweeps && len >= 2 * schedule.window;
    if eligible {
        if let Some(change) = window_relative_change(history, schedule.window) {
            if change < tol {
                return ConvergenceStatus::Converged;
            }
        }
    }
    if len >= schedule.max_sweeps {
        ConvergenceStatus::IterationCap
    } else {
        ConvergenceStatus::Running
    }
}

/// True once the chain may stop burning in: the window criterion holds, or
/// the iteration cap is reached.
pub fn check_convergence(history: &[f64], schedule: &Schedule, tol: f64) -> bool {
    convergence_status(history, schedule, tol) != ConvergenceStatus::Running
}

/// Runs one chain from `init` until convergence, then retains
/// `n_samples` states `sample_stride` iterations apart.
pub fn run_chain(
    ctx: &DataContext,
    init: &InitState,
    cfg: &McmcConfig,
    hp: &Hyperparams,
    seed: u64,
) -> Result<ChainTrace> {
    let rng = &mut rng_from_seed(seed);
    let mut s = Sampler::new(ctx, cfg, hp, init)?;
    let schedule = s.schedule();
    let mut history = Vec::new();
    let converged_at = loop {
        s.gibbs_iteration(rng)?;
        history.push(s.log_likelihood());
        match convergence_status(&history, &schedule, cfg.tol_delta) {
            ConvergenceStatus::Running => {}
            ConvergenceStatus::Converged => break Some(history.len()),
            ConvergenceStatus::IterationCap => break None,
        }
    };
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        for _ in 0..cfg.sample_stride {
            s.gibbs_iteration(rng)?;
            history.push(s.log_likelihood());
        }
        samples.push(s.sample());
    }
    Ok(ChainTrace {
        model: s.model(),
        seed,
        loglik_history: history,
        samples,
        converged_at,
        moves: s.move_counts(),
    })
}

/// Outcome of a multi-chain run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub model: ModelKind,
    pub init: InitState,
    /// Chain with the highest mean log-likelihood over its retained samples.
    pub best: ChainTrace,
    pub best_chain: usize,
    /// Mean retained-sample log-likelihood of every chain; `None` for a chain
    /// that failed.
    pub chain_mean_log_likelihood: Vec<Option<f64>>,
    pub chain_converged: Vec<bool>,
    pub chain_errors: Vec<Option<String>>,
}

impl InferenceResult {
    pub fn all_converged(&self) -> bool {
        self.chain_converged.iter().all(|&c| c)
    }
}

fn clamp_prob(v: f64) -> f64 {
    if v.is_nan() {
        0.5
    } else {
        v.clamp(1e-9, 1.0 - 1e-9)
    }
}

/// Makes rates positive and strictly increasing, which satisfies both models'
/// ordering constraints.
fn ordered_rates(mu: &[f64]) -> RateParams {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let floor = if k == 0 { 1e-3 } else { out[k - 1] * (1.0 + 1e-3) + 1e-6 };
        out[k] = mu[k].max(floor);
    }
    RateParams { mu: out }
}

/// Structure probabilities equal to the empirical edge densities of `s`.
pub fn empirical_probs(s: &Structure) -> StructureProbs {
    let n = s.n();
    let c2 = n_pairs(n) as f64;
    match s {
        Structure::Hypergraph(h) => StructureProbs::Hypergraph {
            q: clamp_prob(h.h1() as f64 / c2),
            p: clamp_prob(h.h2() as f64 / n_triplets(n).max(1) as f64),
        },
        Structure::Categorical(g) => StructureProbs::Categorical {
            q1: clamp_prob(g.m1() as f64 / (c2 - g.m2() as f64)),
            q2: clamp_prob(g.m2() as f64 / c2),
        },
    }
}

/// Mixture-based initial state: 2-edges (weak edges) on every observed pair,
/// no 3-edges (strong edges), and parameters from the Poisson mixture fit.
pub fn mixture_init<R: Rng + ?Sized>(model: ModelKind, x: &ObservationMatrix, rng: &mut R) -> Result<InitState> {
    let n = x.n();
    let fit = poisson_mixture_em(x, 3, rng)?;
    let mu = ordered_rates(&fit.mu);
    let (w1, w2) = (clamp_prob(fit.weights[1]), clamp_prob(fit.weights[2]));
    let observed: Vec<(usize, usize)> = x.nonzero().map(|(i, j, _)| (i, j)).collect();
    let (structure, probs) = match model {
        ModelKind::Hypergraph => {
            // Invert the prior coverage 1 − (1 − p)^(n−2) of a pair by 3-edges.
            let p = -((-w2).ln_1p() / (n.saturating_sub(2).max(1)) as f64).exp_m1();
            (
                Structure::Hypergraph(Hypergraph::from_edges(n, observed, [])?),
                StructureProbs::Hypergraph {
                    q: w1,
                    p: clamp_prob(p),
                },
            )
        }
        ModelKind::Categorical => (
            Structure::Categorical(CategoricalGraph::from_edges(n, observed, [])?),
            StructureProbs::Categorical {
                q1: clamp_prob(w1 / (1.0 - w2)),
                q2: w2,
            },
        ),
    };
    Ok(InitState { structure, mu, probs })
}

/// Runs `cfg.n_chains` chains in parallel (chain `k` seeded with
/// `master_seed + k`) and keeps the one with the highest mean log-likelihood
/// over its retained samples.
pub fn run_inference(
    model: ModelKind,
    x: &ObservationMatrix,
    cfg: &McmcConfig,
    hp: &Hyperparams,
    init: &Init,
) -> Result<InferenceResult> {
    cfg.validate()?;
    hp.validate()?;
    let ctx = DataContext::new(x)?;
    let init_state = match init {
        Init::Mixture => mixture_init(model, x, &mut rng_from_seed(cfg.master_seed))?,
        Init::Given(s) => s.clone(),
    };
    if init_state.structure.model() != model {
        return Err(invalid_param(format!(
            "initial structure is a {} but the model is {model}",
            init_state.structure.model()
        )));
    }
    if init_state.structure.n() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            found: init_state.structure.n(),
        });
    }
    let runs: Vec<Result<ChainTrace>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|k| run_chain(&ctx, &init_state, cfg, hp, chain_seed(cfg.master_seed, k)))
        .collect();

    let chain_mean_log_likelihood: Vec<Option<f64>> = runs
        .iter()
        .map(|r| r.as_ref().ok().and_then(|t| t.mean_sample_log_likelihood()))
        .collect();
    let chain_converged = runs.iter().map(|r| r.as_ref().is_ok_and(|t| t.converged())).collect();
    let chain_errors = runs.iter().map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    let best_chain = (0..runs.len())
        .filter(|&k| chain_mean_log_likelihood[k].is_some())
        .max_by(|&a, &b| chain_mean_log_likelihood[a].unwrap().total_cmp(&chain_mean_log_likelihood[b].unwrap()));
    let Some(best_chain) = best_chain else {
        return Err(runs.into_iter().find_map(|r| r.err()).unwrap_or(Error::EmptyTrace));
    };
    let best = runs.into_iter().nth(best_chain).unwrap()?;
    Ok(InferenceResult {
        model,
        init: init_state,
        best,
        best_chain,
        chain_mean_log_likelihood,
        chain_converged,
        chain_errors,
    })
}
