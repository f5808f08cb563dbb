//! Conditional distributions of the parameters and the unnormalized log
//! posterior.

use rand::Rng;

use crate::distributions::{
    log_beta_pdf, log_gamma_pdf, sample_beta, sample_truncated_gamma_with, Hyperparams, TruncGammaOptions,
    TruncInterval,
};
use crate::error::{Error, Result};
use crate::model::{
    log_likelihood_kernel, n_pairs, n_triplets, sufficient_stats, ModelKind, ObservationMatrix, RateParams,
    Structure, StructureProbs, SufficientStats,
};

/// Edge counts that the structural prior depends on: `(h1, h2)` for a
/// hypergraph, `(m1, m2)` for a categorical graph.
pub fn structure_counts(s: &Structure) -> (u64, u64) {
    match s {
        Structure::Hypergraph(h) => (h.h1() as u64, h.h2() as u64),
        Structure::Categorical(g) => (g.m1() as u64, g.m2() as u64),
    }
}

/// Draws φ from its Beta full conditional given the edge counts.
pub fn resample_probs_from_counts<R: Rng + ?Sized>(
    model: ModelKind,
    n: usize,
    counts: (u64, u64),
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<StructureProbs> {
    let c2 = n_pairs(n) as f64;
    let (a, b) = (counts.0 as f64, counts.1 as f64);
    match model {
        ModelKind::Hypergraph => {
            let c3 = n_triplets(n) as f64;
            let q = sample_beta(a + hp.xi, c2 - a + hp.zeta, rng)?;
            let p = sample_beta(b + hp.xi, c3 - b + hp.zeta, rng)?;
            Ok(StructureProbs::Hypergraph { q, p })
        }
        ModelKind::Categorical => {
            let q1 = sample_beta(a + hp.xi, c2 - a - b + hp.zeta, rng)?;
            let q2 = sample_beta(b + hp.xi, c2 - b + hp.zeta, rng)?;
            Ok(StructureProbs::Categorical { q1, q2 })
        }
    }
}

pub fn resample_structure_probs<R: Rng + ?Sized>(s: &Structure, hp: &Hyperparams, rng: &mut R) -> Result<StructureProbs> {
    resample_probs_from_counts(s.model(), s.n(), structure_counts(s), hp, rng)
}

/// Support of the full conditional of `μ_k` given the other two rates.
pub fn rate_interval(model: ModelKind, k: usize, mu: &RateParams) -> Result<TruncInterval> {
    let [m0, m1, m2] = mu.mu;
    let (lo, hi) = match (model, k) {
        (ModelKind::Hypergraph, 0) => (0.0, m1.min(m2)),
        (ModelKind::Hypergraph, _) => (m0, f64::INFINITY),
        (ModelKind::Categorical, 0) => (0.0, m1),
        (ModelKind::Categorical, 1) => (m0, m2),
        (ModelKind::Categorical, _) => (m1, f64::INFINITY),
    };
    TruncInterval::new(lo, hi).map_err(|_| Error::DegenerateTruncation { lo, hi })
}

/// Draws `μ_k` from its truncated-gamma full conditional given the other
/// two rates.
pub fn resample_rate<R: Rng + ?Sized>(
    model: ModelKind,
    k: usize,
    stats: &SufficientStats,
    mu: &RateParams,
    hp: &Hyperparams,
    opts: &TruncGammaOptions,
    rng: &mut R,
) -> Result<f64> {
    let iv = rate_interval(model, k, mu)?;
    let shape = stats.count_sums[k] as f64 + hp.alpha[k];
    let rate = stats.pair_counts[k] as f64 + hp.beta[k];
    Ok(sample_truncated_gamma_with(shape, rate, &iv, opts, rng)?.0)
}

/// Resamples `μ0`, `μ1`, `μ2` in turn from their truncated-gamma full
/// conditionals, each using the freshly updated bounds.
pub fn resample_rates<R: Rng + ?Sized>(
    model: ModelKind,
    stats: &SufficientStats,
    current: &RateParams,
    hp: &Hyperparams,
    opts: &TruncGammaOptions,
    rng: &mut R,
) -> Result<RateParams> {
    current.validate(model)?;
    let mut mu = *current;
    for k in 0..3 {
        mu.mu[k] = resample_rate(model, k, stats, &mu, hp, opts, rng)?;
    }
    Ok(mu)
}

/// `log P(S | φ)` from the edge counts.
pub fn log_structure_prior(n: usize, counts: (u64, u64), probs: &StructureProbs) -> f64 {
    let c2 = n_pairs(n) as f64;
    let (a, b) = (counts.0 as f64, counts.1 as f64);
    match *probs {
        StructureProbs::Hypergraph { q, p } => {
            let c3 = n_triplets(n) as f64;
            a * q.ln() + (c2 - a) * (-q).ln_1p() + b * p.ln() + (c3 - b) * (-p).ln_1p()
        }
        StructureProbs::Categorical { q1, q2 } => {
            a * q1.ln() + (c2 - a - b) * (-q1).ln_1p() + b * q2.ln() + (c2 - b) * (-q2).ln_1p()
        }
    }
}

/// Log prior density of (μ, φ): Beta(ξ, ζ) on each probability and a product
/// of Gamma(α_k, β_k) densities on the rates, restricted to the ordering
/// constraint without renormalization.
pub fn log_param_prior(model: ModelKind, mu: &RateParams, probs: &StructureProbs, hp: &Hyperparams) -> f64 {
    if mu.validate(model).is_err() {
        return f64::NEG_INFINITY;
    }
    let (a, b) = match *probs {
        StructureProbs::Hypergraph { q, p } => (q, p),
        StructureProbs::Categorical { q1, q2 } => (q1, q2),
    };
    let mut total = log_beta_pdf(a, hp.xi, hp.zeta) + log_beta_pdf(b, hp.xi, hp.zeta);
    for k in 0..3 {
        total += log_gamma_pdf(mu.mu[k], hp.alpha[k], hp.beta[k]);
    }
    total
}

/// Unnormalized log joint posterior from sufficient statistics and edge
/// counts; omits `P(X)` and `Σ log x_ij!`.
pub fn log_joint_from_stats(
    model: ModelKind,
    n: usize,
    counts: (u64, u64),
    stats: &SufficientStats,
    mu: &RateParams,
    probs: &StructureProbs,
    hp: &Hyperparams,
) -> f64 {
    log_likelihood_kernel(stats, mu) + log_structure_prior(n, counts, probs) + log_param_prior(model, mu, probs, hp)
}

/// Unnormalized log joint posterior recomputed from scratch.
pub fn log_joint(
    x: &ObservationMatrix,
    s: &Structure,
    mu: &RateParams,
    probs: &StructureProbs,
    hp: &Hyperparams,
) -> Result<f64> {
    let stats = sufficient_stats(x, &s.labels())?;
    Ok(log_joint_from_stats(s.model(), s.n(), structure_counts(s), &stats, mu, probs, hp))
}
