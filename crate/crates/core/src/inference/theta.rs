//! Parameter-dependent constants of the structure kernels, and per-pair
//! label bookkeeping shared by both models.

use crate::model::{RateParams, StructureProbs, SufficientStats};

/// Quantities of θ that every structure move needs, precomputed once per
/// Gibbs iteration.
#[derive(Clone, Copy, Debug)]
pub struct ThetaCache {
    pub mu: [f64; 3],
    pub ln_mu: [f64; 3],
    /// Log prior change per unit increase of the first edge count (`h1` or `m1`).
    pub prior_first: f64,
    /// Log prior change per unit increase of the second edge count (`h2` or `m2`).
    pub prior_second: f64,
}

impl ThetaCache {
    pub fn new(mu: &RateParams, probs: &StructureProbs) -> Self {
        let logit = |v: f64| v.ln() - (-v).ln_1p();
        let (prior_first, prior_second) = match *probs {
            StructureProbs::Hypergraph { q, p } => (logit(q), logit(p)),
            StructureProbs::Categorical { q1, q2 } => (logit(q1), logit(q2) - (-q1).ln_1p()),
        };
        ThetaCache {
            mu: mu.mu,
            ln_mu: mu.mu.map(f64::ln),
            prior_first,
            prior_second,
        }
    }

    /// Log-likelihood change when a pair with count `x` moves from label `a` to `b`.
    #[inline]
    pub fn relabel_delta(&self, x: u64, a: u8, b: u8) -> f64 {
        let (a, b) = (a as usize, b as usize);
        let rate = -(self.mu[b] - self.mu[a]);
        if x == 0 {
            rate
        } else {
            x as f64 * (self.ln_mu[b] - self.ln_mu[a]) + rate
        }
    }
}

/// Per-pair labels together with their sufficient statistics.
#[derive(Clone, Debug)]
pub struct LabelBook {
    pub labels: Vec<u8>,
    pub stats: SufficientStats,
}

impl LabelBook {
    pub fn new(labels: Vec<u8>, counts: &[u64]) -> Self {
        let mut stats = SufficientStats::default();
        for (&l, &c) in labels.iter().zip(counts) {
            stats.count_sums[l as usize] += c;
            stats.pair_counts[l as usize] += 1;
        }
        LabelBook { labels, stats }
    }

    /// Moves pair `p` (count `x`) to label `to` and returns the log-likelihood change.
    #[inline]
    pub fn relabel(&mut self, p: usize, x: u64, to: u8, theta: &ThetaCache) -> f64 {
        let from = self.labels[p];
        self.labels[p] = to;
        self.stats.move_pair(x, from, to);
        theta.relabel_delta(x, from, to)
    }
}

/// Probability of proposing an increase given which directions are possible.
#[inline]
pub(crate) fn up_probability(can_up: bool, can_down: bool, eta: f64) -> f64 {
    if !can_down {
        1.0
    } else if !can_up {
        0.0
    } else {
        eta
    }
}
