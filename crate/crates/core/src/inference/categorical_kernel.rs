//! Metropolis-Hastings kernel over graphs with weak and strong edges: each
//! move increments or decrements the label of one pair.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::collections::{Fenwick, IndexedSet};
use super::config::McmcConfig;
use super::data::DataContext;
use super::theta::{up_probability, LabelBook, ThetaCache};
use crate::error::{Error, Result};
use crate::model::{graph_labels, log_likelihood_kernel, CategoricalGraph, LabelMatrix, Pair, RateParams, SufficientStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelDirection {
    Increment,
    Decrement,
}

#[derive(Clone, Debug)]
pub struct GraphProposal {
    pub direction: LabelDirection,
    pub pair: Pair,
    /// Label before the move.
    pub from: u8,
    /// `log Q(G | G*) − log Q(G* | G)`.
    pub log_q_ratio: f64,
    /// `log P(G*, θ | X) − log P(G, θ | X)`.
    pub log_post_delta: f64,
}

impl GraphProposal {
    pub fn log_acceptance(&self) -> f64 {
        self.log_q_ratio + self.log_post_delta
    }
}

#[derive(Clone, Debug)]
pub struct CategoricalState {
    book: LabelBook,
    nonzero: IndexedSet,
    weights: Fenwick,
    m1: usize,
    m2: usize,
}

impl CategoricalState {
    pub fn new(ctx: &DataContext, g: &CategoricalGraph) -> Result<Self> {
        if g.n() != ctx.n() {
            return Err(Error::DimensionMismatch {
                expected: ctx.n(),
                found: g.n(),
            });
        }
        let labels = graph_labels(g).as_slice().to_vec();
        let mut nonzero = IndexedSet::new(labels.len());
        let mut w = Vec::with_capacity(labels.len());
        for (p, &l) in labels.iter().enumerate() {
            if l > 0 {
                nonzero.insert(p);
            }
            w.push(if l < 2 { ctx.count(p) + 1 } else { 0 });
        }
        Ok(CategoricalState {
            book: LabelBook::new(labels, ctx.counts()),
            nonzero,
            weights: Fenwick::new(&w),
            m1: g.m1(),
            m2: g.m2(),
        })
    }

    pub fn to_graph(&self, ctx: &DataContext) -> CategoricalGraph {
        let labels = LabelMatrix::from_vec(ctx.n(), self.book.labels.clone()).expect("valid labels");
        CategoricalGraph::from_labels(&labels)
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.m1 as u64, self.m2 as u64)
    }

    pub fn labels(&self) -> &[u8] {
        &self.book.labels
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.book.stats
    }

    pub fn log_likelihood(&self, ctx: &DataContext, mu: &RateParams) -> f64 {
        log_likelihood_kernel(&self.book.stats, mu) - ctx.log_factorial_sum()
    }

    /// Probability of proposing an increment in the current state.
    pub fn increment_probability(&self, cfg: &McmcConfig) -> f64 {
        up_probability(self.weights.total() > 0, !self.nonzero.is_empty(), cfg.eta)
    }

    fn set_label(&mut self, ctx: &DataContext, p: usize, to: u8, theta: &ThetaCache) -> (f64, f64) {
        let from = self.book.labels[p];
        let x = ctx.count(p);
        let dll = self.book.relabel(p, x, to, theta);
        let mut dm = [0i64; 3];
        dm[from as usize] -= 1;
        dm[to as usize] += 1;
        self.m1 = (self.m1 as i64 + dm[1]) as usize;
        self.m2 = (self.m2 as i64 + dm[2]) as usize;
        if to == 0 {
            self.nonzero.remove(p);
        } else {
            self.nonzero.insert(p);
        }
        self.weights.set(p, if to < 2 { x + 1 } else { 0 });
        let dprior = dm[1] as f64 * theta.prior_first + dm[2] as f64 * theta.prior_second;
        (dll, dprior)
    }

    pub fn draw_direction<R: Rng + ?Sized>(&self, cfg: &McmcConfig, rng: &mut R) -> LabelDirection {
        if rng.random::<f64>() < self.increment_probability(cfg) {
            LabelDirection::Increment
        } else {
            LabelDirection::Decrement
        }
    }

    /// Draws a pair for a move in `direction`, applies it and returns the
    /// record. The direction must be feasible in the current state.
    pub fn propose_direction<R: Rng + ?Sized>(
        &mut self,
        ctx: &DataContext,
        theta: &ThetaCache,
        cfg: &McmcConfig,
        direction: LabelDirection,
        rng: &mut R,
    ) -> GraphProposal {
        let up_before = self.increment_probability(cfg);
        let (p, ln_fwd) = match direction {
            LabelDirection::Increment => {
                let total = self.weights.total() as f64;
                let p = self.weights.sample(rng).expect("incrementable pair");
                let w = self.weights.weight(p) as f64;
                (p, up_before.ln() + w.ln() - total.ln())
            }
            LabelDirection::Decrement => {
                let p = self.nonzero.sample(rng).expect("decrementable pair");
                (p, (1.0 - up_before).ln() - (self.nonzero.len() as f64).ln())
            }
        };
        let from = self.book.labels[p];
        let to = match direction {
            LabelDirection::Increment => from + 1,
            LabelDirection::Decrement => from - 1,
        };
        let (dll, dprior) = self.set_label(ctx, p, to, theta);
        let up_after = self.increment_probability(cfg);
        let ln_rev = match direction {
            LabelDirection::Increment => (1.0 - up_after).ln() - (self.nonzero.len() as f64).ln(),
            LabelDirection::Decrement => {
                up_after.ln() + (self.weights.weight(p) as f64).ln() - (self.weights.total() as f64).ln()
            }
        };
        GraphProposal {
            direction,
            pair: ctx.pair(p),
            from,
            log_q_ratio: ln_rev - ln_fwd,
            log_post_delta: dll + dprior,
        }
    }

    pub fn revert(&mut self, ctx: &DataContext, theta: &ThetaCache, prop: &GraphProposal) {
        let p = ctx.pair_index(prop.pair.0, prop.pair.1);
        self.set_label(ctx, p, prop.from, theta);
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        ctx: &DataContext,
        theta: &ThetaCache,
        cfg: &McmcConfig,
        rng: &mut R,
    ) -> (LabelDirection, Option<f64>) {
        let dir = self.draw_direction(cfg, rng);
        let prop = self.propose_direction(ctx, theta, cfg, dir, rng);
        let a = prop.log_acceptance();
        if a >= 0.0 || rng.random::<f64>().ln() < a {
            (dir, Some(prop.log_post_delta))
        } else {
            self.revert(ctx, theta, &prop);
            (dir, None)
        }
    }
}
