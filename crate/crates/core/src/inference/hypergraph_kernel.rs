//! Metropolis-Hastings kernel over hypergraphs with six move classes: add or
//! remove a 2-edge, a 3-edge, or a block of hidden 2-edges.
//!
//! A proposal is applied to the state tentatively; its Hastings ratio is then
//! evaluated from the class weights and selection probabilities before and
//! after the move, and the move is undone if rejected.

use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::collections::{Fenwick, IndexedSet};
use super::config::McmcConfig;
use super::data::DataContext;
use super::theta::{up_probability, LabelBook, ThetaCache};
use crate::error::{Error, Result};
use crate::model::{log_likelihood_kernel, Hypergraph, Pair, RateParams, SufficientStats, Triplet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperMoveClass {
    AddTwo,
    RemoveTwo,
    AddThree,
    RemoveThree,
    AddHidden,
    RemoveHidden,
}

impl HyperMoveClass {
    pub const ALL: [HyperMoveClass; 6] = [
        HyperMoveClass::AddTwo,
        HyperMoveClass::RemoveTwo,
        HyperMoveClass::AddThree,
        HyperMoveClass::RemoveThree,
        HyperMoveClass::AddHidden,
        HyperMoveClass::RemoveHidden,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Concrete proposed change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HyperMove {
    AddTwo(Pair),
    RemoveTwo(Pair),
    AddThree(Triplet),
    RemoveThree(Triplet),
    AddHidden(Vec<Pair>),
    RemoveHidden(Vec<Pair>),
    /// A 3-edge addition drew a repeated vertex or an existing 3-edge; the
    /// proposal is rejected without being applied.
    RejectedTriplet(usize, usize, usize),
}

#[derive(Clone, Debug)]
pub struct HyperProposal {
    pub class: HyperMoveClass,
    pub mv: HyperMove,
    /// `log Q(H | H*) − log Q(H* | H)`.
    pub log_q_ratio: f64,
    /// `log P(H*, θ | X) − log P(H, θ | X)`.
    pub log_post_delta: f64,
}

impl HyperProposal {
    pub fn is_auto_rejected(&self) -> bool {
        matches!(self.mv, HyperMove::RejectedTriplet(..))
    }

    pub fn log_acceptance(&self) -> f64 {
        if self.is_auto_rejected() {
            f64::NEG_INFINITY
        } else {
            self.log_q_ratio + self.log_post_delta
        }
    }
}

/// `log P(m)` for `m` drawn from the geometric distribution of parameter `chi`
/// truncated to `[2, k]`.
pub fn ln_truncated_geometric(m: usize, chi: f64, k: usize) -> f64 {
    debug_assert!(m >= 2 && m <= k);
    let norm = -((k - 1) as f64 * (-chi).ln_1p()).exp_m1();
    (m - 2) as f64 * (-chi).ln_1p() + chi.ln() - norm.ln()
}

pub fn sample_truncated_geometric<R: Rng + ?Sized>(chi: f64, k: usize, rng: &mut R) -> usize {
    debug_assert!(k >= 2);
    let ln_r = (-chi).ln_1p();
    let norm = -((k - 1) as f64 * ln_r).exp_m1();
    let u: f64 = rng.random();
    let t = ((-u * norm).ln_1p() / ln_r).ceil() - 1.0;
    2 + (t.max(0.0) as usize).min(k - 2)
}

fn triplet_key(n: usize, (i, j, k): Triplet) -> u64 {
    ((i * n + j) * n + k) as u64
}

/// Mutable hypergraph with the indices the kernel needs: label projection
/// with per-pair 3-edge cover counts, the 2-edge set `E`, the hidden sets
/// `C0 = E ∩ Δ` and `C1 = Δ \ E`, and the 2-edge addition weights.
#[derive(Clone, Debug)]
pub struct HypergraphState {
    n: usize,
    in_e: Vec<bool>,
    cover: Vec<u32>,
    book: LabelBook,
    edges: IndexedSet,
    hidden_present: IndexedSet,
    hidden_absent: IndexedSet,
    triplets: Vec<Triplet>,
    triplet_pos: HashMap<u64, usize>,
    omega: Fenwick,
}

impl HypergraphState {
    pub fn new(ctx: &DataContext, h: &Hypergraph) -> Result<Self> {
        if h.n() != ctx.n() {
            return Err(Error::DimensionMismatch {
                expected: ctx.n(),
                found: h.n(),
            });
        }
        if ctx.n() < 3 {
            return Err(Error::InvalidParameter("the hypergraph sampler needs n >= 3".into()));
        }
        let m = ctx.n_pairs();
        let omega_weights: Vec<u64> = ctx.counts().iter().map(|&c| c + 1).collect();
        let mut s = HypergraphState {
            n: ctx.n(),
            in_e: vec![false; m],
            cover: vec![0; m],
            book: LabelBook::new(vec![0; m], ctx.counts()),
            edges: IndexedSet::new(m),
            hidden_present: IndexedSet::new(m),
            hidden_absent: IndexedSet::new(m),
            triplets: Vec::new(),
            triplet_pos: HashMap::new(),
            omega: Fenwick::new(&omega_weights),
        };
        // Rates only affect the returned likelihood deltas, which are discarded here.
        let theta = ThetaCache::new(
            &RateParams::new(1.0, 1.0, 1.0),
            &crate::model::StructureProbs::Hypergraph { q: 0.5, p: 0.5 },
        );
        for &(i, j) in h.two_edges() {
            s.add_two(ctx, ctx.pair_index(i, j), &theta);
        }
        for &t in h.three_edges() {
            s.add_three(ctx, t, &theta);
        }
        Ok(s)
    }

    pub fn to_hypergraph(&self, ctx: &DataContext) -> Hypergraph {
        let mut h = Hypergraph::new(self.n);
        for &p in self.edges.items() {
            let (i, j) = ctx.pair(p);
            h.add_two_edge(i, j).expect("valid pair");
        }
        for &(i, j, k) in &self.triplets {
            h.add_three_edge(i, j, k).expect("valid triplet");
        }
        h
    }

    pub fn h1(&self) -> usize {
        self.edges.len()
    }

    pub fn h2(&self) -> usize {
        self.triplets.len()
    }

    /// `(|C0|, |C1|)`.
    pub fn hidden_sizes(&self) -> (usize, usize) {
        (self.hidden_present.len(), self.hidden_absent.len())
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.h1() as u64, self.h2() as u64)
    }

    pub fn labels(&self) -> &[u8] {
        &self.book.labels
    }

    /// Membership of every pair (by pair index) in the 2-edge set.
    pub fn two_edge_flags(&self) -> &[bool] {
        &self.in_e
    }

    /// Current 3-edges, in no particular order.
    pub fn three_edges(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.book.stats
    }

    /// Full log-likelihood including `Σ log x!`.
    pub fn log_likelihood(&self, ctx: &DataContext, mu: &RateParams) -> f64 {
        log_likelihood_kernel(&self.book.stats, mu) - ctx.log_factorial_sum()
    }

    fn add_two(&mut self, ctx: &DataContext, p: usize, theta: &ThetaCache) -> f64 {
        debug_assert!(!self.in_e[p]);
        self.in_e[p] = true;
        self.edges.insert(p);
        self.omega.set(p, 0);
        if self.cover[p] > 0 {
            self.hidden_absent.remove(p);
            self.hidden_present.insert(p);
            0.0
        } else {
            self.book.relabel(p, ctx.count(p), 1, theta)
        }
    }

    fn remove_two(&mut self, ctx: &DataContext, p: usize, theta: &ThetaCache) -> f64 {
        debug_assert!(self.in_e[p]);
        self.in_e[p] = false;
        self.edges.remove(p);
        self.omega.set(p, ctx.count(p) + 1);
        if self.cover[p] > 0 {
            self.hidden_present.remove(p);
            self.hidden_absent.insert(p);
            0.0
        } else {
            self.book.relabel(p, ctx.count(p), 0, theta)
        }
    }

    fn triplet_pairs(ctx: &DataContext, (i, j, k): Triplet) -> [usize; 3] {
        [ctx.pair_index(i, j), ctx.pair_index(i, k), ctx.pair_index(j, k)]
    }

    fn add_three(&mut self, ctx: &DataContext, t: Triplet, theta: &ThetaCache) -> f64 {
        let key = triplet_key(self.n, t);
        debug_assert!(!self.triplet_pos.contains_key(&key));
        self.triplet_pos.insert(key, self.triplets.len());
        self.triplets.push(t);
        let mut delta = 0.0;
        for p in Self::triplet_pairs(ctx, t) {
            self.cover[p] += 1;
            if self.cover[p] == 1 {
                if self.in_e[p] {
                    self.hidden_present.insert(p);
                } else {
                    self.hidden_absent.insert(p);
                }
                delta += self.book.relabel(p, ctx.count(p), 2, theta);
            }
        }
        delta
    }

    fn remove_three(&mut self, ctx: &DataContext, t: Triplet, theta: &ThetaCache) -> f64 {
        let key = triplet_key(self.n, t);
        let pos = self.triplet_pos.remove(&key).expect("3-edge present");
        let last = self.triplets.pop().expect("non-empty");
        if last != t {
            self.triplets[pos] = last;
            self.triplet_pos.insert(triplet_key(self.n, last), pos);
        }
        let mut delta = 0.0;
        for p in Self::triplet_pairs(ctx, t) {
            self.cover[p] -= 1;
            if self.cover[p] == 0 {
                let to = if self.in_e[p] {
                    self.hidden_present.remove(p);
                    1
                } else {
                    self.hidden_absent.remove(p);
                    0
                };
                delta += self.book.relabel(p, ctx.count(p), to, theta);
            }
        }
        delta
    }

    pub fn has_three_edge(&self, t: Triplet) -> bool {
        self.triplet_pos.contains_key(&triplet_key(self.n, t))
    }

    /// Unnormalized selection weights of the six move classes in the current
    /// state. Forced directions move the whole class mass to the feasible
    /// side; infeasible hidden moves get weight zero, so that redrawing a
    /// class until a feasible one appears is sampling from these weights.
    pub fn class_weights(&self, ctx: &DataContext, cfg: &McmcConfig) -> [f64; 6] {
        let eta = cfg.eta;
        let h1 = self.h1();
        let h2 = self.h2() as u64;
        let up2 = up_probability(h1 < ctx.n_pairs(), h1 > 0, eta);
        let up3 = up_probability(h2 < ctx.n_triplets(), h2 > 0, eta);
        let nu_hidden = 1.0 - cfg.nu2 - cfg.nu3;
        let (c0, c1) = self.hidden_sizes();
        [
            cfg.nu2 * up2,
            cfg.nu2 * (1.0 - up2),
            cfg.nu3 * up3,
            cfg.nu3 * (1.0 - up3),
            if c1 >= 2 { nu_hidden * eta } else { 0.0 },
            if c0 >= 2 { nu_hidden * (1.0 - eta) } else { 0.0 },
        ]
    }

    fn ln_class_probability(&self, ctx: &DataContext, cfg: &McmcConfig, class: HyperMoveClass) -> f64 {
        let w = self.class_weights(ctx, cfg);
        (w[class.index()] / w.iter().sum::<f64>()).ln()
    }

    pub fn draw_class<R: Rng + ?Sized>(&self, ctx: &DataContext, cfg: &McmcConfig, rng: &mut R) -> HyperMoveClass {
        let w = self.class_weights(ctx, cfg);
        let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
        for class in HyperMoveClass::ALL {
            let wc = w[class.index()];
            if wc > 0.0 {
                if u < wc {
                    return class;
                }
                u -= wc;
            }
        }
        // Rounding left a sliver of mass: take the last feasible class.
        *HyperMoveClass::ALL
            .iter()
            .rev()
            .find(|c| w[c.index()] > 0.0)
            .expect("some move class is always feasible")
    }

    /// Draws a move of the given class, applies it and returns its record.
    /// The class must have positive weight in the current state.
    pub fn propose_class<R: Rng + ?Sized>(
        &mut self,
        ctx: &DataContext,
        theta: &ThetaCache,
        cfg: &McmcConfig,
        class: HyperMoveClass,
        rng: &mut R,
    ) -> HyperProposal {
        let ln_fwd_class = self.ln_class_probability(ctx, cfg, class);
        assert!(ln_fwd_class > f64::NEG_INFINITY, "move class {class:?} is infeasible");
        use HyperMoveClass as C;
        let (mv, ln_fwd_elem, ln_rev_elem, reverse, dll, dprior) = match class {
            C::AddTwo => {
                let total = self.omega.total() as f64;
                let p = self.omega.sample(rng).expect("addable pair");
                let w = (ctx.count(p) + 1) as f64;
                let dll = self.add_two(ctx, p, theta);
                let rev = -(self.h1() as f64).ln();
                (HyperMove::AddTwo(ctx.pair(p)), w.ln() - total.ln(), rev, C::RemoveTwo, dll, theta.prior_first)
            }
            C::RemoveTwo => {
                let fwd = -(self.h1() as f64).ln();
                let p = self.edges.sample(rng).expect("existing 2-edge");
                let dll = self.remove_two(ctx, p, theta);
                let w = (ctx.count(p) + 1) as f64;
                let rev = w.ln() - (self.omega.total() as f64).ln();
                (HyperMove::RemoveTwo(ctx.pair(p)), fwd, rev, C::AddTwo, dll, -theta.prior_first)
            }
            C::AddThree => {
                let i = ctx.sample_vertex(rng);
                let j = ctx.sample_neighbour(i, rng);
                let k = ctx.sample_neighbour(i, rng);
                let t = crate::model::canonical_triplet(i, j, k);
                if j == k || self.has_three_edge(t) {
                    return HyperProposal {
                        class,
                        mv: HyperMove::RejectedTriplet(i, j, k),
                        log_q_ratio: f64::NEG_INFINITY,
                        log_post_delta: 0.0,
                    };
                }
                let fwd = ctx.triplet_probability(t.0, t.1, t.2).ln();
                let dll = self.add_three(ctx, t, theta);
                let rev = -(self.h2() as f64).ln();
                (HyperMove::AddThree(t), fwd, rev, C::RemoveThree, dll, theta.prior_second)
            }
            C::RemoveThree => {
                let fwd = -(self.h2() as f64).ln();
                let t = self.triplets[rng.random_range(0..self.triplets.len())];
                let dll = self.remove_three(ctx, t, theta);
                let rev = ctx.triplet_probability(t.0, t.1, t.2).ln();
                (HyperMove::RemoveThree(t), fwd, rev, C::AddThree, dll, -theta.prior_second)
            }
            C::AddHidden | C::RemoveHidden => {
                let adding = class == C::AddHidden;
                let (chi_fwd, chi_rev) = if adding { (cfg.chi1, cfg.chi0) } else { (cfg.chi0, cfg.chi1) };
                let source = if adding { &self.hidden_absent } else { &self.hidden_present };
                let k = source.len();
                let m = sample_truncated_geometric(chi_fwd, k, rng);
                let chosen: Vec<usize> = index::sample(rng, k, m).iter().map(|i| source.items()[i]).collect();
                let fwd = ln_truncated_geometric(m, chi_fwd, k) - ctx.ln_binomial(k, m);
                for &p in &chosen {
                    if adding {
                        self.add_two(ctx, p, theta);
                    } else {
                        self.remove_two(ctx, p, theta);
                    }
                }
                let k_rev = if adding { self.hidden_present.len() } else { self.hidden_absent.len() };
                let rev = ln_truncated_geometric(m, chi_rev, k_rev) - ctx.ln_binomial(k_rev, m);
                let pairs = chosen.iter().map(|&p| ctx.pair(p)).collect();
                let unit = if adding { theta.prior_first } else { -theta.prior_first };
                let (mv, reverse) = if adding {
                    (HyperMove::AddHidden(pairs), C::RemoveHidden)
                } else {
                    (HyperMove::RemoveHidden(pairs), C::AddHidden)
                };
                (mv, fwd, rev, reverse, 0.0, m as f64 * unit)
            }
        };
        let ln_rev_class = self.ln_class_probability(ctx, cfg, reverse);
        HyperProposal {
            class,
            mv,
            log_q_ratio: (ln_rev_class + ln_rev_elem) - (ln_fwd_class + ln_fwd_elem),
            log_post_delta: dll + dprior,
        }
    }

    /// Undoes an applied proposal.
    pub fn revert(&mut self, ctx: &DataContext, theta: &ThetaCache, mv: &HyperMove) {
        match mv {
            HyperMove::AddTwo((i, j)) => {
                self.remove_two(ctx, ctx.pair_index(*i, *j), theta);
            }
            HyperMove::RemoveTwo((i, j)) => {
                self.add_two(ctx, ctx.pair_index(*i, *j), theta);
            }
            HyperMove::AddThree(t) => {
                self.remove_three(ctx, *t, theta);
            }
            HyperMove::RemoveThree(t) => {
                self.add_three(ctx, *t, theta);
            }
            HyperMove::AddHidden(pairs) => {
                for &(i, j) in pairs {
                    self.remove_two(ctx, ctx.pair_index(i, j), theta);
                }
            }
            HyperMove::RemoveHidden(pairs) => {
                for &(i, j) in pairs {
                    self.add_two(ctx, ctx.pair_index(i, j), theta);
                }
            }
            HyperMove::RejectedTriplet(..) => {}
        }
    }

    /// One Metropolis-Hastings step. Returns the class, and the change of the
    /// log posterior if the move was accepted.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        ctx: &DataContext,
        theta: &ThetaCache,
        cfg: &McmcConfig,
        rng: &mut R,
    ) -> (HyperMoveClass, Option<f64>) {
        let class = self.draw_class(ctx, cfg, rng);
        let prop = self.propose_class(ctx, theta, cfg, class, rng);
        if prop.is_auto_rejected() {
            return (class, None);
        }
        let a = prop.log_acceptance();
        if a >= 0.0 || rng.random::<f64>().ln() < a {
            (class, Some(prop.log_post_delta))
        } else {
            self.revert(ctx, theta, &prop.mv);
            (class, None)
        }
    }
}
