//! Brute-force reference computations shared by the integration tests. They
//! work on explicit sets and sums only, and never call the kernel internals
//! they are compared against.

#![allow(dead_code)]

pub mod props;

use std::collections::BTreeSet;

use hyperrecon::inference::{HyperMove, McmcConfig};
use hyperrecon::model::{all_pairs, CategoricalGraph, Hypergraph, ObservationMatrix, Pair, Triplet};
use hyperrecon::{LabelMatrix, RateParams};

pub fn all_triplets(n: usize) -> Vec<Triplet> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push((i, j, k));
            }
        }
    }
    out
}

fn ln_fact(x: u64) -> f64 {
    (1..=x).map(|v| (v as f64).ln()).sum()
}

/// Poisson log-likelihood evaluated pair by pair from the pmf.
pub fn poisson_log_likelihood(x: &ObservationMatrix, labels: &LabelMatrix, mu: &RateParams) -> f64 {
    labels
        .iter()
        .map(|(i, j, l)| {
            let m = mu.mu[l as usize];
            let c = x.get(i, j);
            let data = if c == 0 { 0.0 } else { c as f64 * m.ln() };
            data - m - ln_fact(c)
        })
        .sum()
}

pub fn hypergraph_log_prior(h: &Hypergraph, q: f64, p: f64) -> f64 {
    let n = h.n();
    let c = (n * (n - 1) / 2) as f64;
    let t = all_triplets(n).len() as f64;
    let (h1, h2) = (h.h1() as f64, h.h2() as f64);
    h1 * q.ln() + (c - h1) * (1.0 - q).ln() + h2 * p.ln() + (t - h2) * (1.0 - p).ln()
}

pub fn categorical_log_prior(g: &CategoricalGraph, q1: f64, q2: f64) -> f64 {
    let n = g.n();
    let c = (n * (n - 1) / 2) as f64;
    let (m1, m2) = (g.m1() as f64, g.m2() as f64);
    m2 * q2.ln() + (c - m2) * (1.0 - q2).ln() + m1 * q1.ln() + (c - m1 - m2) * (1.0 - q1).ln()
}

pub fn projection(h: &Hypergraph) -> LabelMatrix {
    let mut l = LabelMatrix::zeros(h.n());
    for &(i, j) in h.two_edges() {
        l.set(i, j, 1);
    }
    for &(i, j, k) in h.three_edges() {
        for (a, b) in [(i, j), (i, k), (j, k)] {
            l.set(a, b, 2);
        }
    }
    l
}

/// Every hypergraph on `n` vertices (2^(C(n,2) + C(n,3)) of them).
pub fn enumerate_hypergraphs(n: usize) -> Vec<Hypergraph> {
    let pairs: Vec<Pair> = all_pairs(n).collect();
    let trips = all_triplets(n);
    let bits = pairs.len() + trips.len();
    assert!(bits <= 20);
    (0u32..1 << bits)
        .map(|mask| {
            let two = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p);
            let three = trips
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> (pairs.len() + b) & 1 == 1)
                .map(|(_, &t)| t);
            Hypergraph::from_edges(n, two, three).unwrap()
        })
        .collect()
}

/// Every labeling of the pairs of `n` vertices (3^C(n,2) of them).
pub fn enumerate_graphs(n: usize) -> Vec<CategoricalGraph> {
    let pairs: Vec<Pair> = all_pairs(n).collect();
    let total = 3usize.pow(pairs.len() as u32);
    (0..total)
        .map(|mut code| {
            let mut weak = Vec::new();
            let mut strong = Vec::new();
            for &p in &pairs {
                match code % 3 {
                    1 => weak.push(p),
                    2 => strong.push(p),
                    _ => {}
                }
                code /= 3;
            }
            CategoricalGraph::from_edges(n, weak, strong).unwrap()
        })
        .collect()
}

/// Normalizes log weights into probabilities.
pub fn normalize(log_w: &[f64]) -> Vec<f64> {
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|&v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

fn weight(x: &ObservationMatrix, i: usize, j: usize) -> f64 {
    (x.get(i.min(j), i.max(j)) + 1) as f64
}

fn binomial(k: usize, m: usize) -> f64 {
    (0..m).map(|r| (k - r) as f64 / (m - r) as f64).product()
}

/// Pairs covered by some 3-edge.
fn covered(h: &Hypergraph) -> BTreeSet<Pair> {
    let mut s = BTreeSet::new();
    for &(i, j, k) in h.three_edges() {
        s.insert((i, j));
        s.insert((i, k));
        s.insert((j, k));
    }
    s
}

/// Probability of each of the six move classes, obtained by drawing a
/// type (2-edge, 3-edge, hidden), then a direction, and starting over
/// whenever a hidden move is impossible.
pub fn hyper_class_probabilities(h: &Hypergraph, cfg: &McmcConfig) -> [f64; 6] {
    let n = h.n();
    let c = n * (n - 1) / 2;
    let t = all_triplets(n).len();
    let cov = covered(h);
    let c0 = cov.iter().filter(|p| h.two_edges().contains(p)).count();
    let c1 = cov.len() - c0;
    let dir = |can_add: bool, can_remove: bool| -> (f64, f64) {
        match (can_add, can_remove) {
            (true, true) => (cfg.eta, 1.0 - cfg.eta),
            (true, false) => (1.0, 0.0),
            (false, true) => (0.0, 1.0),
            (false, false) => (0.0, 0.0),
        }
    };
    let (a2, r2) = dir(h.h1() < c, h.h1() > 0);
    let (a3, r3) = dir(h.h2() < t, h.h2() > 0);
    let nu_h = 1.0 - cfg.nu2 - cfg.nu3;
    let raw = [
        cfg.nu2 * a2,
        cfg.nu2 * r2,
        cfg.nu3 * a3,
        cfg.nu3 * r3,
        nu_h * cfg.eta,
        nu_h * (1.0 - cfg.eta),
    ];
    let feasible = [true, true, true, true, c1 >= 2, c0 >= 2];
    // A draw restarts with probability `redo`; summing the geometric series
    // of restarts gives the factor 1 / (1 - redo).
    let redo: f64 = (0..6).filter(|&k| !feasible[k]).map(|k| raw[k]).sum();
    let mut out = [0.0; 6];
    for k in 0..6 {
        if feasible[k] {
            out[k] = raw[k] / (1.0 - redo);
        }
    }
    out
}

/// Probability of proposing exactly `mv` from `h`.
pub fn hyper_move_probability(h: &Hypergraph, x: &ObservationMatrix, cfg: &McmcConfig, mv: &HyperMove) -> f64 {
    let n = h.n();
    let classes = hyper_class_probabilities(h, cfg);
    match mv {
        HyperMove::AddTwo((i, j)) => {
            let z: f64 = all_pairs(n)
                .filter(|p| !h.two_edges().contains(p))
                .map(|(a, b)| weight(x, a, b))
                .sum();
            classes[0] * weight(x, *i, *j) / z
        }
        HyperMove::RemoveTwo(_) => classes[1] / h.h1() as f64,
        HyperMove::AddThree((a, b, c)) => {
            let (a, b, c) = (*a, *b, *c);
            let target: BTreeSet<usize> = [a, b, c].into();
            let degree = |v: usize| -> f64 { (0..n).filter(|&u| u != v).map(|u| weight(x, v, u)).sum() };
            let total: f64 = (0..n).map(degree).sum();
            let mut p = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if i == j || i == k || j == k {
                            continue;
                        }
                        if [i, j, k].into_iter().collect::<BTreeSet<_>>() != target {
                            continue;
                        }
                        let di = degree(i);
                        p += di / total * weight(x, i, j) / di * weight(x, i, k) / di;
                    }
                }
            }
            classes[2] * p
        }
        HyperMove::RemoveThree(_) => classes[3] / h.h2() as f64,
        HyperMove::AddHidden(pairs) | HyperMove::RemoveHidden(pairs) => {
            let adding = matches!(mv, HyperMove::AddHidden(_));
            let cov = covered(h);
            let pool = cov.iter().filter(|p| h.two_edges().contains(p) != adding).count();
            let chi = if adding { cfg.chi1 } else { cfg.chi0 };
            let m = pairs.len();
            let geo = |s: usize| chi * (1.0 - chi).powi(s as i32 - 2);
            let z: f64 = (2..=pool).map(geo).sum();
            let class = if adding { classes[4] } else { classes[5] };
            class * geo(m) / z / binomial(pool, m)
        }
        HyperMove::RejectedTriplet(..) => unreachable!("rejected proposals have no reverse"),
    }
}

/// The move that undoes `mv`.
pub fn reverse_move(mv: &HyperMove) -> HyperMove {
    match mv.clone() {
        HyperMove::AddTwo(p) => HyperMove::RemoveTwo(p),
        HyperMove::RemoveTwo(p) => HyperMove::AddTwo(p),
        HyperMove::AddThree(t) => HyperMove::RemoveThree(t),
        HyperMove::RemoveThree(t) => HyperMove::AddThree(t),
        HyperMove::AddHidden(ps) => HyperMove::RemoveHidden(ps),
        HyperMove::RemoveHidden(ps) => HyperMove::AddHidden(ps),
        HyperMove::RejectedTriplet(..) => unreachable!(),
    }
}

/// Probability of incrementing (`up`) or decrementing the label of `pair`.
pub fn graph_move_probability(g: &CategoricalGraph, x: &ObservationMatrix, cfg: &McmcConfig, pair: Pair, up: bool) -> f64 {
    let n = g.n();
    let label = |p: &Pair| -> u8 {
        if g.strong_edges().contains(p) {
            2
        } else if g.weak_edges().contains(p) {
            1
        } else {
            0
        }
    };
    let pairs: Vec<Pair> = all_pairs(n).collect();
    let incrementable: Vec<&Pair> = pairs.iter().filter(|p| label(p) < 2).collect();
    let decrementable = pairs.iter().filter(|p| label(p) > 0).count();
    let p_up = if decrementable == 0 {
        1.0
    } else if incrementable.is_empty() {
        0.0
    } else {
        cfg.eta
    };
    if up {
        let z: f64 = incrementable.iter().map(|&&(i, j)| weight(x, i, j)).sum();
        p_up * weight(x, pair.0, pair.1) / z
    } else {
        (1.0 - p_up) / decrementable as f64
    }
}

/// First two raw moments of Gamma(shape, rate) restricted to `(lo, hi)`,
/// by composite Simpson quadrature after substituting `y = lo + w u²`.
/// An infinite `hi` is cut where the density is negligible.
pub fn trunc_gamma_moments(shape: f64, rate: f64, lo: f64, hi: f64) -> (f64, f64) {
    let hi = if hi.is_finite() {
        hi
    } else {
        let mode = ((shape - 1.0) / rate).max(lo);
        mode + 60.0 * (shape.sqrt() + 1.0) / rate
    };
    let w = hi - lo;
    let ln_f = |y: f64| (shape - 1.0) * y.ln() - rate * y;
    const PANELS: usize = 400_000;
    let h = 1.0 / PANELS as f64;
    let node = |s: usize| -> (f64, f64) {
        let u = s as f64 * h;
        let y = lo + w * u * u;
        (y, 2.0 * w * u)
    };
    let top = (0..=PANELS)
        .map(|s| {
            let (y, _) = node(s);
            if y > 0.0 {
                ln_f(y)
            } else {
                f64::NEG_INFINITY
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sums = [0.0f64; 3];
    for s in 0..=PANELS {
        let (y, jac) = node(s);
        if !(y > 0.0) || jac == 0.0 {
            continue;
        }
        let coef = if s == 0 || s == PANELS {
            1.0
        } else if s % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = coef * (ln_f(y) - top).exp() * jac;
        sums[0] += f;
        sums[1] += f * y;
        sums[2] += f * y * y;
    }
    (sums[1] / sums[0], sums[2] / sums[0])
}
