//! Latent structures, label projection and the Poisson observation model.
//!
//! Pairs are stored as `(i, j)` with `i < j` and triplets as `(i, j, k)` with
//! `i < j < k`. Per-pair quantities (counts, labels) live in flat vectors
//! indexed by [`pair_index`].

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::distributions::sample_poisson;
use crate::error::{invalid_param, Error, Result};

pub type Pair = (usize, usize);
pub type Triplet = (usize, usize, usize);

pub fn n_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub fn n_triplets(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Flat index of the pair `(i, j)`, `i < j < n`, in row-major upper-triangle order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs of `n` vertices in [`pair_index`] order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = Pair> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

pub fn canonical_pair(i: usize, j: usize) -> Pair {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

pub fn canonical_triplet(i: usize, j: usize, k: usize) -> Triplet {
    let mut v = [i, j, k];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

fn check_pair(n: usize, (i, j): Pair) -> Result<Pair> {
    if i == j {
        return Err(Error::InvalidStructure(format!("pair ({i}, {j}) repeats a vertex")));
    }
    let p = canonical_pair(i, j);
    if p.1 >= n {
        return Err(Error::InvalidStructure(format!(
            "pair ({i}, {j}) out of range for n={n}"
        )));
    }
    Ok(p)
}

fn check_triplet(n: usize, (i, j, k): Triplet) -> Result<Triplet> {
    let t = canonical_triplet(i, j, k);
    if t.0 == t.1 || t.1 == t.2 {
        return Err(Error::InvalidStructure(format!(
            "triplet ({i}, {j}, {k}) repeats a vertex"
        )));
    }
    if t.2 >= n {
        return Err(Error::InvalidStructure(format!(
            "triplet ({i}, {j}, {k}) out of range for n={n}"
        )));
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hypergraph,
    Categorical,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Hypergraph => f.write_str("hypergraph"),
            ModelKind::Categorical => f.write_str("categorical"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hypergraph" => Ok(ModelKind::Hypergraph),
            "categorical" => Ok(ModelKind::Categorical),
            other => Err(invalid_param(format!("unknown model '{other}'"))),
        }
    }
}

/// Simple hypergraph with 2-edges and 3-edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HypergraphRepr", into = "HypergraphRepr")]
pub struct Hypergraph {
    n: usize,
    two_edges: BTreeSet<Pair>,
    three_edges: BTreeSet<Triplet>,
}

#[derive(Serialize, Deserialize)]
struct HypergraphRepr {
    n: usize,
    two_edges: Vec<Pair>,
    three_edges: Vec<Triplet>,
}

impl TryFrom<HypergraphRepr> for Hypergraph {
    type Error = Error;

    fn try_from(r: HypergraphRepr) -> Result<Self> {
        Hypergraph::from_edges(r.n, r.two_edges, r.three_edges)
    }
}

impl From<Hypergraph> for HypergraphRepr {
    fn from(h: Hypergraph) -> Self {
        HypergraphRepr {
            n: h.n,
            two_edges: h.two_edges.into_iter().collect(),
            three_edges: h.three_edges.into_iter().collect(),
        }
    }
}

impl Hypergraph {
    pub fn new(n: usize) -> Self {
        Hypergraph {
            n,
            two_edges: BTreeSet::new(),
            three_edges: BTreeSet::new(),
        }
    }

    /// Builds a hypergraph, rejecting out-of-range, degenerate or duplicate edges.
    pub fn from_edges(
        n: usize,
        two_edges: impl IntoIterator<Item = Pair>,
        three_edges: impl IntoIterator<Item = Triplet>,
    ) -> Result<Self> {
        let mut h = Hypergraph::new(n);
        for p in two_edges {
            if !h.add_two_edge(p.0, p.1)? {
                return Err(Error::InvalidStructure(format!("duplicate 2-edge {p:?}")));
            }
        }
        for t in three_edges {
            if !h.add_three_edge(t.0, t.1, t.2)? {
                return Err(Error::InvalidStructure(format!("duplicate 3-edge {t:?}")));
            }
        }
        Ok(h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h1(&self) -> usize {
        self.two_edges.len()
    }

    pub fn h2(&self) -> usize {
        self.three_edges.len()
    }

    pub fn two_edges(&self) -> &BTreeSet<Pair> {
        &self.two_edges
    }

    pub fn three_edges(&self) -> &BTreeSet<Triplet> {
        &self.three_edges
    }

    /// Returns `Ok(false)` if the 2-edge was already present.
    pub fn add_two_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        let p = check_pair(self.n, (i, j))?;
        Ok(self.two_edges.insert(p))
    }

    pub fn remove_two_edge(&mut self, i: usize, j: usize) -> bool {
        self.two_edges.remove(&canonical_pair(i, j))
    }

    /// Returns `Ok(false)` if the 3-edge was already present.
    pub fn add_three_edge(&mut self, i: usize, j: usize, k: usize) -> Result<bool> {
        let t = check_triplet(self.n, (i, j, k))?;
        Ok(self.three_edges.insert(t))
    }

    pub fn remove_three_edge(&mut self, i: usize, j: usize, k: usize) -> bool {
        self.three_edges.remove(&canonical_triplet(i, j, k))
    }

    pub fn has_two_edge(&self, i: usize, j: usize) -> bool {
        self.two_edges.contains(&canonical_pair(i, j))
    }

    pub fn has_three_edge(&self, i: usize, j: usize, k: usize) -> bool {
        self.three_edges.contains(&canonical_triplet(i, j, k))
    }

    /// Pairs covered by at least one 3-edge.
    pub fn covered_pairs(&self) -> BTreeSet<Pair> {
        let mut out = BTreeSet::new();
        for &(i, j, k) in &self.three_edges {
            out.insert((i, j));
            out.insert((i, k));
            out.insert((j, k));
        }
        out
    }
}

/// Graph whose edges are either weak or strong.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CategoricalRepr", into = "CategoricalRepr")]
pub struct CategoricalGraph {
    n: usize,
    weak_edges: BTreeSet<Pair>,
    strong_edges: BTreeSet<Pair>,
}

#[derive(Serialize, Deserialize)]
struct CategoricalRepr {
    n: usize,
    weak_edges: Vec<Pair>,
    strong_edges: Vec<Pair>,
}

impl TryFrom<CategoricalRepr> for CategoricalGraph {
    type Error = Error;

    fn try_from(r: CategoricalRepr) -> Result<Self> {
        CategoricalGraph::from_edges(r.n, r.weak_edges, r.strong_edges)
    }
}

impl From<CategoricalGraph> for CategoricalRepr {
    fn from(g: CategoricalGraph) -> Self {
        CategoricalRepr {
            n: g.n,
            weak_edges: g.weak_edges.into_iter().collect(),
            strong_edges: g.strong_edges.into_iter().collect(),
        }
    }
}

impl CategoricalGraph {
    pub fn new(n: usize) -> Self {
        CategoricalGraph {
            n,
            weak_edges: BTreeSet::new(),
            strong_edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(
        n: usize,
        weak: impl IntoIterator<Item = Pair>,
        strong: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        let mut g = CategoricalGraph::new(n);
        for p in weak {
            let p = check_pair(n, p)?;
            if !g.weak_edges.insert(p) {
                return Err(Error::InvalidStructure(format!("duplicate weak edge {p:?}")));
            }
        }
        for p in strong {
            let p = check_pair(n, p)?;
            if g.weak_edges.contains(&p) {
                return Err(Error::InvalidStructure(format!(
                    "pair {p:?} is both weak and strong"
                )));
            }
            if !g.strong_edges.insert(p) {
                return Err(Error::InvalidStructure(format!("duplicate strong edge {p:?}")));
            }
        }
        Ok(g)
    }

    /// Weak edges where the label is 1, strong edges where it is 2.
    pub fn from_labels(labels: &LabelMatrix) -> Self {
        let mut g = CategoricalGraph::new(labels.n());
        for (i, j, l) in labels.iter() {
            match l {
                1 => {
                    g.weak_edges.insert((i, j));
                }
                2 => {
                    g.strong_edges.insert((i, j));
                }
                _ => {}
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m1(&self) -> usize {
        self.weak_edges.len()
    }

    pub fn m2(&self) -> usize {
        self.strong_edges.len()
    }

    pub fn weak_edges(&self) -> &BTreeSet<Pair> {
        &self.weak_edges
    }

    pub fn strong_edges(&self) -> &BTreeSet<Pair> {
        &self.strong_edges
    }
}

/// Interaction type of every unordered pair, 0 (none), 1 (weak / 2-edge) or
/// 2 (strong / covered by a 3-edge).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    n: usize,
    labels: Vec<u8>,
}

impl LabelMatrix {
    pub fn zeros(n: usize) -> Self {
        LabelMatrix {
            n,
            labels: vec![0; n_pairs(n)],
        }
    }

    /// Labels in [`pair_index`] order.
    pub fn from_vec(n: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != n_pairs(n) {
            return Err(invalid_param(format!(
                "expected {} labels for n={n}, got {}",
                n_pairs(n),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 2) {
            return Err(invalid_param(format!("label {bad} outside {{0,1,2}}")));
        }
        Ok(LabelMatrix { n, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        let (i, j) = canonical_pair(i, j);
        self.labels[pair_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, label: u8) {
        assert!(label <= 2, "label {label} outside {{0,1,2}}");
        let (i, j) = canonical_pair(i, j);
        let idx = pair_index(self.n, i, j);
        self.labels[idx] = label;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        all_pairs(self.n).zip(self.labels.iter()).map(|((i, j), &l)| (i, j, l))
    }

    /// Number of pairs carrying each label.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }
}

/// Symmetric matrix of non-negative pairwise counts, diagonal excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMatrix {
    n: usize,
    counts: Vec<u64>,
    log_factorial_sum: f64,
}

impl ObservationMatrix {
    pub fn zeros(n: usize) -> Self {
        ObservationMatrix {
            n,
            counts: vec![0; n_pairs(n)],
            log_factorial_sum: 0.0,
        }
    }

    /// Counts in [`pair_index`] order.
    pub fn from_dense(n: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_pairs(n) {
            return Err(invalid_param(format!(
                "expected {} counts for n={n}, got {}",
                n_pairs(n),
                counts.len()
            )));
        }
        let log_factorial_sum = counts.iter().map(|&x| log_factorial(x)).sum();
        Ok(ObservationMatrix {
            n,
            counts,
            log_factorial_sum,
        })
    }

    /// Builds from `(i, j, count)` triples; unlisted pairs are zero. A pair
    /// listed twice is an error.
    pub fn from_sparse(n: usize, entries: impl IntoIterator<Item = (usize, usize, u64)>) -> Result<Self> {
        let mut counts = vec![0; n_pairs(n)];
        let mut seen = vec![false; n_pairs(n)];
        for (i, j, c) in entries {
            let (i, j) = check_pair(n, (i, j))?;
            let idx = pair_index(n, i, j);
            if seen[idx] {
                return Err(invalid_param(format!("pair ({i}, {j}) listed twice")));
            }
            seen[idx] = true;
            counts[idx] = c;
        }
        ObservationMatrix::from_dense(n, counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        let (i, j) = canonical_pair(i, j);
        self.counts[pair_index(self.n, i, j)]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ log(x_ij!)`, the label-independent constant of the likelihood.
    pub fn log_factorial_sum(&self) -> f64 {
        self.log_factorial_sum
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        all_pairs(self.n)
            .zip(self.counts.iter())
            .filter(|(_, &c)| c > 0)
            .map(|((i, j), &c)| (i, j, c))
    }
}

pub fn log_factorial(x: u64) -> f64 {
    if x < 2 {
        0.0
    } else {
        ln_gamma(x as f64 + 1.0)
    }
}

/// Poisson means `(μ0, μ1, μ2)` of the three interaction types.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub mu: [f64; 3],
}

impl RateParams {
    pub fn new(mu0: f64, mu1: f64, mu2: f64) -> Self {
        RateParams {
            mu: [mu0, mu1, mu2],
        }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.mu[k]
    }

    /// Checks finiteness, non-negativity and the ordering constraint of `model`:
    /// `μ0 < μ1 < μ2` for the categorical model, `μ0 < μ1` and `μ0 < μ2` for
    /// the hypergraph model.
    pub fn validate(&self, model: ModelKind) -> Result<()> {
        if self.mu.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(invalid_param(format!("rates {:?} must be finite and >= 0", self.mu)));
        }
        let [m0, m1, m2] = self.mu;
        let ordered = match model {
            ModelKind::Categorical => m0 < m1 && m1 < m2,
            ModelKind::Hypergraph => m0 < m1 && m0 < m2,
        };
        if !ordered {
            return Err(invalid_param(format!(
                "rates {:?} violate the {model} ordering constraint",
                self.mu
            )));
        }
        Ok(())
    }
}

/// Structural prior parameters φ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum StructureProbs {
    /// `q`: 2-edge probability, `p`: 3-edge probability.
    Hypergraph { q: f64, p: f64 },
    /// `q1`: weak-edge probability, `q2`: strong-edge probability.
    Categorical { q1: f64, q2: f64 },
}

impl StructureProbs {
    pub fn model(&self) -> ModelKind {
        match self {
            StructureProbs::Hypergraph { .. } => ModelKind::Hypergraph,
            StructureProbs::Categorical { .. } => ModelKind::Categorical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = match *self {
            StructureProbs::Hypergraph { q, p } => (q, p),
            StructureProbs::Categorical { q1, q2 } => (q1, q2),
        };
        if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
            return Err(invalid_param(format!("structure probabilities {self:?} must lie in (0,1)")));
        }
        Ok(())
    }
}

/// Either latent structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Structure {
    Hypergraph(Hypergraph),
    Categorical(CategoricalGraph),
}

impl Structure {
    pub fn model(&self) -> ModelKind {
        match self {
            Structure::Hypergraph(_) => ModelKind::Hypergraph,
            Structure::Categorical(_) => ModelKind::Categorical,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Structure::Hypergraph(h) => h.n(),
            Structure::Categorical(g) => g.n(),
        }
    }

    pub fn labels(&self) -> LabelMatrix {
        match self {
            Structure::Hypergraph(h) => project_labels(h),
            Structure::Categorical(g) => graph_labels(g),
        }
    }
}

/// Projects a hypergraph onto pair labels: 2 inside a 3-edge, else 1 on a
/// 2-edge, else 0.
pub fn project_labels(h: &Hypergraph) -> LabelMatrix {
    let mut labels = LabelMatrix::zeros(h.n());
    for &(i, j) in h.two_edges() {
        labels.set(i, j, 1);
    }
    for &(i, j, k) in h.three_edges() {
        labels.set(i, j, 2);
        labels.set(i, k, 2);
        labels.set(j, k, 2);
    }
    labels
}

pub fn graph_labels(g: &CategoricalGraph) -> LabelMatrix {
    let mut labels = LabelMatrix::zeros(g.n());
    for &(i, j) in g.weak_edges() {
        labels.set(i, j, 1);
    }
    for &(i, j) in g.strong_edges() {
        labels.set(i, j, 2);
    }
    labels
}

/// `X_k` (count sums) and `L_k` (pair counts) per label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub count_sums: [u64; 3],
    pub pair_counts: [u64; 3],
}

impl SufficientStats {
    #[inline]
    pub(crate) fn move_pair(&mut self, x: u64, from: u8, to: u8) {
        self.count_sums[from as usize] -= x;
        self.pair_counts[from as usize] -= 1;
        self.count_sums[to as usize] += x;
        self.pair_counts[to as usize] += 1;
    }
}

fn check_same_n(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

pub fn sufficient_stats(x: &ObservationMatrix, labels: &LabelMatrix) -> Result<SufficientStats> {
    check_same_n(x.n(), labels.n())?;
    let mut s = SufficientStats::default();
    for (&c, &l) in x.counts().iter().zip(labels.as_slice()) {
        s.count_sums[l as usize] += c;
        s.pair_counts[l as usize] += 1;
    }
    Ok(s)
}

/// `x log μ` with the convention `0 log 0 = 0`.
#[inline]
pub(crate) fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Log-likelihood without the `Σ log x!` constant, from sufficient statistics.
pub fn log_likelihood_kernel(stats: &SufficientStats, mu: &RateParams) -> f64 {
    (0..3)
        .map(|k| xlogy(stats.count_sums[k] as f64, mu.mu[k]) - stats.pair_counts[k] as f64 * mu.mu[k])
        .sum()
}

/// Poisson log-likelihood `Σ_{i<j} [x log μ_ℓ − μ_ℓ − log x!]`.
pub fn log_likelihood(x: &ObservationMatrix, labels: &LabelMatrix, mu: &RateParams) -> Result<f64> {
    check_same_n(x.n(), labels.n())?;
    if mu.mu.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(invalid_param(format!("rates {:?} must be finite and >= 0", mu.mu)));
    }
    let logs = mu.mu.map(f64::ln);
    let mut total = 0.0;
    for (&c, &l) in x.counts().iter().zip(labels.as_slice()) {
        let k = l as usize;
        let term = if c == 0 { 0.0 } else { c as f64 * logs[k] };
        total += term - mu.mu[k];
    }
    Ok(total - x.log_factorial_sum())
}

/// Draws `x_ij ~ Poisson(μ_{ℓ_ij})` independently for every pair.
pub fn generate_observations<R: Rng + ?Sized>(
    labels: &LabelMatrix,
    mu: &RateParams,
    rng: &mut R,
) -> Result<ObservationMatrix> {
    let mut counts = Vec::with_capacity(labels.as_slice().len());
    for &l in labels.as_slice() {
        counts.push(sample_poisson(mu.mu[l as usize], rng)?);
    }
    ObservationMatrix::from_dense(labels.n(), counts)
}

/// Hidden 2-edge bookkeeping: `existing` = E ∩ Δ, `absent` = Δ \ E.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenEdgeSets {
    pub existing: BTreeSet<Pair>,
    pub absent: BTreeSet<Pair>,
}

pub fn hidden_edge_sets(h: &Hypergraph) -> HiddenEdgeSets {
    let covered = h.covered_pairs();
    let (existing, absent) = covered.into_iter().partition(|p| h.two_edges().contains(p));
    HiddenEdgeSets { existing, absent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn pair_index_is_dense() {
        for n in 2..9 {
            for (idx, (i, j)) in all_pairs(n).enumerate() {
                assert_eq!(pair_index(n, i, j), idx);
            }
        }
    }

    #[test]
    fn empty_projection_is_all_zero() {
        let l = project_labels(&Hypergraph::new(4));
        assert_eq!(l.counts(), [6, 0, 0]);
    }

    #[test]
    fn three_edge_projects_to_type_two() {
        let h = Hypergraph::from_edges(4, [], [(1, 2, 3)]).unwrap();
        let l = project_labels(&h);
        assert_eq!(l.get(1, 2), 2);
        assert_eq!(l.get(1, 3), 2);
        assert_eq!(l.get(2, 3), 2);
        assert_eq!(l.get(0, 1), 0);
        assert_eq!(l.counts(), [3, 0, 3]);
    }

    #[test]
    fn hidden_two_edge_does_not_change_labels() {
        let without = Hypergraph::from_edges(4, [], [(1, 2, 3)]).unwrap();
        let with = Hypergraph::from_edges(4, [(1, 2)], [(1, 2, 3)]).unwrap();
        assert_eq!(project_labels(&without), project_labels(&with));
    }

    #[test]
    fn graph_labels_follow_categories() {
        let g = CategoricalGraph::from_edges(4, [(0, 1)], [(2, 3)]).unwrap();
        let l = graph_labels(&g);
        assert_eq!(l.get(0, 1), 1);
        assert_eq!(l.get(2, 3), 2);
        assert_eq!(l.counts(), [4, 1, 1]);
        assert_eq!(graph_labels(&CategoricalGraph::new(4)).counts(), [6, 0, 0]);
    }

    #[test]
    fn overlapping_categories_rejected() {
        assert!(CategoricalGraph::from_edges(4, [(0, 1)], [(1, 0)]).is_err());
    }

    #[test]
    fn invalid_edges_rejected() {
        assert!(Hypergraph::from_edges(3, [(0, 0)], []).is_err());
        assert!(Hypergraph::from_edges(3, [(0, 3)], []).is_err());
        assert!(Hypergraph::from_edges(3, [], [(0, 1, 1)]).is_err());
        assert!(Hypergraph::from_edges(3, [(0, 1), (1, 0)], []).is_err());
    }

    #[test]
    fn likelihood_small_cases() {
        let x = ObservationMatrix::from_dense(2, vec![0]).unwrap();
        let l = LabelMatrix::zeros(2);
        let ll = log_likelihood(&x, &l, &RateParams::new(1.0, 2.0, 3.0)).unwrap();
        assert!((ll + 1.0).abs() < 1e-12);

        let x = ObservationMatrix::from_dense(2, vec![3]).unwrap();
        let l = LabelMatrix::from_vec(2, vec![1]).unwrap();
        let ll = log_likelihood(&x, &l, &RateParams::new(1.0, 2.0, 3.0)).unwrap();
        let expected = 3.0 * 2f64.ln() - 2.0 - 6f64.ln();
        assert!((ll - expected).abs() < 1e-12);
        assert!((ll + 1.712).abs() < 1e-3);
    }

    #[test]
    fn likelihood_dimension_mismatch() {
        let x = ObservationMatrix::zeros(3);
        let l = LabelMatrix::zeros(4);
        assert!(matches!(
            log_likelihood(&x, &l, &RateParams::new(1.0, 2.0, 3.0)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(sufficient_stats(&x, &l).is_err());
    }

    #[test]
    fn stats_hand_example() {
        let x = ObservationMatrix::from_sparse(3, [(0, 1, 5), (1, 2, 2)]).unwrap();
        let l = LabelMatrix::from_vec(3, vec![1, 0, 2]).unwrap();
        let s = sufficient_stats(&x, &l).unwrap();
        assert_eq!(s.count_sums, [0, 5, 2]);
        assert_eq!(s.pair_counts, [1, 1, 1]);

        let s0 = sufficient_stats(&x, &LabelMatrix::zeros(3)).unwrap();
        assert_eq!(s0.count_sums, [7, 0, 0]);
        assert_eq!(s0.pair_counts, [3, 0, 0]);
    }

    #[test]
    fn hidden_sets_example() {
        let h = Hypergraph::from_edges(4, [(1, 2)], [(1, 2, 3)]).unwrap();
        let s = hidden_edge_sets(&h);
        assert_eq!(s.existing.into_iter().collect::<Vec<_>>(), vec![(1, 2)]);
        assert_eq!(s.absent.into_iter().collect::<Vec<_>>(), vec![(1, 3), (2, 3)]);
        let s = hidden_edge_sets(&Hypergraph::from_edges(4, [(0, 1)], []).unwrap());
        assert!(s.existing.is_empty() && s.absent.is_empty());
    }

    #[test]
    fn zero_rate_gives_zero_counts() {
        let mut rng = rng_from_seed(3);
        let l = LabelMatrix::zeros(30);
        let x = generate_observations(&l, &RateParams::new(0.0, 1.0, 2.0), &mut rng).unwrap();
        assert_eq!(x.total(), 0);
    }

    #[test]
    fn generation_is_seeded() {
        let h = Hypergraph::from_edges(10, [(0, 1), (2, 3)], [(4, 5, 6)]).unwrap();
        let l = project_labels(&h);
        let mu = RateParams::new(0.5, 20.0, 30.0);
        let a = generate_observations(&l, &mu, &mut rng_from_seed(9)).unwrap();
        let b = generate_observations(&l, &mu, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generated_label_one_mean() {
        // 10^4 label-1 pairs: n=142 gives 10011 pairs.
        let n = 142;
        let l = LabelMatrix::from_vec(n, vec![1; n_pairs(n)]).unwrap();
        let mu1 = 7.0;
        let x = generate_observations(&l, &RateParams::new(0.1, mu1, 9.0), &mut rng_from_seed(1)).unwrap();
        let m = n_pairs(n) as f64;
        let mean = x.total() as f64 / m;
        let se = (mu1 / m).sqrt();
        assert!((mean - mu1).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn rate_ordering() {
        assert!(RateParams::new(0.1, 5.0, 3.0).validate(ModelKind::Hypergraph).is_ok());
        assert!(RateParams::new(0.1, 5.0, 3.0).validate(ModelKind::Categorical).is_err());
        assert!(RateParams::new(4.0, 5.0, 3.0).validate(ModelKind::Hypergraph).is_err());
    }

    #[test]
    fn serde_roundtrip_validates() {
        let h = Hypergraph::from_edges(5, [(0, 1)], [(1, 2, 3)]).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        let back: Hypergraph = serde_json::from_str(&s).unwrap();
        assert_eq!(h, back);
        assert!(serde_json::from_str::<Hypergraph>(r#"{"n":2,"two_edges":[[0,5]],"three_edges":[]}"#).is_err());
    }
}
