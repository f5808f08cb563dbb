//! Synthetic hypergraph generators and ingestion of bipartite membership data.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};
use crate::estimators::in_projected_triangle;
use crate::model::{canonical_pair, canonical_triplet, project_labels, Hypergraph};

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid_param(format!("{name}={v} must lie in [0,1]")))
    }
}

/// Every pair is a 2-edge with probability `q` and every triplet a 3-edge
/// with probability `p`, independently.
pub fn random_hypergraph<R: Rng + ?Sized>(n: usize, p: f64, q: f64, rng: &mut R) -> Result<Hypergraph> {
    check_prob("p", p)?;
    check_prob("q", q)?;
    let mut h = Hypergraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(q) {
                h.add_two_edge(i, j)?;
            }
        }
    }
    if p > 0.0 {
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if rng.random_bool(p) {
                        h.add_three_edge(i, j, k)?;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Deletes, in canonical order, every 2-edge that lies in a triangle of the
/// current projection. Afterwards no 2-edge sits in a projected triangle.
pub fn remove_triangle_two_edges(h: &mut Hypergraph) {
    let covered = h.covered_pairs();
    let mut labels = project_labels(h);
    let edges: Vec<_> = h.two_edges().iter().copied().collect();
    for (i, j) in edges {
        if in_projected_triangle(&labels, i, j) {
            h.remove_two_edge(i, j);
            labels.set(i, j, if covered.contains(&(i, j)) { 2 } else { 0 });
        }
    }
}

/// Prior-model draw with every 2-edge closing a projected triangle removed.
pub fn best_case_hypergraph<R: Rng + ?Sized>(n: usize, p: f64, q: f64, rng: &mut R) -> Result<Hypergraph> {
    let mut h = random_hypergraph(n, p, q, rng)?;
    remove_triangle_two_edges(&mut h);
    Ok(h)
}

/// Vertex-disjoint cliques of 2-edges on `n_cliques · clique_size`
/// vertices, each triangle promoted to a 3-edge with probability
/// `promote_prob`. Promoted triangles keep their 2-edges, which become hidden.
pub fn worst_case_hypergraph<R: Rng + ?Sized>(
    n_cliques: usize,
    clique_size: usize,
    promote_prob: f64,
    rng: &mut R,
) -> Result<Hypergraph> {
    if clique_size < 3 {
        return Err(invalid_param(format!("clique size {clique_size} must be at least 3")));
    }
    check_prob("promote_prob", promote_prob)?;
    let n = n_cliques
        .checked_mul(clique_size)
        .ok_or_else(|| invalid_param("vertex budget overflows"))?;
    let mut h = Hypergraph::new(n);
    for c in 0..n_cliques {
        let base = c * clique_size;
        let members: Vec<usize> = (base..base + clique_size).collect();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                h.add_two_edge(i, j)?;
            }
        }
        for (a, &i) in members.iter().enumerate() {
            for (b, &j) in members.iter().enumerate().skip(a + 1) {
                for &k in &members[b + 1..] {
                    if rng.random_bool(promote_prob) {
                        h.add_three_edge(i, j, k)?;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Superimposed stochastic block model for 2-edges and 3-edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmParams {
    pub sizes: Vec<usize>,
    /// Symmetric matrix of 2-edge probabilities between communities.
    pub q: Vec<Vec<f64>>,
    /// 3-edge probability for triplets inside each community.
    pub p_within: Vec<f64>,
    /// 3-edge probability for triplets spanning several communities.
    pub p_out: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        SbmParams {
            sizes: vec![30, 70],
            q: vec![vec![0.05, 0.001], vec![0.001, 0.02]],
            p_within: vec![0.005, 0.0001],
            p_out: 0.00001,
        }
    }
}

impl SbmParams {
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.sizes.len();
        if self.q.len() != b || self.q.iter().any(|r| r.len() != b) || self.p_within.len() != b {
            return Err(invalid_param(format!("SBM with {b} communities needs a {b}x{b} q matrix and {b} p values")));
        }
        for r in 0..b {
            for s in 0..b {
                check_prob("q", self.q[r][s])?;
                if self.q[r][s] != self.q[s][r] {
                    return Err(invalid_param("SBM q matrix must be symmetric"));
                }
            }
            check_prob("p_within", self.p_within[r])?;
        }
        check_prob("p_out", self.p_out)
    }

    fn communities(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect()
    }
}

pub fn hypergraph_sbm<R: Rng + ?Sized>(params: &SbmParams, rng: &mut R) -> Result<Hypergraph> {
    params.validate()?;
    let g = params.communities();
    let n = g.len();
    let mut h = Hypergraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(params.q[g[i]][g[j]]) {
                h.add_two_edge(i, j)?;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let p = if g[i] == g[j] && g[j] == g[k] {
                    params.p_within[g[i]]
                } else {
                    params.p_out
                };
                if p > 0.0 && rng.random_bool(p) {
                    h.add_three_edge(i, j, k)?;
                }
            }
        }
    }
    Ok(h)
}

/// Geometric degree distribution on `{0, 1, ...}` with the given mean.
fn degree_distribution(mean: f64) -> Result<Geometric> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid_param(format!("mean degree {mean} must be finite and >= 0")));
    }
    Geometric::new(1.0 / (mean + 1.0)).map_err(|e| invalid_param(e.to_string()))
}

fn draw_stubs<R: Rng + ?Sized>(n: usize, dist: &Geometric, multiple: u64, rng: &mut R) -> Vec<u64> {
    let mut d: Vec<u64> = (0..n).map(|_| dist.sample(rng)).collect();
    while d.iter().sum::<u64>() % multiple != 0 {
        let v = rng.random_range(0..n);
        d[v] = dist.sample(rng);
    }
    d
}

fn stub_list<R: Rng + ?Sized>(degrees: &[u64], rng: &mut R) -> Vec<usize> {
    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v, d as usize))
        .collect();
    stubs.shuffle(rng);
    stubs
}

/// Configuration model with independent geometric 2-edge and 3-edge degrees.
/// Stubs are matched uniformly; degenerate and repeated hyperedges are erased.
pub fn triangle_edge_cm<R: Rng + ?Sized>(n: usize, mean2: f64, mean3: f64, rng: &mut R) -> Result<Hypergraph> {
    if n < 3 {
        return Err(invalid_param("configuration model needs n >= 3"));
    }
    let d2 = draw_stubs(n, &degree_distribution(mean2)?, 2, rng);
    let d3 = draw_stubs(n, &degree_distribution(mean3)?, 3, rng);
    let mut h = Hypergraph::new(n);
    for e in stub_list(&d2, rng).chunks_exact(2) {
        if e[0] != e[1] {
            h.add_two_edge(e[0], e[1])?;
        }
    }
    for t in stub_list(&d3, rng).chunks_exact(3) {
        if t[0] != t[1] && t[0] != t[2] && t[1] != t[2] {
            h.add_three_edge(t[0], t[1], t[2])?;
        }
    }
    Ok(h)
}

/// Normal vertex propensities for the 2-edge and 3-edge layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaModelParams {
    pub mean2: f64,
    pub sd2: f64,
    pub mean3: f64,
    pub sd3: f64,
}

impl Default for BetaModelParams {
    fn default() -> Self {
        BetaModelParams {
            mean2: -4.5,
            sd2: 2.5,
            mean3: -5.0,
            sd3: 2.0,
        }
    }
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(invalid_param(format!("propensity sd {sd} must be positive")));
    }
    Normal::new(mean, sd).map_err(|e| invalid_param(e.to_string()))
}

pub fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Layered β-model: pair `(i, j)` is a 2-edge with probability
/// `logistic(b_i + b_j)` and triplet `(i, j, k)` a 3-edge with probability
/// `logistic(b'_i + b'_j + b'_k)`.
pub fn beta_model_hypergraph<R: Rng + ?Sized>(n: usize, params: &BetaModelParams, rng: &mut R) -> Result<Hypergraph> {
    let b2 = normal(params.mean2, params.sd2)?;
    let b3 = normal(params.mean3, params.sd3)?;
    let b: Vec<f64> = (0..n).map(|_| b2.sample(rng)).collect();
    let c: Vec<f64> = (0..n).map(|_| b3.sample(rng)).collect();
    beta_model_from_propensities(&b, &c, rng)
}

pub fn beta_model_from_propensities<R: Rng + ?Sized>(b: &[f64], c: &[f64], rng: &mut R) -> Result<Hypergraph> {
    if b.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: c.len(),
        });
    }
    let n = b.len();
    let mut h = Hypergraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(logistic(b[i] + b[j])) {
                h.add_two_edge(i, j)?;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if rng.random_bool(logistic(c[i] + c[j] + c[k])) {
                    h.add_three_edge(i, j, k)?;
                }
            }
        }
    }
    Ok(h)
}

/// Serializable description of a synthetic structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Prior { n: usize, p: f64, q: f64 },
    Sbm(SbmParams),
    Cm { n: usize, mean2: f64, mean3: f64 },
    Beta { n: usize, params: BetaModelParams },
    Best { n: usize, p: f64, q: f64 },
    Worst { n_cliques: usize, clique_size: usize, promote_prob: f64 },
}

impl GeneratorSpec {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Hypergraph> {
        match self {
            GeneratorSpec::Prior { n, p, q } => random_hypergraph(*n, *p, *q, rng),
            GeneratorSpec::Sbm(params) => hypergraph_sbm(params, rng),
            GeneratorSpec::Cm { n, mean2, mean3 } => triangle_edge_cm(*n, *mean2, *mean3, rng),
            GeneratorSpec::Beta { n, params } => beta_model_hypergraph(*n, params, rng),
            GeneratorSpec::Best { n, p, q } => best_case_hypergraph(*n, *p, *q, rng),
            GeneratorSpec::Worst {
                n_cliques,
                clique_size,
                promote_prob,
            } => worst_case_hypergraph(*n_cliques, *clique_size, *promote_prob, rng),
        }
    }
}

pub const DEFAULT_MAX_GROUP_SIZE: usize = 5;

/// Hypergraph built from entity–group memberships, with the original entity
/// name of every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteProjection {
    pub hypergraph: Hypergraph,
    pub vertex_names: Vec<String>,
    /// Groups larger than the size cap, ignored.
    pub dropped_groups: usize,
}

/// Reads groups as hyperedges: groups of two give a 2-edge, groups of three
/// a 3-edge, larger groups up to `max_group_size` all their triplets.
/// Singleton and oversized groups are ignored. Vertices are the entities
/// that end up in some edge, numbered by first appearance.
pub fn bipartite_to_hypergraph(memberships: &[(String, String)], max_group_size: usize) -> Result<BipartiteProjection> {
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    let mut group_pos: HashMap<&str, usize> = HashMap::new();
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (line, (entity, group)) in memberships.iter().enumerate() {
        if entity.is_empty() || group.is_empty() {
            return Err(Error::Parse {
                line: line + 1,
                msg: "empty entity or group".into(),
            });
        }
        if !seen.insert((entity, group)) {
            return Err(Error::Parse {
                line: line + 1,
                msg: format!("duplicate membership ({entity}, {group})"),
            });
        }
        let pos = *group_pos.entry(group).or_insert_with(|| {
            groups.push((group.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[pos].1.push(entity.clone());
    }

    let mut dropped_groups = 0;
    let mut kept: Vec<&[String]> = Vec::new();
    for (_, members) in &groups {
        if members.len() > max_group_size {
            dropped_groups += 1;
        } else if members.len() >= 2 {
            kept.push(members);
        }
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut vertex_names = Vec::new();
    for members in &kept {
        for m in members.iter() {
            index.entry(m).or_insert_with(|| {
                vertex_names.push(m.clone());
                vertex_names.len() - 1
            });
        }
    }

    let mut h = Hypergraph::new(vertex_names.len());
    for members in kept {
        let v: Vec<usize> = members.iter().map(|m| index[m.as_str()]).collect();
        if v.len() == 2 {
            let (i, j) = canonical_pair(v[0], v[1]);
            h.add_two_edge(i, j)?;
            continue;
        }
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                for c in b + 1..v.len() {
                    let (i, j, k) = canonical_triplet(v[a], v[b], v[c]);
                    h.add_three_edge(i, j, k)?;
                }
            }
        }
    }
    Ok(BipartiteProjection {
        hypergraph: h,
        vertex_names,
        dropped_groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::edge_triangle_fraction;
    use crate::rng::rng_from_seed;

    fn memberships(rows: &[(&str, &str)]) -> Vec<(String, String)> {
        rows.iter().map(|&(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn extreme_probabilities() {
        let mut rng = rng_from_seed(0);
        let empty = random_hypergraph(6, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!((empty.h1(), empty.h2()), (0, 0));
        let full = random_hypergraph(6, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!((full.h1(), full.h2()), (15, 20));
        assert!(random_hypergraph(6, 1.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn worst_case_defaults() {
        let h = worst_case_hypergraph(20, 5, 0.19, &mut rng_from_seed(1)).unwrap();
        assert_eq!(h.n(), 100);
        assert_eq!(h.h1(), 200);
        assert_eq!(edge_triangle_fraction(&h).unwrap(), 1.0);
        let plain = worst_case_hypergraph(3, 4, 0.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!((plain.h1(), plain.h2()), (18, 0));
        assert!(worst_case_hypergraph(3, 2, 0.1, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn best_case_has_no_triangle_edges() {
        let h = best_case_hypergraph(60, 0.002, 0.08, &mut rng_from_seed(2)).unwrap();
        assert!(h.h1() > 0);
        assert_eq!(edge_triangle_fraction(&h).unwrap(), 0.0);
    }

    #[test]
    fn sbm_single_community_matches_prior() {
        let params = SbmParams {
            sizes: vec![12],
            q: vec![vec![0.3]],
            p_within: vec![0.05],
            p_out: 0.9,
        };
        let a = hypergraph_sbm(&params, &mut rng_from_seed(5)).unwrap();
        let b = random_hypergraph(12, 0.05, 0.3, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(-800.0)).abs() < 1e-300);
        assert_eq!(logistic(800.0), 1.0);
        assert!((logistic(2.0) + logistic(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bipartite_groups() {
        let rows = memberships(&[
            ("a", "g1"),
            ("b", "g1"),
            ("c", "g2"),
            ("d", "g2"),
            ("e", "g2"),
            ("f", "g2"),
            ("z", "solo"),
        ]);
        let mut rows6 = rows.clone();
        for v in ["p", "q", "r", "s", "t", "u"] {
            rows6.push((v.to_string(), "big".to_string()));
        }
        let b = bipartite_to_hypergraph(&rows6, 5).unwrap();
        assert_eq!(b.vertex_names, ["a", "b", "c", "d", "e", "f"]);
        assert_eq!(b.hypergraph.h1(), 1);
        assert_eq!(b.hypergraph.h2(), 4);
        assert_eq!(b.dropped_groups, 1);
        let dup = memberships(&[("a", "g"), ("a", "g")]);
        assert!(matches!(bipartite_to_hypergraph(&dup, 5), Err(Error::Parse { line: 2, .. })));
    }
}
