//! Precomputed, read-only views of an observation matrix shared by the kernels.

use rand::Rng;

use crate::error::{invalid_param, Result};
use crate::model::{all_pairs, n_pairs, n_triplets, pair_index, ObservationMatrix};

/// Observation-derived tables: pair decoding, vertex weights `D_i` and
/// per-row cumulative weights for proportional vertex selection.
#[derive(Clone, Debug)]
pub struct DataContext {
    n: usize,
    counts: Vec<u64>,
    pairs: Vec<(u32, u32)>,
    degree: Vec<u64>,
    degree_cum: Vec<u64>,
    degree_total: u64,
    row_cum: Vec<u64>,
    ln_fact: Vec<f64>,
    log_factorial_sum: f64,
}

impl DataContext {
    pub fn new(x: &ObservationMatrix) -> Result<Self> {
        let n = x.n();
        if n < 2 {
            return Err(invalid_param(format!("need at least 2 vertices, got {n}")));
        }
        let counts = x.counts().to_vec();
        let pairs: Vec<(u32, u32)> = all_pairs(n).map(|(i, j)| (i as u32, j as u32)).collect();

        let mut row_cum = vec![0u64; n * n];
        let mut degree = vec![0u64; n];
        for i in 0..n {
            let mut acc = 0u64;
            for l in 0..n {
                if l != i {
                    let (a, b) = if i < l { (i, l) } else { (l, i) };
                    acc += counts[pair_index(n, a, b)] + 1;
                }
                row_cum[i * n + l] = acc;
            }
            degree[i] = acc;
        }
        let mut degree_cum = Vec::with_capacity(n);
        let mut acc = 0u64;
        for &d in &degree {
            acc += d;
            degree_cum.push(acc);
        }

        let m = n_pairs(n);
        let mut ln_fact = Vec::with_capacity(m + 1);
        ln_fact.push(0.0);
        for k in 1..=m {
            ln_fact.push(ln_fact[k - 1] + (k as f64).ln());
        }
        Ok(DataContext {
            n,
            counts,
            pairs,
            degree,
            degree_cum,
            degree_total: acc,
            row_cum,
            ln_fact,
            log_factorial_sum: x.log_factorial_sum(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_triplets(&self) -> u64 {
        n_triplets(self.n)
    }

    #[inline]
    pub fn count(&self, pair: usize) -> u64 {
        self.counts[pair]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    pub fn pair(&self, idx: usize) -> (usize, usize) {
        let (i, j) = self.pairs[idx];
        (i as usize, j as usize)
    }

    #[inline]
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        if i < j {
            pair_index(self.n, i, j)
        } else {
            pair_index(self.n, j, i)
        }
    }

    /// `x_ij + 1` for `i != j`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> u64 {
        self.counts[self.pair_index(i, j)] + 1
    }

    /// `D_i = Σ_{l≠i} (x_il + 1)`.
    pub fn degree(&self, i: usize) -> u64 {
        self.degree[i]
    }

    pub fn degree_total(&self) -> u64 {
        self.degree_total
    }

    pub fn log_factorial_sum(&self) -> f64 {
        self.log_factorial_sum
    }

    /// `log C(k, m)` for `k <= C(n, 2)`.
    pub fn ln_binomial(&self, k: usize, m: usize) -> f64 {
        debug_assert!(m <= k);
        self.ln_fact[k] - self.ln_fact[m] - self.ln_fact[k - m]
    }

    /// Vertex `i` with probability `D_i / Σ_r D_r`.
    pub fn sample_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r = rng.random_range(0..self.degree_total);
        self.degree_cum.partition_point(|&c| c <= r)
    }

    /// Vertex `j ≠ i` with probability `(x_ij + 1) / D_i`.
    pub fn sample_neighbour<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let row = &self.row_cum[i * self.n..(i + 1) * self.n];
        let r = rng.random_range(0..self.degree[i]);
        row.partition_point(|&c| c <= r)
    }

    /// Probability that the three-step vertex selection yields the triplet
    /// `{a, b, c}` (in any order).
    pub fn triplet_probability(&self, a: usize, b: usize, c: usize) -> f64 {
        let w = |u: usize, v: usize| self.weight(u, v) as f64;
        let term = |i: usize, j: usize, k: usize| w(i, j) * w(i, k) / self.degree[i] as f64;
        2.0 * (term(a, b, c) + term(b, a, c) + term(c, a, b)) / self.degree_total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn ctx() -> DataContext {
        let x = ObservationMatrix::from_sparse(5, [(0, 1, 4), (1, 2, 2), (3, 4, 9), (0, 4, 1)]).unwrap();
        DataContext::new(&x).unwrap()
    }

    #[test]
    fn degrees() {
        let c = ctx();
        assert_eq!(c.degree(0), 5 + 1 + 1 + 2);
        assert_eq!(c.degree_total(), (0..5).map(|i| c.degree(i)).sum::<u64>());
    }

    #[test]
    fn neighbour_sampling_frequencies() {
        let c = ctx();
        let mut rng = rng_from_seed(2);
        let mut counts = [0usize; 5];
        for _ in 0..100_000 {
            counts[c.sample_neighbour(4, &mut rng)] += 1;
        }
        assert_eq!(counts[4], 0);
        let d = c.degree(4) as f64;
        assert!((counts[3] as f64 / 1e5 - 10.0 / d).abs() < 0.01);
        assert!((counts[0] as f64 / 1e5 - 2.0 / d).abs() < 0.01);
    }

    #[test]
    fn triplet_probabilities_sum_to_distinct_mass() {
        // Summed over all triplets, the selection probability equals the
        // probability that the two drawn neighbours differ.
        let c = ctx();
        let mut total = 0.0;
        for a in 0..5 {
            for b in a + 1..5 {
                for d in b + 1..5 {
                    total += c.triplet_probability(a, b, d);
                }
            }
        }
        let mut same = 0.0;
        for i in 0..5 {
            let pi = c.degree(i) as f64 / c.degree_total() as f64;
            for j in 0..5 {
                if j != i {
                    let pj = c.weight(i, j) as f64 / c.degree(i) as f64;
                    same += pi * pj * pj;
                }
            }
        }
        assert!((total - (1.0 - same)).abs() < 1e-12);
    }
}
