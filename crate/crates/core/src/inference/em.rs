//! Expectation-maximization for a finite Poisson mixture over the pair counts,
//! used to initialize chains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};
use crate::model::{log_factorial, ObservationMatrix};

const TOL: f64 = 1e-8;
const MAX_ITER: usize = 500;
const RANDOM_STARTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    /// Component means in ascending order.
    pub mu: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Fewer distinct values than components: all means collapsed onto the
    /// sample mean.
    pub degenerate: bool,
}

/// Distinct count values with their multiplicities.
#[derive(Clone, Debug)]
pub struct CountHistogram {
    values: Vec<u64>,
    mult: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl CountHistogram {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let mut values = Vec::new();
        let mut mult = Vec::new();
        for v in sorted {
            if values.last() == Some(&v) {
                *mult.last_mut().unwrap() += 1.0;
            } else {
                values.push(v);
                mult.push(1.0);
            }
        }
        let ln_fact = values.iter().map(|&v| log_factorial(v)).collect();
        CountHistogram { values, mult, ln_fact }
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> f64 {
        self.mult.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.mult).map(|(&v, &m)| v as f64 * m).sum::<f64>() / self.total()
    }

    /// Value at the given quantile of the (multiplicity-weighted) data.
    fn quantile(&self, q: f64) -> f64 {
        let target = q * self.total();
        let mut acc = 0.0;
        for (&v, &m) in self.values.iter().zip(&self.mult) {
            acc += m;
            if acc >= target {
                return v as f64;
            }
        }
        *self.values.last().unwrap() as f64
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.iter().map(|&x| (x - top).exp()).sum::<f64>().ln()
}

fn component_log_terms(hist: &CountHistogram, idx: usize, mu: &[f64], w: &[f64], out: &mut [f64]) {
    let v = hist.values[idx];
    for c in 0..mu.len() {
        let data = if v == 0 { 0.0 } else { v as f64 * mu[c].ln() };
        out[c] = w[c].ln() + data - mu[c] - hist.ln_fact[idx];
    }
}

/// Mixture log-likelihood of the histogram.
pub fn mixture_log_likelihood(hist: &CountHistogram, mu: &[f64], w: &[f64]) -> f64 {
    let mut terms = vec![0.0; mu.len()];
    let mut total = 0.0;
    for idx in 0..hist.distinct() {
        component_log_terms(hist, idx, mu, w, &mut terms);
        total += hist.mult[idx] * log_sum_exp(&terms);
    }
    total
}

/// Runs EM from the given start; returns the fit (components unsorted) and
/// the log-likelihood after every iteration.
pub fn em_from_start(hist: &CountHistogram, mu_init: &[f64], w_init: &[f64]) -> (MixtureFit, Vec<f64>) {
    let k = mu_init.len();
    let mut mu = mu_init.to_vec();
    let mut w = w_init.to_vec();
    let mut terms = vec![0.0; k];
    let mut trajectory = vec![mixture_log_likelihood(hist, &mu, &w)];
    let mut iterations = 0;
    for _ in 0..MAX_ITER {
        iterations += 1;
        let mut resp_mass = vec![0.0; k];
        let mut resp_sum = vec![0.0; k];
        for idx in 0..hist.distinct() {
            component_log_terms(hist, idx, &mu, &w, &mut terms);
            let norm = log_sum_exp(&terms);
            for c in 0..k {
                let r = hist.mult[idx] * (terms[c] - norm).exp();
                resp_mass[c] += r;
                resp_sum[c] += r * hist.values[idx] as f64;
            }
        }
        let total = hist.total();
        for c in 0..k {
            w[c] = resp_mass[c] / total;
            if resp_mass[c] > 0.0 {
                mu[c] = resp_sum[c] / resp_mass[c];
            }
        }
        let ll = mixture_log_likelihood(hist, &mu, &w);
        let prev = *trajectory.last().unwrap();
        trajectory.push(ll);
        if (ll - prev).abs() < TOL {
            break;
        }
    }
    let fit = MixtureFit {
        mu,
        weights: w,
        log_likelihood: *trajectory.last().unwrap(),
        iterations,
        degenerate: false,
    };
    (fit, trajectory)
}

fn sort_components(fit: &mut MixtureFit) {
    let mut order: Vec<usize> = (0..fit.mu.len()).collect();
    order.sort_by(|&a, &b| fit.mu[a].total_cmp(&fit.mu[b]));
    fit.mu = order.iter().map(|&i| fit.mu[i]).collect();
    fit.weights = order.iter().map(|&i| fit.weights[i]).collect();
}

/// Fits a `k`-component Poisson mixture to the pair counts by EM from several
/// starting points, keeping the best fit.
pub fn poisson_mixture_em<R: Rng + ?Sized>(x: &ObservationMatrix, k: usize, rng: &mut R) -> Result<MixtureFit> {
    if k == 0 {
        return Err(invalid_param("mixture needs at least one component"));
    }
    if x.counts().is_empty() {
        return Err(invalid_param("no pairs to fit"));
    }
    let hist = CountHistogram::from_counts(x.counts());
    let uniform = vec![1.0 / k as f64; k];

    if hist.distinct() < k {
        let mean = hist.mean();
        let mut mu: Vec<f64> = (0..k)
            .map(|c| mean + mean.max(1e-3) * 1e-6 * (c as f64 + rng.random::<f64>()))
            .collect();
        mu.sort_by(f64::total_cmp);
        let ll = mixture_log_likelihood(&hist, &mu, &uniform);
        return Ok(MixtureFit {
            mu,
            weights: uniform,
            log_likelihood: ll,
            iterations: 0,
            degenerate: true,
        });
    }

    let spread = |lo: f64, hi: f64| -> Vec<f64> {
        (0..k)
            .map(|c| {
                let t = if k == 1 { 0.5 } else { c as f64 / (k - 1) as f64 };
                lo + t * (hi - lo)
            })
            .collect()
    };
    let min = hist.values[0] as f64;
    let max = *hist.values.last().unwrap() as f64;
    let mut starts = vec![
        spread(min, max),
        (0..k).map(|c| hist.quantile((c as f64 + 0.5) / k as f64)).collect(),
    ];
    // Quantiles of the non-zero counts: zeros typically dominate sparse data.
    let nonzero: Vec<u64> = x.counts().iter().copied().filter(|&c| c > 0).collect();
    if !nonzero.is_empty() && k > 1 {
        let nz = CountHistogram::from_counts(&nonzero);
        let mut s = vec![min];
        s.extend((1..k).map(|c| nz.quantile(c as f64 / k as f64)));
        starts.push(s);
    }
    for _ in 0..RANDOM_STARTS {
        let picks = rand::seq::index::sample(rng, hist.distinct(), k);
        starts.push(picks.iter().map(|i| hist.values[i] as f64).collect());
    }

    let mut best: Option<MixtureFit> = None;
    for mut mu0 in starts {
        // Keep starting means positive and distinct.
        mu0.sort_by(f64::total_cmp);
        for c in 0..k {
            mu0[c] = mu0[c].max(1e-3);
            if c > 0 && mu0[c] <= mu0[c - 1] {
                mu0[c] = mu0[c - 1] * 1.01 + 1e-3;
            }
        }
        let (fit, _) = em_from_start(&hist, &mu0, &uniform);
        if fit.log_likelihood.is_finite()
            && best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood)
        {
            best = Some(fit);
        }
    }
    let mut fit = best.ok_or_else(|| invalid_param("EM failed from every start"))?;
    sort_components(&mut fit);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_observations, LabelMatrix, RateParams};
    use crate::rng::rng_from_seed;

    #[test]
    fn recovers_well_separated_mixture() {
        let n = 120;
        let m = crate::model::n_pairs(n);
        let labels: Vec<u8> = (0..m).map(|i| if i % 10 == 0 { 1 } else if i % 10 == 1 { 2 } else { 0 }).collect();
        let labels = LabelMatrix::from_vec(n, labels).unwrap();
        let mu = RateParams::new(0.5, 15.0, 60.0);
        let mut rng = rng_from_seed(11);
        let x = generate_observations(&labels, &mu, &mut rng).unwrap();
        let fit = poisson_mixture_em(&x, 3, &mut rng).unwrap();
        for k in 0..3 {
            assert!((fit.mu[k] - mu.mu[k]).abs() < 0.1 * mu.mu[k], "{:?}", fit.mu);
        }
        assert!((fit.weights[1] - 0.1).abs() < 0.01);
    }

    #[test]
    fn monotone_log_likelihood() {
        let counts: Vec<u64> = (0..400u64).map(|i| (i * 7919) % 23 + if i % 5 == 0 { 30 } else { 0 }).collect();
        let hist = CountHistogram::from_counts(&counts);
        let (_, traj) = em_from_start(&hist, &[1.0, 10.0, 40.0], &[1.0 / 3.0; 3]);
        for w in traj.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn degenerate_collapses_to_mean() {
        let x = ObservationMatrix::from_dense(4, vec![3; 6]).unwrap();
        let fit = poisson_mixture_em(&x, 3, &mut rng_from_seed(0)).unwrap();
        assert!(fit.degenerate);
        for &m in &fit.mu {
            assert!((m - 3.0).abs() < 1e-4);
        }
        assert!(fit.mu[0] < fit.mu[1] && fit.mu[1] < fit.mu[2]);
    }
}
