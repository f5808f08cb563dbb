//! Random variates and log densities used by the sampler.
//!
//! The truncated gamma sampler combines three methods: plain rejection from the
//! untruncated gamma when the interval holds enough mass, inverse-transform
//! sampling through the inverse regularized incomplete gamma function, and
//! rejection from a linear envelope on narrow intervals where the inverse
//! transform is ill-conditioned.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_param, Error, Result};
use crate::special::{inverse_regularized_gamma, ln_gamma_p, ln_gamma_q, Tail};

/// Prior hyperparameters: Beta(ξ, ζ) on every structural probability and
/// Gamma(α_k, β_k) (shape, rate) on every rate μ_k.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub xi: f64,
    pub zeta: f64,
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            xi: 1.1,
            zeta: 5.0,
            alpha: [1.05; 3],
            beta: [0.5; 3],
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.xi, self.zeta]
            .into_iter()
            .chain(self.alpha)
            .chain(self.beta);
        for v in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid_param(format!("hyperparameters must be positive: {self:?}")));
            }
        }
        Ok(())
    }
}

/// Open interval `(lo, hi)` with `0 <= lo < hi <= ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncInterval {
    lo: f64,
    hi: f64,
}

impl TruncInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo.is_finite() && hi > lo) {
            return Err(invalid_param(format!("invalid truncation interval ({lo}, {hi})")));
        }
        Ok(TruncInterval { lo, hi })
    }

    pub fn positive() -> Self {
        TruncInterval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, y: f64) -> bool {
        y > self.lo && y < self.hi
    }
}

fn check_shape_rate(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(invalid_param(format!("gamma shape {alpha} and rate {beta} must be positive")));
    }
    Ok(())
}

pub fn sample_gamma<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    check_shape_rate(alpha, beta)?;
    let g = Gamma::new(alpha, 1.0 / beta).map_err(|e| invalid_param(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Beta(a, b) as `x / (x + y)` with `x ~ Gamma(a)`, `y ~ Gamma(b)`.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(invalid_param(format!("beta shapes ({a}, {b}) must be positive")));
    }
    let ga = Gamma::new(a, 1.0).map_err(|e| invalid_param(e.to_string()))?;
    let gb = Gamma::new(b, 1.0).map_err(|e| invalid_param(e.to_string()))?;
    loop {
        let x = ga.sample(rng);
        let y = gb.sample(rng);
        let z = x / (x + y);
        if z > 0.0 && z < 1.0 {
            return Ok(z);
        }
    }
}

/// Inverse CDF of the density `(1 + c x) / 2` on `[-1, 1]`.
///
/// Algebraically equal to `(sqrt(c² − 2c + 4cu + 1) − 1) / c`, rearranged so that
/// it stays exact as `c → 0` (where the density is uniform).
pub fn linear_inverse_cdf(c: f64, u: f64) -> f64 {
    let root = (c * c - 2.0 * c + 4.0 * c * u + 1.0).max(0.0).sqrt();
    ((c - 2.0 + 4.0 * u) / (root + 1.0)).clamp(-1.0, 1.0)
}

pub fn sample_linear<R: Rng + ?Sized>(c: f64, rng: &mut R) -> Result<f64> {
    if !(c.abs() <= 1.0) {
        return Err(invalid_param(format!("linear slope {c} outside [-1, 1]")));
    }
    Ok(linear_inverse_cdf(c, rng.random::<f64>()))
}

/// Method that produced a truncated gamma draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncGammaStrategy {
    Rejection,
    InverseCdf,
    Linear,
}

/// Thresholds of the truncated gamma method cascade.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncGammaOptions {
    /// Plain rejection is used when the interval holds at least this much
    /// untruncated gamma mass.
    pub min_rejection_mass: f64,
    /// Below this ratio of interval mass to tail mass the inverse transform
    /// loses too many digits to cancellation and the linear envelope is used.
    pub min_inverse_relative_mass: f64,
    pub max_rejection_attempts: usize,
}

impl Default for TruncGammaOptions {
    fn default() -> Self {
        TruncGammaOptions {
            min_rejection_mass: 0.1,
            min_inverse_relative_mass: 0.01,
            max_rejection_attempts: 1000,
        }
    }
}

/// Mass of the interval under Gamma(α, β), expressed through the tail that
/// keeps it accurate.
#[derive(Clone, Copy, Debug)]
struct IntervalMass {
    tail: Tail,
    ln_tail_lo: f64,
    ln_tail_hi: f64,
    ln_mass: f64,
    relative_mass: f64,
}

fn interval_mass(alpha: f64, beta: f64, iv: &TruncInterval) -> IntervalMass {
    let x_lo = beta * iv.lo;
    let x_hi = beta * iv.hi;
    if x_lo >= alpha {
        let ln_tail_lo = ln_gamma_q(alpha, x_lo);
        let ln_tail_hi = ln_gamma_q(alpha, x_hi);
        let d = ln_tail_hi - ln_tail_lo;
        IntervalMass {
            tail: Tail::Upper,
            ln_tail_lo,
            ln_tail_hi,
            ln_mass: ln_tail_lo + crate::special::log1m_exp(d.min(0.0)),
            relative_mass: -d.exp_m1(),
        }
    } else {
        let ln_tail_lo = ln_gamma_p(alpha, x_lo);
        let ln_tail_hi = ln_gamma_p(alpha, x_hi);
        let d = ln_tail_lo - ln_tail_hi;
        IntervalMass {
            tail: Tail::Lower,
            ln_tail_lo,
            ln_tail_hi,
            ln_mass: ln_tail_hi + crate::special::log1m_exp(d.min(0.0)),
            relative_mass: -d.exp_m1(),
        }
    }
}

/// `log P(lo < Y < hi)` for `Y ~ Gamma(α, β)`.
pub fn trunc_gamma_log_mass(alpha: f64, beta: f64, iv: &TruncInterval) -> f64 {
    interval_mass(alpha, beta, iv).ln_mass
}

pub fn sample_truncated_gamma<R: Rng + ?Sized>(
    alpha: f64,
    beta: f64,
    iv: &TruncInterval,
    rng: &mut R,
) -> Result<f64> {
    sample_truncated_gamma_with(alpha, beta, iv, &TruncGammaOptions::default(), rng).map(|(y, _)| y)
}

/// Draws from Gamma(α, β) restricted to `iv`, reporting the method that
/// produced the draw.
pub fn sample_truncated_gamma_with<R: Rng + ?Sized>(
    alpha: f64,
    beta: f64,
    iv: &TruncInterval,
    opts: &TruncGammaOptions,
    rng: &mut R,
) -> Result<(f64, TruncGammaStrategy)> {
    check_shape_rate(alpha, beta)?;
    let degenerate = Error::DegenerateTruncation {
        lo: iv.lo,
        hi: iv.hi,
    };
    if iv.lo.next_up() >= iv.hi {
        return Err(degenerate);
    }
    let mass = interval_mass(alpha, beta, iv);
    if !(mass.ln_mass > f64::NEG_INFINITY) || mass.ln_mass.is_nan() {
        return Err(degenerate);
    }

    if mass.ln_mass.exp() >= opts.min_rejection_mass {
        let g = Gamma::new(alpha, 1.0 / beta).map_err(|e| invalid_param(e.to_string()))?;
        for _ in 0..opts.max_rejection_attempts {
            let y = g.sample(rng);
            if iv.contains(y) {
                return Ok((y, TruncGammaStrategy::Rejection));
            }
        }
    }

    if mass.relative_mass >= opts.min_inverse_relative_mass {
        for _ in 0..4 {
            if let Some(y) = inverse_transform(alpha, beta, iv, &mass, rng) {
                return Ok((y, TruncGammaStrategy::InverseCdf));
            }
        }
    }

    if iv.hi.is_infinite() {
        return Err(degenerate);
    }
    linear_rejection(alpha, beta, iv, rng).map(|y| (y, TruncGammaStrategy::Linear))
}

fn inverse_transform<R: Rng + ?Sized>(
    alpha: f64,
    beta: f64,
    iv: &TruncInterval,
    mass: &IntervalMass,
    rng: &mut R,
) -> Option<f64> {
    let u: f64 = rng.random();
    // Target tail value lies between the tail values at the two ends.
    let (near, far) = match mass.tail {
        Tail::Lower => (mass.ln_tail_hi, mass.ln_tail_lo),
        Tail::Upper => (mass.ln_tail_lo, mass.ln_tail_hi),
    };
    let w = (far - near).exp();
    let ln_target = near + (w + u * (1.0 - w)).ln();
    let x = inverse_regularized_gamma(alpha, ln_target, mass.tail, beta * iv.lo, beta * iv.hi)?;
    let y = x / beta;
    (y.is_finite() && iv.contains(y)).then_some(y)
}

fn linear_rejection<R: Rng + ?Sized>(alpha: f64, beta: f64, iv: &TruncInterval, rng: &mut R) -> Result<f64> {
    let degenerate = Error::DegenerateTruncation {
        lo: iv.lo,
        hi: iv.hi,
    };
    let (lo, hi) = (iv.lo, iv.hi);
    let width = hi - lo;
    let ln_kernel = |y: f64| (alpha - 1.0) * y.ln() - beta * y;
    let (k_lo, k_hi) = (ln_kernel(lo), ln_kernel(hi));
    if !(k_lo.is_finite() && k_hi.is_finite()) {
        return Err(degenerate);
    }
    let top = k_lo.max(k_hi);
    let f_lo = (k_lo - top).exp();
    let f_hi = (k_hi - top).exp();
    // Slope of the chord between the end-point densities, on [-1, 1].
    let c = (f_hi - f_lo) / (f_hi + f_lo);
    let mid = 0.5 * (f_lo + f_hi);
    let chord = |x: f64| mid * (1.0 + c * x);
    let to_y = |x: f64| lo + 0.5 * (x + 1.0) * width;

    // Envelope constant: the chord is scaled by the largest density/chord
    // ratio found on a fine grid (and at the mode, when inside).
    let mut scale: f64 = 1.0;
    const GRID: usize = 256;
    for s in 0..=GRID {
        let x = -1.0 + 2.0 * s as f64 / GRID as f64;
        scale = scale.max((ln_kernel(to_y(x)) - top).exp() / chord(x));
    }
    let mode = (alpha - 1.0) / beta;
    if iv.contains(mode) {
        let x = 2.0 * (mode - lo) / width - 1.0;
        scale = scale.max((ln_kernel(mode) - top).exp() / chord(x));
    }
    scale *= 1.001;
    if !scale.is_finite() {
        return Err(degenerate);
    }

    for _ in 0..100_000 {
        let x = linear_inverse_cdf(c, rng.random::<f64>());
        let y = to_y(x);
        if !iv.contains(y) {
            continue;
        }
        let accept = (ln_kernel(y) - top).exp() / (scale * chord(x));
        if rng.random::<f64>() < accept {
            return Ok(y);
        }
    }
    Err(degenerate)
}

/// Log density of Beta(a, b); `-∞` outside `(0, 1)`.
pub fn log_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Log density of Gamma(α, β) with rate β; `-∞` for `x <= 0`.
pub fn log_gamma_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if !(x > 0.0) || x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    alpha * beta.ln() - ln_gamma(alpha) + (alpha - 1.0) * x.ln() - beta * x
}

/// Log density of Gamma(α, β) truncated to `iv`; `-∞` outside the interval.
pub fn log_trunc_gamma_pdf(y: f64, alpha: f64, beta: f64, iv: &TruncInterval) -> f64 {
    if !iv.contains(y) {
        return f64::NEG_INFINITY;
    }
    log_gamma_pdf(y, alpha, beta) - trunc_gamma_log_mass(alpha, beta, iv)
}

pub fn sample_poisson<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<u64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid_param(format!("Poisson mean {mu} must be finite and >= 0")));
    }
    if mu == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mu).map_err(|e| invalid_param(e.to_string()))?;
    Ok(d.sample(rng) as u64)
}
