use serde::{Deserialize, Serialize};

use crate::distributions::TruncGammaOptions;
use crate::error::{invalid_param, Result};

/// Unit in which `window_w`, `iter_min` and `iter_max` are expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationUnit {
    /// Single structure-move proposals; converted to whole sweeps (rounding up).
    Proposal,
    /// Gibbs iterations (parameter resample plus one sweep of proposals).
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    pub eta: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub chi0: f64,
    pub chi1: f64,
    pub window_w: u64,
    pub tol_delta: f64,
    pub iter_min: u64,
    pub iter_max: u64,
    pub iteration_unit: IterationUnit,
    /// Structure proposals per Gibbs iteration; `None` means `C(n, 2)`.
    pub proposals_per_sweep: Option<usize>,
    pub n_chains: usize,
    /// Sweeps between retained samples after convergence.
    pub sample_stride: usize,
    pub n_samples: usize,
    pub master_seed: u64,
    pub trunc_gamma: TruncGammaOptions,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            eta: 0.5,
            nu2: 0.4999,
            nu3: 0.4999,
            chi0: 0.99,
            chi1: 0.01,
            window_w: 20_000,
            tol_delta: 0.02,
            iter_min: 200_000,
            iter_max: 1_000_000,
            iteration_unit: IterationUnit::Proposal,
            proposals_per_sweep: None,
            n_chains: 4,
            sample_stride: 100,
            n_samples: 100,
            master_seed: 0,
            trunc_gamma: TruncGammaOptions::default(),
        }
    }
}

/// Convergence bounds and sweep length resolved for a given system size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub proposals_per_sweep: usize,
    pub window: usize,
    pub min_sweeps: usize,
    pub max_sweeps: usize,
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        if !open01(self.eta) {
            return Err(invalid_param(format!("eta={} must lie in (0,1)", self.eta)));
        }
        if !(self.nu2 > 0.0 && self.nu3 > 0.0 && self.nu2 + self.nu3 < 1.0) {
            return Err(invalid_param(format!(
                "nu2={}, nu3={} must be positive with nu2 + nu3 < 1",
                self.nu2, self.nu3
            )));
        }
        if !(open01(self.chi0) && open01(self.chi1)) {
            return Err(invalid_param(format!(
                "chi0={}, chi1={} must lie in (0,1)",
                self.chi0, self.chi1
            )));
        }
        if !(self.tol_delta > 0.0) {
            return Err(invalid_param("tol_delta must be positive"));
        }
        if self.window_w == 0 || self.iter_min == 0 || self.iter_max == 0 || self.iter_min > self.iter_max {
            return Err(invalid_param(format!(
                "need positive window/iteration bounds with iter_min <= iter_max, got W={}, I_min={}, I_max={}",
                self.window_w, self.iter_min, self.iter_max
            )));
        }
        if self.n_chains == 0 || self.sample_stride == 0 || self.n_samples == 0 {
            return Err(invalid_param("n_chains, sample_stride and n_samples must be positive"));
        }
        let t = &self.trunc_gamma;
        if !(t.min_rejection_mass >= 0.0 && t.min_inverse_relative_mass >= 0.0) {
            return Err(invalid_param("truncated-gamma thresholds must be non-negative"));
        }
        Ok(())
    }

    /// Resolves the sweep length and the convergence bounds, in sweeps, for a
    /// system with `n_pairs` vertex pairs.
    pub fn schedule(&self, n_pairs: usize) -> Schedule {
        let proposals = self.proposals_per_sweep.unwrap_or(n_pairs);
        let per_sweep = if proposals == 0 { n_pairs.max(1) } else { proposals } as u64;
        let to_sweeps = |v: u64| -> usize {
            match self.iteration_unit {
                IterationUnit::Sweep => v as usize,
                IterationUnit::Proposal => v.div_ceil(per_sweep).max(1) as usize,
            }
        };
        Schedule {
            proposals_per_sweep: proposals,
            window: to_sweeps(self.window_w),
            min_sweeps: to_sweeps(self.iter_min),
            max_sweeps: to_sweeps(self.iter_max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        McmcConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = McmcConfig {
            nu2: 0.6,
            nu3: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = McmcConfig {
            iter_min: 10,
            iter_max: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn proposal_units_convert_to_sweeps() {
        let s = McmcConfig::default().schedule(561);
        assert_eq!(s.proposals_per_sweep, 561);
        assert_eq!(s.window, 36);
        assert_eq!(s.min_sweeps, 357);
        assert_eq!(s.max_sweeps, 1783);
        let cfg = McmcConfig {
            iteration_unit: IterationUnit::Sweep,
            window_w: 5,
            iter_min: 10,
            iter_max: 20,
            ..Default::default()
        };
        let s = cfg.schedule(561);
        assert_eq!((s.window, s.min_sweeps, s.max_sweeps), (5, 10, 20));
    }

    #[test]
    fn json_defaults_fill_missing_fields() {
        let c: McmcConfig = serde_json::from_str(r#"{"n_chains": 2}"#).unwrap();
        assert_eq!(c.n_chains, 2);
        assert_eq!(c.eta, 0.5);
    }
}
