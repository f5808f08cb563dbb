//! End-to-end runs: inference with a result bundle, and experiment grids
//! that regenerate observations per replicate, fit both models and
//! aggregate the diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Hyperparams;
use crate::error::{invalid_param, Error, Result};
use crate::estimators::{
    edge_triangle_fraction, edgewise_estimate, evaluate_trace, label_marginals, map_estimate, EvalOptions,
    MetricsReport, Percentiles,
};
use crate::inference::{empirical_probs, run_inference, ChainTrace, Init, InitState, McmcConfig, PosteriorSample};
use crate::io::{Provenance, FORMAT_VERSION};
use crate::model::{
    generate_observations, project_labels, CategoricalGraph, Hypergraph, LabelMatrix, ModelKind, ObservationMatrix,
    RateParams, Structure,
};
use crate::rng::{derive_seed, rng_from_seed};

/// Settings shared by `infer`, `evaluate` and experiment runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub mcmc: McmcConfig,
    pub hyperparams: Hyperparams,
    pub eval: EvalOptions,
    /// Maximum number of log-likelihood points kept in result bundles.
    pub max_trace_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: FORMAT_VERSION,
            mcmc: McmcConfig::default(),
            hyperparams: Hyperparams::default(),
            eval: EvalOptions::default(),
            max_trace_points: 2000,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(invalid_param(format!("unsupported format_version {}", self.format_version)));
        }
        self.mcmc.validate()?;
        self.hyperparams.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Poisson-mixture initialization from the data alone.
    Mixture,
    /// Start at the true structure and rates.
    GroundTruth,
}

/// Whether the categorical model sees the true weak and strong labels
/// exchanged: its rates must satisfy `μ1 < μ2`, so data with `μ1 > μ2` is
/// described with type 1 and type 2 swapped.
pub fn categorical_swaps_types(mu: &RateParams) -> bool {
    mu.mu[1] > mu.mu[2]
}

/// Exchanges labels 1 and 2.
pub fn swap_weak_strong(labels: &LabelMatrix) -> LabelMatrix {
    let swapped = labels.as_slice().iter().map(|&l| [0, 2, 1][l as usize]).collect();
    LabelMatrix::from_vec(labels.n(), swapped).expect("same size")
}

/// True labels of `truth` in the label convention of `model` under rates `mu`.
pub fn truth_labels(model: ModelKind, truth: &Hypergraph, mu: &RateParams) -> LabelMatrix {
    let labels = project_labels(truth);
    if model == ModelKind::Categorical && categorical_swaps_types(mu) {
        swap_weak_strong(&labels)
    } else {
        labels
    }
}

/// Initial state at the true structure and rates, expressed for `model`.
pub fn ground_truth_init(model: ModelKind, truth: &Hypergraph, mu: &RateParams) -> Result<InitState> {
    let (structure, mu) = match model {
        ModelKind::Hypergraph => (Structure::Hypergraph(truth.clone()), *mu),
        ModelKind::Categorical => {
            let labels = truth_labels(model, truth, mu);
            let mut m = mu.mu;
            if categorical_swaps_types(mu) {
                m.swap(1, 2);
            }
            (
                Structure::Categorical(CategoricalGraph::from_labels(&labels)),
                RateParams { mu: m },
            )
        }
    };
    mu.validate(model)?;
    Ok(InitState {
        probs: empirical_probs(&structure),
        structure,
        mu,
    })
}

fn downsample(history: &[f64], max_points: usize) -> (Vec<f64>, usize) {
    if max_points == 0 || history.len() <= max_points {
        return (history.to_vec(), 1);
    }
    let stride = history.len().div_ceil(max_points);
    (history.iter().step_by(stride).copied().collect(), stride)
}

/// Output of `infer`: the retained samples of the selected chain with the
/// estimators, chain diagnostics and the exact configuration used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub format_version: u32,
    pub provenance: Provenance,
    pub model: ModelKind,
    pub init_mode: InitMode,
    pub config: RunConfig,
    pub best_chain: usize,
    pub chain_mean_log_likelihood: Vec<Option<f64>>,
    pub chain_converged: Vec<bool>,
    pub chain_errors: Vec<Option<String>>,
    pub init: InitState,
    pub map: PosteriorSample,
    pub edgewise: Structure,
    /// Per-pair label frequencies `[P(0), P(1), P(2)]` in pair-index order.
    pub label_marginals: Vec<[f64; 3]>,
    /// Every `loglik_stride`-th entry of the selected chain's history; the
    /// trace's own history is emptied to keep the bundle small.
    pub loglik_history: Vec<f64>,
    pub loglik_stride: usize,
    pub trace: ChainTrace,
}

/// Runs inference on `x` and packages the result.
pub fn infer_bundle(
    model: ModelKind,
    x: &ObservationMatrix,
    cfg: &RunConfig,
    init_mode: InitMode,
    init: &Init,
) -> Result<ResultBundle> {
    cfg.validate()?;
    let result = run_inference(model, x, &cfg.mcmc, &cfg.hyperparams, init)?;
    let mut trace = result.best;
    let (loglik_history, loglik_stride) = downsample(&trace.loglik_history, cfg.max_trace_points);
    trace.loglik_history.clear();
    Ok(ResultBundle {
        format_version: FORMAT_VERSION,
        provenance: Provenance::new(cfg, Some(x), cfg.mcmc.master_seed)?,
        model,
        init_mode,
        config: cfg.clone(),
        best_chain: result.best_chain,
        chain_mean_log_likelihood: result.chain_mean_log_likelihood,
        chain_converged: result.chain_converged,
        chain_errors: result.chain_errors,
        init: result.init,
        map: map_estimate(&trace)?,
        edgewise: edgewise_estimate(&trace)?,
        label_marginals: label_marginals(&trace)?,
        loglik_history,
        loglik_stride,
        trace,
    })
}

/// One fitted model on one replicate of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub model: ModelKind,
    pub mu: RateParams,
    pub grid_index: usize,
    pub replicate: usize,
    pub seed: u64,
    pub converged: bool,
    /// Metrics in the model's label convention; residual draws are dropped
    /// and only their bands kept.
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

/// Draws one observation matrix from `truth` and fits every model to it.
#[allow(clippy::too_many_arguments)]
pub fn run_replicate(
    truth: &Hypergraph,
    mu: &RateParams,
    models: &[ModelKind],
    init_mode: InitMode,
    cfg: &RunConfig,
    seed: u64,
    grid_index: usize,
    replicate: usize,
) -> Vec<CellOutcome> {
    let mut rng = rng_from_seed(seed);
    let x = generate_observations(&project_labels(truth), mu, &mut rng);
    models
        .iter()
        .enumerate()
        .map(|(m, &model)| {
            let model_seed = derive_seed(seed, m as u64 + 1);
            let outcome = x
                .as_ref()
                .map_err(|e| Error::InvalidParameter(e.to_string()))
                .and_then(|x| fit_and_score(truth, mu, model, x, init_mode, cfg, model_seed));
            let (converged, metrics, error) = match outcome {
                Ok((c, m)) => (c, Some(m), None),
                Err(e) => (false, None, Some(e.to_string())),
            };
            CellOutcome {
                model,
                mu: *mu,
                grid_index,
                replicate,
                seed,
                converged,
                metrics,
                error,
            }
        })
        .collect()
}

/// Fits `model` to `x` and scores it against `truth`.
pub fn fit_and_score(
    truth: &Hypergraph,
    mu: &RateParams,
    model: ModelKind,
    x: &ObservationMatrix,
    init_mode: InitMode,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(bool, MetricsReport)> {
    let mut mcmc = cfg.mcmc.clone();
    mcmc.master_seed = seed;
    let init = match init_mode {
        InitMode::Mixture => Init::Mixture,
        InitMode::GroundTruth => Init::Given(ground_truth_init(model, truth, mu)?),
    };
    let result = run_inference(model, x, &mcmc, &cfg.hyperparams, &init)?;
    let mut rng = rng_from_seed(derive_seed(seed, 0xE7A1));
    let (_, mut report) = evaluate_trace(&result.best, &truth_labels(model, truth, mu), x, &cfg.eval, &mut rng)?;
    report.e_delta = edge_triangle_fraction(truth).ok();
    if let Some(r) = report.residuals.as_mut() {
        r.draws.clear();
    }
    Ok((result.all_converged(), report))
}

/// Grid of rates with replicated observations on a fixed structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mu_grid: Vec<RateParams>,
    pub replicates: usize,
    pub models: Vec<ModelKind>,
    pub init: InitMode,
    pub master_seed: u64,
    /// Worker threads across cells; 0 uses the global pool.
    pub workers: usize,
    pub run: RunConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            mu_grid: Vec::new(),
            replicates: 10,
            models: vec![ModelKind::Hypergraph, ModelKind::Categorical],
            init: InitMode::GroundTruth,
            master_seed: 0,
            workers: 0,
            run: RunConfig::default(),
        }
    }
}

/// Rates `(μ0, μ1, μ2)` with one component swept over `values`.
pub fn sweep_grid(base: RateParams, component: usize, values: &[f64]) -> Vec<RateParams> {
    values
        .iter()
        .map(|&v| {
            let mut mu = base;
            mu.mu[component] = v;
            mu
        })
        .collect()
}

/// Percentile summary of one metric over the replicates of a grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub grid_index: usize,
    pub mu: RateParams,
    pub metric: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub bands: Option<Percentiles>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub format_version: u32,
    pub spec: ExperimentSpec,
    pub structure_summary: StructureSummary,
    pub cells: Vec<CellOutcome>,
    pub summary: Vec<SummaryRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub n: usize,
    pub h1: usize,
    pub h2: usize,
    pub label_counts: [usize; 3],
    pub e_delta: Option<f64>,
}

impl StructureSummary {
    pub fn of(h: &Hypergraph) -> Self {
        StructureSummary {
            n: h.n(),
            h1: h.h1(),
            h2: h.h2(),
            label_counts: project_labels(h).counts(),
            e_delta: edge_triangle_fraction(h).ok(),
        }
    }
}

pub const SUMMARY_METRICS: [&str; 5] = ["epsilon", "entropy", "residual_0", "residual_1", "residual_2"];

fn metric_value(m: &MetricsReport, name: &str) -> Option<f64> {
    match name {
        "epsilon" => m.epsilon,
        "entropy" => Some(m.entropy),
        "residual_0" => m.residuals.as_ref().map(|r| r.bands[0].p50),
        "residual_1" => m.residuals.as_ref().map(|r| r.bands[1].p50),
        "residual_2" => m.residuals.as_ref().map(|r| r.bands[2].p50),
        _ => None,
    }
}

/// Medians and percentile bands per model, grid point and metric.
pub fn summarize(spec: &ExperimentSpec, cells: &[CellOutcome]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &model in &spec.models {
        for (g, mu) in spec.mu_grid.iter().enumerate() {
            let here: Vec<&CellOutcome> = cells
                .iter()
                .filter(|c| c.model == model && c.grid_index == g)
                .collect();
            for metric in SUMMARY_METRICS {
                let values: Vec<f64> = here
                    .iter()
                    .filter_map(|c| c.metrics.as_ref().and_then(|m| metric_value(m, metric)))
                    .collect();
                rows.push(SummaryRow {
                    model,
                    grid_index: g,
                    mu: *mu,
                    metric: metric.to_string(),
                    n_ok: values.len(),
                    n_failed: here.len() - values.len(),
                    bands: Percentiles::from_values(&values),
                });
            }
        }
    }
    rows
}

/// Runs every (grid point, replicate) cell in parallel on `truth`. Cell
/// seeds derive from the master seed and the cell index; failures are
/// recorded per cell.
pub fn run_experiment(spec: &ExperimentSpec, truth: &Hypergraph) -> Result<ExperimentResult> {
    spec.run.validate()?;
    if spec.mu_grid.is_empty() || spec.replicates == 0 || spec.models.is_empty() {
        return Err(invalid_param("experiment needs rates, replicates and models"));
    }
    let jobs: Vec<(usize, usize)> = (0..spec.mu_grid.len())
        .flat_map(|g| (0..spec.replicates).map(move |r| (g, r)))
        .collect();
    let run_all = || -> Vec<CellOutcome> {
        jobs.par_iter()
            .enumerate()
            .flat_map_iter(|(idx, &(g, r))| {
                let seed = derive_seed(spec.master_seed, idx as u64);
                run_replicate(truth, &spec.mu_grid[g], &spec.models, spec.init, &spec.run, seed, g, r)
            })
            .collect()
    };
    let cells = if spec.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| invalid_param(e.to_string()))?
            .install(run_all)
    } else {
        run_all()
    };
    Ok(ExperimentResult {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
        structure_summary: StructureSummary::of(truth),
        summary: summarize(spec, &cells),
        cells,
    })
}

/// Tab-separated summary with columns `model grid mu0 mu1 mu2 metric n_ok
/// n_failed p2_5 p25 p50 p75 p97_5`; empty cells print as `nan`.
pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("model\tgrid\tmu0\tmu1\tmu2\tmetric\tn_ok\tn_failed\tp2_5\tp25\tp50\tp75\tp97_5\n");
    for r in rows {
        let b = r.bands.map_or([f64::NAN; 5], |b| [b.p2_5, b.p25, b.p50, b.p75, b.p97_5]);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.model, r.grid_index, r.mu.mu[0], r.mu.mu[1], r.mu.mu[2], r.metric, r.n_ok, r.n_failed, b[0], b[1], b[2],
            b[3], b[4]
        ));
    }
    out
}

/// Tab-separated metrics of a single evaluation with columns `key value`:
/// scalar metrics, `rho_k`, `confusion_rs`, `normalized_rs` and the residual
/// bands `residual_k_pXX`.
pub fn metrics_tsv(m: &MetricsReport) -> String {
    let mut out = String::from("key\tvalue\n");
    let mut put = |k: String, v: f64| out.push_str(&format!("{k}\t{v}\n"));
    put("epsilon".into(), m.epsilon.unwrap_or(f64::NAN));
    put("entropy".into(), m.entropy);
    put("e_delta".into(), m.e_delta.unwrap_or(f64::NAN));
    put("relabeled_strong".into(), m.relabeled_strong as u8 as f64);
    for k in 0..3 {
        put(format!("rho_{k}"), m.rho[k]);
    }
    for r in 0..3 {
        for s in 0..3 {
            put(format!("confusion_{r}{s}"), m.confusion.c[r][s] as f64);
        }
    }
    for r in 0..3 {
        for s in 0..3 {
            put(format!("normalized_{r}{s}"), m.normalized_confusion.rows[r][s]);
        }
    }
    if let Some(res) = &m.residuals {
        for k in 0..3 {
            let b = res.bands[k];
            for (name, v) in [("p2_5", b.p2_5), ("p25", b.p25), ("p50", b.p50), ("p75", b.p75), ("p97_5", b.p97_5)] {
                put(format!("residual_{k}_{name}"), v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_truth_swaps_when_weak_rate_is_larger() {
        let h = Hypergraph::from_edges(5, [(0, 1), (3, 4)], [(1, 2, 3)]).unwrap();
        let mu = RateParams::new(0.05, 50.0, 20.0);
        let init = ground_truth_init(ModelKind::Categorical, &h, &mu).unwrap();
        assert_eq!(init.mu.mu, [0.05, 20.0, 50.0]);
        let Structure::Categorical(g) = &init.structure else { panic!() };
        assert_eq!(g.m2(), 2);
        assert_eq!(g.m1(), 3);
        let hyper = ground_truth_init(ModelKind::Hypergraph, &h, &mu).unwrap();
        assert_eq!(hyper.mu, mu);
        let plain = ground_truth_init(ModelKind::Categorical, &h, &RateParams::new(0.05, 20.0, 50.0)).unwrap();
        assert_eq!(plain.structure.labels(), project_labels(&h));
    }

    #[test]
    fn downsampling_keeps_first_point() {
        let h: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(downsample(&h, 3), (vec![0.0, 4.0, 8.0], 4));
        assert_eq!(downsample(&h, 20).1, 1);
    }

    #[test]
    fn sweep_grid_varies_one_component() {
        let g = sweep_grid(RateParams::new(0.01, 0.0, 50.0), 1, &[10.0, 20.0]);
        assert_eq!(g[1].mu, [0.01, 20.0, 50.0]);
    }
}
