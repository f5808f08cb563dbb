//! Property checks shared by the standalone property suite and the
//! acceptance harness. Each check returns a description of the first
//! violation it finds.

use rand::Rng;

use hyperrecon::distributions::{sample_beta, sample_gamma, sample_poisson, sample_truncated_gamma};
use hyperrecon::estimators::{
    edge_triangle_fraction, evaluate_trace, marginal_label_estimate, posterior_predictive_residuals,
};
use hyperrecon::generators::{best_case_hypergraph, worst_case_hypergraph, GeneratorSpec, SbmParams};
use hyperrecon::inference::{mixture_init, poisson_mixture_em, run_chain, DataContext, Sampler};
use hyperrecon::io::{parse_hypergraph, parse_observations, write_hypergraph_string, write_observations_string};
use hyperrecon::model::{generate_observations, log_likelihood, project_labels, Hypergraph, ModelKind};
use hyperrecon::pipeline::{ground_truth_init, run_experiment};
use hyperrecon::rng::rng_from_seed;
use hyperrecon::{
    BetaModelParams, EvalOptions, ExperimentSpec, Hyperparams, InitMode, McmcConfig, ObservationMatrix, RateParams,
    RunConfig, TruncInterval,
};

pub type Check = Result<(), String>;

/// Brute-force E_Δ: share of 2-edges whose pair has a common projected
/// neighbour.
pub fn triangle_fraction_oracle(h: &Hypergraph) -> f64 {
    let labels = super::projection(h);
    let n = h.n();
    let linked = |a: usize, b: usize| a != b && labels.get(a, b) > 0;
    let inside = h
        .two_edges()
        .iter()
        .filter(|&&(i, j)| (0..n).any(|k| linked(i, k) && linked(j, k)))
        .count();
    inside as f64 / h.h1() as f64
}

pub fn best_case_scan(n: usize, p: f64, q: f64, seed: u64) -> Check {
    let h = best_case_hypergraph(n, p, q, &mut rng_from_seed(seed)).map_err(|e| e.to_string())?;
    if h.h1() == 0 {
        return Ok(());
    }
    let oracle = triangle_fraction_oracle(&h);
    let implemented = edge_triangle_fraction(&h).map_err(|e| e.to_string())?;
    if oracle != 0.0 || implemented != 0.0 {
        return Err(format!("best case (n={n}, p={p}, q={q}, seed={seed}): E_delta {implemented} / oracle {oracle}"));
    }
    Ok(())
}

pub fn worst_case_scan(n_cliques: usize, size: usize, promote: f64, seed: u64) -> Check {
    let h = worst_case_hypergraph(n_cliques, size, promote, &mut rng_from_seed(seed)).map_err(|e| e.to_string())?;
    let oracle = triangle_fraction_oracle(&h);
    let implemented = edge_triangle_fraction(&h).map_err(|e| e.to_string())?;
    if oracle != 1.0 || implemented != 1.0 {
        return Err(format!(
            "worst case ({n_cliques}x{size}, promote={promote}, seed={seed}): E_delta {implemented} / oracle {oracle}"
        ));
    }
    Ok(())
}

/// Adds every hidden 2-edge and 3-edge of a random hypergraph and checks
/// that the labels and the likelihood do not move.
pub fn hidden_edge_invariance(n: usize, seed: u64) -> Check {
    let rng = &mut rng_from_seed(seed);
    let h = hyperrecon::generators::random_hypergraph(n, 0.01, 0.1, rng).map_err(|e| e.to_string())?;
    let labels = project_labels(&h);
    let mu = RateParams::new(0.05, 4.0, 9.0);
    let x = generate_observations(&labels, &mu, rng).map_err(|e| e.to_string())?;
    let base = log_likelihood(&x, &labels, &mu).map_err(|e| e.to_string())?;
    let covered = h.covered_pairs();
    let mut padded = h.clone();
    for &(i, j) in &covered {
        padded.add_two_edge(i, j).map_err(|e| e.to_string())?;
    }
    for (i, j, k) in super::all_triplets(n) {
        let all_covered = [(i, j), (i, k), (j, k)].iter().all(|p| covered.contains(p));
        if all_covered {
            padded.add_three_edge(i, j, k).map_err(|e| e.to_string())?;
        }
    }
    let padded_labels = project_labels(&padded);
    if padded_labels != labels {
        return Err(format!("hidden edges changed the labels (n={n}, seed={seed})"));
    }
    let after = log_likelihood(&x, &padded_labels, &mu).map_err(|e| e.to_string())?;
    if after != base {
        return Err(format!("hidden edges changed the likelihood: {base} -> {after}"));
    }
    Ok(())
}

pub fn hypergraph_round_trip(h: &Hypergraph) -> Check {
    let text = write_hypergraph_string(h);
    let back = parse_hypergraph(&text).map_err(|e| e.to_string())?;
    if &back != h {
        return Err(format!("hypergraph round trip changed {h:?} into {back:?}"));
    }
    if write_hypergraph_string(&back) != text {
        return Err("hypergraph text is not stable under a second round trip".into());
    }
    Ok(())
}

pub fn observations_round_trip(x: &ObservationMatrix) -> Check {
    let text = write_observations_string(x);
    let back = parse_observations(&text).map_err(|e| e.to_string())?;
    if &back != x {
        return Err(format!("observation round trip changed {x:?} into {back:?}"));
    }
    Ok(())
}

pub fn json_round_trip(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut run = RunConfig::default();
    run.mcmc.eta = rng.random_range(0.05..0.95);
    run.mcmc.n_chains = rng.random_range(1..8);
    run.hyperparams.alpha[1] = rng.random_range(0.5..3.0);
    let spec = ExperimentSpec {
        mu_grid: vec![RateParams::new(rng.random(), 10.0 + rng.random::<f64>(), 30.0)],
        master_seed: rng.random(),
        run,
        ..ExperimentSpec::default()
    };
    let text = serde_json::to_string(&spec).map_err(|e| e.to_string())?;
    let back: ExperimentSpec = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if back != spec {
        return Err(format!("experiment spec JSON round trip changed {spec:?}"));
    }
    Ok(())
}

fn same<T: PartialEq + std::fmt::Debug>(what: &str, run: impl Fn() -> T) -> Check {
    let (a, b) = (run(), run());
    if a != b {
        return Err(format!("{what} is not reproducible from its seed"));
    }
    Ok(())
}

fn tiny_mcmc(seed: u64) -> McmcConfig {
    McmcConfig {
        window_w: 5,
        iter_min: 10,
        iter_max: 40,
        iteration_unit: hyperrecon::inference::IterationUnit::Sweep,
        n_chains: 2,
        sample_stride: 2,
        n_samples: 10,
        master_seed: seed,
        ..McmcConfig::default()
    }
}

/// Runs every stochastic operation twice from the same seed.
pub fn seed_determinism(seed: u64) -> Check {
    let specs = [
        GeneratorSpec::Prior { n: 15, p: 0.02, q: 0.1 },
        GeneratorSpec::Sbm(SbmParams::default()),
        GeneratorSpec::Cm { n: 40, mean2: 2.0, mean3: 1.0 },
        GeneratorSpec::Beta {
            n: 40,
            params: BetaModelParams::default(),
        },
        GeneratorSpec::Best { n: 30, p: 0.01, q: 0.05 },
        GeneratorSpec::Worst {
            n_cliques: 5,
            clique_size: 4,
            promote_prob: 0.3,
        },
    ];
    for spec in &specs {
        same(&format!("generator {spec:?}"), || spec.generate(&mut rng_from_seed(seed)).ok())?;
    }
    let truth = hyperrecon::generators::random_hypergraph(12, 0.03, 0.15, &mut rng_from_seed(seed)).unwrap();
    let mu = RateParams::new(0.05, 5.0, 12.0);
    let labels = project_labels(&truth);
    let x = generate_observations(&labels, &mu, &mut rng_from_seed(seed)).unwrap();
    same("observation generation", || {
        generate_observations(&labels, &mu, &mut rng_from_seed(seed)).unwrap()
    })?;
    same("variates", || {
        let rng = &mut rng_from_seed(seed);
        let iv = TruncInterval::new(1.0, 1.01).unwrap();
        (
            sample_gamma(2.0, 1.0, rng).unwrap(),
            sample_beta(2.0, 3.0, rng).unwrap(),
            sample_poisson(7.0, rng).unwrap(),
            sample_truncated_gamma(3.0, 1.0, &iv, rng).unwrap(),
        )
    })?;
    same("mixture EM", || poisson_mixture_em(&x, 3, &mut rng_from_seed(seed)).unwrap())?;
    for model in [ModelKind::Hypergraph, ModelKind::Categorical] {
        same("mixture initialization", || mixture_init(model, &x, &mut rng_from_seed(seed)).unwrap())?;
        let ctx = DataContext::new(&x).unwrap();
        let init = ground_truth_init(model, &truth, &mu).unwrap();
        let cfg = tiny_mcmc(seed);
        let hp = Hyperparams::default();
        let trace = run_chain(&ctx, &init, &cfg, &hp, seed).unwrap();
        same("chain", || run_chain(&ctx, &init, &cfg, &hp, seed).unwrap())?;
        same("maximum-marginal estimate", || {
            marginal_label_estimate(&trace, &mut rng_from_seed(seed)).unwrap()
        })?;
        same("posterior-predictive residuals", || {
            posterior_predictive_residuals(&x, &trace, 20, &mut rng_from_seed(seed)).unwrap()
        })?;
        same("evaluation", || {
            let opts = EvalOptions { n_pred: 20 };
            evaluate_trace(&trace, &labels, &x, &opts, &mut rng_from_seed(seed)).unwrap()
        })?;
    }
    let run = RunConfig {
        mcmc: tiny_mcmc(0),
        eval: EvalOptions { n_pred: 10 },
        ..RunConfig::default()
    };
    let spec = ExperimentSpec {
        mu_grid: vec![mu, RateParams::new(0.05, 8.0, 12.0)],
        replicates: 2,
        init: InitMode::Mixture,
        master_seed: seed,
        run,
        ..ExperimentSpec::default()
    };
    same("experiment", || run_experiment(&spec, &truth).unwrap())
}

/// Tracks the incremental log joint through `sweeps` Gibbs iterations and
/// compares it with a full recomputation after every structure sweep and
/// every parameter update.
pub fn incremental_log_joint(model: ModelKind, n: usize, sweeps: usize, seed: u64) -> Result<f64, String> {
    let rng = &mut rng_from_seed(seed);
    let truth = hyperrecon::generators::random_hypergraph(n, 0.02, 0.1, rng).map_err(|e| e.to_string())?;
    let mu = RateParams::new(0.1, 6.0, 12.0);
    let x = generate_observations(&project_labels(&truth), &mu, rng).map_err(|e| e.to_string())?;
    let ctx = DataContext::new(&x).map_err(|e| e.to_string())?;
    let cfg = McmcConfig::default();
    let hp = Hyperparams::default();
    let init = mixture_init(model, &x, rng).map_err(|e| e.to_string())?;
    let mut sampler = Sampler::new(&ctx, &cfg, &hp, &init).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut compare = |s: &Sampler, stage: &str, it: usize| -> Check {
        let full = s.recompute_log_joint(&x).map_err(|e| e.to_string())?;
        let err = (s.log_joint() - full).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            return Err(format!("{model} {stage} {it}: tracked {} vs recomputed {full}", s.log_joint()));
        }
        Ok(())
    };
    for it in 0..sweeps {
        sampler.sweep(rng);
        compare(&sampler, "sweep", it)?;
        sampler.resample_parameters(rng).map_err(|e| e.to_string())?;
        compare(&sampler, "parameters", it)?;
    }
    Ok(worst)
}
