//! Command-line driver: generate latent structures, synthesize observations,
//! run inference, evaluate results and run experiment grids.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hyperrecon::estimators::{edge_triangle_fraction, evaluate_trace};
use hyperrecon::generators::{bipartite_to_hypergraph, GeneratorSpec, DEFAULT_MAX_GROUP_SIZE};
use hyperrecon::inference::Init;
use hyperrecon::io::{
    read_bipartite, read_hypergraph, read_json, read_observations, sha256_hex, to_json_string,
    write_hypergraph_string, write_observations_string, Provenance, FORMAT_VERSION,
};
use hyperrecon::model::{generate_observations, project_labels, Hypergraph, ModelKind};
use hyperrecon::pipeline::{
    ground_truth_init, infer_bundle, metrics_tsv, run_experiment, summary_tsv, sweep_grid, truth_labels,
};
use hyperrecon::rng::{derive_seed, rng_from_seed};
use hyperrecon::{
    BetaModelParams, ExperimentSpec, InitMode, LabelMatrix, ObservationMatrix, RateParams, ResultBundle, RunConfig,
    SbmParams,
};

#[derive(Parser)]
#[command(name = "hyperrecon", version, about = "Bayesian hypergraph reconstruction from noisy pairwise counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a latent hypergraph and write it in the hypergraph text format.
    Generate(GenerateArgs),
    /// Draw a Poisson observation matrix from a hypergraph.
    Observe(ObserveArgs),
    /// Sample the posterior of one model and write a result bundle.
    Infer(InferArgs),
    /// Score a result bundle against the ground-truth hypergraph.
    Evaluate(EvaluateArgs),
    /// Fit both models over a grid of rates with replicated observations.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Hypergraph,
    Categorical,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Hypergraph => ModelKind::Hypergraph,
            ModelArg::Categorical => ModelKind::Categorical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Mixture,
    GroundTruth,
}

impl From<InitArg> for InitMode {
    fn from(m: InitArg) -> Self {
        match m {
            InitArg::Mixture => InitMode::Mixture,
            InitArg::GroundTruth => InitMode::GroundTruth,
        }
    }
}

#[derive(Args)]
struct OutputFile {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    kind: GeneratorArg,
}

#[derive(Subcommand)]
enum GeneratorArg {
    /// Independent 2-edges with probability q and 3-edges with probability p.
    Prior {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        output: OutputFile,
    },
    /// Superimposed stochastic block model.
    Sbm {
        /// JSON file with `sizes`, `q`, `p_within` and `p_out`; the
        /// two-community defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        output: OutputFile,
    },
    /// Triangle-edge configuration model with geometric degrees.
    Cm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mean2: f64,
        #[arg(long)]
        mean3: f64,
        #[command(flatten)]
        output: OutputFile,
    },
    /// β-model with normal vertex propensities.
    Beta {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = BetaModelParams::default().mean2, allow_hyphen_values = true)]
        mean2: f64,
        #[arg(long, default_value_t = BetaModelParams::default().sd2)]
        sd2: f64,
        #[arg(long, default_value_t = BetaModelParams::default().mean3, allow_hyphen_values = true)]
        mean3: f64,
        #[arg(long, default_value_t = BetaModelParams::default().sd3)]
        sd3: f64,
        #[command(flatten)]
        output: OutputFile,
    },
    /// Prior hypergraph with every 2-edge inside a projected triangle removed.
    Best {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        output: OutputFile,
    },
    /// Disjoint cliques of 2-edges with triangles promoted to 3-edges.
    Worst {
        #[arg(long, default_value_t = 20)]
        cliques: usize,
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, default_value_t = 0.19)]
        promote: f64,
        #[command(flatten)]
        output: OutputFile,
    },
    /// Hypergraph from an `entity,group` membership CSV.
    Bipartite {
        #[arg(long)]
        input: PathBuf,
        /// Groups larger than this are dropped.
        #[arg(long, default_value_t = DEFAULT_MAX_GROUP_SIZE)]
        max_group: usize,
        /// Writes the entity name of every vertex, one per line.
        #[arg(long)]
        names: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ObserveArgs {
    /// Hypergraph file.
    #[arg(long)]
    structure: PathBuf,
    /// Rates μ0 μ1 μ2.
    #[arg(long, num_args = 3, value_names = ["MU0", "MU1", "MU2"], required = true)]
    mu: Vec<f64>,
    /// Model whose rate ordering the rates must satisfy.
    #[arg(long, value_enum, default_value = "hypergraph")]
    model: ModelArg,
    #[command(flatten)]
    output: OutputFile,
}

#[derive(Args)]
struct InferArgs {
    /// Observation CSV.
    #[arg(long)]
    observations: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Run configuration JSON; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth hypergraph for ground-truth initialization; requires --mu.
    #[arg(long, requires = "mu")]
    truth: Option<PathBuf>,
    /// True rates μ0 μ1 μ2 used with --truth.
    #[arg(long, num_args = 3, value_names = ["MU0", "MU1", "MU2"], requires = "truth")]
    mu: Option<Vec<f64>>,
    #[command(flatten)]
    overrides: McmcOverrides,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct McmcOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Gibbs iterations between retained samples.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    iter_min: Option<u64>,
    #[arg(long)]
    iter_max: Option<u64>,
}

impl McmcOverrides {
    fn apply(&self, cfg: &mut RunConfig) {
        let m = &mut cfg.mcmc;
        if let Some(v) = self.seed {
            m.master_seed = v;
        }
        if let Some(v) = self.chains {
            m.n_chains = v;
        }
        if let Some(v) = self.samples {
            m.n_samples = v;
        }
        if let Some(v) = self.stride {
            m.sample_stride = v;
        }
        if let Some(v) = self.iter_min {
            m.iter_min = v;
        }
        if let Some(v) = self.iter_max {
            m.iter_max = v;
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Result bundle, or the run directory holding `bundle.json`.
    #[arg(long)]
    bundle: PathBuf,
    /// Ground-truth hypergraph.
    #[arg(long)]
    truth: PathBuf,
    /// Observation CSV the bundle was fitted to.
    #[arg(long)]
    observations: PathBuf,
    /// True rates μ0 μ1 μ2; with μ1 > μ2 the categorical truth is scored in
    /// swapped labels.
    #[arg(long, num_args = 3, value_names = ["MU0", "MU1", "MU2"])]
    mu: Option<Vec<f64>>,
    /// Posterior-predictive draws.
    #[arg(long)]
    n_pred: Option<usize>,
    /// Seed for tie-breaks and predictive draws; derived from the bundle's
    /// seed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment specification JSON; defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Hypergraph file to use as the ground truth.
    #[arg(long, conflicts_with = "generator", required_unless_present = "generator")]
    structure: Option<PathBuf>,
    /// Generator specification JSON, e.g. `{"kind": "worst", "n_cliques": 20, ...}`.
    #[arg(long)]
    generator: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    structure_seed: u64,
    /// Base rates μ0 μ1 μ2 of the grid.
    #[arg(long, num_args = 3, value_names = ["MU0", "MU1", "MU2"])]
    base: Option<Vec<f64>>,
    /// Rate component swept over --values.
    #[arg(long, value_parser = ["mu0", "mu1", "mu2"], requires_all = ["base", "values"])]
    sweep: Option<String>,
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Worker threads across cells; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    overrides: McmcOverrides,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    format_version: u32,
    command: &'a str,
    files: Vec<String>,
    provenance: Provenance,
}

fn rates(v: &[f64]) -> RateParams {
    RateParams::new(v[0], v[1], v[2])
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("cannot write to standard output"),
    }
}

/// Writes `files` into `dir` followed by a manifest listing them.
fn write_run_dir(dir: &Path, command: &str, files: &[(&str, String)], provenance: Provenance) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        command,
        files: files.iter().map(|(name, _)| name.to_string()).collect(),
        provenance,
    };
    fs::write(dir.join("manifest.json"), to_json_string(&manifest)? + "\n")?;
    Ok(())
}

fn structure_summary(h: &Hypergraph) -> String {
    let labels = project_labels(h).counts();
    let e_delta = edge_triangle_fraction(h).map_or("undefined".to_string(), |v| format!("{v:.4}"));
    format!(
        "n={} h1={} h2={} type1={} type2={} e_delta={e_delta}",
        h.n(),
        h.h1(),
        h.h2(),
        labels[1],
        labels[2]
    )
}

fn generate(args: GenerateArgs) -> Result<()> {
    let (spec, output) = match args.kind {
        GeneratorArg::Prior { n, p, q, output } => (GeneratorSpec::Prior { n, p, q }, output),
        GeneratorArg::Sbm { params, output } => {
            let params: SbmParams = match params {
                Some(path) => read_json(&path).with_context(|| format!("cannot read {}", path.display()))?,
                None => SbmParams::default(),
            };
            (GeneratorSpec::Sbm(params), output)
        }
        GeneratorArg::Cm { n, mean2, mean3, output } => (GeneratorSpec::Cm { n, mean2, mean3 }, output),
        GeneratorArg::Beta {
            n,
            mean2,
            sd2,
            mean3,
            sd3,
            output,
        } => (
            GeneratorSpec::Beta {
                n,
                params: BetaModelParams { mean2, sd2, mean3, sd3 },
            },
            output,
        ),
        GeneratorArg::Best { n, p, q, output } => (GeneratorSpec::Best { n, p, q }, output),
        GeneratorArg::Worst {
            cliques,
            size,
            promote,
            output,
        } => (
            GeneratorSpec::Worst {
                n_cliques: cliques,
                clique_size: size,
                promote_prob: promote,
            },
            output,
        ),
        GeneratorArg::Bipartite {
            input,
            max_group,
            names,
            out,
        } => {
            let records = read_bipartite(&input).with_context(|| format!("cannot read {}", input.display()))?;
            let projection = bipartite_to_hypergraph(&records, max_group)?;
            if let Some(path) = names {
                let text: String = projection.vertex_names.iter().map(|s| format!("{s}\n")).collect();
                fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            write_output(out.as_deref(), &write_hypergraph_string(&projection.hypergraph))?;
            eprintln!(
                "{} dropped_groups={}",
                structure_summary(&projection.hypergraph),
                projection.dropped_groups
            );
            return Ok(());
        }
    };
    let h = spec.generate(&mut rng_from_seed(output.seed))?;
    write_output(output.out.as_deref(), &write_hypergraph_string(&h))?;
    eprintln!("{}", structure_summary(&h));
    Ok(())
}

fn observe(args: ObserveArgs) -> Result<()> {
    let h = read_hypergraph(&args.structure).with_context(|| format!("cannot read {}", args.structure.display()))?;
    let mu = rates(&args.mu);
    mu.validate(args.model.into())?;
    let x = generate_observations(&project_labels(&h), &mu, &mut rng_from_seed(args.output.seed))?;
    write_output(args.output.out.as_deref(), &write_observations_string(&x))
}

fn load_observations(path: &Path) -> Result<ObservationMatrix> {
    read_observations(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_hypergraph(path: &Path) -> Result<Hypergraph> {
    read_hypergraph(path).with_context(|| format!("cannot read {}", path.display()))
}

fn loglik_tsv(bundle: &ResultBundle) -> String {
    let mut out = String::from("iteration\tlog_likelihood\n");
    for (i, v) in bundle.loglik_history.iter().enumerate() {
        out.push_str(&format!("{}\t{v}\n", i * bundle.loglik_stride + 1));
    }
    out
}

fn infer(args: InferArgs) -> Result<()> {
    let x = load_observations(&args.observations)?;
    let model: ModelKind = args.model.into();
    let mut cfg: RunConfig = match &args.config {
        Some(path) => read_json(path).with_context(|| format!("cannot read {}", path.display()))?,
        None => RunConfig::default(),
    };
    args.overrides.apply(&mut cfg);
    cfg.validate()?;
    let (init_mode, init) = match (&args.truth, &args.mu) {
        (Some(path), Some(mu)) => {
            let truth = load_hypergraph(path)?;
            (InitMode::GroundTruth, Init::Given(ground_truth_init(model, &truth, &rates(mu))?))
        }
        _ => (InitMode::Mixture, Init::Mixture),
    };
    let bundle = infer_bundle(model, &x, &cfg, init_mode, &init)?;
    let converged = bundle.chain_converged.iter().filter(|&&c| c).count();
    eprintln!(
        "model={model} chains_converged={converged}/{} best_chain={} samples={}",
        bundle.chain_converged.len(),
        bundle.best_chain,
        bundle.trace.samples.len()
    );
    let provenance = bundle.provenance.clone();
    write_run_dir(
        &args.out_dir,
        "infer",
        &[
            ("bundle.json", to_json_string(&bundle)? + "\n"),
            ("loglik.tsv", loglik_tsv(&bundle)),
        ],
        provenance,
    )
}

fn labels_tsv(truth: &LabelMatrix, predicted: &LabelMatrix) -> String {
    let mut out = String::from("i\tj\ttruth\tpredicted\n");
    for ((i, j, t), (_, _, p)) in truth.iter().zip(predicted.iter()) {
        out.push_str(&format!("{i}\t{j}\t{t}\t{p}\n"));
    }
    out
}

fn residuals_tsv(draws: &[[f64; 3]]) -> String {
    let mut out = String::from("draw\tr0\tr1\tr2\n");
    for (d, r) in draws.iter().enumerate() {
        out.push_str(&format!("{d}\t{}\t{}\t{}\n", r[0], r[1], r[2]));
    }
    out
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let path = if args.bundle.is_dir() { args.bundle.join("bundle.json") } else { args.bundle.clone() };
    let bundle: ResultBundle = read_json(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let truth = load_hypergraph(&args.truth)?;
    let x = load_observations(&args.observations)?;
    if let Some(expected) = &bundle.provenance.data_sha256 {
        if &sha256_hex(write_observations_string(&x).as_bytes()) != expected {
            bail!("{} is not the observation matrix the bundle was fitted to", args.observations.display());
        }
    }
    let truth_mu = args.mu.as_deref().map(rates);
    let labels = match truth_mu {
        Some(mu) => truth_labels(bundle.model, &truth, &mu),
        None => project_labels(&truth),
    };
    let mut eval = bundle.config.eval;
    if let Some(n) = args.n_pred {
        eval.n_pred = n;
    }
    let seed = args.seed.unwrap_or_else(|| derive_seed(bundle.provenance.master_seed, 0xE7A1));
    let (predicted, mut report) = evaluate_trace(&bundle.trace, &labels, &x, &eval, &mut rng_from_seed(seed))?;
    report.e_delta = edge_triangle_fraction(&truth).ok();
    let draws = report.residuals.as_ref().map(|r| r.draws.clone()).unwrap_or_default();
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    eprintln!(
        "epsilon={} entropy={:.4} e_delta={}",
        fmt(report.epsilon),
        report.entropy,
        fmt(report.e_delta)
    );
    let provenance = Provenance::new(&(&bundle.config, seed, eval), Some(&x), seed)?;
    write_run_dir(
        &args.out_dir,
        "evaluate",
        &[
            ("metrics.json", to_json_string(&report)? + "\n"),
            ("metrics.tsv", metrics_tsv(&report)),
            ("labels.tsv", labels_tsv(&labels, &predicted)),
            ("residuals.tsv", residuals_tsv(&draws)),
        ],
        provenance,
    )
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut spec: ExperimentSpec = match &args.spec {
        Some(path) => read_json(path).with_context(|| format!("cannot read {}", path.display()))?,
        None => ExperimentSpec::default(),
    };
    match (&args.base, &args.sweep, &args.values) {
        (Some(base), Some(component), Some(values)) => {
            let k = ["mu0", "mu1", "mu2"].iter().position(|c| c == component).expect("validated by clap");
            spec.mu_grid = sweep_grid(rates(base), k, values);
        }
        (Some(base), None, None) => spec.mu_grid = vec![rates(base)],
        (None, None, None) => {}
        _ => bail!("--sweep and --values need --base"),
    }
    if spec.mu_grid.is_empty() {
        bail!("empty rate grid: give --base (and optionally --sweep/--values) or mu_grid in --spec");
    }
    if let Some(v) = args.replicates {
        spec.replicates = v;
    }
    if let Some(v) = args.init {
        spec.init = v.into();
    }
    if let Some(v) = args.overrides.seed {
        spec.master_seed = v;
    }
    if let Some(v) = args.workers {
        spec.workers = v;
    }
    args.overrides.apply(&mut spec.run);
    spec.run.validate()?;

    let truth = match (&args.structure, &args.generator) {
        (Some(path), _) => load_hypergraph(path)?,
        (None, Some(path)) => {
            let g: GeneratorSpec = read_json(path).with_context(|| format!("cannot read {}", path.display()))?;
            g.generate(&mut rng_from_seed(args.structure_seed))?
        }
        (None, None) => unreachable!("enforced by clap"),
    };
    eprintln!("structure: {}", structure_summary(&truth));
    let result = run_experiment(&spec, &truth)?;
    let failed = result.cells.iter().filter(|c| c.error.is_some()).count();
    eprintln!("cells={} failed={failed}", result.cells.len());
    let provenance = Provenance::new(&spec, None, spec.master_seed)?;
    write_run_dir(
        &args.out_dir,
        "experiment",
        &[
            ("structure.hyper", write_hypergraph_string(&truth)),
            ("result.json", to_json_string(&result)? + "\n"),
            ("summary.tsv", summary_tsv(&result.summary)),
        ],
        provenance,
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Observe(a) => observe(a),
        Command::Infer(a) => infer(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
