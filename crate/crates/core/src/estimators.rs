//! Point estimates from retained posterior samples, confusion matrices and
//! the scalar diagnostics built on them.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{ChainTrace, PosteriorSample};
use crate::model::{
    all_pairs, generate_observations, CategoricalGraph, Hypergraph, LabelMatrix, ModelKind, ObservationMatrix, Pair,
    Structure, Triplet,
};

pub const DEFAULT_PREDICTIVE_DRAWS: usize = 200;

fn require_samples(trace: &ChainTrace) -> Result<&[PosteriorSample]> {
    if trace.samples.is_empty() {
        Err(Error::EmptyTrace)
    } else {
        Ok(&trace.samples)
    }
}

/// Retained sample with the largest joint log posterior.
pub fn map_estimate(trace: &ChainTrace) -> Result<PosteriorSample> {
    let samples = require_samples(trace)?;
    let best = samples
        .iter()
        .reduce(|a, b| if b.log_joint > a.log_joint { b } else { a })
        .expect("non-empty");
    Ok(best.clone())
}

/// Appearance frequency of every edge seen in at least one sample. For the
/// categorical model `first` holds weak edges and `second` strong edges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrequencies {
    pub samples: usize,
    pub first: BTreeMap<Pair, usize>,
    pub second_pairs: BTreeMap<Pair, usize>,
    pub second_triplets: BTreeMap<Triplet, usize>,
}

impl EdgeFrequencies {
    pub fn two_edge(&self, p: Pair) -> f64 {
        self.first.get(&p).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    pub fn three_edge(&self, t: Triplet) -> f64 {
        self.second_triplets.get(&t).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    pub fn strong_edge(&self, p: Pair) -> f64 {
        self.second_pairs.get(&p).copied().unwrap_or(0) as f64 / self.samples as f64
    }
}

pub fn edge_frequencies(trace: &ChainTrace) -> Result<EdgeFrequencies> {
    let samples = require_samples(trace)?;
    let mut f = EdgeFrequencies {
        samples: samples.len(),
        ..Default::default()
    };
    for s in samples {
        match &s.structure {
            Structure::Hypergraph(h) => {
                for &p in h.two_edges() {
                    *f.first.entry(p).or_default() += 1;
                }
                for &t in h.three_edges() {
                    *f.second_triplets.entry(t).or_default() += 1;
                }
            }
            Structure::Categorical(g) => {
                for &p in g.weak_edges() {
                    *f.first.entry(p).or_default() += 1;
                }
                for &p in g.strong_edges() {
                    *f.second_pairs.entry(p).or_default() += 1;
                }
            }
        }
    }
    Ok(f)
}

/// Structure made of the edges present in strictly more than half of the samples.
pub fn edgewise_estimate(trace: &ChainTrace) -> Result<Structure> {
    let samples = require_samples(trace)?;
    let n = samples[0].structure.n();
    let model = samples[0].structure.model();
    if samples.iter().any(|s| s.structure.model() != model || s.structure.n() != n) {
        return Err(Error::InvalidStructure("trace mixes structure kinds or sizes".into()));
    }
    let f = edge_frequencies(trace)?;
    let majority = |c: usize| 2 * c > f.samples;
    let keep_pairs = |m: &BTreeMap<Pair, usize>| m.iter().filter(|(_, &c)| majority(c)).map(|(&p, _)| p).collect::<Vec<_>>();
    Ok(match model {
        ModelKind::Hypergraph => {
            let triplets = f.second_triplets.iter().filter(|(_, &c)| majority(c)).map(|(&t, _)| t);
            Structure::Hypergraph(Hypergraph::from_edges(n, keep_pairs(&f.first), triplets)?)
        }
        ModelKind::Categorical => Structure::Categorical(CategoricalGraph::from_edges(
            n,
            keep_pairs(&f.first),
            keep_pairs(&f.second_pairs),
        )?),
    })
}

/// Per-pair empirical label distribution across samples, in pair-index order.
pub fn label_marginals(trace: &ChainTrace) -> Result<Vec<[f64; 3]>> {
    let samples = require_samples(trace)?;
    let mut counts = vec![[0usize; 3]; samples[0].structure.labels().as_slice().len()];
    for s in samples {
        let labels = s.structure.labels();
        if labels.as_slice().len() != counts.len() {
            return Err(Error::InvalidStructure("trace mixes structure sizes".into()));
        }
        for (c, &l) in counts.iter_mut().zip(labels.as_slice()) {
            c[l as usize] += 1;
        }
    }
    let total = samples.len() as f64;
    Ok(counts.into_iter().map(|c| c.map(|v| v as f64 / total)).collect())
}

/// Per-pair most frequent label; ties broken uniformly at random.
pub fn marginal_label_estimate<R: Rng + ?Sized>(trace: &ChainTrace, rng: &mut R) -> Result<LabelMatrix> {
    let samples = require_samples(trace)?;
    let n = samples[0].structure.n();
    let mut counts = vec![[0usize; 3]; crate::model::n_pairs(n)];
    for s in samples {
        for (c, &l) in counts.iter_mut().zip(s.structure.labels().as_slice()) {
            c[l as usize] += 1;
        }
    }
    let labels = counts
        .iter()
        .map(|c| {
            let top = *c.iter().max().expect("three labels");
            let winners: Vec<u8> = (0..3u8).filter(|&k| c[k as usize] == top).collect();
            if winners.len() == 1 {
                winners[0]
            } else {
                winners[rng.random_range(0..winners.len())]
            }
        })
        .collect();
    LabelMatrix::from_vec(n, labels)
}

/// When the predicted labels contain weak edges but no strong edge, turns
/// every weak edge into a strong one. A categorical fit that resolves a
/// single interaction type cannot tell the two apart; returns whether the
/// rule fired.
pub fn relabel_single_type_as_strong(pred: &mut LabelMatrix) -> bool {
    let [_, ones, twos] = pred.counts();
    if twos > 0 || ones == 0 {
        return false;
    }
    let n = pred.n();
    for (i, j) in all_pairs(n) {
        if pred.get(i, j) == 1 {
            pred.set(i, j, 2);
        }
    }
    true
}

/// `c[r][s]`: number of pairs with true label `r` predicted as `s`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub c: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.c.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> [u64; 3] {
        self.c.map(|row| row.iter().sum())
    }

    pub fn column_sums(&self) -> [u64; 3] {
        [0, 1, 2].map(|s| self.c.iter().map(|row| row[s]).sum())
    }

    pub fn off_diagonal(&self) -> u64 {
        self.total() - (0..3).map(|k| self.c[k][k]).sum::<u64>()
    }
}

pub fn confusion(truth: &LabelMatrix, predicted: &LabelMatrix) -> Result<ConfusionMatrix> {
    if truth.n() != predicted.n() {
        return Err(Error::DimensionMismatch {
            expected: truth.n(),
            found: predicted.n(),
        });
    }
    let mut m = ConfusionMatrix::default();
    for (&r, &s) in truth.as_slice().iter().zip(predicted.as_slice()) {
        m.c[r as usize][s as usize] += 1;
    }
    Ok(m)
}

/// Fraction of true type-1 and type-2 pairs that are misclassified.
pub fn reconstruction_error(c: &ConfusionMatrix) -> Result<f64> {
    let rows = c.row_sums();
    let denom = rows[1] + rows[2];
    if denom == 0 {
        return Err(Error::Undefined("reconstruction error without true interactions"));
    }
    let wrong = denom - c.c[1][1] - c.c[2][2];
    Ok(wrong as f64 / denom as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelEntropy {
    /// Base-3 entropy of the predicted label proportions, in `[0, 1]`.
    pub entropy: f64,
    /// Predicted label proportions `ρ_k`.
    pub rho: [f64; 3],
}

pub fn label_entropy(c: &ConfusionMatrix) -> LabelEntropy {
    let total = c.total() as f64;
    let rho = c.column_sums().map(|v| if total > 0.0 { v as f64 / total } else { 0.0 });
    let entropy = -rho
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| r * r.ln() / 3f64.ln())
        .sum::<f64>();
    LabelEntropy {
        entropy: entropy.clamp(0.0, 1.0),
        rho,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedConfusion {
    pub rows: [[f64; 3]; 3],
    /// Rows with no true pairs, emitted as zeros.
    pub empty_rows: [bool; 3],
}

pub fn normalized_confusion(c: &ConfusionMatrix) -> NormalizedConfusion {
    let sums = c.row_sums();
    let mut rows = [[0.0; 3]; 3];
    for r in 0..3 {
        if sums[r] > 0 {
            for s in 0..3 {
                rows[r][s] = c.c[r][s] as f64 / sums[r] as f64;
            }
        }
    }
    NormalizedConfusion {
        rows,
        empty_rows: sums.map(|s| s == 0),
    }
}

/// Whether pair `(i, j)` closes a triangle in the projection of `h`, i.e.
/// some third vertex interacts with both `i` and `j`.
pub fn in_projected_triangle(labels: &LabelMatrix, i: usize, j: usize) -> bool {
    (0..labels.n()).any(|k| k != i && k != j && labels.get(i, k) > 0 && labels.get(j, k) > 0)
}

/// Fraction of 2-edges whose pair lies in a triangle of the projected
/// hypergraph; 0 for best-case and 1 for worst-case structures.
pub fn edge_triangle_fraction(h: &Hypergraph) -> Result<f64> {
    if h.h1() == 0 {
        return Err(Error::Undefined("triangle fraction of a hypergraph without 2-edges"));
    }
    let labels = crate::model::project_labels(h);
    let inside = h
        .two_edges()
        .iter()
        .filter(|&&(i, j)| in_projected_triangle(&labels, i, j))
        .count();
    Ok(inside as f64 / h.h1() as f64)
}

/// Fraction of 2-edges covered by a 3-edge (hidden 2-edges).
pub fn hidden_edge_fraction(h: &Hypergraph) -> Result<f64> {
    if h.h1() == 0 {
        return Err(Error::Undefined("hidden fraction of a hypergraph without 2-edges"));
    }
    let covered = h.covered_pairs();
    let hidden = h.two_edges().iter().filter(|p| covered.contains(p)).count();
    Ok(hidden as f64 / h.h1() as f64)
}

/// Quantiles of a set of draws (linear interpolation between order statistics).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p2_5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p97_5: f64,
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Percentiles {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Percentiles {
            p2_5: quantile_sorted(&v, 0.025),
            p25: quantile_sorted(&v, 0.25),
            p50: quantile_sorted(&v, 0.5),
            p75: quantile_sorted(&v, 0.75),
            p97_5: quantile_sorted(&v, 0.975),
        })
    }

    /// Whether the 2.5–97.5 band contains `v`.
    pub fn covers(&self, v: f64) -> bool {
        self.p2_5 <= v && v <= self.p97_5
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    /// `(R_0, R_1, R_2)` for every predictive draw.
    pub draws: Vec<[f64; 3]>,
    pub bands: [Percentiles; 3],
}

impl ResidualSummary {
    pub fn median(&self) -> [f64; 3] {
        self.bands.map(|b| b.p50)
    }

    pub fn covers_zero(&self) -> [bool; 3] {
        self.bands.map(|b| b.covers(0.0))
    }
}

/// `R_k = Σ_{i<j} (x_ij − x̃_ij) 1[ℓ_ij = k]` for one predictive matrix.
pub fn residuals(x: &ObservationMatrix, x_pred: &ObservationMatrix, labels: &LabelMatrix) -> Result<[f64; 3]> {
    if x.n() != x_pred.n() || x.n() != labels.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            found: if x_pred.n() != x.n() { x_pred.n() } else { labels.n() },
        });
    }
    let mut r = [0.0; 3];
    for ((&a, &b), &l) in x.counts().iter().zip(x_pred.counts()).zip(labels.as_slice()) {
        r[l as usize] += a as f64 - b as f64;
    }
    Ok(r)
}

/// Posterior-predictive check: for `n_pred` samples drawn with replacement
/// from the trace, regenerates data from the sample's labels and rates and
/// summarizes the residuals against `x`.
pub fn posterior_predictive_residuals<R: Rng + ?Sized>(
    x: &ObservationMatrix,
    trace: &ChainTrace,
    n_pred: usize,
    rng: &mut R,
) -> Result<ResidualSummary> {
    let samples = require_samples(trace)?;
    if n_pred == 0 {
        return Err(Error::InvalidParameter("need at least one predictive draw".into()));
    }
    let mut labels: Vec<Option<LabelMatrix>> = vec![None; samples.len()];
    let mut draws = Vec::with_capacity(n_pred);
    for _ in 0..n_pred {
        let s = rng.random_range(0..samples.len());
        let l = labels[s].get_or_insert_with(|| samples[s].structure.labels());
        let x_pred = generate_observations(l, &samples[s].mu, rng)?;
        draws.push(residuals(x, &x_pred, l)?);
    }
    let bands = [0, 1, 2].map(|k| {
        let v: Vec<f64> = draws.iter().map(|r| r[k]).collect();
        Percentiles::from_values(&v).expect("non-empty")
    });
    Ok(ResidualSummary { draws, bands })
}

/// All diagnostics of one reconstruction against the ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub epsilon: Option<f64>,
    pub entropy: f64,
    pub rho: [f64; 3],
    pub residuals: Option<ResidualSummary>,
    /// Triangle fraction of the true hypergraph, when it has 2-edges.
    pub e_delta: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub normalized_confusion: NormalizedConfusion,
    /// Whether the single-type rule turned predicted weak edges into strong ones.
    pub relabeled_strong: bool,
}

impl MetricsReport {
    pub fn new(truth: &LabelMatrix, predicted: &LabelMatrix) -> Result<Self> {
        let c = confusion(truth, predicted)?;
        let ent = label_entropy(&c);
        Ok(MetricsReport {
            epsilon: reconstruction_error(&c).ok(),
            entropy: ent.entropy,
            rho: ent.rho,
            residuals: None,
            e_delta: None,
            confusion: c,
            normalized_confusion: normalized_confusion(&c),
            relabeled_strong: false,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Predictive draws for the residual bands; 0 skips the check.
    pub n_pred: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            n_pred: DEFAULT_PREDICTIVE_DRAWS,
        }
    }
}

/// Scores a trace against true labels, expressed in the model's own label
/// convention, using the maximum-marginal labels. Categorical fits go
/// through the single-type relabeling rule.
pub fn evaluate_trace<R: Rng + ?Sized>(
    trace: &ChainTrace,
    truth: &LabelMatrix,
    x: &ObservationMatrix,
    opts: &EvalOptions,
    rng: &mut R,
) -> Result<(LabelMatrix, MetricsReport)> {
    let mut predicted = marginal_label_estimate(trace, rng)?;
    let relabeled = trace.model == ModelKind::Categorical && relabel_single_type_as_strong(&mut predicted);
    let mut report = MetricsReport::new(truth, &predicted)?;
    report.relabeled_strong = relabeled;
    if opts.n_pred > 0 {
        report.residuals = Some(posterior_predictive_residuals(x, trace, opts.n_pred, rng)?);
    }
    Ok((predicted, report))
}
