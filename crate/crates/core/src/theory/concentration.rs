//! Monte-Carlo concentration of mean-aggregated embeddings `Z_i = W mean_{j~i} x_j`
//! around their class-conditional expectation.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use super::{class_centered, min_column_orlicz, sigma_max};
use crate::error::{Error, Result};
use crate::graph::{synthesize, Graph, SyntheticConfig};
use crate::model::{init_params, LayerDims};
use crate::rng::Seed;

/// Width of every layer of the linear stack whose composed weight is `W`.
pub const EXPERIMENT_WIDTH: usize = 16;
/// Confidence level used for the reported bounds.
pub const DEFAULT_DELTA: f64 = 0.05;
/// The expectation oracle draws this many times more graphs than the trials.
const ORACLE_FACTOR: usize = 10;

/// Row `i` is the mean of the neighbours' rows; isolated nodes get zeros.
pub fn mean_aggregate(graph: &Graph, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != graph.num_nodes() {
        return Err(Error::shape("feature rows do not match node count"));
    }
    let mut out = Array2::zeros(x.dim());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let nbrs = graph.neighbors(i);
        for &j in nbrs {
            row += &x.row(j);
        }
        if !nbrs.is_empty() {
            row /= nbrs.len() as f64;
        }
    }
    Ok(out)
}

fn equivalent_weight(feature_dim: usize, seed: u64) -> Result<Array2<f64>> {
    let w = EXPERIMENT_WIDTH;
    Ok(init_params(seed, LayerDims::new(feature_dim, w, w, w))?.equivalent_weight())
}

struct Sample {
    z: Array2<f64>,
    x: Array2<f64>,
    labels: Vec<usize>,
    degrees: Vec<usize>,
}

fn draw(config: &SyntheticConfig, w: &Array2<f64>, seed: Seed) -> Result<Sample> {
    let cfg = SyntheticConfig { seed: seed.0, ..config.clone() };
    let ds = synthesize(&cfg)?;
    let z = mean_aggregate(&ds.graph, &ds.features)?.dot(w);
    Ok(Sample { z, x: ds.features, degrees: ds.graph.degrees(), labels: ds.labels })
}

fn draw_many(config: &SyntheticConfig, w: &Array2<f64>, root: Seed, count: usize) -> Result<Vec<Sample>> {
    (0..count)
        .into_par_iter()
        .map(|t| draw(config, w, root.child(t as u64)))
        .collect()
}

/// Per-class mean embedding over non-isolated nodes.
fn class_means(samples: &[Sample], num_classes: usize, width: usize) -> Result<Array2<f64>> {
    let mut sums = Array2::<f64>::zeros((num_classes, width));
    let mut counts = vec![0usize; num_classes];
    for s in samples {
        for (i, &y) in s.labels.iter().enumerate() {
            if s.degrees[i] > 0 {
                sums.row_mut(y).scaled_add(1.0, &s.z.row(i));
                counts[y] += 1;
            }
        }
    }
    if let Some(y) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("class {y} never appears with a neighbour")));
    }
    for (mut row, &c) in sums.rows_mut().into_iter().zip(&counts) {
        row /= c as f64;
    }
    Ok(sums)
}

fn pinned(config: &SyntheticConfig) -> SyntheticConfig {
    SyntheticConfig { latent_seed: config.latent_seed.or(Some(config.seed)), ..config.clone() }
}

fn centered_features(samples: &[Sample], num_classes: usize) -> Array2<f64> {
    let rows: usize = samples.iter().map(|s| s.x.nrows()).sum();
    let f = samples[0].x.ncols();
    let mut x = Array2::zeros((rows, f));
    let mut labels = Vec::with_capacity(rows);
    let mut r = 0;
    for s in samples {
        for (i, row) in s.x.rows().into_iter().enumerate() {
            x.row_mut(r).assign(&row);
            labels.push(s.labels[i]);
            r += 1;
        }
    }
    class_centered(&x, &labels, num_classes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    /// Generator mean-degree parameter.
    pub mean_degree: f64,
    /// Mean realized degree over non-isolated nodes.
    pub realized_degree: f64,
    pub feature_dim: usize,
    /// Mean of `‖Z_i − E[Z_i]‖` over non-isolated nodes and trials.
    pub mean_deviation: f64,
    /// `sqrt(σ_max(W)² F log(2F/δ) / (2 D ‖x‖_ψ2))` at the realized degree.
    pub bound: f64,
    pub sigma_max: f64,
    pub psi2: f64,
}

/// Mean deviation of aggregated embeddings from their class expectation at
/// each generator degree level. Latents stay fixed across all graphs.
pub fn concentration_experiment(
    config: &SyntheticConfig,
    degree_levels: &[f64],
    trials: usize,
) -> Result<Vec<ConcentrationRow>> {
    if trials == 0 || degree_levels.is_empty() {
        return Err(Error::invalid("need at least one trial and one degree level"));
    }
    if let Some(d) = degree_levels.iter().find(|&&d| !(d >= 1.0)) {
        return Err(Error::invalid(format!("degree level {d} is degenerate")));
    }
    let w = equivalent_weight(config.feature_dim, config.seed)?;
    let sigma = sigma_max(&w)?;
    let f = config.feature_dim as f64;
    let root = Seed(config.seed).named("concentration");
    let mut rows = Vec::with_capacity(degree_levels.len());
    for (level, &d) in degree_levels.iter().enumerate() {
        let cfg = SyntheticConfig { mean_degree: d, ..pinned(config) };
        cfg.validate()?;
        let level_seed = root.child(level as u64);
        let trial_samples = draw_many(&cfg, &w, level_seed.named("trial"), trials)?;
        let oracle = draw_many(&cfg, &w, level_seed.named("oracle"), ORACLE_FACTOR * trials)?;
        let expect = class_means(&oracle, cfg.num_classes, w.ncols())?;
        let (mut dev, mut deg, mut count) = (0.0, 0.0, 0usize);
        for s in &trial_samples {
            for (i, &y) in s.labels.iter().enumerate() {
                if s.degrees[i] == 0 {
                    continue;
                }
                let diff = &s.z.row(i) - &expect.row(y);
                dev += diff.dot(&diff).sqrt();
                deg += s.degrees[i] as f64;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::invalid("every node is isolated"));
        }
        let realized = deg / count as f64;
        let psi2 = min_column_orlicz(&centered_features(&trial_samples, cfg.num_classes), 2.0);
        let bound = (sigma * sigma * f * (2.0 * f / DEFAULT_DELTA).ln() / (2.0 * realized * psi2)).sqrt();
        rows.push(ConcentrationRow {
            mean_degree: d,
            realized_degree: realized,
            feature_dim: cfg.feature_dim,
            mean_deviation: dev / count as f64,
            bound,
            sigma_max: sigma,
            psi2,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityReport {
    pub delta: f64,
    /// Empirical `1 − δ` quantile of `|Z_i·Z_j − E[Z_i·Z_j]|`.
    pub quantile: f64,
    pub mean_deviation: f64,
    /// `sqrt(σ_max(WᵀW)² log(2N²/δ) / (2 D² ‖x²‖_ψ1))`.
    pub bound: f64,
    /// Smallest positive degree over all trial graphs.
    pub min_degree: usize,
    pub sigma_max: f64,
    pub psi1: f64,
    pub pairs: usize,
}

impl SimilarityReport {
    pub fn holds(&self) -> bool {
        self.quantile <= self.bound
    }
}

fn pair_index(a: usize, b: usize, c: usize) -> usize {
    a.min(b) * c + a.max(b)
}

/// Deviation of pairwise embedding inner products from their class-pair
/// expectation, against the pairwise concentration bound.
pub fn similarity_concentration_experiment(
    config: &SyntheticConfig,
    trials: usize,
    delta: f64,
) -> Result<SimilarityReport> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    let cfg = pinned(config);
    cfg.validate()?;
    let c = cfg.num_classes;
    let w = equivalent_weight(cfg.feature_dim, cfg.seed)?;
    let sigma = sigma_max(&w)?;
    let root = Seed(cfg.seed).named("similarity");
    let trial_samples = draw_many(&cfg, &w, root.named("trial"), trials)?;
    let oracle = draw_many(&cfg, &w, root.named("oracle"), ORACLE_FACTOR * trials)?;

    let mut sums = Array1::<f64>::zeros(c * c);
    let mut counts = vec![0usize; c * c];
    for s in &oracle {
        let gram = s.z.dot(&s.z.t());
        for i in 0..s.labels.len() {
            if s.degrees[i] == 0 {
                continue;
            }
            for j in (i + 1)..s.labels.len() {
                if s.degrees[j] > 0 {
                    let k = pair_index(s.labels[i], s.labels[j], c);
                    sums[k] += gram[[i, j]];
                    counts[k] += 1;
                }
            }
        }
    }
    let mut deviations = Vec::new();
    let mut min_degree = usize::MAX;
    for s in &trial_samples {
        let gram = s.z.dot(&s.z.t());
        for i in 0..s.labels.len() {
            if s.degrees[i] == 0 {
                continue;
            }
            min_degree = min_degree.min(s.degrees[i]);
            for j in (i + 1)..s.labels.len() {
                if s.degrees[j] > 0 {
                    let k = pair_index(s.labels[i], s.labels[j], c);
                    if counts[k] == 0 {
                        return Err(Error::invalid("class pair absent from the expectation sample"));
                    }
                    deviations.push((gram[[i, j]] - sums[k] / counts[k] as f64).abs());
                }
            }
        }
    }
    if deviations.is_empty() {
        return Err(Error::invalid("no pair of non-isolated nodes"));
    }
    let mean_deviation = deviations.iter().sum::<f64>() / deviations.len() as f64;
    let rank = (((1.0 - delta) * deviations.len() as f64).ceil() as usize).clamp(1, deviations.len()) - 1;
    let (_, &mut quantile, _) = deviations.select_nth_unstable_by(rank, f64::total_cmp);
    let squares = centered_features(&trial_samples, c).mapv(|v| v * v);
    let psi1 = min_column_orlicz(&squares, 1.0);
    let n = cfg.num_nodes as f64;
    let d = min_degree as f64;
    let bound = (sigma.powi(4) * (2.0 * n * n / delta).ln() / (2.0 * d * d * psi1)).sqrt();
    Ok(SimilarityReport {
        delta,
        quantile,
        mean_deviation,
        bound,
        min_degree,
        sigma_max: sigma,
        psi1,
        pairs: deviations.len(),
    })
}
