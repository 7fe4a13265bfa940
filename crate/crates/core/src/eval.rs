//! Linear evaluation of frozen embeddings.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Splits;
use crate::model::Adam;
use crate::rng::Seed;

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.1, 0.1, 0.8);
pub const DEFAULT_RUNS: usize = 10;

/// Random disjoint train/valid/test partition of `0..n`. Train and valid
/// sizes are `round(ratio * n)`; test takes the rest.
pub fn make_splits(n: usize, ratios: (f64, f64, f64), seed: u64) -> Result<Splits> {
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !(0.0..=1.0).contains(r)) || (tr + va + te - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split ratios {ratios:?} must be in [0,1] and sum to 1")));
    }
    let n_train = (tr * n as f64).round() as usize;
    let n_valid = (va * n as f64).round() as usize;
    if n_train + n_valid >= n || n_train == 0 || n_valid == 0 {
        return Err(Error::invalid(format!(
            "ratios {ratios:?} leave an empty split for {n} nodes"
        )));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut Seed(seed).named("splits").rng());
    let mut train = ids[..n_train].to_vec();
    let mut valid = ids[n_train..n_train + n_valid].to_vec();
    let mut test = ids[n_train + n_valid..].to_vec();
    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();
    Ok(Splits { train, valid, test })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { epochs: 1000, learning_rate: 5e-4 }
    }
}

/// Softmax linear classifier `logits = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearClassifier {
    pub fn logits(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }

    pub fn probabilities(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut p = self.logits(x);
        for mut row in p.rows_mut() {
            let m = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            row.mapv_inplace(|v| (v - m).exp());
            let s = row.sum();
            row /= s;
        }
        p
    }

    /// Arg-max class per row; ties go to the smaller class id.
    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        self.logits(x)
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                    .0
            })
            .collect()
    }
}

fn gather(h: &Array2<f64>, ids: &[usize]) -> Array2<f64> {
    h.select(Axis(0), ids)
}

/// Full-batch softmax cross-entropy from zero initialization; returns the
/// final-epoch classifier.
pub fn train_probe(
    h: &Array2<f64>,
    labels: &[usize],
    num_classes: usize,
    train_ids: &[usize],
    config: ProbeConfig,
) -> Result<LinearClassifier> {
    if labels.len() != h.nrows() {
        return Err(Error::shape("label count does not match embedding rows"));
    }
    if train_ids.is_empty() {
        return Err(Error::invalid("empty training split"));
    }
    let first = labels[train_ids[0]];
    if train_ids.iter().all(|&i| labels[i] == first) {
        return Err(Error::invalid("training split contains a single class"));
    }
    if let Some(&y) = train_ids.iter().map(|&i| &labels[i]).find(|&&y| y >= num_classes) {
        return Err(Error::invalid(format!("label {y} >= class count {num_classes}")));
    }
    let x = gather(h, train_ids);
    let m = train_ids.len() as f64;
    let mut onehot = Array2::zeros((train_ids.len(), num_classes));
    for (r, &i) in train_ids.iter().enumerate() {
        onehot[[r, labels[i]]] = 1.0;
    }
    let mut clf = LinearClassifier {
        weight: Array2::zeros((h.ncols(), num_classes)),
        bias: Array1::zeros(num_classes),
    };
    let mut adam = Adam::new(config.learning_rate, vec![vec![h.ncols(), num_classes], vec![num_classes]]);
    for _ in 0..config.epochs {
        let delta = (clf.probabilities(&x) - &onehot) / m;
        let gw = x.t().dot(&delta);
        let gb = delta.sum_axis(Axis(0));
        adam.step(
            vec![clf.weight.view_mut().into_dyn(), clf.bias.view_mut().into_dyn()],
            &[gw.view().into_dyn(), gb.view().into_dyn()],
        )?;
    }
    Ok(clf)
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Test accuracy of a probe trained on the train split.
pub fn linear_probe(h: &Array2<f64>, labels: &[usize], num_classes: usize, splits: &Splits) -> Result<f64> {
    linear_probe_with(h, labels, num_classes, splits, ProbeConfig::default())
}

pub fn linear_probe_with(
    h: &Array2<f64>,
    labels: &[usize],
    num_classes: usize,
    splits: &Splits,
    config: ProbeConfig,
) -> Result<f64> {
    validate_test(splits)?;
    let clf = train_probe(h, labels, num_classes, &splits.train, config)?;
    let pred = clf.predict(&gather(h, &splits.test));
    let truth: Vec<usize> = splits.test.iter().map(|&i| labels[i]).collect();
    Ok(accuracy(&pred, &truth))
}

fn validate_test(splits: &Splits) -> Result<()> {
    if splits.test.is_empty() {
        return Err(Error::invalid("empty test split"));
    }
    Ok(())
}

/// Mann-Whitney AUC with tied scores counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape("score and label counts differ"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// Test AUC of the class-1 probability of a probe on binary labels.
pub fn probe_auc(h: &Array2<f64>, labels: &[usize], splits: &Splits, config: ProbeConfig) -> Result<f64> {
    validate_test(splits)?;
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::UndefinedMetric("AUC requires binary labels".into()));
    }
    let clf = train_probe(h, labels, 2, &splits.train, config)?;
    let p = clf.probabilities(&gather(h, &splits.test));
    let scores: Vec<f64> = p.column(1).to_vec();
    let truth: Vec<bool> = splits.test.iter().map(|&i| labels[i] == 1).collect();
    roc_auc(&scores, &truth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Auc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub runs: Vec<f64>,
}

impl EvalResult {
    /// Mean and population standard deviation of `runs`.
    pub fn from_runs(metric: Metric, runs: Vec<f64>) -> Self {
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / n;
        let var = runs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        EvalResult { metric, mean, std: var.sqrt(), runs }
    }
}

/// Probe runs on fixed public splits or on `runs` random 10/10/80 splits.
pub fn evaluate(
    h: &Array2<f64>,
    labels: &[usize],
    num_classes: usize,
    metric: Metric,
    public: Option<&Splits>,
    runs: usize,
    seed: u64,
) -> Result<EvalResult> {
    if runs == 0 {
        return Err(Error::invalid("at least one run is required"));
    }
    if metric == Metric::Auc && num_classes != 2 {
        return Err(Error::UndefinedMetric(format!("AUC needs 2 classes, dataset has {num_classes}")));
    }
    let config = ProbeConfig::default();
    let root = Seed(seed).named("eval");
    let scores = (0..runs)
        .into_par_iter()
        .map(|r| {
            let splits = match public {
                Some(s) => s.clone(),
                None => make_splits(h.nrows(), DEFAULT_RATIOS, root.child(r as u64).0)?,
            };
            match metric {
                Metric::Accuracy => linear_probe_with(h, labels, num_classes, &splits, config),
                Metric::Auc => probe_auc(h, labels, &splits, config),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EvalResult::from_runs(metric, scores))
}
