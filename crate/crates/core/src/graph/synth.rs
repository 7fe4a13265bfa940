//! Synthetic graphs whose features depend only on the label and whose
//! neighbor labels are drawn from a per-class distribution.
//!
//! For two classes the features follow `x_i = s(y_i) * mu + q_i / sqrt(F)`
//! with `s(0) = -1`, `s(1) = +1` and a single latent `mu ~ N(0, I/F)`.
//! With more classes each class gets its own latent `mu_y` and `s = +1`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Graph};
use crate::error::{Error, Result};
use crate::rng::Seed;

fn default_noise_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_nodes: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    /// Neighbor targets sampled per node before symmetrization, so the
    /// realized mean degree is close to twice this value.
    pub mean_degree: f64,
    /// Row `y` is the label distribution of the neighbors of a class-`y` node.
    pub neighbor_label_distribution: Vec<Vec<f64>>,
    pub class_prior: Vec<f64>,
    pub seed: u64,
    /// Multiplier on the `q_i / sqrt(F)` noise term.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    /// Seed for the class latents; defaults to one derived from `seed`.
    /// Fixing it while varying `seed` draws new graphs around the same latents.
    #[serde(default)]
    pub latent_seed: Option<u64>,
}

impl SyntheticConfig {
    /// Balanced two-class graph where a neighbor shares the node's label with
    /// probability `same_label`.
    pub fn binary(
        num_nodes: usize,
        feature_dim: usize,
        mean_degree: f64,
        same_label: f64,
        seed: u64,
    ) -> Self {
        SyntheticConfig {
            num_nodes,
            feature_dim,
            num_classes: 2,
            mean_degree,
            neighbor_label_distribution: vec![
                vec![same_label, 1.0 - same_label],
                vec![1.0 - same_label, same_label],
            ],
            class_prior: vec![0.5, 0.5],
            seed,
            noise_scale: 1.0,
            latent_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.num_classes;
        if self.num_nodes == 0 || self.feature_dim == 0 || c == 0 {
            return Err(Error::invalid("node count, feature dim and class count must be positive"));
        }
        if !(self.mean_degree >= 1.0) || !self.mean_degree.is_finite() {
            return Err(Error::invalid(format!("mean degree {} < 1", self.mean_degree)));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::invalid("noise scale must be non-negative"));
        }
        let probability_vector = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != c {
                return Err(Error::shape(format!("{what} has length {}, expected {c}", v.len())));
            }
            if v.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::invalid(format!("{what} has a negative entry")));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("{what} sums to {s}, not 1")));
            }
            Ok(())
        };
        probability_vector(&self.class_prior, "class prior")?;
        if self.neighbor_label_distribution.len() != c {
            return Err(Error::shape("neighbor label distribution must be c x c"));
        }
        for (y, row) in self.neighbor_label_distribution.iter().enumerate() {
            probability_vector(row, &format!("neighbor label distribution row {y}"))?;
        }
        Ok(())
    }
}

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave u just above the cumulative sum: take the last
    // class with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws a dataset from `config`; a pure function of the config.
pub fn synthesize(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let n = config.num_nodes;
    let f = config.feature_dim;
    let c = config.num_classes;
    let root = Seed(config.seed);

    let mut rng = root.named("labels").rng();
    let labels: Vec<usize> = (0..n).map(|_| categorical(&mut rng, &config.class_prior)).collect();

    let latent_root = config.latent_seed.map_or(root.named("latent"), |s| Seed(s).named("latent"));
    let mut rng = latent_root.rng();
    let num_latents = if c == 2 { 1 } else { c };
    let scale = 1.0 / (f as f64).sqrt();
    let latents = Array2::from_shape_fn((num_latents, f), |_| {
        scale * rng.sample::<f64, _>(StandardNormal)
    });

    let mut rng = root.named("noise").rng();
    let noise = config.noise_scale * scale;
    let mut features = Array2::zeros((n, f));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        let (latent, sign) = if c == 2 {
            (0, if labels[i] == 0 { -1.0 } else { 1.0 })
        } else {
            (labels[i], 1.0)
        };
        for (d, x) in row.iter_mut().enumerate() {
            let q: f64 = rng.sample(StandardNormal);
            *x = sign * latents[[latent, d]] + noise * q;
        }
    }

    let mut members = vec![Vec::new(); c];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }
    let mut rng = root.named("edges").rng();
    let whole = config.mean_degree.floor();
    let frac = config.mean_degree - whole;
    let mut edges = Vec::new();
    for i in 0..n {
        let mut targets = whole as usize;
        if frac > 0.0 && rng.random::<f64>() < frac {
            targets += 1;
        }
        let row = &config.neighbor_label_distribution[labels[i]];
        for _ in 0..targets {
            let target_class = categorical(&mut rng, row);
            let pool = &members[target_class];
            match pool.len() {
                0 => {
                    return Err(Error::invalid(format!(
                        "sampled neighbor class {target_class} has no member nodes"
                    )))
                }
                1 if pool[0] == i => continue,
                _ => {}
            }
            let j = loop {
                let j = pool[rng.random_range(0..pool.len())];
                if j != i {
                    break j;
                }
            };
            edges.push((i, j));
        }
    }
    let graph = Graph::from_edges(n, edges)?;
    Dataset::with_classes(graph, features, labels, c)
}
