//! The augmentation-free contrastive training loop: sample seed nodes, select
//! the most similar nodes of each seed's T-hop neighbourhood as positives,
//! draw uniform negatives and descend the spectral contrastive loss.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{khop_pool, normalize_rows, Dataset};
use crate::model::{adam_for, adam_step, backward, forward, init_params, LayerDims, ModelParams, Mode, Propagator};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub hops: usize,
    pub positives_per_seed: usize,
    pub negatives_per_node: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            hops: 2,
            positives_per_seed: 5,
            negatives_per_node: 100,
            learning_rate: 0.001,
            epochs: 200,
            embed_dim: 128,
            hidden_dim: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("hops", self.hops),
            ("positives_per_seed", self.positives_per_seed),
            ("negatives_per_node", self.negatives_per_node),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }

    /// Encoder and projector widths with the projector output equal to the
    /// embedding width.
    pub fn dims(&self, feature_dim: usize) -> LayerDims {
        LayerDims::new(feature_dim, self.hidden_dim, self.embed_dim, self.embed_dim)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: TrainConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

/// `b` distinct node ids chosen uniformly, in ascending order.
pub fn sample_seeds<R: Rng>(num_nodes: usize, batch_size: usize, rng: &mut R) -> Result<Vec<usize>> {
    if batch_size > num_nodes {
        return Err(Error::invalid(format!(
            "batch size {batch_size} exceeds node count {num_nodes}"
        )));
    }
    let mut seeds = index::sample(rng, num_nodes, batch_size).into_vec();
    seeds.sort_unstable();
    Ok(seeds)
}

/// Positives chosen for one seed, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPositives {
    pub seed: usize,
    pub ids: Vec<usize>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveSelection {
    pub positives_per_seed: usize,
    pub seeds: Vec<SeedPositives>,
}

impl PositiveSelection {
    pub fn num_pairs(&self) -> usize {
        self.seeds.iter().map(|s| s.ids.len()).sum()
    }
}

/// The `k` pool members other than `seed` with the largest inner product
/// against `seed`; ties go to the smaller id.
pub fn select_positives(z: &Array2<f64>, seed: usize, pool: &[usize], k: usize) -> SeedPositives {
    let anchor = z.row(seed);
    let mut scored: Vec<(usize, f64)> = pool
        .iter()
        .filter(|&&j| j != seed)
        .map(|&j| (j, anchor.dot(&z.row(j))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    SeedPositives {
        seed,
        ids: scored.iter().map(|p| p.0).collect(),
        scores: scored.iter().map(|p| p.1).collect(),
    }
}

/// Positives for every seed, each drawn from that seed's own `hops`-hop
/// neighbourhood.
pub fn select_all_positives(
    dataset: &Dataset,
    z: &Array2<f64>,
    seeds: &[usize],
    hops: usize,
    k: usize,
) -> Result<PositiveSelection> {
    let seeds = seeds
        .par_iter()
        .map(|&s| {
            let pool = khop_pool(&dataset.graph, &[s], hops)?;
            Ok(select_positives(z, s, &pool, k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PositiveSelection { positives_per_seed: k, seeds })
}

/// `per_seed` pairs `(seed, k)` per seed with `k` uniform over all nodes.
pub fn sample_negatives<R: Rng>(seeds: &[usize], num_nodes: usize, per_seed: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(seeds.len() * per_seed);
    for &s in seeds {
        for _ in 0..per_seed {
            pairs.push((s, rng.random_range(0..num_nodes)));
        }
    }
    pairs
}

/// Empirical spectral contrastive loss and its gradient with respect to `Z`:
///
/// ```text
/// -2/(|S| K_pos) Σ_i Σ_{i+} z_i·z_{i+}  +  1/|negatives| Σ_(j,k) (z_j·z_k)²
/// ```
pub fn empirical_loss(
    z: &Array2<f64>,
    selection: &PositiveSelection,
    negatives: &[(usize, usize)],
) -> Result<(f64, Array2<f64>)> {
    if selection.num_pairs() == 0 {
        return Err(Error::invalid("no seed has any positive in its neighbourhood"));
    }
    if negatives.is_empty() {
        return Err(Error::invalid("no negative pairs"));
    }
    let n = z.nrows();
    let out_of_range = selection
        .seeds
        .iter()
        .flat_map(|s| std::iter::once(s.seed).chain(s.ids.iter().copied()))
        .chain(negatives.iter().flat_map(|&(a, b)| [a, b]))
        .find(|&i| i >= n);
    if let Some(index) = out_of_range {
        return Err(Error::IndexOutOfRange { index, num_nodes: n });
    }
    let mut grad = Array2::zeros(z.dim());
    let pos_coef = 2.0 / (selection.seeds.len() * selection.positives_per_seed) as f64;
    let mut pos_sum = 0.0;
    for s in &selection.seeds {
        for &j in &s.ids {
            let (zi, zj) = (z.row(s.seed), z.row(j));
            pos_sum += zi.dot(&zj);
            grad.row_mut(s.seed).scaled_add(-pos_coef, &zj);
            grad.row_mut(j).scaled_add(-pos_coef, &zi);
        }
    }
    let neg_coef = 1.0 / negatives.len() as f64;
    let mut neg_sum = 0.0;
    for &(a, b) in negatives {
        let (za, zb) = (z.row(a), z.row(b));
        let s = za.dot(&zb);
        neg_sum += s * s;
        grad.row_mut(a).scaled_add(2.0 * neg_coef * s, &zb);
        grad.row_mut(b).scaled_add(2.0 * neg_coef * s, &za);
    }
    Ok((-pos_coef * pos_sum + neg_coef * neg_sum, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.log.iter().map(|r| r.loss).collect()
    }
}

/// CSV training log. Seconds are written only when `wall_clock` is set so
/// that logs of identical runs compare equal byte for byte.
pub fn log_csv(log: &[EpochRecord], wall_clock: bool) -> String {
    let mut out = String::from("epoch,loss,seconds\n");
    for r in log {
        let secs = if wall_clock { r.seconds } else { 0.0 };
        out.push_str(&format!("{},{},{}\n", r.epoch, crate::numfmt::real(r.loss), crate::numfmt::real(secs)));
    }
    out
}

/// Row-normalized features and propagator shared by training and inference.
pub fn prepare(dataset: &Dataset) -> (Propagator, Array2<f64>) {
    (Propagator::gcn(&dataset.graph), normalize_rows(&dataset.features))
}

/// Encoder output `H` and projected `Z` for frozen parameters.
pub fn embed(params: &ModelParams, dataset: &Dataset, mode: Mode) -> Result<(Array2<f64>, Array2<f64>)> {
    let (prop, x) = prepare(dataset);
    let (h, z, _) = forward(params, &prop, &x, mode)?;
    Ok((h, z))
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_mode(dataset, config, Mode::Train)
}

/// Training loop with an explicit encoder mode; [`Mode::Linear`] trains the
/// nonlinearity-free stack used by the theory checks.
pub fn train_with_mode(dataset: &Dataset, config: &TrainConfig, mode: Mode) -> Result<TrainOutcome> {
    config.validate()?;
    let n = dataset.num_nodes();
    if n == 0 {
        return Err(Error::invalid("cannot train on an empty graph"));
    }
    let batch = config.batch_size.min(n);
    let mut params = init_params(config.seed, config.dims(dataset.feature_dim()))?;
    let mut adam = adam_for(&params, config.learning_rate);
    let (prop, x) = prepare(dataset);
    let root = Seed(config.seed).named("train");
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let start = Instant::now();
        let mut rng = root.child(epoch as u64).rng();
        let (_, z, trace) = forward(&params, &prop, &x, mode)?;
        let seeds = sample_seeds(n, batch, &mut rng)?;
        let selection = select_all_positives(dataset, &z, &seeds, config.hops, config.positives_per_seed)?;
        let negatives = sample_negatives(&seeds, n, config.negatives_per_node, &mut rng);
        let (loss, grad_z) = empirical_loss(&z, &selection, &negatives)?;
        let grads = backward(&params, &trace, &grad_z)?;
        adam_step(&mut adam, &mut params, &grads)?;
        log.push(EpochRecord { epoch, loss, seconds: start.elapsed().as_secs_f64() });
    }
    Ok(TrainOutcome { params, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, SyntheticConfig, synthesize};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_rows(n: usize, k: usize, seed: u64) -> Array2<f64> {
        let mut rng = Seed(seed).rng();
        let z = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
        normalize_rows(&z)
    }

    #[test]
    fn seed_examples() {
        let mut rng = Seed(1).rng();
        assert_eq!(sample_seeds(6, 6, &mut rng).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sample_seeds(6, 1, &mut rng).unwrap().len(), 1);
        assert!(sample_seeds(6, 7, &mut rng).is_err());
        let a = sample_seeds(100, 10, &mut Seed(5).rng()).unwrap();
        assert_eq!(a, sample_seeds(100, 10, &mut Seed(5).rng()).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn selection_examples() {
        let z = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(select_positives(&z, 0, &[1, 2], 1).ids, vec![1]);
        let same = Array2::from_elem((5, 2), std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(select_positives(&same, 2, &[0, 1, 2, 3, 4], 3).ids, vec![0, 1, 3]);
        assert!(select_positives(&z, 0, &[0], 2).ids.is_empty());
        assert_eq!(select_positives(&z, 2, &[0, 1, 2], 5).ids, vec![0, 1]);
    }

    fn single(seed: usize, ids: Vec<usize>, k: usize) -> PositiveSelection {
        PositiveSelection {
            positives_per_seed: k,
            seeds: vec![SeedPositives { seed, scores: vec![0.0; ids.len()], ids }],
        }
    }

    #[test]
    fn loss_examples() {
        let z = Array2::from_elem((3, 2), std::f64::consts::FRAC_1_SQRT_2);
        let (l, _) = empirical_loss(&z, &single(0, vec![1], 1), &[(0, 2)]).unwrap();
        assert!((l + 1.0).abs() < 1e-12);

        let e = array![[1.0, 0.0], [0.0, 1.0]];
        let (l, _) = empirical_loss(&e, &single(0, vec![1], 1), &[(0, 1)]).unwrap();
        assert_eq!(l, 0.0);

        let h = 0.5f64;
        let z = array![[1.0, 0.0], [h, (1.0 - h * h).sqrt()]];
        let (l, _) = empirical_loss(&z, &single(0, vec![1], 1), &[(0, 1)]).unwrap();
        assert!((l + 0.75).abs() < 1e-12);

        assert!(empirical_loss(&z, &single(0, vec![], 1), &[(0, 1)]).is_err());
        assert!(empirical_loss(&z, &single(0, vec![1], 1), &[(0, 9)]).is_err());
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        for seed in 0..5 {
            let z = unit_rows(12, 4, seed);
            let mut rng = Seed(seed).named("pairs").rng();
            let seeds = sample_seeds(12, 5, &mut rng).unwrap();
            let selection = PositiveSelection {
                positives_per_seed: 3,
                seeds: seeds
                    .iter()
                    .map(|&s| select_positives(&z, s, &(0..12).collect::<Vec<_>>(), 3))
                    .collect(),
            };
            let negatives = sample_negatives(&seeds, 12, 4, &mut rng);
            let (_, grad) = empirical_loss(&z, &selection, &negatives).unwrap();
            let eps = 1e-6;
            let mut numeric = Array2::zeros(z.dim());
            for idx in 0..z.len() {
                let (i, j) = (idx / 4, idx % 4);
                let mut p = z.clone();
                let mut m = z.clone();
                p[[i, j]] += eps;
                m[[i, j]] -= eps;
                let lp = empirical_loss(&p, &selection, &negatives).unwrap().0;
                let lm = empirical_loss(&m, &selection, &negatives).unwrap().0;
                numeric[[i, j]] = (lp - lm) / (2.0 * eps);
            }
            let diff = (&grad - &numeric).mapv(|v| v * v).sum().sqrt();
            let scale = grad.mapv(|v| v * v).sum().sqrt();
            assert!(diff < 1e-4 * scale, "{diff} vs {scale}");
        }
    }

    proptest! {
        #[test]
        fn positive_term_falls_as_similarity_rises(seed in 0u64..500) {
            let z = unit_rows(8, 3, seed);
            let sel = single(0, vec![1, 2, 3], 3);
            let mean_sim = |z: &Array2<f64>| (1..4).map(|j| z.row(0).dot(&z.row(j))).sum::<f64>() / 3.0;
            let pos_term = |z: &Array2<f64>| {
                let (l, _) = empirical_loss(z, &sel, &[(0, 0)]).unwrap();
                l - z.row(0).dot(&z.row(0)).powi(2)
            };
            let other = unit_rows(8, 3, seed + 1000);
            let a = (mean_sim(&z), pos_term(&z));
            let b = (mean_sim(&other), pos_term(&other));
            prop_assert!((a.1 + 2.0 * a.0).abs() < 1e-12);
            prop_assert_eq!(a.0 < b.0, a.1 > b.1);
        }
    }

    #[test]
    fn positives_stay_within_hop_radius() {
        let ds = synthesize(&SyntheticConfig::binary(120, 6, 2.0, 0.8, 3)).unwrap();
        let z = unit_rows(120, 4, 3);
        let seeds: Vec<usize> = (0..120).step_by(7).collect();
        for hops in 1..=3 {
            let sel = select_all_positives(&ds, &z, &seeds, hops, 4).unwrap();
            for s in &sel.seeds {
                let reach = khop_pool(&ds.graph, &[s.seed], hops).unwrap();
                assert!(s.ids.iter().all(|j| reach.contains(j) && *j != s.seed));
                assert!(s.scores.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    fn tiny() -> (Dataset, TrainConfig) {
        let ds = synthesize(&SyntheticConfig::binary(60, 8, 3.0, 0.9, 4)).unwrap();
        let config = TrainConfig {
            batch_size: 30,
            negatives_per_node: 10,
            epochs: 5,
            embed_dim: 8,
            hidden_dim: 8,
            seed: 9,
            ..TrainConfig::default()
        };
        (ds, config)
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let (ds, config) = tiny();
        let config = TrainConfig { epochs: 0, ..config };
        let out = train(&ds, &config).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.params, init_params(config.seed, config.dims(8)).unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let (ds, config) = tiny();
        let a = train(&ds, &config).unwrap();
        let b = train(&ds, &config).unwrap();
        assert_eq!(a.losses(), b.losses());
        assert_eq!(a.params, b.params);
        assert_eq!(log_csv(&a.log, false), log_csv(&b.log, false));
        let c = train(&ds, &TrainConfig { seed: 10, ..config }).unwrap();
        assert_ne!(a.losses(), c.losses());
    }

    #[test]
    fn batch_is_capped_at_node_count() {
        let (ds, config) = tiny();
        let out = train(&ds, &TrainConfig { batch_size: 10_000, epochs: 2, ..config }).unwrap();
        assert_eq!(out.log.len(), 2);
    }

    #[test]
    fn isolated_batch_is_an_error() {
        let ds = Dataset::new(Graph::empty(4), Array2::eye(4), vec![0, 1, 0, 1]).unwrap();
        let config = TrainConfig { epochs: 1, embed_dim: 2, hidden_dim: 2, ..TrainConfig::default() };
        assert!(train(&ds, &config).is_err());
    }

    #[test]
    fn config_json() {
        let c = TrainConfig::from_json(r#"{"epochs": 3, "seed": 4}"#).unwrap();
        assert_eq!((c.epochs, c.seed, c.batch_size), (3, 4, 512));
        assert!(TrainConfig::from_json(r#"{"epoch": 3}"#).is_err());
        assert!(TrainConfig::from_json(r#"{"hops": 0}"#).is_err());
        let round = TrainConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn log_header_and_rows() {
        let log = [EpochRecord { epoch: 0, loss: -0.5, seconds: 1.25 }];
        assert_eq!(log_csv(&log, false), format!("epoch,loss,seconds\n0,{},{}\n", crate::numfmt::real(-0.5), crate::numfmt::real(0.0)));
        assert!(log_csv(&log, true).contains(&crate::numfmt::real(1.25)));
    }
}
