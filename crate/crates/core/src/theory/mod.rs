//! Numerical checks of the theory behind augmentation-free contrastive
//! learning: the transformed graph of selected positives, its equivalence
//! with low-rank matrix factorization, embedding concentration and the
//! downstream error bound.

mod bound;
mod concentration;

pub use bound::{theorem2_experiment, theorem2_report, BoundReport};
pub use concentration::{
    concentration_experiment, mean_aggregate, similarity_concentration_experiment, ConcentrationRow,
    SimilarityReport, EXPERIMENT_WIDTH,
};

use ndarray::Array2;
use rand_distr::StandardNormal;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{normalize_rows, Graph};
use crate::rng::Seed;
use crate::spectral::{eigendecompose, frobenius, frobenius_distance, sym_adjacency, DenseSymMatrix};
use crate::training::PositiveSelection;

/// Graph on the original node set whose edges are the selected
/// (seed, positive) pairs, symmetrized and deduplicated.
pub fn build_transformed_graph(selection: &PositiveSelection, num_nodes: usize) -> Result<Graph> {
    let edges = selection
        .seeds
        .iter()
        .flat_map(|s| s.ids.iter().map(move |&j| (s.seed, j)));
    Graph::from_edges(num_nodes, edges)
}

/// `‖Â − F Fᵀ‖²_F`.
pub fn mf_loss(a_hat: &DenseSymMatrix, f: &Array2<f64>) -> Result<f64> {
    if f.nrows() != a_hat.order() {
        return Err(Error::shape(format!(
            "factor has {} rows for a matrix of order {}",
            f.nrows(),
            a_hat.order()
        )));
    }
    let d = frobenius_distance(a_hat.values(), &f.dot(&f.t()));
    Ok(d * d)
}

/// Best rank-`k` PSD factor `F` of `a` and its loss. `F Fᵀ` can only carry
/// non-negative eigenvalues, so the top `k` eigenvalues by value are kept and
/// negative ones are always discarded.
pub fn mf_optimum(a: &DenseSymMatrix, k: usize) -> Result<(Array2<f64>, f64)> {
    let eig = eigendecompose(a)?;
    let n = a.order();
    let k = k.min(n);
    let mut f = Array2::zeros((n, k));
    let mut discarded = 0.0;
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let rank_from_top = n - 1 - idx;
        if rank_from_top < k && lambda > 0.0 {
            f.column_mut(rank_from_top).assign(&(&eig.eigenvectors.column(idx) * lambda.sqrt()));
        } else {
            discarded += lambda * lambda;
        }
    }
    Ok((f, discarded))
}

/// Spectral contrastive loss with exact expectations over the graph:
/// `E_{i,j ~ Uni(V)} (z_i·z_j)² − 2 E_{i ~ Uni(V), i+ ~ Uni(N(i))} z_i·z_{i+}`.
pub fn population_contrastive_loss(graph: &Graph, z: &Array2<f64>) -> Result<f64> {
    let n = graph.num_nodes();
    if z.nrows() != n || n == 0 {
        return Err(Error::shape("embedding rows must match a non-empty graph"));
    }
    if let Some(i) = (0..n).find(|&i| graph.degree(i) == 0) {
        return Err(Error::invalid(format!("node {i} has no positives")));
    }
    let gram = z.dot(&z.t());
    let uniform = gram.iter().map(|g| g * g).sum::<f64>() / (n * n) as f64;
    let positive = (0..n)
        .map(|i| graph.neighbors(i).iter().map(|&j| gram[[i, j]]).sum::<f64>() / graph.degree(i) as f64)
        .sum::<f64>()
        / n as f64;
    Ok(uniform - 2.0 * positive)
}

/// Symmetrically normalized probability adjacency `ŵ_ij / sqrt(ŵ_i ŵ_j)`
/// with `ŵ_ij = A_ij / Σ A`.
pub fn probability_adjacency_sym(graph: &Graph) -> Result<DenseSymMatrix> {
    let n = graph.num_nodes();
    let total = (2 * graph.num_edges()) as f64;
    let mut w = Array2::zeros((n, n));
    if total > 0.0 {
        let marginal: Vec<f64> = (0..n).map(|i| graph.degree(i) as f64 / total).collect();
        for (u, v) in graph.edges() {
            let x = (1.0 / total) / (marginal[u] * marginal[v]).sqrt();
            w[[u, v]] = x;
            w[[v, u]] = x;
        }
    }
    DenseSymMatrix::new(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// `max_t |d(F_t) − d(F_1)|` with `d = mf_loss − population loss`.
    pub max_deviation: f64,
    /// `d(F_1)`.
    pub constant: f64,
    /// `‖Â_sym‖²_F`, the constant the difference should equal.
    pub expected_constant: f64,
    /// `max |Ŵ_sym − Â_sym|`.
    pub probability_adjacency_gap: f64,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.max_deviation <= 1e-8 && self.probability_adjacency_gap <= 1e-12
    }
}

pub const EQUIVALENCE_WIDTH: usize = 8;

fn random_unit_rows(n: usize, k: usize, seed: Seed) -> Array2<f64> {
    let mut rng = seed.rng();
    normalize_rows(&Array2::from_shape_fn((n, k), |_| rng.sample(StandardNormal)))
}

fn regular_degree(graph: &Graph) -> Result<usize> {
    let degrees = graph.degrees();
    let (lo, hi) = (
        degrees.iter().copied().min().unwrap_or(0),
        degrees.iter().copied().max().unwrap_or(0),
    );
    if lo != hi || lo == 0 {
        return Err(Error::NotRegular(format!(
            "degrees range over [{lo}, {hi}]; absorbing the node weights into the encoder needs one common positive degree"
        )));
    }
    Ok(lo)
}

/// `d(F) = mf_loss(a_mf, F) − L_pop(Z)` for `trials` random unit-row `Z`
/// with `F_i = sqrt(deg_i / Σ deg) Z_i`; returns `(max deviation, d(F_1))`.
pub fn equivalence_deviation(a_mf: &DenseSymMatrix, graph: &Graph, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let n = graph.num_nodes();
    let total = (2 * graph.num_edges()) as f64;
    let root = Seed(seed).named("equivalence");
    let mut first = None;
    let mut max_dev = 0.0f64;
    for t in 0..trials {
        let z = random_unit_rows(n, EQUIVALENCE_WIDTH, root.child(t as u64));
        let mut f = z.clone();
        for (i, mut row) in f.rows_mut().into_iter().enumerate() {
            row *= (graph.degree(i) as f64 / total).sqrt();
        }
        let d = mf_loss(a_mf, &f)? - population_contrastive_loss(graph, &z)?;
        let d0 = *first.get_or_insert(d);
        max_dev = max_dev.max((d - d0).abs());
    }
    Ok((max_dev, first.expect("trials > 0")))
}

/// Checks that the factorization loss and the population contrastive loss
/// differ by a constant on a regular transformed graph.
pub fn check_equivalence(graph: &Graph, trials: usize, seed: u64) -> Result<EquivalenceReport> {
    regular_degree(graph)?;
    let a = sym_adjacency(graph)?;
    let w = probability_adjacency_sym(graph)?;
    let gap = (a.values() - w.values()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (max_deviation, constant) = equivalence_deviation(&a, graph, trials, seed)?;
    Ok(EquivalenceReport {
        max_deviation,
        constant,
        expected_constant: frobenius(a.values()).powi(2),
        probability_adjacency_gap: gap,
    })
}

/// The circulant graph joining each node to its `k` nearest ring neighbours
/// on either side: a `2k`-regular transformed graph where every seed picked
/// exactly `2k` positives.
pub fn circulant_graph(n: usize, k: usize) -> Result<Graph> {
    if 2 * k >= n {
        return Err(Error::invalid(format!("circulant offset {k} too large for {n} nodes")));
    }
    Graph::from_edges(n, (0..n).flat_map(|i| (1..=k).map(move |o| (i, (i + o) % n))))
}

/// Luxemburg norm: smallest `t` with `mean(exp((|x|/t)^p)) ≤ 2`, found by
/// bisection.
pub fn orlicz_norm(samples: &[f64], p: f64) -> f64 {
    let max = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 || samples.is_empty() {
        return 0.0;
    }
    let moment = |t: f64| samples.iter().map(|x| (x.abs() / t).powf(p).exp()).sum::<f64>() / samples.len() as f64;
    // every term is at most 2 here
    let mut hi = max / std::f64::consts::LN_2.powf(1.0 / p);
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moment(mid) <= 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

/// Minimum over columns of `orlicz_norm(column, p)`.
pub fn min_column_orlicz(x: &Array2<f64>, p: f64) -> f64 {
    x.columns()
        .into_iter()
        .map(|c| orlicz_norm(&c.to_vec(), p))
        .fold(f64::INFINITY, f64::min)
}

/// Features minus the mean of their class, column by column.
pub fn class_centered(x: &Array2<f64>, labels: &[usize], num_classes: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((num_classes, x.ncols()));
    let mut counts = vec![0usize; num_classes];
    for (row, &y) in x.rows().into_iter().zip(labels) {
        sums.row_mut(y).scaled_add(1.0, &row);
        counts[y] += 1;
    }
    let mut out = x.clone();
    for (mut row, &y) in out.rows_mut().into_iter().zip(labels) {
        row.scaled_add(-1.0 / counts[y] as f64, &sums.row(y));
    }
    out
}

/// Largest singular value.
pub fn sigma_max(w: &Array2<f64>) -> Result<f64> {
    let gram = w.t().dot(w);
    let sym = (&gram + &gram.t()) * 0.5;
    Ok(eigendecompose(&DenseSymMatrix::new(sym)?)?.max_eigenvalue().max(0.0).sqrt())
}

/// Number of connected components.
pub fn connected_components(graph: &Graph) -> usize {
    let n = graph.num_nodes();
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in graph.neighbors(u) {
                if !std::mem::replace(&mut seen[v], true) {
                    stack.push(v);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{edge_homophily, SyntheticConfig};
    use crate::training::SeedPositives;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn selection(entries: &[(usize, &[usize])]) -> PositiveSelection {
        PositiveSelection {
            positives_per_seed: entries.iter().map(|e| e.1.len()).max().unwrap_or(1),
            seeds: entries
                .iter()
                .map(|(s, ids)| SeedPositives { seed: *s, ids: ids.to_vec(), scores: vec![0.0; ids.len()] })
                .collect(),
        }
    }

    #[test]
    fn transformed_graph_examples() {
        let g = build_transformed_graph(&selection(&[(0, &[1, 2])]), 4).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
        assert_eq!(build_transformed_graph(&selection(&[]), 3).unwrap().num_edges(), 0);
        let g = build_transformed_graph(&selection(&[(0, &[1]), (1, &[0])]), 2).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert!(build_transformed_graph(&selection(&[(0, &[5])]), 3).is_err());
    }

    #[test]
    fn mf_loss_examples() {
        let a = sym_adjacency(&Graph::from_edges(2, [(0, 1)]).unwrap()).unwrap();
        assert_eq!(a.values(), &array![[0.0, 1.0], [1.0, 0.0]]);
        assert!((mf_loss(&a, &array![[1.0, 0.0], [1.0, 0.0]]).unwrap() - 2.0).abs() < 1e-15);
        let g = circulant_graph(12, 2).unwrap();
        let a = sym_adjacency(&g).unwrap();
        assert!((mf_loss(&a, &Array2::zeros((12, 3))).unwrap() - a.frobenius_norm().powi(2)).abs() < 1e-12);
        assert!(mf_loss(&a, &Array2::zeros((11, 3))).is_err());
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = Seed(seed).rng();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn eckart_young_optimum_is_attained_and_not_beaten() {
        for seed in 0..5 {
            let g = random_graph(20, 0.25, seed);
            let a = sym_adjacency(&g).unwrap();
            let eig = eigendecompose(&a).unwrap();
            for k in [1, 3, 6] {
                let (f, opt) = mf_optimum(&a, k).unwrap();
                // oracle: squared eigenvalues outside the k largest positive ones
                let mut vals: Vec<f64> = eig.eigenvalues.to_vec();
                vals.sort_by(|x, y| y.total_cmp(x));
                let kept: f64 = vals.iter().take(k).filter(|&&l| l > 0.0).map(|l| l * l).sum();
                let expect: f64 = vals.iter().map(|l| l * l).sum::<f64>() - kept;
                assert!((opt - expect).abs() < 1e-6);
                assert!((mf_loss(&a, &f).unwrap() - opt).abs() < 1e-6);
                let mut rng = Seed(seed * 10 + k as u64).rng();
                for _ in 0..20 {
                    let r = &f + &Array2::from_shape_fn(f.dim(), |_| rng.random_range(-0.05..0.05));
                    assert!(mf_loss(&a, &r).unwrap() >= opt - 1e-9);
                }
            }
        }
    }

    #[test]
    fn equivalence_holds_on_regular_graph() {
        let g = circulant_graph(30, 2).unwrap();
        let report = check_equivalence(&g, 10, 1).unwrap();
        assert!(report.max_deviation <= 1e-8, "{report:?}");
        assert!(report.probability_adjacency_gap <= 1e-12);
        assert!((report.constant - report.expected_constant).abs() < 1e-9);
        assert!(report.holds());
    }

    #[test]
    fn equivalence_breaks_for_perturbed_target() {
        let g = circulant_graph(30, 2).unwrap();
        let a = sym_adjacency(&g).unwrap();
        let mut rng = Seed(3).rng();
        let noise = Array2::from_shape_fn((30, 30), |_| rng.random_range(-0.1..0.1));
        let perturbed = DenseSymMatrix::new(a.values() + &((&noise + &noise.t()) * 0.5)).unwrap();
        let (dev, _) = equivalence_deviation(&perturbed, &g, 10, 1).unwrap();
        assert!(dev > 1e-3, "{dev}");
    }

    #[test]
    fn equivalence_rejects_irregular_graph() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(matches!(check_equivalence(&g, 3, 0), Err(Error::NotRegular(_))));
    }

    #[test]
    fn probability_adjacency_matches_sym_adjacency_without_isolated_nodes() {
        for seed in 0..5 {
            let ds = crate::graph::synthesize(&SyntheticConfig::binary(40, 4, 2.0, 0.7, seed)).unwrap();
            let g = &ds.graph;
            let a = sym_adjacency(g).unwrap();
            let w = probability_adjacency_sym(g).unwrap();
            assert!(frobenius_distance(a.values(), w.values()) < 1e-12);
            let _ = edge_homophily(g, &ds.labels).unwrap();
        }
    }

    #[test]
    fn orlicz_norms_of_known_samples() {
        // constant |x| = c: exp((c/t)^p) = 2 at t = c / ln2^(1/p)
        let c = 0.7;
        for p in [1.0, 2.0] {
            let t = orlicz_norm(&[c, -c, c], p);
            assert!((t - c / std::f64::consts::LN_2.powf(1.0 / p)).abs() < 1e-12);
        }
        assert_eq!(orlicz_norm(&[0.0, 0.0], 2.0), 0.0);
        // Gaussian with variance s^2: ψ2 = s sqrt(8/3)
        let mut rng = Seed(1).rng();
        let s = 0.3;
        let x: Vec<f64> = (0..200_000).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
        let t = orlicz_norm(&x, 2.0);
        assert!((t / (s * (8.0f64 / 3.0).sqrt()) - 1.0).abs() < 0.02, "{t}");
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert!((orlicz_norm(&sq, 1.0) - t * t).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn orlicz_norm_is_homogeneous(v in prop::collection::vec(-5.0f64..5.0, 1..30), s in 0.1f64..10.0) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
            let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
            let a = orlicz_norm(&v, 2.0);
            prop_assert!((orlicz_norm(&scaled, 2.0) - s * a).abs() < 1e-9 * s * a.max(1.0));
        }

        #[test]
        fn transformed_graph_is_valid(seed in 0u64..200) {
            let mut rng = Seed(seed).rng();
            let n = 15;
            let mut entries: Vec<(usize, Vec<usize>)> = Vec::new();
            for s in 0..n {
                if rng.random::<bool>() {
                    let ids = (0..3).map(|_| rng.random_range(0..n)).filter(|&j| j != s).collect();
                    entries.push((s, ids));
                }
            }
            let sel = PositiveSelection {
                positives_per_seed: 3,
                seeds: entries.iter().map(|(s, ids)| SeedPositives { seed: *s, ids: ids.clone(), scores: vec![0.0; ids.len()] }).collect(),
            };
            let g = build_transformed_graph(&sel, n).unwrap();
            prop_assert!(g.validate().is_ok());
            prop_assert!(g.num_edges() <= sel.num_pairs());
        }
    }

    #[test]
    fn sigma_max_of_diagonal() {
        assert!((sigma_max(&array![[3.0, 0.0], [0.0, -4.0], [0.0, 0.0]]).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn components_and_first_nonzero_eigenvalue() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(connected_components(&g), 3);
        let g = random_graph(30, 0.2, 4);
        assert_eq!(connected_components(&g), 1);
        let eig = eigendecompose(&crate::spectral::sym_laplacian(&g).unwrap()).unwrap();
        assert!(eig.eigenvalues[0].abs() < 1e-10);
        assert!(eig.eigenvalues[1] > 1e-6);
    }

    #[test]
    fn class_centering_zeroes_class_means() {
        let x = array![[1.0, 2.0], [3.0, 6.0], [10.0, 0.0]];
        let c = class_centered(&x, &[0, 0, 1], 2);
        assert_eq!(c, array![[-1.0, -2.0], [1.0, 2.0], [0.0, 0.0]]);
    }
}
