//! Dense spectral tools: normalized Laplacians, symmetric eigendecomposition,
//! frequency-band components and the band / feature-frequency distances used
//! to measure what an augmentation changes.

use ndarray::{Array1, Array2, Axis};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numfmt;

/// Largest node count accepted by the dense routines.
pub const DENSE_LIMIT: usize = 10_000;

pub const DEFAULT_BANDS: usize = 10;

const SYMMETRY_TOL: f64 = 1e-10;

/// Square matrix that is symmetric within `1e-10` elementwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix(Array2<f64>);

impl DenseSymMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::shape(format!("matrix is {r} x {c}, not square")));
        }
        for i in 0..r {
            for j in (i + 1)..r {
                if (values[[i, j]] - values[[j, i]]).abs() > SYMMETRY_TOL {
                    return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DenseSymMatrix(values))
    }

    pub fn zeros(order: usize) -> Self {
        DenseSymMatrix(Array2::zeros((order, order)))
    }

    pub fn identity(order: usize) -> Self {
        DenseSymMatrix(Array2::eye(order))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frobenius_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn guard(num_nodes: usize) -> Result<()> {
    if num_nodes > DENSE_LIMIT {
        return Err(Error::TooLarge { num_nodes, limit: DENSE_LIMIT });
    }
    Ok(())
}

fn inv_sqrt_degrees(graph: &Graph) -> Vec<f64> {
    graph
        .degrees()
        .into_iter()
        .map(|d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect()
}

/// `D^-1/2 A D^-1/2`, with `d^-1/2 = 0` for isolated nodes.
pub fn sym_adjacency(graph: &Graph) -> Result<DenseSymMatrix> {
    let n = graph.num_nodes();
    guard(n)?;
    let s = inv_sqrt_degrees(graph);
    let mut a = Array2::zeros((n, n));
    for u in 0..n {
        for &v in graph.neighbors(u) {
            a[[u, v]] = s[u] * s[v];
        }
    }
    Ok(DenseSymMatrix(a))
}

/// `D^-1/2 (D - A) D^-1/2`. Isolated nodes get an all-zero row and column.
pub fn sym_laplacian(graph: &Graph) -> Result<DenseSymMatrix> {
    let n = graph.num_nodes();
    let mut l = sym_adjacency(graph)?.0.mapv(|x| -x);
    for i in 0..n {
        if graph.degree(i) > 0 {
            l[[i, i]] = 1.0;
        }
    }
    Ok(DenseSymMatrix(l))
}

/// Normalized Laplacian of a dense non-negative weight matrix, diagonal
/// included as self-loop weight: `D^-1/2 (D - W) D^-1/2` with `D = diag(W 1)`.
pub fn sym_laplacian_weighted(weights: &DenseSymMatrix) -> Result<DenseSymMatrix> {
    let w = weights.values();
    let n = w.nrows();
    guard(n)?;
    let s: Vec<f64> = w
        .sum_axis(Axis(1))
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let lap = if i == j { w.row(i).sum() - w[[i, i]] } else { -w[[i, j]] };
            l[[i, j]] = s[i] * lap * s[j];
        }
    }
    // Elementwise products can differ in the last bit across the diagonal.
    let sym = (&l + &l.t()) * 0.5;
    Ok(DenseSymMatrix(sym))
}

/// Eigenpairs in ascending eigenvalue order; column `i` of `eigenvectors`
/// pairs with `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `U diag(f(lambda)) U^T`.
    pub fn compose(&self, f: impl Fn(usize, f64) -> f64) -> Array2<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
            col *= f(k, self.eigenvalues[k]);
        }
        scaled.dot(&self.eigenvectors.t())
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        self.compose(|_, l| l)
    }
}

fn to_nalgebra(m: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    let (r, c) = m.dim();
    nalgebra::DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

/// Symmetric eigendecomposition (Householder tridiagonalization followed by
/// implicit QR).
pub fn eigendecompose(matrix: &DenseSymMatrix) -> Result<EigenDecomposition> {
    let n = matrix.order();
    guard(n)?;
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Array1::zeros(0),
            eigenvectors: Array2::zeros((0, 0)),
        });
    }
    let max_iter = 1000 * n.max(10);
    let eig = nalgebra::SymmetricEigen::try_new(to_nalgebra(matrix.values()), f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence { iterations: max_iter })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = Array2::from_shape_fn((n, n), |(i, k)| eig.eigenvectors[(i, order[k])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Zero-based band holding `lambda` when `[0, lambda_max]` is cut into
/// `num_bands` equal intervals, each closed on the left and open on the
/// right except the last, which is closed. Values below zero go to the first
/// band and values above `lambda_max` to the last.
pub fn band_of(lambda: f64, lambda_max: f64, num_bands: usize) -> usize {
    for m in 1..num_bands {
        if lambda < lambda_max * m as f64 / num_bands as f64 {
            return m - 1;
        }
    }
    num_bands - 1
}

fn check_band_count(num_bands: usize) -> Result<()> {
    if num_bands == 0 {
        return Err(Error::invalid("band count must be at least 1"));
    }
    Ok(())
}

/// Component `U Lambda^m U^T` for band `band` in `1..=num_bands`, with the
/// band edges scaled by the decomposition's own largest eigenvalue.
pub fn band_component(eig: &EigenDecomposition, band: usize, num_bands: usize) -> Result<Array2<f64>> {
    band_component_scaled(eig, band, num_bands, eig.max_eigenvalue())
}

pub fn band_component_scaled(
    eig: &EigenDecomposition,
    band: usize,
    num_bands: usize,
    lambda_max: f64,
) -> Result<Array2<f64>> {
    check_band_count(num_bands)?;
    if band == 0 || band > num_bands {
        return Err(Error::invalid(format!("band {band} outside 1..={num_bands}")));
    }
    Ok(eig.compose(|_, l| {
        if band_of(l, lambda_max, num_bands) == band - 1 {
            l
        } else {
            0.0
        }
    }))
}

/// All `num_bands` components at once.
pub fn band_components(eig: &EigenDecomposition, num_bands: usize, lambda_max: f64) -> Result<Vec<Array2<f64>>> {
    check_band_count(num_bands)?;
    let n = eig.order();
    let mut parts = vec![Array2::zeros((n, n)); num_bands];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_bands];
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        members[band_of(l, lambda_max, num_bands)].push(k);
    }
    for (part, idx) in parts.iter_mut().zip(&members) {
        if idx.is_empty() {
            continue;
        }
        let u = eig.eigenvectors.select(Axis(1), idx);
        let mut scaled = u.clone();
        for (c, &k) in idx.iter().enumerate() {
            scaled.column_mut(c).mapv_inplace(|x| x * eig.eigenvalues[k]);
        }
        *part = scaled.dot(&u.t());
    }
    Ok(parts)
}

/// Which largest eigenvalue sets the band edges of the augmented graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandScale {
    /// Each graph uses its own largest eigenvalue.
    #[default]
    Own,
    /// Both graphs use the original graph's largest eigenvalue.
    Original,
}

/// Per-band Frobenius distances between two decomposed Laplacians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandProfile {
    pub distances: Vec<f64>,
}

impl BandProfile {
    pub fn num_bands(&self) -> usize {
        self.distances.len()
    }

    /// Mean over the 1-based inclusive band range `first..=last`.
    pub fn mean_over(&self, first: usize, last: usize) -> f64 {
        let slice = &self.distances[first - 1..last];
        slice.iter().sum::<f64>() / slice.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("band,distance\n");
        for (m, d) in self.distances.iter().enumerate() {
            out.push_str(&format!("{},{}\n", m + 1, numfmt::real(*d)));
        }
        out
    }
}

pub fn band_distance_profile(g: &Graph, g_aug: &Graph, num_bands: usize) -> Result<BandProfile> {
    band_distance_profile_with(g, g_aug, num_bands, BandScale::Own)
}

pub fn band_distance_profile_with(
    g: &Graph,
    g_aug: &Graph,
    num_bands: usize,
    scale: BandScale,
) -> Result<BandProfile> {
    if g.num_nodes() != g_aug.num_nodes() {
        return Err(Error::shape(format!(
            "node counts differ: {} vs {}",
            g.num_nodes(),
            g_aug.num_nodes()
        )));
    }
    laplacian_band_profile(&sym_laplacian(g)?, &sym_laplacian(g_aug)?, num_bands, scale)
}

/// Band profile between two Laplacian-like matrices (e.g. a graph and a
/// diffusion of it).
pub fn laplacian_band_profile(
    original: &DenseSymMatrix,
    augmented: &DenseSymMatrix,
    num_bands: usize,
    scale: BandScale,
) -> Result<BandProfile> {
    check_band_count(num_bands)?;
    if original.order() != augmented.order() {
        return Err(Error::shape("matrices have different orders"));
    }
    let e1 = eigendecompose(original)?;
    let e2 = eigendecompose(augmented)?;
    let max1 = e1.max_eigenvalue();
    let max2 = match scale {
        BandScale::Own => e2.max_eigenvalue(),
        BandScale::Original => max1,
    };
    let p1 = band_components(&e1, num_bands, max1)?;
    let p2 = band_components(&e2, num_bands, max2)?;
    let distances = p1.iter().zip(&p2).map(|(a, b)| frobenius_distance(a, b)).collect();
    Ok(BandProfile { distances })
}

/// Row-wise unitary DFT along the feature axis.
pub fn feature_spectrum(x: &Array2<f64>) -> Array2<Complex64> {
    let (n, f) = x.dim();
    let mut out = Array2::from_elem((n, f), Complex64::new(0.0, 0.0));
    if f == 0 {
        return out;
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(f);
    let scale = 1.0 / (f as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); f];
    for (i, row) in x.rows().into_iter().enumerate() {
        for (b, &v) in buf.iter_mut().zip(row.iter()) {
            *b = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (j, b) in buf.iter().enumerate() {
            out[[i, j]] = b * scale;
        }
    }
    out
}

fn inverse_real(h: &Array2<Complex64>) -> Array2<f64> {
    let (n, f) = h.dim();
    let mut out = Array2::zeros((n, f));
    if f == 0 {
        return out;
    }
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(f);
    let scale = 1.0 / (f as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); f];
    for i in 0..n {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = h[[i, j]];
        }
        ifft.process(&mut buf);
        for (j, b) in buf.iter().enumerate() {
            out[[i, j]] = b.re * scale;
        }
    }
    out
}

/// Splits `x` into low- and high-frequency parts. Frequency columns
/// `1..=cutoff` (1-based) are low, the rest high; each part is the real
/// part of its inverse transform, so `low + high == x`.
pub fn feature_dft_split(x: &Array2<f64>, cutoff: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let f = x.ncols();
    if cutoff > f {
        return Err(Error::invalid(format!("cutoff {cutoff} exceeds feature dim {f}")));
    }
    let h = feature_spectrum(x);
    let mut low = h.clone();
    let mut high = h;
    for j in 0..f {
        if j < cutoff {
            high.column_mut(j).fill(Complex64::new(0.0, 0.0));
        } else {
            low.column_mut(j).fill(Complex64::new(0.0, 0.0));
        }
    }
    Ok((inverse_real(&low), inverse_real(&high)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureDistance {
    pub f_low: f64,
    pub f_high: f64,
}

pub fn feature_band_distance(x: &Array2<f64>, x_aug: &Array2<f64>, cutoff: usize) -> Result<FeatureDistance> {
    if x.dim() != x_aug.dim() {
        return Err(Error::shape(format!("{:?} vs {:?}", x.dim(), x_aug.dim())));
    }
    let (l1, h1) = feature_dft_split(x, cutoff)?;
    let (l2, h2) = feature_dft_split(x_aug, cutoff)?;
    Ok(FeatureDistance {
        f_low: frobenius_distance(&l1, &l2),
        f_high: frobenius_distance(&h1, &h2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    use crate::rng::Seed;

    fn p2() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = Seed(seed).rng();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(sym_laplacian(&p2()).unwrap().values(), &array![[1.0, -1.0], [-1.0, 1.0]]);
        let l = sym_laplacian(&triangle()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { -0.5 };
                assert_abs_diff_eq!(l.values()[[i, j]], expected, epsilon = 1e-15);
            }
        }
        let e = eigendecompose(&l).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[2], 1.5, epsilon = 1e-12);

        let with_isolated = Graph::from_edges(3, [(0, 1)]).unwrap();
        let l = sym_laplacian(&with_isolated).unwrap();
        assert!(l.values().row(2).iter().all(|&x| x == 0.0));
        assert!(l.values().column(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn eigen_examples() {
        let e = eigendecompose(&sym_laplacian(&p2()).unwrap()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues[1], 2.0, epsilon = 1e-12);
        let e = eigendecompose(&DenseSymMatrix::identity(4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));
        let e = eigendecompose(&DenseSymMatrix::zeros(3)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn non_symmetric_input_rejected() {
        assert!(DenseSymMatrix::new(array![[0.0, 1.0], [0.0, 0.0]]).is_err());
        assert!(DenseSymMatrix::new(Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for seed in 0..5 {
            let g = random_graph(40, 0.15, seed);
            let l = sym_laplacian(&g).unwrap();
            let e = eigendecompose(&l).unwrap();
            let rel = frobenius_distance(&e.reconstruct(), l.values()) / l.frobenius_norm().max(1.0);
            assert!(rel < 1e-8, "reconstruction error {rel}");
            let gram = e.eigenvectors.t().dot(&e.eigenvectors);
            assert!(frobenius_distance(&gram, &Array2::eye(40)) < 1e-8);
            assert!(e.eigenvalues.windows(2).into_iter().all(|w| w[0] <= w[1]));
            assert!(e.eigenvalues.iter().all(|&l| (-1e-8..=2.0 + 1e-8).contains(&l)));
        }
    }

    #[test]
    fn band_examples() {
        let l = sym_laplacian(&p2()).unwrap();
        let e = eigendecompose(&l).unwrap();
        let b1 = band_component(&e, 1, 2).unwrap();
        let b2 = band_component(&e, 2, 2).unwrap();
        assert!(frobenius(&b1) < 1e-12);
        assert!(frobenius_distance(&b2, l.values()) < 1e-12);

        let l = sym_laplacian(&triangle()).unwrap();
        let e = eigendecompose(&l).unwrap();
        let single = band_component(&e, 1, 1).unwrap();
        assert!(frobenius_distance(&single, l.values()) < 1e-12);
        // lambda_max = 1.5 sits in the closed last band of ten.
        for m in 1..=10 {
            let part = band_component(&e, m, 10).unwrap();
            if m == 10 {
                assert!(frobenius_distance(&part, l.values()) < 1e-12);
            } else {
                assert!(frobenius(&part) < 1e-12, "band {m} not empty");
            }
        }
        assert!(band_component(&e, 0, 10).is_err());
        assert!(band_component(&e, 11, 10).is_err());
    }

    #[test]
    fn band_assignment_edges() {
        assert_eq!(band_of(0.0, 2.0, 2), 0);
        assert_eq!(band_of(1.0, 2.0, 2), 1);
        assert_eq!(band_of(2.0, 2.0, 2), 1);
        assert_eq!(band_of(-1e-15, 2.0, 10), 0);
        assert_eq!(band_of(0.0, 0.0, 5), 4);
        assert_eq!(band_of(3.0, 2.0, 4), 3);
    }

    #[test]
    fn bands_sum_to_laplacian_and_are_orthogonal() {
        for seed in 0..4 {
            let g = random_graph(60, 0.1, 10 + seed);
            let l = sym_laplacian(&g).unwrap();
            let e = eigendecompose(&l).unwrap();
            for m in [1, 2, 5, 10] {
                let parts = band_components(&e, m, e.max_eigenvalue()).unwrap();
                let total = parts.iter().fold(Array2::zeros((60, 60)), |acc, p| acc + p);
                assert!(frobenius_distance(&total, l.values()) < 1e-8);
                for a in 0..m {
                    for b in 0..m {
                        if a != b {
                            assert!(frobenius(&parts[a].dot(&parts[b])) <= 1e-6);
                        }
                    }
                }
                let one = band_component(&e, m, m).unwrap();
                assert!(frobenius_distance(&one, &parts[m - 1]) < 1e-10);
            }
        }
    }

    #[test]
    fn profile_examples() {
        let g = random_graph(30, 0.2, 3);
        let p = band_distance_profile(&g, &g, 10).unwrap();
        assert_eq!(p.num_bands(), 10);
        assert!(p.distances.iter().all(|&d| d == 0.0));

        let p = band_distance_profile(&p2(), &Graph::empty(2), 2).unwrap();
        assert_abs_diff_eq!(p.distances[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.distances[1], 2.0, epsilon = 1e-12);
        assert!(band_distance_profile(&p2(), &Graph::empty(3), 2).is_err());

        let csv = p.to_csv();
        assert!(csv.starts_with("band,distance\n1,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn weighted_laplacian_of_adjacency_matches_graph_laplacian() {
        let g = random_graph(25, 0.3, 8);
        let a = Array2::from_shape_fn((25, 25), |(i, j)| if g.contains_edge(i, j) { 1.0 } else { 0.0 });
        let lw = sym_laplacian_weighted(&DenseSymMatrix::new(a).unwrap()).unwrap();
        let l = sym_laplacian(&g).unwrap();
        assert!(frobenius_distance(lw.values(), l.values()) < 1e-12);
    }

    fn random_matrix(n: usize, f: usize, seed: u64) -> Array2<f64> {
        let mut rng = Seed(seed).rng();
        Array2::from_shape_fn((n, f), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn dft_split_examples() {
        let constant = Array2::from_elem((3, 8), 2.5);
        let (low, high) = feature_dft_split(&constant, 1).unwrap();
        assert!(frobenius(&high) < 1e-12);
        assert!(frobenius_distance(&low, &constant) < 1e-12);

        let zero = Array2::<f64>::zeros((4, 6));
        let (low, high) = feature_dft_split(&zero, 3).unwrap();
        assert_eq!(frobenius(&low) + frobenius(&high), 0.0);

        let x = random_matrix(5, 9, 1);
        let (low, high) = feature_dft_split(&x, 9).unwrap();
        assert!(frobenius_distance(&low, &x) < 1e-12);
        assert!(frobenius(&high) < 1e-12);
        assert!(feature_dft_split(&x, 10).is_err());
    }

    #[test]
    fn dft_split_reconstructs_and_splits_energy() {
        let x = random_matrix(7, 16, 2);
        let h = feature_spectrum(&x);
        let total: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(total, x.iter().map(|v| v * v).sum::<f64>(), epsilon = 1e-10);
        for r in 0..=16 {
            let (low, high) = feature_dft_split(&x, r).unwrap();
            assert!(frobenius_distance(&(&low + &high), &x) < 1e-8);
            let lo: f64 = h.columns().into_iter().take(r).flatten().map(|c| c.norm_sqr()).sum();
            let hi: f64 = h.columns().into_iter().skip(r).flatten().map(|c| c.norm_sqr()).sum();
            assert_abs_diff_eq!(lo + hi, total, epsilon = 1e-10);
        }
    }

    #[test]
    fn feature_distance_examples() {
        let x = random_matrix(6, 16, 4);
        let d = feature_band_distance(&x, &x, 4).unwrap();
        assert_eq!((d.f_low, d.f_high), (0.0, 0.0));
        assert!(feature_band_distance(&x, &random_matrix(6, 15, 4), 4).is_err());

        // A real perturbation whose spectrum lives only on frequencies
        // 4..=12 (0-based), a set closed under k -> F - k and disjoint from
        // the low columns 0..4.
        let f = 16;
        let mut rng = Seed(5).rng();
        let pert = Array2::from_shape_fn((6, f), |(_, j)| {
            let t = j as f64 / f as f64 * std::f64::consts::TAU;
            (4.0 * t).cos() + 0.5 * (7.0 * t).sin() + 0.25 * (8.0 * t).cos()
        }) * rng.random_range(0.5..2.0);
        let (pert_low, _) = feature_dft_split(&pert, 4).unwrap();
        assert!(frobenius(&pert_low) < 1e-12);
        let d = feature_band_distance(&x, &(&x + &pert), 4).unwrap();
        assert!(d.f_low <= 1e-8, "f_low = {}", d.f_low);
        assert!(d.f_high > 0.1);
    }
}
