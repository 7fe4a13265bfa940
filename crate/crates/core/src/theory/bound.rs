//! Downstream error bound for the transformed graph of selected positives.

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::Serialize;

use super::{build_transformed_graph, class_centered, connected_components, min_column_orlicz, sigma_max};
use crate::error::{Error, Result};
use crate::graph::{edge_homophily, Dataset};
use crate::model::{ModelParams, Mode};
use crate::spectral::{eigendecompose, sym_laplacian};
use crate::training::{embed, prepare, select_all_positives, train_with_mode, PositiveSelection, TrainConfig};

/// Eigenvalues at or below this make the bound vacuous.
pub const VACUOUS_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub num_nodes: usize,
    pub embed_dim: usize,
    pub delta: f64,
    /// `1 − h_edge` of the transformed graph.
    pub phi_bar: f64,
    /// `(K+1)`-th smallest eigenvalue of the transformed graph's `L_sym`.
    pub lambda_k_plus_1: f64,
    /// `σ_max(WᵀW)` for the composed linear weight `W`.
    pub sigma_max_sq: f64,
    pub psi1_norm: f64,
    /// Smallest self-loop degree `D̄_ii = deg_i + 1` of the input graph.
    pub min_degree: usize,
    /// `sqrt(σ_max(WᵀW)² log(2N²/δ) / (2 D² ‖x²‖_ψ1))`.
    pub concentration_term: f64,
    /// `(φ̄ + concentration) / λ̂_{K+1}`; infinite when vacuous.
    pub bound_value: f64,
    /// `φ̄/λ̂ + sqrt(… / λ̂²)`, the same quantity written as two terms.
    pub bound_split_form: f64,
    /// Mean squared one-hot error of unconstrained least squares on `Z`.
    pub measured_error: f64,
    pub vacuous: bool,
    pub transformed_edges: usize,
    pub transformed_components: usize,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.measured_error <= self.bound_value
    }
}

/// `min_B mean_i ‖y_i − B z_i‖²` over unconstrained linear maps.
pub fn least_squares_error(z: &Array2<f64>, labels: &[usize], num_classes: usize) -> Result<f64> {
    let (n, k) = z.dim();
    if labels.len() != n || n == 0 {
        return Err(Error::shape("label count does not match embedding rows"));
    }
    let a = DMatrix::from_fn(n, k, |i, j| z[[i, j]]);
    let y = DMatrix::from_fn(n, num_classes, |i, c| f64::from(u8::from(labels[i] == c)));
    let b = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::invalid(format!("least squares: {e}")))?;
    let resid = &y - &a * b;
    Ok(resid.norm_squared() / n as f64)
}

/// Evaluates the bound for linear-mode parameters and a positive selection.
pub fn theorem2_report(
    dataset: &Dataset,
    params: &ModelParams,
    selection: &PositiveSelection,
    delta: f64,
) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    let n = dataset.num_nodes();
    let k = params.dims().output;
    if k + 1 > n {
        return Err(Error::invalid(format!("embedding width {k} needs at least {} nodes", k + 1)));
    }
    let transformed = build_transformed_graph(selection, n)?;
    let phi_bar = 1.0 - edge_homophily(&transformed, &dataset.labels)?;
    let lambda = eigendecompose(&sym_laplacian(&transformed)?)?.eigenvalues[k];
    let sigma_max_sq = sigma_max(&params.equivalent_weight())?.powi(2);
    let (_, x) = prepare(dataset);
    let psi1_norm = min_column_orlicz(&class_centered(&x, &dataset.labels, dataset.num_classes).mapv(|v| v * v), 1.0);
    let min_degree = (0..n).map(|i| dataset.graph.degree(i) + 1).min().unwrap_or(1);
    let d = min_degree as f64;
    let log_term = (2.0 * (n * n) as f64 / delta).ln();
    let inner = sigma_max_sq.powi(2) * log_term / (2.0 * d * d * psi1_norm);
    let concentration_term = inner.sqrt();
    let vacuous = lambda <= VACUOUS_EIGENVALUE;
    let (bound_value, bound_split_form) = if vacuous {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (
            (phi_bar + concentration_term) / lambda,
            phi_bar / lambda + (inner / (lambda * lambda)).sqrt(),
        )
    };
    let (_, z) = embed(params, dataset, Mode::Linear)?;
    let measured_error = least_squares_error(&z, &dataset.labels, dataset.num_classes)?;
    Ok(BoundReport {
        num_nodes: n,
        embed_dim: k,
        delta,
        phi_bar,
        lambda_k_plus_1: lambda,
        sigma_max_sq,
        psi1_norm,
        min_degree,
        concentration_term,
        bound_value,
        bound_split_form,
        measured_error,
        vacuous,
        transformed_edges: transformed.num_edges(),
        transformed_components: connected_components(&transformed),
    })
}

/// Trains the linear stack, selects positives for every node from the final
/// embedding and reports the bound.
pub fn theorem2_experiment(dataset: &Dataset, config: &TrainConfig, delta: f64) -> Result<BoundReport> {
    let outcome = train_with_mode(dataset, config, Mode::Linear)?;
    let (_, z) = embed(&outcome.params, dataset, Mode::Linear)?;
    let all: Vec<usize> = (0..dataset.num_nodes()).collect();
    let selection = select_all_positives(dataset, &z, &all, config.hops, config.positives_per_seed)?;
    theorem2_report(dataset, &outcome.params, &selection, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{synthesize, SyntheticConfig};
    use crate::model::{init_params, LayerDims};
    use crate::training::SeedPositives;
    use ndarray::array;

    #[test]
    fn least_squares_on_exact_one_hot_is_zero() {
        let z = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert!(least_squares_error(&z, &[0, 1, 0], 2).unwrap() < 1e-20);
        // a constant embedding can only predict the class frequencies
        let z = Array2::from_elem((4, 1), 2.0);
        assert!((least_squares_error(&z, &[0, 0, 0, 1], 2).unwrap() - 0.375).abs() < 1e-12);
    }

    fn same_class_selection(labels: &[usize], k: usize) -> PositiveSelection {
        let n = labels.len();
        PositiveSelection {
            positives_per_seed: k,
            seeds: (0..n)
                .map(|i| {
                    let ids: Vec<usize> = (1..n)
                        .map(|o| (i + o) % n)
                        .filter(|&j| labels[j] == labels[i])
                        .take(k)
                        .collect();
                    SeedPositives { seed: i, scores: vec![1.0; ids.len()], ids }
                })
                .collect(),
        }
    }

    #[test]
    fn perfect_selection_leaves_only_concentration_term() {
        let ds = synthesize(&SyntheticConfig::binary(60, 8, 3.0, 0.9, 1)).unwrap();
        let params = init_params(1, LayerDims::new(8, 4, 4, 1)).unwrap();
        let sel = same_class_selection(&ds.labels, 4);
        let r = theorem2_report(&ds, &params, &sel, 0.05).unwrap();
        assert_eq!(r.phi_bar, 0.0);
        assert_eq!(r.transformed_components, 2);
        // two same-class components: λ_1 = λ_2 = 0 so K = 1 is vacuous
        assert!(r.vacuous);
        let params = init_params(1, LayerDims::new(8, 4, 4, 2)).unwrap();
        let r = theorem2_report(&ds, &params, &sel, 0.05).unwrap();
        assert!(!r.vacuous);
        assert!((r.bound_value - r.concentration_term / r.lambda_k_plus_1).abs() < 1e-12 * r.bound_value);
        assert!((r.bound_value - r.bound_split_form).abs() < 1e-9 * r.bound_value);
        assert!(r.holds());
    }

    #[test]
    fn rejects_too_wide_embedding() {
        let ds = synthesize(&SyntheticConfig::binary(10, 4, 2.0, 0.9, 1)).unwrap();
        let params = init_params(1, LayerDims::new(4, 4, 4, 10)).unwrap();
        assert!(theorem2_report(&ds, &params, &same_class_selection(&ds.labels, 2), 0.05).is_err());
    }
}
