//! The four structural / attribute augmentations whose spectral effect is
//! measured by [`crate::spectral`]. Training never calls these.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Seed;
use crate::spectral::{sym_adjacency, DenseSymMatrix};

fn check_fraction(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("fraction {p} outside [0, 1]")));
    }
    Ok(())
}

/// `round(p * total)`, halves away from zero.
fn portion(p: f64, total: usize) -> usize {
    (p * total as f64).round() as usize
}

/// Removes `round(p * E)` edges chosen uniformly without replacement.
pub fn drop_edges(graph: &Graph, p: f64, seed: u64) -> Result<Graph> {
    check_fraction(p)?;
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let remove = portion(p, edges.len());
    let mut rng = Seed(seed).named("drop-edges").rng();
    let mut dropped = vec![false; edges.len()];
    for i in index::sample(&mut rng, edges.len(), remove) {
        dropped[i] = true;
    }
    Graph::from_edges(
        graph.num_nodes(),
        edges.into_iter().zip(dropped).filter(|(_, d)| !d).map(|(e, _)| e),
    )
}

/// Adds `round(p * E)` new edges sampled uniformly from node pairs that are
/// distinct and not already adjacent.
pub fn add_edges(graph: &Graph, p: f64, seed: u64) -> Result<Graph> {
    check_fraction(p)?;
    let n = graph.num_nodes();
    let add = portion(p, graph.num_edges());
    let all_pairs = n * n.saturating_sub(1) / 2;
    let absent = all_pairs - graph.num_edges();
    if add > absent {
        return Err(Error::invalid(format!(
            "cannot add {add} edges: only {absent} non-adjacent pairs exist"
        )));
    }
    let mut rng = Seed(seed).named("add-edges").rng();
    let mut new_edges: Vec<(usize, usize)> = Vec::with_capacity(add);
    if add * 4 >= absent {
        // Dense request: enumerate the complement and subsample it.
        let complement: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !graph.contains_edge(u, v))
            .collect();
        new_edges.extend(index::sample(&mut rng, complement.len(), add).into_iter().map(|i| complement[i]));
    } else {
        let mut chosen = HashSet::with_capacity(add);
        while new_edges.len() < add {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            let pair = (u.min(v), u.max(v));
            if u != v && !graph.contains_edge(u, v) && chosen.insert(pair) {
                new_edges.push(pair);
            }
        }
    }
    Graph::from_edges(n, graph.edges().chain(new_edges))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    /// The same feature columns are zeroed for every node.
    #[default]
    Columns,
    /// Each node draws its own set of masked dimensions.
    PerNode,
}

/// Zeroes `round(p * F)` feature dimensions chosen without replacement.
pub fn mask_attributes(x: &Array2<f64>, p: f64, seed: u64) -> Result<Array2<f64>> {
    mask_attributes_with(x, p, seed, MaskMode::Columns)
}

pub fn mask_attributes_with(x: &Array2<f64>, p: f64, seed: u64, mode: MaskMode) -> Result<Array2<f64>> {
    check_fraction(p)?;
    let f = x.ncols();
    let k = portion(p, f);
    let mut out = x.clone();
    let mut rng = Seed(seed).named("mask-attributes").rng();
    match mode {
        MaskMode::Columns => {
            for j in index::sample(&mut rng, f, k) {
                out.column_mut(j).fill(0.0);
            }
        }
        MaskMode::PerNode => {
            for mut row in out.rows_mut() {
                for j in index::sample(&mut rng, f, k) {
                    row[j] = 0.0;
                }
            }
        }
    }
    Ok(out)
}

/// Personalized-PageRank diffusion `alpha (I - (1 - alpha) A_sym)^-1`,
/// dense, via a Cholesky solve.
pub fn ppr_diffusion(graph: &Graph, alpha: f64) -> Result<DenseSymMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("diffusion factor {alpha} outside (0, 1]")));
    }
    let a = sym_adjacency(graph)?;
    let n = a.order();
    let system = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let eye = if i == j { 1.0 } else { 0.0 };
        eye - (1.0 - alpha) * a.values()[[i, j]]
    });
    let chol = nalgebra::Cholesky::new(system)
        .ok_or_else(|| Error::Singular("I - (1 - alpha) A_sym is not positive definite".into()))?;
    let inv = chol.inverse();
    let s = Array2::from_shape_fn((n, n), |(i, j)| alpha * 0.5 * (inv[(i, j)] + inv[(j, i)]));
    DenseSymMatrix::new(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn ring(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn drop_examples() {
        let g = ring(10);
        assert_eq!(drop_edges(&g, 0.0, 1).unwrap(), g);
        assert_eq!(drop_edges(&g, 1.0, 1).unwrap().num_edges(), 0);
        for seed in 0..10 {
            assert_eq!(drop_edges(&triangle(), 1.0 / 3.0, seed).unwrap().num_edges(), 2);
        }
        assert!(drop_edges(&g, 1.5, 0).is_err());
    }

    #[test]
    fn drop_rounds_half_away_from_zero() {
        // 0.25 * 10 = 2.5 -> 3 removed.
        assert_eq!(drop_edges(&ring(10), 0.25, 4).unwrap().num_edges(), 7);
    }

    #[test]
    fn add_examples() {
        let g = ring(10);
        assert_eq!(add_edges(&g, 0.0, 1).unwrap(), g);
        let p2 = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert!(add_edges(&p2, 1.0, 0).is_err());
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        // round(0.5 * 2) = 1, and (0, 2) is the only absent pair.
        assert_eq!(add_edges(&path, 0.5, 7).unwrap(), triangle());
        assert!(add_edges(&path, 1.0, 7).is_err());
    }

    #[test]
    fn mask_examples() {
        let mut rng = Seed(1).rng();
        let x = Array2::from_shape_fn((5, 10), |_| rng.random_range(0.5..1.5));
        assert_eq!(mask_attributes(&x, 0.0, 3).unwrap(), x);
        assert!(mask_attributes(&x, 1.0, 3).unwrap().iter().all(|&v| v == 0.0));
        let m = mask_attributes(&x, 0.3, 3).unwrap();
        let zeroed: Vec<usize> = (0..10).filter(|&j| m.column(j).iter().all(|&v| v == 0.0)).collect();
        assert_eq!(zeroed.len(), 3);
        for row in m.rows() {
            assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), 3);
        }
        let per_node = mask_attributes_with(&x, 0.3, 3, MaskMode::PerNode).unwrap();
        for row in per_node.rows() {
            assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), 3);
        }
    }

    #[test]
    fn diffusion_examples() {
        let k2 = Graph::from_edges(2, [(0, 1)]).unwrap();
        let s = ppr_diffusion(&k2, 0.5).unwrap();
        assert_abs_diff_eq!(s.values()[[0, 0]], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values()[[0, 1]], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values()[[1, 1]], 2.0 / 3.0, epsilon = 1e-12);

        let s = ppr_diffusion(&ring(6), 1.0).unwrap();
        assert!(crate::spectral::frobenius_distance(s.values(), &Array2::eye(6)) < 1e-12);

        let s = ppr_diffusion(&Graph::empty(4), 0.3).unwrap();
        assert!(crate::spectral::frobenius_distance(s.values(), &(Array2::eye(4) * 0.3)) < 1e-12);

        assert!(ppr_diffusion(&k2, 0.0).is_err());
        assert!(ppr_diffusion(&k2, 1.2).is_err());
    }

    #[test]
    fn diffusion_rows_of_regular_graph_sum_to_one() {
        let s = ppr_diffusion(&ring(12), 0.2).unwrap();
        for row in s.values().rows() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-8);
        }
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (4usize..20).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 1..40).prop_map(move |e| Graph::from_edges(n, e).unwrap())
        })
    }

    proptest! {
        #[test]
        fn edge_counts_and_invariants(g in arb_graph(), p in 0.0f64..=1.0, seed in any::<u64>()) {
            let e = g.num_edges();
            let k = portion(p, e);
            let dropped = drop_edges(&g, p, seed).unwrap();
            dropped.validate().unwrap();
            prop_assert_eq!(dropped.num_edges(), e - k);
            prop_assert!(dropped.edges().all(|(u, v)| g.contains_edge(u, v)));
            prop_assert_eq!(&dropped, &drop_edges(&g, p, seed).unwrap());

            let n = g.num_nodes();
            if k <= n * (n - 1) / 2 - e {
                let added = add_edges(&g, p, seed).unwrap();
                added.validate().unwrap();
                prop_assert_eq!(added.num_edges(), e + k);
                prop_assert!(g.edges().all(|(u, v)| added.contains_edge(u, v)));
                prop_assert_eq!(&added, &add_edges(&g, p, seed).unwrap());
            }
        }

        #[test]
        fn diffusion_is_symmetric(g in arb_graph(), alpha in 0.05f64..=1.0) {
            let s = ppr_diffusion(&g, alpha).unwrap();
            let v = s.values();
            for i in 0..v.nrows() {
                for j in 0..v.nrows() {
                    prop_assert!((v[[i, j]] - v[[j, i]]).abs() <= 1e-10);
                }
            }
        }
    }
}
