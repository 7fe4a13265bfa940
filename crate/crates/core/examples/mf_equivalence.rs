//! Contrastive loss on a regular graph matches the factorization loss of
//! its augmentation matrix up to a constant, and the best rank-K loss.
//!
//! cargo run --release --example mf_equivalence

use afgcl::spectral::sym_adjacency;
use afgcl::theory::{check_equivalence, circulant_graph, mf_optimum};

fn main() -> afgcl::Result<()> {
    for (n, k) in [(30, 2), (40, 3), (60, 5)] {
        let graph = circulant_graph(n, k)?;
        let r = check_equivalence(&graph, 10, 0)?;
        println!(
            "circulant({n},{k}): deviation {:.2e} constant {:.6} expected {:.6} gap {:.1e}",
            r.max_deviation, r.constant, r.expected_constant, r.probability_adjacency_gap
        );
    }
    let a = sym_adjacency(&circulant_graph(30, 2)?)?;
    for k in [1, 4, 8, 16] {
        println!("rank {k}: optimal factorization loss {:.6}", mf_optimum(&a, k)?.1);
    }
    Ok(())
}
