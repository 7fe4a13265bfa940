//! Concentration of aggregated embeddings around their class expectation:
//! per-node deviation against mean degree and feature width, and pairwise
//! inner-product deviation against its high-probability bound.
//!
//! cargo run --release --example concentration

use afgcl::graph::SyntheticConfig;
use afgcl::theory::{concentration_experiment, similarity_concentration_experiment};

fn main() -> afgcl::Result<()> {
    let base = SyntheticConfig::binary(400, 32, 8.0, 0.8, 3);
    println!("mean_degree,realized_degree,feature_dim,mean_deviation,bound");
    for f in [32, 64] {
        let config = SyntheticConfig { feature_dim: f, ..base.clone() };
        for row in concentration_experiment(&config, &[4.0, 16.0], 10)? {
            println!(
                "{},{:.2},{},{:.5},{:.3}",
                row.mean_degree, row.realized_degree, row.feature_dim, row.mean_deviation, row.bound
            );
        }
    }
    for d in [8.0, 16.0, 32.0] {
        let config = SyntheticConfig::binary(200, 32, d, 0.8, 5);
        let r = similarity_concentration_experiment(&config, 10, 0.05)?;
        println!(
            "pairs at degree {d}: min degree {} quantile {:.5} bound {:.5} holds {}",
            r.min_degree,
            r.quantile,
            r.bound,
            r.holds()
        );
    }
    Ok(())
}
