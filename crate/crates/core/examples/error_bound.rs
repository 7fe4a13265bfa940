//! Trains the nonlinearity-free encoder, builds the transformed graph of
//! selected positives and compares the downstream least-squares error with
//! the spectral bound.
//!
//! cargo run --release --example error_bound

use afgcl::graph::{synthesize, SyntheticConfig};
use afgcl::theory::theorem2_experiment;
use afgcl::training::TrainConfig;

fn main() -> afgcl::Result<()> {
    let data = synthesize(&SyntheticConfig::binary(500, 32, 5.0, 0.9, 2))?;
    let config = TrainConfig {
        embed_dim: 32,
        hidden_dim: 32,
        epochs: 100,
        seed: 2,
        ..TrainConfig::default()
    };
    let report = theorem2_experiment(&data, &config, 0.05)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!("measured {} <= bound {}: {}", report.measured_error, report.bound_value, report.holds());
    Ok(())
}
