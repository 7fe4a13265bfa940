//! Per-band Laplacian distance between a graph and its edge-dropped or
//! edge-added copies, averaged over seeds.
//!
//! cargo run --release --example spectral_bands -- [p]

use afgcl::augment::{add_edges, drop_edges};
use afgcl::graph::{synthesize, SyntheticConfig};
use afgcl::spectral::band_distance_profile;

fn main() -> afgcl::Result<()> {
    let p: f64 = std::env::args().nth(1).map_or(0.2, |s| s.parse().expect("p must be a number"));
    let data = synthesize(&SyntheticConfig::binary(300, 16, 3.0, 0.95, 2))?;
    let bands = 10;
    for (name, aug) in [("drop", drop_edges as fn(_, _, _) -> _), ("add", add_edges)] {
        let mut mean = vec![0.0; bands];
        for seed in 0..10 {
            let profile = band_distance_profile(&data.graph, &aug(&data.graph, p, seed)?, bands)?;
            for (m, d) in mean.iter_mut().zip(&profile.distances) {
                *m += d / 10.0;
            }
        }
        let row: Vec<String> = mean.iter().map(|d| format!("{d:.3}")).collect();
        println!("{name:>4}: {}", row.join(" "));
    }
    Ok(())
}
