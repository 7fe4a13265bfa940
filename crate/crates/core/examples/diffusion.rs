//! Personalized PageRank diffusion seen through the band profile, with the
//! diffusion matrix read as a weighted adjacency.
//!
//! cargo run --release --example diffusion

use afgcl::augment::ppr_diffusion;
use afgcl::graph::{synthesize, SyntheticConfig};
use afgcl::spectral::{laplacian_band_profile, sym_laplacian, sym_laplacian_weighted, BandScale};

fn main() -> afgcl::Result<()> {
    let data = synthesize(&SyntheticConfig::binary(200, 8, 4.0, 0.9, 4))?;
    let original = sym_laplacian(&data.graph)?;
    for alpha in [0.05, 0.2, 0.5] {
        let diffused = sym_laplacian_weighted(&ppr_diffusion(&data.graph, alpha)?)?;
        for scale in [BandScale::Own, BandScale::Original] {
            let p = laplacian_band_profile(&original, &diffused, 5, scale)?;
            let row: Vec<String> = p.distances.iter().map(|d| format!("{d:.3}")).collect();
            println!("alpha {alpha} {scale:?}: {}", row.join(" "));
        }
    }
    Ok(())
}
