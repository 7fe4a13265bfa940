//! Low and high DFT-band distances caused by attribute masking in both modes.
//!
//! cargo run --release --example feature_frequency

use afgcl::augment::{mask_attributes_with, MaskMode};
use afgcl::graph::{synthesize, SyntheticConfig};
use afgcl::spectral::feature_band_distance;

fn main() -> afgcl::Result<()> {
    let data = synthesize(&SyntheticConfig::binary(300, 40, 3.0, 0.9, 3))?;
    let cutoff = 32;
    println!("mode,p,f_low,f_high");
    for mode in [MaskMode::Columns, MaskMode::PerNode] {
        for p in [0.1, 0.3, 0.5] {
            let d = feature_band_distance(&data.features, &mask_attributes_with(&data.features, p, 0, mode)?, cutoff)?;
            println!("{mode:?},{p},{:.4},{:.4}", d.f_low, d.f_high);
        }
    }
    Ok(())
}
