//! Linear-probe accuracy against embedding width.
//!
//! cargo run --release --example representation_size -- [epochs]

use afgcl::eval::{evaluate, Metric};
use afgcl::graph::{synthesize, SyntheticConfig};
use afgcl::model::Mode;
use afgcl::training::{embed, train, TrainConfig};

fn main() -> afgcl::Result<()> {
    let epochs = std::env::args().nth(1).map_or(100, |s| s.parse().expect("epochs must be an integer"));
    let data = synthesize(&SyntheticConfig { noise_scale: 8.0, ..SyntheticConfig::binary(1000, 32, 5.0, 0.95, 6) })?;
    for k in [16, 32, 64, 128, 256] {
        let config = TrainConfig { embed_dim: k, hidden_dim: k, epochs, ..TrainConfig::default() };
        let (h, _) = embed(&train(&data, &config)?.params, &data, Mode::Train)?;
        let r = evaluate(&h, &data.labels, 2, Metric::Accuracy, None, 5, 0)?;
        println!("K={k:<4} accuracy {:.4} ± {:.4}", r.mean, r.std);
    }
    Ok(())
}
