//! Accuracy and AUC probes on raw aggregated features versus trained
//! embeddings on a heterophilic graph.
//!
//! cargo run --release --example linear_probe

use afgcl::eval::{evaluate, Metric};
use afgcl::graph::{synthesize, SyntheticConfig};
use afgcl::model::Mode;
use afgcl::training::{embed, train, TrainConfig};

fn main() -> afgcl::Result<()> {
    let data = synthesize(&SyntheticConfig { noise_scale: 8.0, ..SyntheticConfig::binary(800, 32, 5.0, 0.05, 7) })?;
    let config = TrainConfig { epochs: 100, ..TrainConfig::default() };
    let (h, _) = embed(&train(&data, &config)?.params, &data, Mode::Train)?;
    for (name, x) in [("raw features", &data.features), ("embeddings", &h)] {
        for metric in [Metric::Accuracy, Metric::Auc] {
            let r = evaluate(x, &data.labels, 2, metric, None, 5, 0)?;
            println!("{name:<12} {metric:?}: {:.4} ± {:.4}", r.mean, r.std);
        }
    }
    Ok(())
}
