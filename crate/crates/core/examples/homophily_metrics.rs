//! Edge and node homophily of synthetic graphs across same-label probabilities.
//!
//! cargo run --release --example homophily_metrics

use afgcl::graph::{edge_homophily, node_homophily, synthesize, SyntheticConfig};

fn main() -> afgcl::Result<()> {
    println!("same_label,edges,h_edge,h_node");
    for same in [0.05, 0.25, 0.5, 0.75, 0.95] {
        let data = synthesize(&SyntheticConfig::binary(1000, 16, 5.0, same, 1))?;
        println!(
            "{same},{},{:.4},{:.4}",
            data.graph.num_edges(),
            edge_homophily(&data.graph, &data.labels)?,
            node_homophily(&data.graph, &data.labels)?
        );
    }
    Ok(())
}
