//! Estimate the input cost of an enrichment batch before dispatching it.
//!
//! ```bash
//! cargo run --example estimate_cost
//! ```

use semrel::cluster::Cluster;
use semrel::enrich::{estimate_cost, whitespace_token_counter, PromptTemplate, ProviderConfig};

fn main() -> anyhow::Result<()> {
    let clusters: Vec<Cluster> = (0..13_000)
        .map(|id| Cluster {
            id,
            members: (0..8).map(|i| format!("terim_{}_{}", id, i)).collect(),
        })
        .collect();

    let template = PromptTemplate::semantic_enrichment();
    let config = ProviderConfig::default();
    println!(
        "model {} at ${} per 1M input tokens",
        config.model_name, config.input_price_per_1m_tokens
    );

    for inflation in [1.0, 1.5, 2.5] {
        let counter = whitespace_token_counter(inflation);
        let cost = estimate_cost(&clusters, &template, &config, &counter)?;
        println!(
            "  {} clusters, token inflation {:.1} -> estimated ${:.2}",
            clusters.len(),
            inflation,
            cost
        );
    }
    Ok(())
}
