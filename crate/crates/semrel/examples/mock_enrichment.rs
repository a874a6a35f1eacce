//! Dispatch clusters to the deterministic mock provider, parse the
//! responses, and post-process them into canonical pairs.
//!
//! ```bash
//! cargo run --example mock_enrichment
//! ```

use semrel::cluster::Cluster;
use semrel::enrich::{
    dispatch_batch, parse_response, postprocess, MockProvider, PromptTemplate, ProviderConfig,
};

fn main() -> anyhow::Result<()> {
    let clusters = vec![
        Cluster {
            id: 0,
            members: vec!["mahkeme".into(), "yargı".into(), "adalet".into()],
        },
        Cluster {
            id: 1,
            members: vec![
                "banka".into(),
                "sigorta".into(),
                "kredi".into(),
                "faiz".into(),
            ],
        },
        Cluster {
            id: 2,
            members: vec!["alıcı".into(), "satıcı".into()],
        },
    ];

    let provider = MockProvider::new(42);
    let config = ProviderConfig::default();
    let template = PromptTemplate::semantic_enrichment();
    let log = tempfile::tempdir()?;
    let outcomes = dispatch_batch(
        &clusters,
        &provider,
        &config,
        &template,
        &log.path().join("responses.jsonl"),
    )?;
    println!(
        "dispatched {} clusters, {} requests issued",
        outcomes.len(),
        provider.requests_served()
    );

    let mut responses = Vec::new();
    for outcome in &outcomes {
        let raw = outcome.result.as_ref().expect("mock never fails");
        let mut response = parse_response(raw)?;
        println!(
            "\ncluster {} raw response (repaired: {}):\n{}",
            outcome.cluster_id, response.repair_applied, raw
        );
        response.cluster_members = clusters[outcome.cluster_id as usize].members.clone();
        responses.push(response);
    }

    let processed = postprocess(&responses);
    println!("\npost-processing counters: {:?}", processed.counters);
    println!("\ncanonical pairs:");
    for pair in &processed.pairs {
        println!("  {} | {} | {}", pair.term_a, pair.term_b, pair.relation);
    }
    Ok(())
}
