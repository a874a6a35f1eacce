//! Render the shipped prompt templates: the cluster-classification prompt
//! and the concept/term/event/fact extraction prompt.
//!
//! ```bash
//! cargo run --example render_prompt
//! ```

use semrel::cluster::Cluster;
use semrel::enrich::{render_prompt, PromptTemplate};

fn main() -> anyhow::Result<()> {
    let cluster = Cluster {
        id: 7,
        members: vec!["mahkeme".into(), "yargı".into(), "adalet".into()],
    };
    let template = PromptTemplate::semantic_enrichment();
    let prompt = render_prompt(&template, &cluster)?;
    println!(
        "=== semantic enrichment prompt ({} bytes) ===",
        prompt.len()
    );
    println!("{}", prompt);

    let ner = PromptTemplate::ner_augmentation();
    let rendered = ner.render_text("Mahkeme, sözleşmenin feshine karar verdi.");
    println!("=== term extraction prompt, last lines ===");
    for line in rendered
        .lines()
        .rev()
        .take(3)
        .collect::<Vec<_>>()
        .iter()
        .rev()
    {
        println!("{}", line);
    }
    Ok(())
}
