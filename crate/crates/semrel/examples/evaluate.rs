//! The evaluation harness piece by piece: masked mean pooling, the
//! contrastive ranking loss, triplet construction, top-k retrieval
//! accuracy, and classification metrics.
//!
//! ```bash
//! cargo run --example evaluate
//! ```

use std::collections::BTreeMap;

use semrel::corpus::merge;
use semrel::eval::{
    build_triplets, classification_metrics, cmnrl_loss, mean_pool, retrieval_accuracy,
    ContrastiveBatch, PoolingInput,
};
use semrel::{Relation, SemanticPair, Source};

fn main() -> anyhow::Result<()> {
    // Mean pooling over masked hidden states.
    let input = PoolingInput::new(
        vec![vec![2.0, 0.0], vec![0.0, 2.0], vec![9.0, 9.0]],
        vec![1, 1, 0],
    )?;
    println!("mean_pool with mask [1,1,0] -> {:?}", mean_pool(&input));

    // Contrastive loss at the τ = 0.07 operating point.
    let batch = ContrastiveBatch::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0.95, 0.05], vec![0.1, 0.9]],
        vec![vec![0.7, 0.7]], // one cached extra negative
        0.07,
    )?;
    println!(
        "cmnrl_loss (B=2, |C|=1, τ=0.07) = {:.6}",
        cmnrl_loss(&batch)
    );

    // Triplets from a small corpus: synonyms are positives, antonyms are
    // hard negatives.
    let pairs = vec![
        SemanticPair::new("mahkeme", "yargı", Relation::Synonym, Source::Llm)?,
        SemanticPair::new("mahkeme", "savunma", Relation::Antonym, Source::Llm)?,
        SemanticPair::new("banka", "sigorta", Relation::CoHyponym, Source::Llm)?,
    ];
    let (corpus, _) = merge(&pairs, &[])?;
    let triplets = build_triplets(&corpus, false);
    println!("\ntriplets:");
    for t in &triplets {
        println!(
            "  query {:?} positive {:?} negatives {:?}",
            t.query, t.positive, t.hard_negatives
        );
    }

    // Retrieval accuracy against a toy embedding space.
    let space: BTreeMap<&str, Vec<f64>> = [
        ("mahkeme", vec![1.0, 0.0]),
        ("yargı", vec![0.97, 0.24]),
        ("savunma", vec![0.8, -0.6]),
        ("banka", vec![0.0, 1.0]),
        ("sigorta", vec![0.2, 0.98]),
    ]
    .into_iter()
    .collect();
    let terms: Vec<String> = space.keys().map(|s| s.to_string()).collect();
    let embed = |term: &str| space.get(term).cloned();
    for k in [1, 3] {
        let acc = retrieval_accuracy(&triplets, &embed, &terms, k)?;
        println!("top-{} retrieval accuracy = {:.2}", k, acc);
    }

    // Classification metrics with the per-class and macro table.
    use Relation::{Antonym as A, CoHyponym as C, Synonym as S};
    let golds = vec![S, S, A, C, C, C];
    let preds = vec![S, C, A, C, C, S];
    let metrics = classification_metrics(&preds, &golds)?;
    println!("\n{}", metrics);
    Ok(())
}
