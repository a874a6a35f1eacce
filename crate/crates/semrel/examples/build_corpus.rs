//! Merge LLM and dictionary pairs into a corpus, write the JSONL schema,
//! read it back, and compute the statistics suite.
//!
//! ```bash
//! cargo run --example build_corpus
//! ```

use semrel::corpus::{compute_stats, merge, read_jsonl, whitespace_tokenizer, write_jsonl};
use semrel::{Relation, SemanticPair, Source};

fn pair(a: &str, b: &str, relation: Relation, source: Source) -> SemanticPair {
    SemanticPair::new(a, b, relation, source).unwrap()
}

fn main() -> anyhow::Result<()> {
    let llm = vec![
        pair("mahkeme", "yargı", Relation::Synonym, Source::Llm),
        pair("alıcı", "satıcı", Relation::Antonym, Source::Llm),
        pair("aktif", "pasif", Relation::Antonym, Source::Llm),
        pair("hukuk", "ceza", Relation::CoHyponym, Source::Llm),
        pair("banka", "sigorta", Relation::CoHyponym, Source::Llm),
    ];
    let dictionary = vec![pair(
        "sözleşme",
        "mukavele",
        Relation::Synonym,
        Source::Dictionary,
    )];

    let (corpus, report) = merge(&llm, &dictionary)?;
    println!(
        "merged corpus: {} pairs ({:?})",
        corpus.len(),
        corpus.source_counts()
    );
    println!("duplicates removed: {}", report.llm_duplicates_removed);

    let mut bytes = Vec::new();
    write_jsonl(&corpus, &mut bytes)?;
    println!("\ncorpus JSONL:\n{}", String::from_utf8(bytes.clone())?);

    let reread = read_jsonl(std::io::Cursor::new(bytes))?;
    assert_eq!(reread.len(), corpus.len());

    let stats = compute_stats(&corpus, &whitespace_tokenizer)?;
    println!("statistics:");
    println!("  relation counts     {:?}", stats.relation_counts);
    println!("  relation percent    {:?}", stats.relation_percentages);
    println!("  avg word count      {:.3}", stats.avg_word_count);
    println!("  type-token ratio    {:.3}", stats.type_token_ratio);
    println!("  avg token length    {:.3}", stats.avg_token_length);
    println!("  max token length    {}", stats.max_token_length);
    Ok(())
}
