//! Parse the toy synonym dictionary, apply the high-precision filters,
//! expand to pairs, and remove overlaps with LLM-generated pairs.
//!
//! ```bash
//! cargo run --example dictionary_pairs
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use semrel::dictionary::{deconflict, filter_entries, parse_dictionary, to_pairs};
use semrel::{Relation, SemanticPair, Source};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy_dictionary.tsv");
    let parsed = parse_dictionary(BufReader::new(File::open(&path)?))?;
    println!(
        "parsed {} entries ({} malformed lines skipped)",
        parsed.entries.len(),
        parsed.warnings.skipped_lines
    );

    let (kept, report) = filter_entries(&parsed.entries);
    println!(
        "filters kept {} entries, rejected {} for candidate count, {} as ambiguous",
        report.kept, report.rejected_candidate_count, report.rejected_ambiguity
    );

    let expanded = to_pairs(&kept);
    println!("\nexpanded to {} synonym pairs:", expanded.len());
    for pair in &expanded {
        println!("  {} | {}", pair.term_a, pair.term_b);
    }

    // Suppose the LLM already produced one of these pairs under any
    // relation; the dictionary copy is removed.
    let llm = vec![SemanticPair::new(
        "mukavele",
        "sözleşme",
        Relation::Synonym,
        Source::Llm,
    )?];
    let (disjoint, removed) = deconflict(&expanded, &llm);
    println!(
        "\nafter overlap removal against {} LLM pair(s): {} kept, {} removed",
        llm.len(),
        disjoint.len(),
        removed
    );
    Ok(())
}
