//! Run all seven phases end to end on the shipped toy fixtures with the
//! deterministic mock provider, then print the corpus and the reports.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use std::path::Path;

use semrel::pipeline::{run_phase, validate_config, Phase, RunOptions};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let workdir = tempfile::tempdir()?;
    let out = workdir.path().join("out");

    let config_source = format!(
        r#"
[paths]
vectors = {vec:?}
lexicon = {lex:?}
dictionary = {dict:?}
output_dir = {out:?}

[clustering]
threshold = 0.4
linkage = "average"

[provider]
mock_seed = 42
"#,
        vec = fixtures.join("toy.vec"),
        lex = fixtures.join("toy_lexicon.txt"),
        dict = fixtures.join("toy_dictionary.tsv"),
        out = out,
    );
    let config = validate_config(&config_source)?;
    let options = RunOptions {
        mock_provider: true,
        ..RunOptions::default()
    };

    for phase in Phase::all() {
        let outcome = run_phase(phase, &config, &options)?;
        println!("[{}] {:?}", phase, outcome.status);
        for (key, value) in &outcome.counters {
            println!("    {} = {}", key, value);
        }
    }

    let corpus = std::fs::read_to_string(out.join("corpus.jsonl"))?;
    println!("\nfirst corpus lines:");
    for line in corpus.lines().take(5) {
        println!("  {}", line);
    }
    println!("  ... ({} pairs total)", corpus.lines().count());

    println!(
        "\nstats.json:\n{}",
        std::fs::read_to_string(out.join("stats.json"))?
    );
    println!(
        "eval_report.json:\n{}",
        std::fs::read_to_string(out.join("eval_report.json"))?
    );
    Ok(())
}
