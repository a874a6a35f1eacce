//! Parse a `.vec` word-vector file, look terms up, compose a multi-word
//! expression, and measure cosine distances.
//!
//! ```bash
//! cargo run --example parse_vectors
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use semrel::embedding::{cosine_distance, embed_term, parse_vec_file};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.vec");
    let outcome = parse_vec_file(BufReader::new(File::open(&path)?))?;
    println!(
        "parsed {}: {} entries, dimension {}, {} lines skipped",
        path.display(),
        outcome.table.len(),
        outcome.table.dimension(),
        outcome.warnings.skipped,
    );

    let direct = embed_term(&outcome.table, "mahkeme")?;
    println!(
        "\n{:?} -> first components {:?} ({:?})",
        direct.term,
        &direct.vector[..4],
        direct.provenance,
    );

    // "dairesi" is out of vocabulary, so the mean falls back to the
    // constituents that are present.
    let mwe = embed_term(&outcome.table, "mahkeme dairesi")?;
    println!(
        "{:?} -> first components {:?} ({:?})",
        mwe.term,
        &mwe.vector[..4],
        mwe.provenance,
    );

    println!("\ncosine distances:");
    for (a, b) in [
        ("mahkeme", "yargı"),
        ("mahkeme", "banka"),
        ("sözleşme", "mukavele"),
        ("vergi", "tedavi"),
    ] {
        let u = outcome.table.get(a).unwrap();
        let v = outcome.table.get(b).unwrap();
        println!("  d({}, {}) = {:.4}", a, b, cosine_distance(u, v)?);
    }

    match embed_term(&outcome.table, "blokzincir") {
        Err(e) => println!("\nout-of-vocabulary terms are errors: {}", e),
        Ok(_) => unreachable!("blokzincir is not in the toy vectors"),
    }
    Ok(())
}
