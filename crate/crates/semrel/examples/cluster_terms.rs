//! Embed the toy lexicon and cluster it with the cosine-distance
//! threshold cut, then apply the size filters.
//!
//! ```bash
//! cargo run --example cluster_terms
//! ```

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use semrel::cluster::{cluster_term_vectors, filter_clusters, ClusterParams};
use semrel::embedding::{embed_term, parse_vec_file};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let table = parse_vec_file(BufReader::new(File::open(fixtures.join("toy.vec"))?))?.table;
    let lexicon = std::fs::read_to_string(fixtures.join("toy_lexicon.txt"))?;

    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for term in lexicon.lines().filter(|l| !l.trim().is_empty()) {
        match embed_term(&table, term) {
            Ok(tv) => vectors.push(tv),
            Err(_) => skipped.push(term),
        }
    }
    println!(
        "embedded {} lexicon terms ({} out of vocabulary: {:?})",
        vectors.len(),
        skipped.len(),
        skipped
    );

    let params = ClusterParams::default(); // threshold 0.4, average linkage
    let clusters = cluster_term_vectors(&vectors, &params)?;
    let (kept, stats) = filter_clusters(&clusters, 2, 50);
    println!(
        "{} clusters before filtering, {} kept, {} singleton(s) dropped\n",
        clusters.len(),
        stats.retained_clusters,
        stats.dropped_clusters,
    );
    for cluster in &kept {
        println!("cluster {:>2}: {}", cluster.id, cluster.members.join(", "));
    }
    Ok(())
}
