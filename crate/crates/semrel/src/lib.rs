//! Pipeline and library for building a semantic-relations corpus.
//!
//! The pipeline runs in three phases: cluster semantically related terms
//! over word embeddings, ask an LLM to classify the relations inside each
//! cluster, and fold in a filtered synonym dictionary. The result is a
//! JSONL corpus of (term, term, relation) pairs plus the statistics and
//! evaluation machinery to check it.
//!
//! Modules follow the phases:
//!
//! * [`embedding`] — `.vec` parsing, term lookup, multi-word composition,
//!   cosine distance
//! * [`cluster`] — pairwise distances and threshold-cut agglomerative
//!   clustering
//! * [`enrich`] — prompt rendering, batch dispatch with checkpointing,
//!   response parsing, post-processing into pairs
//! * [`dictionary`] — synonym-dictionary parsing, filtering, overlap
//!   removal
//! * [`corpus`] — merging, the published JSONL schema, corpus statistics
//! * [`eval`] — mean pooling, contrastive loss, retrieval accuracy,
//!   classification metrics
//! * [`pipeline`] — phase orchestration: config, manifests, resumable
//!   artifacts
//!
//! The examples directory carries one runnable program per capability
//! and is the quickest way in:
//!
//! ```text
//! cargo run --example parse_vectors     # .vec parsing, MWE composition, cosine distance
//! cargo run --example cluster_terms     # threshold-cut clustering of the toy lexicon
//! cargo run --example render_prompt     # the shipped prompt templates, rendered
//! cargo run --example estimate_cost     # pre-dispatch cost estimation
//! cargo run --example mock_enrichment   # dispatch + parse + post-process, mock provider
//! cargo run --example dictionary_pairs  # dictionary filters and overlap removal
//! cargo run --example build_corpus      # merge, JSONL schema, statistics
//! cargo run --example evaluate          # pooling, contrastive loss, retrieval, metrics
//! cargo run --example full_pipeline     # all seven phases end to end
//! ```
//!
//! The `semrel` binary exposes the same phases as subcommands over a
//! single TOML config.

pub mod cluster;
pub mod corpus;
pub mod dictionary;
pub mod embedding;
pub mod enrich;
pub mod eval;
pub mod pair;
pub mod pipeline;

pub use pair::{Relation, SemanticPair, Source};
