//! The seven pipeline phases. Phases communicate through files in the
//! output directory so any phase can be re-run in isolation and the paid
//! LLM step can be swapped for cached responses or the mock provider.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    cluster_term_vectors, filter_clusters, read_clusters_file, write_clusters_file, Cluster,
    ClusterError, ClusterIoError,
};
use crate::corpus::{
    character_tokenizer, compute_stats, merge, read_jsonl, whitespace_tokenizer, CorpusError,
};
use crate::dictionary::{deconflict, filter_entries, parse_dictionary, to_pairs, DictionaryError};
use crate::embedding::{embed_term, parse_vec_file, EmbedError, TermVector, VecParseError};
use crate::enrich::{
    dispatch_batch, estimate_cost, parse_response, postprocess, render_prompt,
    whitespace_token_counter, DispatchError, HttpProvider, MockProvider, PromptTemplate, Provider,
    TemplateError,
};
use crate::eval::{
    build_triplets, classification_metrics, retrieval_accuracy, EvalError, EvalReport,
    RetrievalResult,
};
use crate::pair::{Relation, SemanticPair};
use crate::pipeline::config::{ConfigError, PipelineConfig, TokenizerChoice};
use crate::pipeline::lock::DirLock;
use crate::pipeline::manifest::{sha256_bytes, sha256_file, Manifest};

pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const LLM_PAIRS_FILE: &str = "llm_pairs.jsonl";
pub const DICT_PAIRS_FILE: &str = "dict_pairs.jsonl";
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const CORPUS_SUMMARY_FILE: &str = "corpus_summary.json";
pub const STATS_FILE: &str = "stats.json";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("missing prerequisite artifact {path}: run the `{produced_by}` phase first")]
    Prerequisite { path: PathBuf, produced_by: String },
    #[error("{0}")]
    Locked(String),
    #[error("artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("vector file: {0}")]
    VecParse(#[from] VecParseError),
    #[error("clustering: {0}")]
    Cluster(#[from] ClusterError),
    #[error("cluster artifact: {0}")]
    ClusterIo(#[from] ClusterIoError),
    #[error("dictionary: {0}")]
    Dictionary(#[from] DictionaryError),
    #[error("dispatch: {0}")]
    Dispatch(#[from] DispatchError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("prompt template: {0}")]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code: 0 success, 1 validation, 2 runtime,
    /// 3 missing prerequisite.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Prerequisite { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Embed,
    Cluster,
    Enrich,
    Integrate,
    Assemble,
    Stats,
    Eval,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Embed => "embed",
            Phase::Cluster => "cluster",
            Phase::Enrich => "enrich",
            Phase::Integrate => "integrate",
            Phase::Assemble => "assemble",
            Phase::Stats => "stats",
            Phase::Eval => "eval",
        }
    }

    pub fn all() -> [Phase; 7] {
        [
            Phase::Embed,
            Phase::Cluster,
            Phase::Enrich,
            Phase::Integrate,
            Phase::Assemble,
            Phase::Stats,
            Phase::Eval,
        ]
    }
}

impl std::str::FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> Result<Phase, String> {
        Phase::all()
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown phase {:?}", s))
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
    pub dry_run: bool,
    pub mock_provider: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStatus {
    Ran,
    /// Inputs and config unchanged; nothing to do.
    UpToDate,
    DryRun,
}

#[derive(Debug)]
pub struct PhaseOutcome {
    pub phase: Phase,
    pub status: PhaseStatus,
    pub counters: BTreeMap<String, serde_json::Value>,
}

type Counters = BTreeMap<String, serde_json::Value>;

fn count(counters: &mut Counters, key: &str, value: impl Into<serde_json::Value>) {
    counters.insert(key.to_string(), value.into());
}

/// Which artifact a phase produces, for prerequisite error hints.
fn produced_by(file_name: &str) -> &'static str {
    match file_name {
        EMBEDDINGS_FILE => "embed",
        CLUSTERS_FILE => "cluster",
        LLM_PAIRS_FILE | RESPONSES_FILE => "enrich",
        DICT_PAIRS_FILE => "integrate",
        CORPUS_FILE | CORPUS_SUMMARY_FILE => "assemble",
        STATS_FILE => "stats",
        _ => "an earlier",
    }
}

struct PhasePlan {
    /// Input files that must exist. Artifact inputs produce prerequisite
    /// errors; user-supplied inputs were checked at config validation.
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    config_digest: String,
}

fn section_digest<T: Serialize>(phase: Phase, section: &T, extra: &str) -> String {
    let body = serde_json::to_string(section).expect("config sections serialize");
    sha256_bytes(format!("{}|{}|{}", phase.name(), body, extra).as_bytes())
}

fn plan(phase: Phase, config: &PipelineConfig, options: &RunOptions) -> PhasePlan {
    let out = |name: &str| config.paths.output_dir.join(name);
    match phase {
        Phase::Embed => PhasePlan {
            inputs: vec![config.paths.vectors.clone(), config.paths.lexicon.clone()],
            outputs: vec![out(EMBEDDINGS_FILE)],
            config_digest: section_digest(phase, &config.paths, ""),
        },
        Phase::Cluster => PhasePlan {
            inputs: vec![out(EMBEDDINGS_FILE)],
            outputs: vec![out(CLUSTERS_FILE)],
            config_digest: section_digest(phase, &config.clustering, ""),
        },
        Phase::Enrich => PhasePlan {
            inputs: vec![out(CLUSTERS_FILE)],
            outputs: vec![out(LLM_PAIRS_FILE)],
            config_digest: section_digest(
                phase,
                &config.provider,
                if options.mock_provider {
                    "mock"
                } else {
                    "http"
                },
            ),
        },
        Phase::Integrate => {
            let mut inputs = vec![out(LLM_PAIRS_FILE)];
            if let Some(dict) = &config.paths.dictionary {
                inputs.insert(0, dict.clone());
            }
            PhasePlan {
                inputs,
                outputs: vec![out(DICT_PAIRS_FILE)],
                config_digest: section_digest(phase, &config.paths.dictionary, ""),
            }
        }
        Phase::Assemble => {
            let mut inputs = vec![out(LLM_PAIRS_FILE)];
            if config.paths.dictionary.is_some() {
                inputs.push(out(DICT_PAIRS_FILE));
            }
            PhasePlan {
                inputs,
                outputs: vec![out(CORPUS_FILE), out(CORPUS_SUMMARY_FILE)],
                config_digest: section_digest(phase, &config.paths.dictionary.is_some(), ""),
            }
        }
        Phase::Stats => PhasePlan {
            inputs: vec![out(CORPUS_FILE)],
            outputs: vec![out(STATS_FILE)],
            config_digest: section_digest(phase, &config.stats, ""),
        },
        Phase::Eval => {
            let mut inputs = vec![out(CORPUS_FILE), out(EMBEDDINGS_FILE)];
            if let Some(pred) = &config.eval.predictions {
                inputs.push(pred.clone());
            }
            PhasePlan {
                inputs,
                outputs: vec![out(EVAL_REPORT_FILE)],
                config_digest: section_digest(phase, &config.eval, ""),
            }
        }
    }
}

fn check_inputs(plan: &PhasePlan, config: &PipelineConfig) -> Result<(), PipelineError> {
    for input in &plan.inputs {
        if input.exists() {
            continue;
        }
        let in_output_dir = input.starts_with(&config.paths.output_dir);
        if in_output_dir {
            let name = input
                .file_name()
                .map(|n| n.to_string_lossy().to_string())
                .unwrap_or_default();
            return Err(PipelineError::Prerequisite {
                path: input.clone(),
                produced_by: produced_by(&name).to_string(),
            });
        }
        return Err(PipelineError::Config(ConfigError::MissingPath(
            input.clone(),
        )));
    }
    Ok(())
}

fn input_digests(plan: &PhasePlan) -> std::io::Result<BTreeMap<String, String>> {
    let mut digests = BTreeMap::new();
    for input in &plan.inputs {
        digests.insert(input.to_string_lossy().to_string(), sha256_file(input)?);
    }
    Ok(digests)
}

/// Run one phase: validate inputs, detect no-ops, execute, and write the
/// artifact plus its manifest.
pub fn run_phase(
    phase: Phase,
    config: &PipelineConfig,
    options: &RunOptions,
) -> Result<PhaseOutcome, PipelineError> {
    let _lock = DirLock::acquire(&config.paths.output_dir)
        .map_err(|e| PipelineError::Locked(e.to_string()))?;

    let plan = plan(phase, config, options);
    check_inputs(&plan, config)?;

    let manifest_path = config
        .paths
        .output_dir
        .join(format!("{}.manifest.json", phase.name()));
    if !options.force && !options.dry_run {
        if let Some(manifest) = Manifest::read(&manifest_path) {
            let outputs_present = plan.outputs.iter().all(|o| o.exists());
            if outputs_present && manifest.still_valid(&plan.config_digest) {
                return Ok(PhaseOutcome {
                    phase,
                    status: PhaseStatus::UpToDate,
                    counters: manifest.counters,
                });
            }
        }
    }

    if options.dry_run {
        let counters = match phase {
            Phase::Enrich => dry_run_enrich(config)?,
            _ => {
                let mut counters = Counters::new();
                count(
                    &mut counters,
                    "would_write",
                    serde_json::json!(plan
                        .outputs
                        .iter()
                        .map(|p| p.to_string_lossy().to_string())
                        .collect::<Vec<_>>()),
                );
                counters
            }
        };
        return Ok(PhaseOutcome {
            phase,
            status: PhaseStatus::DryRun,
            counters,
        });
    }

    let counters = match phase {
        Phase::Embed => embed_phase(config)?,
        Phase::Cluster => cluster_phase(config)?,
        Phase::Enrich => enrich_phase(config, options)?,
        Phase::Integrate => integrate_phase(config)?,
        Phase::Assemble => assemble_phase(config)?,
        Phase::Stats => stats_phase(config)?,
        Phase::Eval => eval_phase(config)?,
    };

    let manifest = Manifest {
        phase: phase.name().to_string(),
        inputs: input_digests(&plan)?,
        config_digest: plan.config_digest,
        counters: counters.clone(),
    };
    manifest.write(&manifest_path)?;
    Ok(PhaseOutcome {
        phase,
        status: PhaseStatus::Ran,
        counters,
    })
}

// ---------------------------------------------------------------------------
// Phase bodies

fn artifact_error(path: &Path, message: impl std::fmt::Display) -> PipelineError {
    PipelineError::Artifact {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn read_lexicon(path: &Path) -> Result<(Vec<String>, usize), PipelineError> {
    let body = std::fs::read_to_string(path)?;
    let mut seen = BTreeSet::new();
    let mut terms = Vec::new();
    let mut duplicates = 0usize;
    for line in body.lines() {
        let term = crate::pair::normalize_term(line);
        if term.is_empty() {
            continue;
        }
        if seen.insert(term.clone()) {
            terms.push(term);
        } else {
            duplicates += 1;
        }
    }
    Ok((terms, duplicates))
}

fn embed_phase(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let (lexicon, duplicate_terms) = read_lexicon(&config.paths.lexicon)?;
    let reader = BufReader::new(File::open(&config.paths.vectors)?);
    let parsed = parse_vec_file(reader)?;

    let mut vectors: Vec<TermVector> = Vec::with_capacity(lexicon.len());
    let mut oov = Vec::new();
    let mut mwe_terms = 0usize;
    for term in &lexicon {
        match embed_term(&parsed.table, term) {
            Ok(tv) => {
                if tv.provenance == crate::embedding::Provenance::MweMean {
                    mwe_terms += 1;
                }
                vectors.push(tv);
            }
            Err(EmbedError::Oov(term)) => oov.push(term),
            Err(EmbedError::EmptyTerm) => {}
        }
    }

    let out_path = config.paths.output_dir.join(EMBEDDINGS_FILE);
    let mut writer = BufWriter::new(File::create(&out_path)?);
    for tv in &vectors {
        serde_json::to_writer(&mut writer, tv).map_err(|e| artifact_error(&out_path, e))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;

    let mut counters = Counters::new();
    count(&mut counters, "lexicon_terms", lexicon.len());
    count(&mut counters, "lexicon_duplicates", duplicate_terms);
    count(&mut counters, "embedded_terms", vectors.len());
    count(&mut counters, "mwe_terms", mwe_terms);
    count(&mut counters, "oov_terms", oov.len());
    let sample: Vec<&String> = oov.iter().take(10).collect();
    count(&mut counters, "oov_sample", serde_json::json!(sample));
    count(&mut counters, "vector_dimension", parsed.table.dimension());
    count(&mut counters, "vector_entries", parsed.table.len());
    count(
        &mut counters,
        "vector_lines_skipped",
        parsed.warnings.skipped,
    );
    Ok(counters)
}

fn read_embeddings(path: &Path) -> Result<Vec<TermVector>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut vectors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tv: TermVector = serde_json::from_str(&line)
            .map_err(|e| artifact_error(path, format!("line {}: {}", idx + 1, e)))?;
        vectors.push(tv);
    }
    Ok(vectors)
}

fn cluster_phase(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let embeddings_path = config.paths.output_dir.join(EMBEDDINGS_FILE);
    let vectors = read_embeddings(&embeddings_path)?;
    let params = config.clustering.params();
    let unfiltered = cluster_term_vectors(&vectors, &params)?;
    let (clusters, stats) = filter_clusters(
        &unfiltered,
        config.clustering.min_size,
        config.clustering.max_prompt_size,
    );

    let out_path = config.paths.output_dir.join(CLUSTERS_FILE);
    let mut writer = BufWriter::new(File::create(&out_path)?);
    write_clusters_file(&clusters, &mut writer)?;
    writer.flush()?;

    let mut counters = Counters::new();
    count(&mut counters, "input_terms", vectors.len());
    count(&mut counters, "clusters_unfiltered", unfiltered.len());
    count(&mut counters, "clusters_retained", stats.retained_clusters);
    count(&mut counters, "clusters_dropped", stats.dropped_clusters);
    count(&mut counters, "clusters_split", stats.split_clusters);
    count(&mut counters, "terms_retained", stats.retained_terms);
    count(&mut counters, "terms_dropped", stats.dropped_terms);
    let ratio = if vectors.is_empty() {
        0.0
    } else {
        stats.retained_terms as f64 / vectors.len() as f64
    };
    count(&mut counters, "retained_term_ratio", ratio);
    Ok(counters)
}

fn dry_run_enrich(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let clusters_path = config.paths.output_dir.join(CLUSTERS_FILE);
    let clusters = read_clusters_file(BufReader::new(File::open(&clusters_path)?))?;
    let template = PromptTemplate::semantic_enrichment();
    let provider_config = config.provider.provider_config();
    let counter = whitespace_token_counter(config.provider.token_inflation);
    let tokens: u64 = clusters
        .iter()
        .map(|c| render_prompt(&template, c).map(|p| counter(&p)))
        .collect::<Result<Vec<u64>, _>>()?
        .iter()
        .sum();
    let cost = estimate_cost(&clusters, &template, &provider_config, &counter)?;

    let mut counters = Counters::new();
    count(&mut counters, "clusters", clusters.len());
    count(&mut counters, "estimated_input_tokens", tokens);
    count(&mut counters, "estimated_cost_usd", cost);
    count(
        &mut counters,
        "price_per_1m_tokens_usd",
        config.provider.input_price_per_1m_tokens,
    );
    Ok(counters)
}

fn write_pairs_file(path: &Path, pairs: &[SemanticPair]) -> Result<(), PipelineError> {
    let mut writer = BufWriter::new(File::create(path)?);
    for pair in pairs {
        serde_json::to_writer(&mut writer, pair).map_err(|e| artifact_error(path, e))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn read_pairs_file(path: &Path) -> Result<Vec<SemanticPair>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: SemanticPair = serde_json::from_str(&line)
            .map_err(|e| artifact_error(path, format!("line {}: {}", idx + 1, e)))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

fn enrich_phase(config: &PipelineConfig, options: &RunOptions) -> Result<Counters, PipelineError> {
    let clusters_path = config.paths.output_dir.join(CLUSTERS_FILE);
    let clusters = read_clusters_file(BufReader::new(File::open(&clusters_path)?))?;
    let template = PromptTemplate::semantic_enrichment();
    let provider_config = config.provider.provider_config();

    let mock;
    let http;
    let provider: &dyn Provider = if options.mock_provider {
        mock = MockProvider::new(config.provider.mock_seed);
        &mock
    } else {
        http = HttpProvider::new(
            &config.provider.endpoint,
            config.provider.api_key()?,
            &provider_config,
        );
        &http
    };

    // Estimate the input cost before any request goes out.
    let counter = whitespace_token_counter(config.provider.token_inflation);
    let estimated_cost = estimate_cost(&clusters, &template, &provider_config, &counter)?;

    let log_path = config.paths.output_dir.join(RESPONSES_FILE);
    let outcomes = dispatch_batch(&clusters, provider, &provider_config, &template, &log_path)?;

    let by_id: BTreeMap<u64, &Cluster> = clusters.iter().map(|c| (c.id, c)).collect();
    let mut responses = Vec::new();
    let mut request_failures = 0usize;
    let mut parse_failures = 0usize;
    let mut from_checkpoint = 0usize;
    for outcome in &outcomes {
        if outcome.from_checkpoint {
            from_checkpoint += 1;
        }
        match &outcome.result {
            Ok(raw) => match parse_response(raw) {
                Ok(mut response) => {
                    if let Some(cluster) = by_id.get(&outcome.cluster_id) {
                        response.cluster_members = cluster.members.clone();
                    }
                    responses.push(response);
                }
                Err(_) => parse_failures += 1,
            },
            Err(_) => request_failures += 1,
        }
    }

    let processed = postprocess(&responses);
    let out_path = config.paths.output_dir.join(LLM_PAIRS_FILE);
    write_pairs_file(&out_path, &processed.pairs)?;

    let mut counters = Counters::new();
    count(&mut counters, "clusters_total", clusters.len());
    count(&mut counters, "estimated_cost_usd", estimated_cost);
    count(&mut counters, "from_checkpoint", from_checkpoint);
    count(&mut counters, "request_failures", request_failures);
    count(&mut counters, "parse_failures", parse_failures);
    count(&mut counters, "responses_parsed", responses.len());
    count(
        &mut counters,
        "postprocess",
        serde_json::to_value(&processed.counters).expect("counters serialize"),
    );
    count(&mut counters, "pairs", processed.pairs.len());
    Ok(counters)
}

fn integrate_phase(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let dictionary_path = config.paths.dictionary.as_ref().ok_or_else(|| {
        PipelineError::Config(ConfigError::MissingKey("paths.dictionary".to_string()))
    })?;
    let llm_pairs = read_pairs_file(&config.paths.output_dir.join(LLM_PAIRS_FILE))?;

    let parsed = parse_dictionary(BufReader::new(File::open(dictionary_path)?))?;
    let (kept_entries, filter_report) = filter_entries(&parsed.entries);
    let expanded = to_pairs(&kept_entries);
    let (pairs, overlap_removed) = deconflict(&expanded, &llm_pairs);

    let out_path = config.paths.output_dir.join(DICT_PAIRS_FILE);
    write_pairs_file(&out_path, &pairs)?;

    let mut counters = Counters::new();
    count(&mut counters, "entries_parsed", parsed.entries.len());
    count(
        &mut counters,
        "lines_skipped",
        parsed.warnings.skipped_lines,
    );
    count(
        &mut counters,
        "self_candidates_dropped",
        parsed.warnings.self_candidates_dropped,
    );
    count(&mut counters, "entries_kept", filter_report.kept);
    count(
        &mut counters,
        "rejected_candidate_count",
        filter_report.rejected_candidate_count,
    );
    count(
        &mut counters,
        "rejected_ambiguity",
        filter_report.rejected_ambiguity,
    );
    count(&mut counters, "pairs_expanded", expanded.len());
    count(&mut counters, "overlap_removed", overlap_removed);
    count(&mut counters, "pairs", pairs.len());
    Ok(counters)
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusSummary {
    total_pairs: usize,
    source_counts: BTreeMap<String, usize>,
    relation_counts: BTreeMap<String, usize>,
    llm_duplicates_removed: usize,
    dictionary_duplicates_removed: usize,
}

fn assemble_phase(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let llm_pairs = read_pairs_file(&config.paths.output_dir.join(LLM_PAIRS_FILE))?;
    let dict_pairs = if config.paths.dictionary.is_some() {
        read_pairs_file(&config.paths.output_dir.join(DICT_PAIRS_FILE))?
    } else {
        Vec::new()
    };

    let (corpus, report) = merge(&llm_pairs, &dict_pairs)?;
    let corpus_path = config.paths.output_dir.join(CORPUS_FILE);
    let mut writer = BufWriter::new(File::create(&corpus_path)?);
    crate::corpus::write_jsonl(&corpus, &mut writer)?;
    writer.flush()?;

    let summary = CorpusSummary {
        total_pairs: corpus.len(),
        source_counts: corpus
            .source_counts()
            .iter()
            .map(|(s, c)| (s.as_str().to_string(), *c))
            .collect(),
        relation_counts: corpus
            .relation_counts()
            .iter()
            .map(|(r, c)| (r.as_str().to_string(), *c))
            .collect(),
        llm_duplicates_removed: report.llm_duplicates_removed,
        dictionary_duplicates_removed: report.dictionary_duplicates_removed,
    };
    let summary_path = config.paths.output_dir.join(CORPUS_SUMMARY_FILE);
    let mut body = serde_json::to_string_pretty(&summary).expect("summary serializes");
    body.push('\n');
    std::fs::write(&summary_path, body)?;

    let mut counters = Counters::new();
    count(&mut counters, "total_pairs", summary.total_pairs);
    count(
        &mut counters,
        "source_counts",
        serde_json::to_value(&summary.source_counts).expect("serializes"),
    );
    count(
        &mut counters,
        "relation_counts",
        serde_json::to_value(&summary.relation_counts).expect("serializes"),
    );
    count(
        &mut counters,
        "llm_duplicates_removed",
        summary.llm_duplicates_removed,
    );
    count(
        &mut counters,
        "dictionary_duplicates_removed",
        summary.dictionary_duplicates_removed,
    );
    Ok(counters)
}

fn stats_phase(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let corpus_path = config.paths.output_dir.join(CORPUS_FILE);
    let corpus = read_jsonl(BufReader::new(File::open(&corpus_path)?))?;
    let tokenizer: &dyn Fn(&str) -> Vec<String> = match config.stats.tokenizer {
        TokenizerChoice::Whitespace => &whitespace_tokenizer,
        TokenizerChoice::Character => &character_tokenizer,
    };
    let mut stats = compute_stats(&corpus, tokenizer)?;

    // The JSONL schema carries no provenance; restore the source split
    // from the assemble sidecar when it is present.
    let summary_path = config.paths.output_dir.join(CORPUS_SUMMARY_FILE);
    if let Ok(body) = std::fs::read_to_string(&summary_path) {
        if let Ok(summary) = serde_json::from_str::<CorpusSummary>(&body) {
            if summary.total_pairs == corpus.len() {
                stats.source_counts = summary.source_counts.clone();
                stats.source_percentages = summary
                    .source_counts
                    .iter()
                    .map(|(s, c)| (s.clone(), *c as f64 / summary.total_pairs as f64 * 100.0))
                    .collect();
            }
        }
    }

    let stats_path = config.paths.output_dir.join(STATS_FILE);
    let mut body = serde_json::to_string_pretty(&stats).expect("stats serialize");
    body.push('\n');
    std::fs::write(&stats_path, body)?;

    let mut counters = Counters::new();
    count(&mut counters, "total_pairs", stats.total_pairs);
    count(&mut counters, "type_token_ratio", stats.type_token_ratio);
    count(&mut counters, "avg_word_count", stats.avg_word_count);
    count(&mut counters, "avg_token_length", stats.avg_token_length);
    count(&mut counters, "max_token_length", stats.max_token_length);
    count(
        &mut counters,
        "relation_counts",
        serde_json::to_value(&stats.relation_counts).expect("serializes"),
    );
    Ok(counters)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRecord {
    term_a: String,
    term_b: String,
    predicted: String,
}

fn eval_phase(config: &PipelineConfig) -> Result<Counters, PipelineError> {
    let corpus_path = config.paths.output_dir.join(CORPUS_FILE);
    let corpus = read_jsonl(BufReader::new(File::open(&corpus_path)?))?;
    let embeddings = read_embeddings(&config.paths.output_dir.join(EMBEDDINGS_FILE))?;
    let vectors: BTreeMap<&str, Vec<f64>> = embeddings
        .iter()
        .map(|tv| {
            let v: Vec<f64> = tv.vector.iter().map(|&x| f64::from(x)).collect();
            (tv.term.as_str(), v)
        })
        .collect();

    let corpus_terms: BTreeSet<&str> = corpus
        .pairs()
        .iter()
        .flat_map(|p| [p.term_a.as_str(), p.term_b.as_str()])
        .collect();
    let candidates: Vec<String> = corpus_terms
        .iter()
        .filter(|t| vectors.contains_key(**t))
        .map(|t| t.to_string())
        .collect();
    let candidate_set: BTreeSet<&str> = candidates.iter().map(String::as_str).collect();

    let all_triplets = build_triplets(&corpus, config.eval.include_co_hyponym_negatives);
    let mut usable: Vec<_> = all_triplets
        .iter()
        .filter(|t| {
            vectors.contains_key(t.query.as_str()) && candidate_set.contains(t.positive.as_str())
        })
        .cloned()
        .collect();
    let skipped = all_triplets.len() - usable.len();

    if config.eval.split_ratio < 1.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.eval.split_seed);
        usable.shuffle(&mut rng);
        let keep = ((usable.len() as f64) * config.eval.split_ratio).ceil() as usize;
        usable.truncate(keep.max(1).min(usable.len()));
        usable.sort_by(|a, b| (&a.query, &a.positive).cmp(&(&b.query, &b.positive)));
    }

    let embed = |term: &str| vectors.get(term).cloned();
    let mut retrieval = Vec::new();
    if !usable.is_empty() {
        for &k in &config.eval.k {
            let accuracy = retrieval_accuracy(&usable, &embed, &candidates, k)?;
            retrieval.push(RetrievalResult { k, accuracy });
        }
    }

    let mut unmatched_predictions = 0usize;
    let classification = match &config.eval.predictions {
        Some(path) => {
            let golds_by_key: BTreeMap<(&str, &str), Relation> = corpus
                .pairs()
                .iter()
                .map(|p| (p.key(), p.relation))
                .collect();
            let reader = BufReader::new(File::open(path)?);
            let mut predictions = Vec::new();
            let mut golds = Vec::new();
            let mut unmatched = 0usize;
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: PredictionRecord = serde_json::from_str(&line)
                    .map_err(|e| artifact_error(path, format!("line {}: {}", idx + 1, e)))?;
                let predicted = Relation::from_label(&record.predicted)
                    .ok_or_else(|| EvalError::UnknownLabel(record.predicted.clone()))?;
                let pair = SemanticPair::new(
                    &record.term_a,
                    &record.term_b,
                    predicted,
                    crate::pair::Source::Unspecified,
                )
                .map_err(|e| artifact_error(path, format!("line {}: {}", idx + 1, e)))?;
                match golds_by_key.get(&pair.key()) {
                    Some(&gold) => {
                        predictions.push(predicted);
                        golds.push(gold);
                    }
                    None => unmatched += 1,
                }
            }
            unmatched_predictions = unmatched;
            if predictions.is_empty() {
                None
            } else {
                Some(classification_metrics(&predictions, &golds)?)
            }
        }
        None => None,
    };

    let report = EvalReport {
        triplets_total: all_triplets.len(),
        triplets_evaluated: usable.len(),
        skipped_unembeddable: skipped,
        candidate_terms: candidates.len(),
        retrieval,
        classification,
    };
    let report_path = config.paths.output_dir.join(EVAL_REPORT_FILE);
    let mut body = serde_json::to_string_pretty(&report).expect("report serializes");
    body.push('\n');
    std::fs::write(&report_path, body)?;

    let mut counters = Counters::new();
    count(&mut counters, "triplets_total", report.triplets_total);
    count(
        &mut counters,
        "triplets_evaluated",
        report.triplets_evaluated,
    );
    count(
        &mut counters,
        "skipped_unembeddable",
        report.skipped_unembeddable,
    );
    count(&mut counters, "candidate_terms", report.candidate_terms);
    for r in &report.retrieval {
        count(&mut counters, &format!("top_{}_accuracy", r.k), r.accuracy);
    }
    count(
        &mut counters,
        "classification_scored",
        report.classification.is_some(),
    );
    count(
        &mut counters,
        "unmatched_predictions",
        unmatched_predictions,
    );
    Ok(counters)
}
