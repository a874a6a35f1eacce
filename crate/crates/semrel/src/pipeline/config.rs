//! Pipeline configuration: one human-editable TOML file, validated
//! strictly. Unknown keys are errors with a nearest-match suggestion, and
//! out-of-range values report the legal range. The provider API key is
//! read from the environment only, never from the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterParams, Linkage};
use crate::enrich::ProviderConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown key {key:?} in [{section}]{suggestion}")]
    UnknownKey {
        section: String,
        key: String,
        suggestion: String,
    },
    #[error("{key} = {value} is out of range: {legal}")]
    OutOfRange {
        key: String,
        value: String,
        legal: String,
    },
    #[error("missing required key {0:?}")]
    MissingKey(String),
    #[error("input path does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("environment variable {0} is not set (the provider API key is env-only)")]
    MissingApiKey(String),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PathsConfig {
    pub vectors: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct ClusteringConfig {
    pub threshold: f64,
    pub linkage: Linkage,
    pub min_size: usize,
    pub max_prompt_size: usize,
    pub dense_matrix_cap: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            threshold: 0.4,
            linkage: Linkage::Average,
            min_size: 2,
            max_prompt_size: 50,
            dense_matrix_cap: 8_000,
        }
    }
}

impl ClusteringConfig {
    pub fn params(&self) -> ClusterParams {
        ClusterParams {
            threshold: self.threshold,
            linkage: self.linkage,
            dense_matrix_cap: self.dense_matrix_cap,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct ProviderSection {
    pub model_name: String,
    pub input_price_per_1m_tokens: f64,
    pub max_retries: u32,
    pub request_timeout_secs: u64,
    pub max_concurrent_requests: usize,
    pub retry_backoff_ms: u64,
    pub token_inflation: f64,
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub mock_seed: u64,
    /// Decoding options forwarded to the provider untouched.
    pub decoding: BTreeMap<String, toml::Value>,
}

impl Default for ProviderSection {
    fn default() -> Self {
        ProviderSection {
            model_name: "gemini-2.5-flash".to_string(),
            input_price_per_1m_tokens: 0.075,
            max_retries: 3,
            request_timeout_secs: 60,
            max_concurrent_requests: 4,
            retry_backoff_ms: 500,
            token_inflation: 1.0,
            endpoint: "https://generativelanguage.googleapis.com".to_string(),
            api_key_env: "SEMREL_API_KEY".to_string(),
            mock_seed: 42,
            decoding: BTreeMap::new(),
        }
    }
}

impl ProviderSection {
    pub fn provider_config(&self) -> ProviderConfig {
        let decoding = self
            .decoding
            .iter()
            .map(|(k, v)| {
                let json = serde_json::to_value(v).unwrap_or(serde_json::Value::Null);
                (k.clone(), json)
            })
            .collect();
        ProviderConfig {
            model_name: self.model_name.clone(),
            input_price_per_1m_tokens: self.input_price_per_1m_tokens,
            max_retries: self.max_retries,
            request_timeout: Duration::from_secs(self.request_timeout_secs),
            max_concurrent_requests: self.max_concurrent_requests,
            retry_backoff_ms: self.retry_backoff_ms,
            token_inflation: self.token_inflation,
            decoding,
        }
    }

    pub fn api_key(&self) -> Result<String, ConfigError> {
        std::env::var(&self.api_key_env)
            .map_err(|_| ConfigError::MissingApiKey(self.api_key_env.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerChoice {
    Whitespace,
    Character,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct StatsConfig {
    pub tokenizer: TokenizerChoice,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            tokenizer: TokenizerChoice::Whitespace,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k: Vec<usize>,
    pub split_seed: u64,
    /// Fraction of triplets evaluated, sampled with `split_seed`.
    pub split_ratio: f64,
    pub temperature: f64,
    pub include_co_hyponym_negatives: bool,
    /// Optional JSONL of predicted labels to score against corpus golds.
    pub predictions: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: vec![1, 3, 5],
            split_seed: 42,
            split_ratio: 1.0,
            temperature: 0.07,
            include_co_hyponym_negatives: false,
            predictions: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub provider: ProviderSection,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

const ROOT_KEYS: &[&str] = &["paths", "clustering", "provider", "stats", "eval"];
const PATHS_KEYS: &[&str] = &["vectors", "lexicon", "dictionary", "output_dir"];
const CLUSTERING_KEYS: &[&str] = &[
    "threshold",
    "linkage",
    "min_size",
    "max_prompt_size",
    "dense_matrix_cap",
];
const PROVIDER_KEYS: &[&str] = &[
    "model_name",
    "input_price_per_1m_tokens",
    "max_retries",
    "request_timeout_secs",
    "max_concurrent_requests",
    "retry_backoff_ms",
    "token_inflation",
    "endpoint",
    "api_key_env",
    "mock_seed",
    "decoding",
];
const STATS_KEYS: &[&str] = &["tokenizer"];
const EVAL_KEYS: &[&str] = &[
    "k",
    "split_seed",
    "split_ratio",
    "temperature",
    "include_co_hyponym_negatives",
    "predictions",
];

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            current.push((prev[j] + cost).min(prev[j + 1] + 1).min(current[j] + 1));
        }
        prev = current;
    }
    prev[b.len()]
}

fn unknown_key(section: &str, key: &str, allowed: &[&str]) -> ConfigError {
    let suggestion = allowed
        .iter()
        .map(|candidate| (edit_distance(key, candidate), *candidate))
        .min()
        .filter(|(distance, _)| *distance <= 2)
        .map(|(_, candidate)| format!("; did you mean {:?}?", candidate))
        .unwrap_or_default();
    ConfigError::UnknownKey {
        section: section.to_string(),
        key: key.to_string(),
        suggestion,
    }
}

fn check_table(table: &toml::Table, section: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(unknown_key(section, key, allowed));
        }
    }
    Ok(())
}

fn check_unknown_keys(root: &toml::Table) -> Result<(), ConfigError> {
    check_table(root, "root", ROOT_KEYS)?;
    let sections: &[(&str, &[&str])] = &[
        ("paths", PATHS_KEYS),
        ("clustering", CLUSTERING_KEYS),
        ("provider", PROVIDER_KEYS),
        ("stats", STATS_KEYS),
        ("eval", EVAL_KEYS),
    ];
    for (name, allowed) in sections {
        if let Some(toml::Value::Table(table)) = root.get(*name) {
            check_table(table, name, allowed)?;
            // provider.decoding is an opaque pass-through table.
        }
    }
    Ok(())
}

fn range_error(key: &str, value: impl std::fmt::Display, legal: &str) -> ConfigError {
    ConfigError::OutOfRange {
        key: key.to_string(),
        value: value.to_string(),
        legal: legal.to_string(),
    }
}

fn check_ranges(config: &PipelineConfig) -> Result<(), ConfigError> {
    let c = &config.clustering;
    if !(c.threshold > 0.0 && c.threshold <= 2.0) {
        return Err(range_error("clustering.threshold", c.threshold, "(0, 2]"));
    }
    if c.min_size < 2 {
        return Err(range_error("clustering.min_size", c.min_size, ">= 2"));
    }
    if c.max_prompt_size < c.min_size {
        return Err(range_error(
            "clustering.max_prompt_size",
            c.max_prompt_size,
            ">= clustering.min_size",
        ));
    }
    if c.dense_matrix_cap < 2 {
        return Err(range_error(
            "clustering.dense_matrix_cap",
            c.dense_matrix_cap,
            ">= 2",
        ));
    }
    let p = &config.provider;
    if p.input_price_per_1m_tokens < 0.0 {
        return Err(range_error(
            "provider.input_price_per_1m_tokens",
            p.input_price_per_1m_tokens,
            ">= 0",
        ));
    }
    if p.max_concurrent_requests == 0 {
        return Err(range_error(
            "provider.max_concurrent_requests",
            p.max_concurrent_requests,
            ">= 1",
        ));
    }
    if !p.token_inflation.is_finite() || p.token_inflation <= 0.0 {
        return Err(range_error(
            "provider.token_inflation",
            p.token_inflation,
            "> 0",
        ));
    }
    let e = &config.eval;
    if e.k.is_empty() || e.k.contains(&0) {
        return Err(range_error(
            "eval.k",
            format!("{:?}", e.k),
            "non-empty list of integers >= 1",
        ));
    }
    if !(e.split_ratio > 0.0 && e.split_ratio <= 1.0) {
        return Err(range_error("eval.split_ratio", e.split_ratio, "(0, 1]"));
    }
    if !e.temperature.is_finite() || e.temperature <= 0.0 {
        return Err(range_error("eval.temperature", e.temperature, "> 0"));
    }
    Ok(())
}

fn check_paths(config: &PipelineConfig) -> Result<(), ConfigError> {
    let must_exist = [
        Some(&config.paths.vectors),
        Some(&config.paths.lexicon),
        config.paths.dictionary.as_ref(),
        config.eval.predictions.as_ref(),
    ];
    for path in must_exist.into_iter().flatten() {
        if !path.exists() {
            return Err(ConfigError::MissingPath(path.clone()));
        }
    }
    Ok(())
}

/// Parse and fully validate a config source: strict keys, defaults
/// applied, ranges checked, and referenced input paths verified to exist.
pub fn validate_config(source: &str) -> Result<PipelineConfig, ConfigError> {
    let root: toml::Table = toml::from_str(source)?;
    if !root.contains_key("paths") {
        return Err(ConfigError::MissingKey("paths".to_string()));
    }
    check_unknown_keys(&root)?;
    let config: PipelineConfig = toml::Value::Table(root).try_into()?;
    check_ranges(&config)?;
    check_paths(&config)?;
    Ok(config)
}

/// Read and validate a config file.
pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let source =
        std::fs::read_to_string(path).map_err(|_| ConfigError::MissingPath(path.to_path_buf()))?;
    validate_config(&source)
}
