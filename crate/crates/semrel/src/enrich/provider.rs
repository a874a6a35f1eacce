//! Model providers: the dispatch-facing trait, a deterministic mock for
//! tests and dry runs, and an HTTP implementation.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    /// Worth retrying: timeouts, rate limits, 5xx.
    #[error("transient provider failure: {0}")]
    Transient(String),
    /// Not worth retrying for this request, but the batch continues.
    #[error("provider rejected request: {0}")]
    Fatal(String),
    /// Aborts the whole batch.
    #[error("provider authentication failed: {0}")]
    Auth(String),
}

/// A completion backend. Implementations must be shareable across the
/// dispatch worker threads.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Provider settings shared by all backends.
#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub model_name: String,
    pub input_price_per_1m_tokens: f64,
    pub max_retries: u32,
    pub request_timeout: Duration,
    pub max_concurrent_requests: usize,
    /// Initial backoff; doubles per retry.
    pub retry_backoff_ms: u64,
    /// Multiplier applied by the default whitespace token counter.
    pub token_inflation: f64,
    /// Decoding options passed through to the backend untouched.
    pub decoding: BTreeMap<String, serde_json::Value>,
}

impl Default for ProviderConfig {
    fn default() -> ProviderConfig {
        ProviderConfig {
            model_name: "gemini-2.5-flash".to_string(),
            input_price_per_1m_tokens: 0.075,
            max_retries: 3,
            request_timeout: Duration::from_secs(60),
            max_concurrent_requests: 4,
            retry_backoff_ms: 500,
            token_inflation: 1.0,
            decoding: BTreeMap::new(),
        }
    }
}

/// Pull the cluster members back out of a rendered prompt: the last
/// `Input cluster: [...]` line carries them as a JSON string list.
pub fn extract_cluster_terms(prompt: &str) -> Option<Vec<String>> {
    let line = prompt
        .lines()
        .rev()
        .find(|l| l.trim_start().starts_with("Input cluster:"))?;
    let list = line.split_once(':')?.1.trim();
    serde_json::from_str(list).ok()
}

/// Deterministic rule-based provider. Responses are a pure function of
/// the seed and the cluster members, so runs reproduce byte for byte
/// regardless of worker count or completion order. The generated output
/// deliberately exercises the downstream tolerance rules: occasional
/// self-synonyms, duplicate mentions, out-of-cluster suggestions, code
/// fences, and prose preambles.
pub struct MockProvider {
    seed: u64,
    requests: AtomicU64,
}

impl MockProvider {
    pub fn new(seed: u64) -> MockProvider {
        MockProvider {
            seed,
            requests: AtomicU64::new(0),
        }
    }

    /// Number of completions served, for resume accounting in tests.
    pub fn requests_served(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    fn rng_for(&self, members: &[String]) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        for member in members {
            hasher.update(member.as_bytes());
            hasher.update([0x1f]);
        }
        let digest = hasher.finalize();
        let mut key = [0u8; 8];
        key.copy_from_slice(&digest[..8]);
        ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(key))
    }
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let members = extract_cluster_terms(prompt).ok_or_else(|| {
            ProviderError::Fatal("prompt carries no `Input cluster:` list".to_string())
        })?;
        if members.is_empty() {
            return Err(ProviderError::Fatal("empty cluster list".to_string()));
        }
        let mut rng = self.rng_for(&members);

        let mut terms: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        for (i, member) in members.iter().enumerate() {
            let mut synonyms: Vec<String> = Vec::new();
            let mut antonyms: Vec<String> = Vec::new();
            let mut co_hyponyms: Vec<String> = Vec::new();

            let partner = &members[(i + 1) % members.len()];
            if partner != member {
                match rng.gen_range(0..100) {
                    0..=34 => synonyms.push(partner.clone()),
                    35..=49 => antonyms.push(partner.clone()),
                    50..=84 => co_hyponyms.push(partner.clone()),
                    _ => {}
                }
            }
            if rng.gen_bool(0.15) {
                synonyms.push(member.clone());
            }
            if rng.gen_bool(0.12) {
                if let Some(first) = co_hyponyms.first().cloned() {
                    co_hyponyms.push(first);
                }
            }
            if rng.gen_bool(0.10) {
                synonyms.push(format!("{} eşdeğeri", member));
            }
            if rng.gen_bool(0.10) {
                co_hyponyms.push(format!("{} alanı", member));
            }

            terms.insert(
                member.clone(),
                serde_json::json!({
                    "synonyms": synonyms,
                    "antonyms": antonyms,
                    "co_hyponyms": co_hyponyms,
                }),
            );
        }
        let body = serde_json::to_string_pretty(&terms).expect("maps serialize");
        let decorated = match rng.gen_range(0..10) {
            0..=2 => format!("```json\n{}\n```", body),
            3 => format!("İşte küme için sonuçlar:\n{}", body),
            _ => body,
        };
        Ok(decorated)
    }
}

/// HTTP backend speaking the `generateContent` shape: the prompt goes out
/// as a single text part and the reply text is concatenated from the
/// first candidate's parts. The API key comes from the environment, never
/// from config files.
pub struct HttpProvider {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    decoding: BTreeMap<String, serde_json::Value>,
    model_name: String,
}

impl HttpProvider {
    pub fn new(endpoint: &str, api_key: String, config: &ProviderConfig) -> HttpProvider {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build();
        HttpProvider {
            agent: agent_config.into(),
            url: format!(
                "{}/v1beta/models/{}:generateContent",
                endpoint.trim_end_matches('/'),
                config.model_name
            ),
            api_key,
            decoding: config.decoding.clone(),
            model_name: config.model_name.clone(),
        }
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        &self.model_name
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let mut body = serde_json::json!({
            "contents": [{"parts": [{"text": prompt}]}],
        });
        if !self.decoding.is_empty() {
            body["generationConfig"] = serde_json::json!(self.decoding);
        }

        let mut response = self
            .agent
            .post(&self.url)
            .header("x-goog-api-key", &self.api_key)
            .send_json(&body)
            .map_err(|e| ProviderError::Transient(e.to_string()))?;

        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => {
                return Err(ProviderError::Auth(format!("HTTP {}", status)));
            }
            408 | 429 | 500..=599 => {
                return Err(ProviderError::Transient(format!("HTTP {}", status)));
            }
            other => {
                return Err(ProviderError::Fatal(format!("HTTP {}", other)));
            }
        }

        let payload: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Fatal(format!("unreadable response body: {}", e)))?;
        let parts = payload
            .pointer("/candidates/0/content/parts")
            .and_then(|p| p.as_array())
            .ok_or_else(|| {
                ProviderError::Fatal("response carries no candidate parts".to_string())
            })?;
        let text: String = parts
            .iter()
            .filter_map(|p| p.get("text").and_then(|t| t.as_str()))
            .collect();
        if text.is_empty() {
            return Err(ProviderError::Fatal("candidate has no text".to_string()));
        }
        Ok(text)
    }
}
