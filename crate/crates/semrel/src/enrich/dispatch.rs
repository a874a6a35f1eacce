//! Batch dispatch: bounded concurrency, retry with exponential backoff,
//! and a persisted per-cluster audit log that doubles as the resume
//! checkpoint.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cluster::Cluster;
use crate::enrich::provider::{Provider, ProviderConfig, ProviderError};
use crate::enrich::response::parse_response;
use crate::enrich::template::{render_prompt, PromptTemplate};

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("authentication failure, batch aborted: {0}")]
    Auth(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("audit log {path}: line {line} is not a valid record: {source}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditStatus {
    Ok,
    Failed,
}

/// One audit-log line: the raw outcome for one cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditRecord {
    pub cluster_id: u64,
    /// Digest of the cluster members; resume reuses a record only when
    /// both the id and the digest still match.
    pub cluster_digest: String,
    pub timestamp_unix: u64,
    pub status: AuditStatus,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Whether response extraction needed any tolerance rule; None when
    /// the response failed or did not parse at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repaired: Option<bool>,
}

/// Why a cluster produced no usable response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchFailure {
    pub message: String,
    pub attempts: u32,
}

/// Exactly one outcome per dispatched cluster.
#[derive(Debug, Clone)]
pub struct DispatchOutcome {
    pub cluster_id: u64,
    pub result: Result<String, DispatchFailure>,
    /// True when the outcome was replayed from the audit log instead of
    /// issuing a request.
    pub from_checkpoint: bool,
}

pub fn cluster_digest(cluster: &Cluster) -> String {
    let mut hasher = Sha256::new();
    for member in &cluster.members {
        hasher.update(member.as_bytes());
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

fn load_log(path: &Path) -> Result<Vec<AuditRecord>, DispatchError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| DispatchError::CorruptLog {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Send one prompt per cluster, retrying transient failures with
/// exponential backoff, at most `max_concurrent_requests` in flight.
///
/// Every completed cluster is appended to the audit log at `log_path`
/// before its outcome is surfaced, so a killed run can resume: clusters
/// whose (id, member digest) already carry an `ok` record are replayed
/// from the log without issuing a request. Results are keyed by cluster
/// id; completion order never matters.
pub fn dispatch_batch(
    clusters: &[Cluster],
    provider: &dyn Provider,
    config: &ProviderConfig,
    template: &PromptTemplate,
    log_path: &Path,
) -> Result<Vec<DispatchOutcome>, DispatchError> {
    let mut completed: HashMap<(u64, String), AuditRecord> = HashMap::new();
    for record in load_log(log_path)? {
        if record.status == AuditStatus::Ok {
            completed.insert((record.cluster_id, record.cluster_digest.clone()), record);
        }
    }

    let mut outcomes: Vec<DispatchOutcome> = Vec::with_capacity(clusters.len());
    let mut pending: VecDeque<&Cluster> = VecDeque::new();
    for cluster in clusters {
        let key = (cluster.id, cluster_digest(cluster));
        if let Some(record) = completed.get(&key) {
            outcomes.push(DispatchOutcome {
                cluster_id: cluster.id,
                result: Ok(record.raw.clone().unwrap_or_default()),
                from_checkpoint: true,
            });
        } else {
            pending.push_back(cluster);
        }
    }

    if !pending.is_empty() {
        let log_file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)?;
        let writer = Mutex::new(BufWriter::new(log_file));
        let queue = Mutex::new(pending);
        let fresh: Mutex<Vec<DispatchOutcome>> = Mutex::new(Vec::new());
        let auth_failure: Mutex<Option<String>> = Mutex::new(None);

        let workers = config.max_concurrent_requests.max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| {
                    work_loop(
                        &queue,
                        provider,
                        config,
                        template,
                        &writer,
                        &fresh,
                        &auth_failure,
                    );
                });
            }
        });
        writer.into_inner().expect("workers have exited").flush()?;

        if let Some(message) = auth_failure.into_inner().expect("workers have exited") {
            return Err(DispatchError::Auth(message));
        }
        outcomes.extend(fresh.into_inner().expect("workers have exited"));
    }

    outcomes.sort_by_key(|o| o.cluster_id);
    Ok(outcomes)
}

fn work_loop(
    queue: &Mutex<VecDeque<&Cluster>>,
    provider: &dyn Provider,
    config: &ProviderConfig,
    template: &PromptTemplate,
    writer: &Mutex<BufWriter<File>>,
    fresh: &Mutex<Vec<DispatchOutcome>>,
    auth_failure: &Mutex<Option<String>>,
) {
    loop {
        if auth_failure.lock().expect("lock poisoned").is_some() {
            return;
        }
        let cluster = match queue.lock().expect("lock poisoned").pop_front() {
            Some(c) => c,
            None => return,
        };
        let digest = cluster_digest(cluster);

        let prompt = match render_prompt(template, cluster) {
            Ok(p) => p,
            Err(e) => {
                record_outcome(
                    writer,
                    fresh,
                    cluster.id,
                    digest,
                    0,
                    Err(DispatchFailure {
                        message: e.to_string(),
                        attempts: 0,
                    }),
                );
                continue;
            }
        };

        let mut attempts = 0u32;
        let result = loop {
            attempts += 1;
            match provider.complete(&prompt) {
                Ok(raw) => break Ok(raw),
                Err(ProviderError::Transient(message)) => {
                    if attempts > config.max_retries {
                        break Err(DispatchFailure { message, attempts });
                    }
                    let backoff = config.retry_backoff_ms.saturating_mul(1 << (attempts - 1));
                    std::thread::sleep(Duration::from_millis(backoff.min(30_000)));
                }
                Err(ProviderError::Fatal(message)) => {
                    break Err(DispatchFailure { message, attempts });
                }
                Err(ProviderError::Auth(message)) => {
                    *auth_failure.lock().expect("lock poisoned") = Some(message);
                    return;
                }
            }
        };
        record_outcome(writer, fresh, cluster.id, digest, attempts, result);
    }
}

fn record_outcome(
    writer: &Mutex<BufWriter<File>>,
    fresh: &Mutex<Vec<DispatchOutcome>>,
    cluster_id: u64,
    cluster_digest: String,
    attempts: u32,
    result: Result<String, DispatchFailure>,
) {
    let record = match &result {
        Ok(raw) => AuditRecord {
            cluster_id,
            cluster_digest,
            timestamp_unix: now_unix(),
            status: AuditStatus::Ok,
            attempts,
            raw: Some(raw.clone()),
            error: None,
            repaired: parse_response(raw).ok().map(|r| r.repair_applied),
        },
        Err(failure) => AuditRecord {
            cluster_id,
            cluster_digest,
            timestamp_unix: now_unix(),
            status: AuditStatus::Failed,
            attempts: failure.attempts,
            raw: None,
            error: Some(failure.message.clone()),
            repaired: None,
        },
    };
    {
        let mut guard = writer.lock().expect("lock poisoned");
        serde_json::to_writer(&mut *guard, &record).expect("audit records serialize");
        guard.write_all(b"\n").expect("audit log writable");
        guard.flush().expect("audit log writable");
    }
    fresh.lock().expect("lock poisoned").push(DispatchOutcome {
        cluster_id,
        result,
        from_checkpoint: false,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::provider::MockProvider;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn clusters(n: u64) -> Vec<Cluster> {
        (0..n)
            .map(|id| Cluster {
                id,
                members: vec![format!("t{}a", id), format!("t{}b", id)],
            })
            .collect()
    }

    fn test_config() -> ProviderConfig {
        ProviderConfig {
            retry_backoff_ms: 1,
            ..ProviderConfig::default()
        }
    }

    /// Fails with a transient error a fixed number of times, then defers
    /// to the mock.
    struct FlakyProvider {
        failures: AtomicU32,
        inner: MockProvider,
    }

    impl Provider for FlakyProvider {
        fn name(&self) -> &str {
            "flaky"
        }
        fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                return Err(ProviderError::Transient("simulated outage".into()));
            }
            self.inner.complete(prompt)
        }
    }

    #[test]
    fn every_cluster_gets_exactly_one_outcome() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("responses.jsonl");
        let provider = MockProvider::new(42);
        let template = PromptTemplate::semantic_enrichment();
        let outcomes =
            dispatch_batch(&clusters(3), &provider, &test_config(), &template, &log).unwrap();
        assert_eq!(outcomes.len(), 3);
        let ids: Vec<u64> = outcomes.iter().map(|o| o.cluster_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert!(outcomes.iter().all(|o| o.result.is_ok()));
    }

    #[test]
    fn transient_failures_are_retried() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("responses.jsonl");
        let provider = FlakyProvider {
            failures: AtomicU32::new(2),
            inner: MockProvider::new(1),
        };
        let config = ProviderConfig {
            max_retries: 3,
            max_concurrent_requests: 1,
            ..test_config()
        };
        let template = PromptTemplate::semantic_enrichment();
        let outcomes = dispatch_batch(&clusters(1), &provider, &config, &template, &log).unwrap();
        assert!(outcomes[0].result.is_ok());
        // Two failures then one success: three attempts total.
        let records = load_log(&log).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].attempts, 3);
    }

    #[test]
    fn exhausted_retries_become_failure_records() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("responses.jsonl");
        let provider = FlakyProvider {
            failures: AtomicU32::new(10),
            inner: MockProvider::new(1),
        };
        let config = ProviderConfig {
            max_retries: 2,
            max_concurrent_requests: 1,
            ..test_config()
        };
        let template = PromptTemplate::semantic_enrichment();
        let outcomes = dispatch_batch(&clusters(1), &provider, &config, &template, &log).unwrap();
        let failure = outcomes[0].result.as_ref().unwrap_err();
        assert_eq!(failure.attempts, 3);
        let records = load_log(&log).unwrap();
        assert_eq!(records[0].status, AuditStatus::Failed);
    }

    #[test]
    fn auth_failure_aborts_batch() {
        struct AuthFail;
        impl Provider for AuthFail {
            fn name(&self) -> &str {
                "authfail"
            }
            fn complete(&self, _prompt: &str) -> Result<String, ProviderError> {
                Err(ProviderError::Auth("bad key".into()))
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("responses.jsonl");
        let template = PromptTemplate::semantic_enrichment();
        let err =
            dispatch_batch(&clusters(4), &AuthFail, &test_config(), &template, &log).unwrap_err();
        assert!(matches!(err, DispatchError::Auth(_)));
    }

    #[test]
    fn resume_skips_completed_clusters() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("responses.jsonl");
        let template = PromptTemplate::semantic_enrichment();
        let all = clusters(10);

        // First run covers only the first six clusters, simulating a kill.
        let first = MockProvider::new(42);
        dispatch_batch(&all[..6], &first, &test_config(), &template, &log).unwrap();
        assert_eq!(first.requests_served(), 6);

        let second = MockProvider::new(42);
        let outcomes = dispatch_batch(&all, &second, &test_config(), &template, &log).unwrap();
        assert_eq!(second.requests_served(), 4);
        assert_eq!(outcomes.len(), 10);
        assert_eq!(outcomes.iter().filter(|o| o.from_checkpoint).count(), 6);
    }

    #[test]
    fn changed_cluster_content_invalidates_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("responses.jsonl");
        let template = PromptTemplate::semantic_enrichment();
        let provider = MockProvider::new(42);

        let mut one = clusters(1);
        dispatch_batch(&one, &provider, &test_config(), &template, &log).unwrap();
        one[0].members.push("yeni üye".to_string());
        dispatch_batch(&one, &provider, &test_config(), &template, &log).unwrap();
        assert_eq!(provider.requests_served(), 2);
    }

    #[test]
    fn outcomes_are_reproducible_across_worker_counts() {
        let template = PromptTemplate::semantic_enrichment();
        let all = clusters(8);
        let mut raws: Vec<Vec<String>> = Vec::new();
        for workers in [1usize, 4] {
            let dir = tempfile::tempdir().unwrap();
            let log = dir.path().join("responses.jsonl");
            let provider = MockProvider::new(9);
            let config = ProviderConfig {
                max_concurrent_requests: workers,
                ..test_config()
            };
            let outcomes = dispatch_batch(&all, &provider, &config, &template, &log).unwrap();
            raws.push(
                outcomes
                    .into_iter()
                    .map(|o| o.result.unwrap())
                    .collect::<Vec<_>>(),
            );
        }
        assert_eq!(raws[0], raws[1]);
    }
}
