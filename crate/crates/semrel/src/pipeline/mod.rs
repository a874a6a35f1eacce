//! Phase orchestration: a single config file, file-based artifacts with
//! digest manifests, no-op detection, and an output-directory lock.

mod config;
mod lock;
mod manifest;
mod phases;

pub use config::{
    load_config, validate_config, ClusteringConfig, ConfigError, EvalConfig, PathsConfig,
    PipelineConfig, ProviderSection, StatsConfig, TokenizerChoice,
};
pub use lock::DirLock;
pub use manifest::{sha256_bytes, sha256_file, Manifest};
pub use phases::{run_phase, Phase, PhaseOutcome, PhaseStatus, PipelineError, RunOptions};
