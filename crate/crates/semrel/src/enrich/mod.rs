//! LLM enrichment: prompt rendering, batch dispatch with checkpointed
//! retries, response parsing with bounded repair, and post-processing into
//! canonical pairs.

mod cost;
mod dispatch;
mod postprocess;
mod provider;
mod response;
mod template;

pub use cost::{estimate_cost, whitespace_token_counter};
pub use dispatch::{
    cluster_digest, dispatch_batch, AuditRecord, AuditStatus, DispatchError, DispatchFailure,
    DispatchOutcome,
};
pub use postprocess::{pairs_to_response, postprocess, PostprocessCounters, Postprocessed};
pub use provider::{
    extract_cluster_terms, HttpProvider, MockProvider, Provider, ProviderConfig, ProviderError,
};
pub use response::{parse_response, EnrichmentResponse, ResponseParseError, TermRelations};
pub use template::{
    render_prompt, PromptTemplate, TemplateError, TemplateKind, NER_AUGMENTATION_BODY,
    SEMANTIC_ENRICHMENT_BODY, SLOT,
};
