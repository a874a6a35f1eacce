//! Pre-dispatch cost estimation from rendered prompt token counts.

use crate::cluster::Cluster;
use crate::enrich::provider::ProviderConfig;
use crate::enrich::template::{render_prompt, PromptTemplate, TemplateError};

/// Whitespace token count scaled by an inflation factor, rounded up. The
/// true tokenizer is provider-internal; this estimate is advisory and the
/// factor should be calibrated per provider.
pub fn whitespace_token_counter(inflation: f64) -> impl Fn(&str) -> u64 {
    move |text: &str| {
        let words = text.split_whitespace().count() as f64;
        (words * inflation).ceil() as u64
    }
}

/// Estimated input cost in the config's currency: the sum over clusters of
/// rendered-prompt tokens times the per-token price. Exactly linear in the
/// cluster list.
pub fn estimate_cost(
    clusters: &[Cluster],
    template: &PromptTemplate,
    config: &ProviderConfig,
    token_counter: impl Fn(&str) -> u64,
) -> Result<f64, TemplateError> {
    let mut total = 0f64;
    for cluster in clusters {
        let prompt = render_prompt(template, cluster)?;
        let tokens = token_counter(&prompt) as f64;
        total += tokens * config.input_price_per_1m_tokens / 1_000_000.0;
    }
    Ok(total)
}
