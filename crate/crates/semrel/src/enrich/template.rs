//! Prompt templates: versioned text assets with a single insertion slot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::Cluster;

/// Marker replaced when a template is rendered.
pub const SLOT: &str = "{{cluster}}";

/// Shipped template bodies. These are release artifacts: tests pin their
/// static regions byte for byte, so edits are schema changes.
pub const SEMANTIC_ENRICHMENT_BODY: &str =
    include_str!("../../assets/semantic_enrichment_prompt.txt");
pub const NER_AUGMENTATION_BODY: &str = include_str!("../../assets/ner_augmentation_prompt.txt");

#[derive(Debug, Error, PartialEq)]
pub enum TemplateError {
    #[error("template {0:?} must contain the slot marker {SLOT:?} exactly once, found {1}")]
    BadSlotCount(String, usize),
    #[error("cannot render a prompt for an empty cluster")]
    EmptyCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateKind {
    SemanticEnrichment,
    NerAugmentation,
}

/// A prompt template: a named body with one insertion slot.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub name: TemplateKind,
    body: String,
}

impl PromptTemplate {
    /// The shipped cluster-relationship classification prompt.
    pub fn semantic_enrichment() -> PromptTemplate {
        PromptTemplate::with_body(TemplateKind::SemanticEnrichment, SEMANTIC_ENRICHMENT_BODY)
            .expect("shipped asset carries one slot")
    }

    /// The shipped concept/term/event/fact extraction prompt.
    pub fn ner_augmentation() -> PromptTemplate {
        PromptTemplate::with_body(TemplateKind::NerAugmentation, NER_AUGMENTATION_BODY)
            .expect("shipped asset carries one slot")
    }

    /// Wrap a custom body, validating the slot count.
    pub fn with_body(name: TemplateKind, body: &str) -> Result<PromptTemplate, TemplateError> {
        let slots = body.matches(SLOT).count();
        if slots != 1 {
            return Err(TemplateError::BadSlotCount(format!("{:?}", name), slots));
        }
        Ok(PromptTemplate {
            name,
            body: body.to_string(),
        })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Everything before the slot marker: the fixed region golden tests
    /// compare byte for byte.
    pub fn static_region(&self) -> &str {
        let at = self.body.find(SLOT).expect("validated on construction");
        &self.body[..at]
    }

    /// Substitute raw text into the slot (used for document chunks).
    pub fn render_text(&self, text: &str) -> String {
        self.body.replacen(SLOT, text, 1)
    }
}

/// Render the prompt for one cluster: members are serialized as a quoted,
/// comma-separated list in the slot. Byte-stable for identical inputs.
pub fn render_prompt(
    template: &PromptTemplate,
    cluster: &Cluster,
) -> Result<String, TemplateError> {
    if cluster.members.is_empty() {
        return Err(TemplateError::EmptyCluster);
    }
    let quoted: Vec<String> = cluster
        .members
        .iter()
        .map(|m| serde_json::to_string(m).expect("strings always serialize"))
        .collect();
    Ok(template.render_text(&quoted.join(", ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(members: &[&str]) -> Cluster {
        Cluster {
            id: 0,
            members: members.iter().map(|m| m.to_string()).collect(),
        }
    }

    #[test]
    fn renders_members_as_quoted_list() {
        let template = PromptTemplate::semantic_enrichment();
        let rendered = render_prompt(&template, &cluster(&["mahkeme", "yargı", "adalet"])).unwrap();
        assert!(rendered.contains(r#"Input cluster: ["mahkeme", "yargı", "adalet"]"#));
        assert!(rendered.starts_with(template.static_region()));
    }

    #[test]
    fn rendering_is_byte_stable() {
        let template = PromptTemplate::semantic_enrichment();
        let c = cluster(&["banka", "sigorta"]);
        assert_eq!(
            render_prompt(&template, &c).unwrap(),
            render_prompt(&template, &c).unwrap()
        );
    }

    #[test]
    fn slot_region_mentions_each_member_once() {
        let template = PromptTemplate::semantic_enrichment();
        let c = cluster(&["vergi dairesi", "maliye"]);
        let rendered = render_prompt(&template, &c).unwrap();
        let slot_region = &rendered[template.static_region().len()..];
        for member in &c.members {
            let needle = format!("\"{}\"", member);
            assert_eq!(slot_region.matches(&needle).count(), 1, "{}", member);
        }
    }

    #[test]
    fn quoting_escapes_embedded_quotes() {
        let template = PromptTemplate::semantic_enrichment();
        let rendered = render_prompt(&template, &cluster(&[r#"a"b"#])).unwrap();
        assert!(rendered.contains(r#"Input cluster: ["a\"b"]"#));
    }

    #[test]
    fn empty_cluster_is_rejected() {
        let template = PromptTemplate::semantic_enrichment();
        assert_eq!(
            render_prompt(&template, &cluster(&[])),
            Err(TemplateError::EmptyCluster)
        );
    }

    #[test]
    fn ner_template_renders_document_chunks() {
        let template = PromptTemplate::ner_augmentation();
        let rendered = template.render_text("Mahkeme kararını açıkladı.");
        assert!(rendered.starts_with("You are an expert system in taxonomy"));
        assert!(rendered.contains("Text: Mahkeme kararını açıkladı."));
    }

    #[test]
    fn custom_body_must_contain_one_slot() {
        assert!(matches!(
            PromptTemplate::with_body(TemplateKind::SemanticEnrichment, "no slot here"),
            Err(TemplateError::BadSlotCount(_, 0))
        ));
        assert!(matches!(
            PromptTemplate::with_body(
                TemplateKind::SemanticEnrichment,
                "{{cluster}} and {{cluster}}"
            ),
            Err(TemplateError::BadSlotCount(_, 2))
        ));
    }
}
