//! Post-processing of parsed responses into canonical semantic pairs:
//! self-relation removal, Unicode normalization, symmetric deduplication,
//! and cross-relation conflict dropping.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::enrich::response::EnrichmentResponse;
use crate::pair::{normalize_term, PairError, Relation, SemanticPair, Source};

/// Counters emitted alongside the pair set.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct PostprocessCounters {
    /// Total relation mentions across all responses.
    pub mentions: usize,
    /// Mentions where the partner equals the term after normalization.
    pub self_relations_removed: usize,
    /// Mentions collapsing onto an already-seen (pair, relation) triple.
    pub duplicates_removed: usize,
    /// Mentions whose term or partner normalizes to the empty string.
    pub invalid_mentions: usize,
    /// Unordered pairs reported under more than one relation; all their
    /// mentions are dropped.
    pub conflicting_keys: usize,
    /// Mentions naming a partner outside the originating cluster, counted
    /// only for responses that carry their cluster members.
    pub augmented_mentions: usize,
    pub pairs_emitted: usize,
}

#[derive(Debug, Clone)]
pub struct Postprocessed {
    pub pairs: Vec<SemanticPair>,
    pub counters: PostprocessCounters,
}

/// Collapse responses into one canonical pair per (unordered pair,
/// relation). A pair reported under two different relations is maximally
/// uncertain and is dropped entirely.
pub fn postprocess(responses: &[EnrichmentResponse]) -> Postprocessed {
    let mut counters = PostprocessCounters::default();
    let mut triples: BTreeSet<(String, String, Relation)> = BTreeSet::new();

    for response in responses {
        let known: Option<BTreeSet<String>> = if response.cluster_members.is_empty() {
            None
        } else {
            Some(
                response
                    .cluster_members
                    .iter()
                    .map(|m| normalize_term(m))
                    .collect(),
            )
        };
        for (term, relations) in &response.terms {
            let mentions = [
                (Relation::Synonym, &relations.synonyms),
                (Relation::Antonym, &relations.antonyms),
                (Relation::CoHyponym, &relations.co_hyponyms),
            ];
            for (relation, partners) in mentions {
                for partner in partners {
                    counters.mentions += 1;
                    if let Some(known) = &known {
                        let normalized = normalize_term(partner);
                        if !normalized.is_empty() && !known.contains(&normalized) {
                            counters.augmented_mentions += 1;
                        }
                    }
                    match SemanticPair::new(term, partner, relation, Source::Llm) {
                        Ok(pair) => {
                            let inserted = triples.insert((pair.term_a, pair.term_b, relation));
                            if !inserted {
                                counters.duplicates_removed += 1;
                            }
                        }
                        Err(PairError::SelfPair(_)) => counters.self_relations_removed += 1,
                        Err(PairError::EmptyTerm) => counters.invalid_mentions += 1,
                    }
                }
            }
        }
    }

    // Drop every key that was reported under more than one relation.
    let mut relations_by_key: BTreeMap<(&str, &str), BTreeSet<Relation>> = BTreeMap::new();
    for (a, b, relation) in &triples {
        relations_by_key
            .entry((a, b))
            .or_default()
            .insert(*relation);
    }
    let conflicted: BTreeSet<(String, String)> = relations_by_key
        .iter()
        .filter(|(_, rels)| rels.len() > 1)
        .map(|((a, b), _)| (a.to_string(), b.to_string()))
        .collect();
    counters.conflicting_keys = conflicted.len();

    let pairs: Vec<SemanticPair> = triples
        .iter()
        .filter(|(a, b, _)| !conflicted.contains(&(a.clone(), b.clone())))
        .map(|(a, b, relation)| SemanticPair {
            term_a: a.clone(),
            term_b: b.clone(),
            relation: *relation,
            source: Source::Llm,
        })
        .collect();
    counters.pairs_emitted = pairs.len();
    Postprocessed { pairs, counters }
}

/// Re-wrap pairs as a response, for idempotence checks and fixtures.
pub fn pairs_to_response(pairs: &[SemanticPair]) -> EnrichmentResponse {
    use crate::enrich::response::TermRelations;
    let mut terms: BTreeMap<String, TermRelations> = BTreeMap::new();
    for pair in pairs {
        let entry = terms.entry(pair.term_a.clone()).or_default();
        match pair.relation {
            Relation::Synonym => entry.synonyms.push(pair.term_b.clone()),
            Relation::Antonym => entry.antonyms.push(pair.term_b.clone()),
            Relation::CoHyponym => entry.co_hyponyms.push(pair.term_b.clone()),
        }
    }
    EnrichmentResponse {
        terms,
        raw_text: String::new(),
        repair_applied: false,
        cluster_members: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::response::parse_response;

    fn response(json: &str) -> EnrichmentResponse {
        parse_response(json).unwrap()
    }

    #[test]
    fn self_synonym_is_removed() {
        let resp = response(r#"{"mahkeme": {"synonyms": ["mahkeme", "yargı"]}}"#);
        let out = postprocess(&[resp]);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].term_a, "mahkeme");
        assert_eq!(out.pairs[0].term_b, "yargı");
        assert_eq!(out.pairs[0].relation, Relation::Synonym);
        assert_eq!(out.counters.self_relations_removed, 1);
    }

    #[test]
    fn symmetric_mentions_deduplicate() {
        let resp = response(r#"{"a": {"synonyms": ["b"]}, "b": {"synonyms": ["a"]}}"#);
        let out = postprocess(&[resp]);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.counters.duplicates_removed, 1);
    }

    #[test]
    fn cross_relation_conflict_drops_the_pair() {
        let r1 = response(r#"{"a": {"synonyms": ["b"]}}"#);
        let r2 = response(r#"{"a": {"antonyms": ["b"]}}"#);
        let out = postprocess(&[r1, r2]);
        assert!(out.pairs.is_empty());
        assert_eq!(out.counters.conflicting_keys, 1);
    }

    #[test]
    fn unicode_variants_collapse() {
        // NFD partner equals the NFC term.
        let resp = response("{\"g\\u00fcn\": {\"synonyms\": [\"gu\\u0308n\"]}}");
        let out = postprocess(&[resp]);
        assert!(out.pairs.is_empty());
        assert_eq!(out.counters.self_relations_removed, 1);
    }

    #[test]
    fn augmented_mentions_are_counted_when_cluster_known() {
        let mut resp = response(r#"{"a": {"synonyms": ["b"], "co_hyponyms": ["dışarıdan"]}}"#);
        resp.cluster_members = vec!["a".into(), "b".into()];
        let out = postprocess(&[resp]);
        assert_eq!(out.counters.augmented_mentions, 1);
        assert_eq!(out.pairs.len(), 2);
    }

    #[test]
    fn blank_partners_are_counted_invalid() {
        let resp = response(r#"{"a": {"synonyms": ["", "  ", "b"]}}"#);
        let out = postprocess(&[resp]);
        assert_eq!(out.counters.invalid_mentions, 2);
        assert_eq!(out.pairs.len(), 1);
    }

    #[test]
    fn postprocess_is_idempotent() {
        let resp = response(
            r#"{"a": {"synonyms": ["b", "b", "a"], "antonyms": ["c"]},
                "b": {"synonyms": ["a"], "co_hyponyms": ["d"]}}"#,
        );
        let first = postprocess(&[resp]);
        let second = postprocess(&[pairs_to_response(&first.pairs)]);
        assert_eq!(second.pairs, first.pairs);
        assert_eq!(second.counters.self_relations_removed, 0);
        assert_eq!(second.counters.duplicates_removed, 0);
        assert_eq!(second.counters.conflicting_keys, 0);
    }

    #[test]
    fn output_never_exceeds_mentions() {
        let resp =
            response(r#"{"x": {"synonyms": ["y"], "antonyms": ["y"], "co_hyponyms": ["z", "z"]}}"#);
        let out = postprocess(&[resp]);
        assert!(out.pairs.len() <= out.counters.mentions);
        // (x,y) conflicted away, (x,z) deduplicated to one.
        assert_eq!(out.pairs.len(), 1);
    }
}
