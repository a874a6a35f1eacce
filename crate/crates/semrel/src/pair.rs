//! Semantic pairs: the corpus atom shared by every phase.
//!
//! A [`SemanticPair`] is an unordered pair of terms carrying one of three
//! relations. Pairs are canonicalized on construction: both terms are
//! normalized, the pair is rejected if the terms collapse to the same
//! string, and the terms are stored in ascending code-point order so that
//! (a, b) and (b, a) compare equal everywhere downstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// The three relation classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Synonym,
    Antonym,
    CoHyponym,
}

impl Relation {
    /// Wire label, exactly as it appears in the corpus JSONL.
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Synonym => "synonym",
            Relation::Antonym => "antonym",
            Relation::CoHyponym => "co_hyponym",
        }
    }

    pub fn from_label(label: &str) -> Option<Relation> {
        match label {
            "synonym" => Some(Relation::Synonym),
            "antonym" => Some(Relation::Antonym),
            "co_hyponym" => Some(Relation::CoHyponym),
            _ => None,
        }
    }

    /// All classes, in wire-label order.
    pub fn all() -> [Relation; 3] {
        [Relation::Synonym, Relation::Antonym, Relation::CoHyponym]
    }
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a pair came from.
///
/// `Unspecified` exists because the corpus JSONL schema carries no
/// provenance; pairs read back from disk without a sidecar summary cannot
/// be attributed to either source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Llm,
    Dictionary,
    Unspecified,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Llm => "llm",
            Source::Dictionary => "dictionary",
            Source::Unspecified => "unspecified",
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PairError {
    #[error("term is empty after normalization")]
    EmptyTerm,
    #[error("pair collapses to a self-relation for term {0:?}")]
    SelfPair(String),
}

/// NFC-normalize, trim, and collapse interior whitespace runs to a single
/// space. No case folding: Turkish dotted/dotless i makes folding lossy.
pub fn normalize_term(term: &str) -> String {
    let composed: String = term.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    let mut pending_space = false;
    for part in composed.split_whitespace() {
        if pending_space {
            out.push(' ');
        }
        out.push_str(part);
        pending_space = true;
    }
    out
}

/// One canonical corpus pair.
///
/// Invariants, enforced by [`SemanticPair::new`]: both terms are normalized
/// and non-empty, `term_a != term_b`, and `term_a < term_b` in code-point
/// order (all three relations are treated as symmetric).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SemanticPair {
    pub term_a: String,
    pub term_b: String,
    pub relation: Relation,
    pub source: Source,
}

impl SemanticPair {
    pub fn new(
        term_a: &str,
        term_b: &str,
        relation: Relation,
        source: Source,
    ) -> Result<SemanticPair, PairError> {
        let a = normalize_term(term_a);
        let b = normalize_term(term_b);
        if a.is_empty() || b.is_empty() {
            return Err(PairError::EmptyTerm);
        }
        if a == b {
            return Err(PairError::SelfPair(a));
        }
        let (term_a, term_b) = if a < b { (a, b) } else { (b, a) };
        Ok(SemanticPair {
            term_a,
            term_b,
            relation,
            source,
        })
    }

    /// The unordered-pair key used for deduplication and overlap removal,
    /// irrespective of relation.
    pub fn key(&self) -> (&str, &str) {
        (&self.term_a, &self.term_b)
    }

    /// The (pair, relation) triple that must be globally unique in a corpus.
    pub fn triple(&self) -> (&str, &str, Relation) {
        (&self.term_a, &self.term_b, self.relation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_trims_and_collapses_whitespace() {
        assert_eq!(normalize_term("  mahkeme   dairesi \t"), "mahkeme dairesi");
        assert_eq!(normalize_term("tek"), "tek");
        assert_eq!(normalize_term("   "), "");
    }

    #[test]
    fn normalization_composes_to_nfc() {
        // "u" + combining diaeresis composes to "ü".
        let decomposed = "u\u{0308}";
        assert_eq!(normalize_term(decomposed), "ü");
    }

    #[test]
    fn no_case_folding() {
        assert_ne!(normalize_term("İstanbul"), normalize_term("istanbul"));
    }

    #[test]
    fn pairs_are_canonically_ordered() {
        let p1 = SemanticPair::new("yargı", "mahkeme", Relation::Synonym, Source::Llm).unwrap();
        let p2 = SemanticPair::new("mahkeme", "yargı", Relation::Synonym, Source::Llm).unwrap();
        assert_eq!(p1, p2);
        assert!(p1.term_a < p1.term_b);
    }

    #[test]
    fn self_pair_is_rejected() {
        let err = SemanticPair::new("aktif", " aktif ", Relation::Antonym, Source::Llm);
        assert_eq!(err, Err(PairError::SelfPair("aktif".into())));
    }

    #[test]
    fn empty_term_is_rejected() {
        assert_eq!(
            SemanticPair::new("", "x", Relation::Synonym, Source::Llm),
            Err(PairError::EmptyTerm)
        );
    }

    #[test]
    fn relation_labels_round_trip() {
        for rel in Relation::all() {
            assert_eq!(Relation::from_label(rel.as_str()), Some(rel));
        }
        assert_eq!(Relation::from_label("hypernym"), None);
    }
}
