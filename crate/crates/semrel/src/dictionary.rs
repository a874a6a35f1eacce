//! External synonym-dictionary integration: parsing, high-precision
//! filtering, pair expansion, and overlap removal against LLM output.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::pair::{normalize_term, Relation, SemanticPair, Source};

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One dictionary entry: a headword with its synonym candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionaryEntry {
    pub headword: String,
    pub candidates: Vec<String>,
    /// Entry carries a parenthetical sense annotation on the headword or
    /// any candidate, marking it ambiguous or context-dependent.
    pub sense_marked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSkipReason {
    MissingTab,
    EmptyHeadword,
    NoCandidates,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct DictionaryWarnings {
    pub skipped_lines: usize,
    pub samples: Vec<(usize, LineSkipReason)>,
    /// Candidates dropped because they equal their headword.
    pub self_candidates_dropped: usize,
    pub empty_input: bool,
}

#[derive(Debug)]
pub struct DictionaryParseOutcome {
    pub entries: Vec<DictionaryEntry>,
    pub warnings: DictionaryWarnings,
}

fn has_sense_marker(text: &str) -> bool {
    text.contains('(') || text.contains(')')
}

/// Parse a line-oriented dictionary stream:
/// `headword<TAB>cand1;cand2;...`, UTF-8, with optional `(sense)` markers.
/// Malformed lines are skipped with warnings; an empty file yields an
/// empty list plus a warning flag.
pub fn parse_dictionary<R: BufRead>(reader: R) -> Result<DictionaryParseOutcome, DictionaryError> {
    let mut entries = Vec::new();
    let mut warnings = DictionaryWarnings::default();
    let mut saw_line = false;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        saw_line = true;
        let line_no = idx + 1;

        let Some((head_raw, cands_raw)) = line.split_once('\t') else {
            warnings.skipped_lines += 1;
            warnings.samples.push((line_no, LineSkipReason::MissingTab));
            continue;
        };
        let sense_marked = has_sense_marker(line);
        let headword = normalize_term(head_raw);
        if headword.is_empty() {
            warnings.skipped_lines += 1;
            warnings
                .samples
                .push((line_no, LineSkipReason::EmptyHeadword));
            continue;
        }
        let mut candidates = Vec::new();
        for cand_raw in cands_raw.split(';') {
            let candidate = normalize_term(cand_raw);
            if candidate.is_empty() {
                continue;
            }
            if candidate == headword {
                warnings.self_candidates_dropped += 1;
                continue;
            }
            if !candidates.contains(&candidate) {
                candidates.push(candidate);
            }
        }
        if candidates.is_empty() {
            warnings.skipped_lines += 1;
            warnings
                .samples
                .push((line_no, LineSkipReason::NoCandidates));
            continue;
        }
        entries.push(DictionaryEntry {
            headword,
            candidates,
            sense_marked,
        });
    }
    warnings.empty_input = !saw_line;
    Ok(DictionaryParseOutcome { entries, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    CandidateCount,
    Ambiguity,
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub kept: usize,
    pub rejected_candidate_count: usize,
    pub rejected_ambiguity: usize,
}

/// Keep only high-precision entries: at most two synonym candidates and no
/// sense markers. Rejections are counted per reason (candidate count is
/// checked first).
pub fn filter_entries(entries: &[DictionaryEntry]) -> (Vec<DictionaryEntry>, FilterReport) {
    let mut kept = Vec::new();
    let mut report = FilterReport::default();
    for entry in entries {
        if entry.candidates.len() > 2 {
            report.rejected_candidate_count += 1;
            continue;
        }
        if entry.sense_marked {
            report.rejected_ambiguity += 1;
            continue;
        }
        kept.push(entry.clone());
    }
    report.kept = kept.len();
    (kept, report)
}

/// Expand entries into canonical synonym pairs with dictionary provenance,
/// deduplicated across entries.
pub fn to_pairs(entries: &[DictionaryEntry]) -> Vec<SemanticPair> {
    let mut set: BTreeSet<SemanticPair> = BTreeSet::new();
    for entry in entries {
        for candidate in &entry.candidates {
            if let Ok(pair) = SemanticPair::new(
                &entry.headword,
                candidate,
                Relation::Synonym,
                Source::Dictionary,
            ) {
                set.insert(pair);
            }
        }
    }
    set.into_iter().collect()
}

/// Remove dictionary pairs whose unordered term key occurs among the LLM
/// pairs under any relation. Keeping a dictionary synonym that the LLM
/// labeled differently would smuggle a conflict into the corpus.
pub fn deconflict(
    dict_pairs: &[SemanticPair],
    llm_pairs: &[SemanticPair],
) -> (Vec<SemanticPair>, usize) {
    let llm_keys: BTreeSet<(&str, &str)> = llm_pairs.iter().map(|p| p.key()).collect();
    let mut kept = Vec::new();
    let mut removed = 0usize;
    for pair in dict_pairs {
        if llm_keys.contains(&pair.key()) {
            removed += 1;
        } else {
            kept.push(pair.clone());
        }
    }
    (kept, removed)
}
