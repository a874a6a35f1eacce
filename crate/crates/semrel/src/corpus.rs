//! Corpus assembly: merging pair sources, the published JSONL schema, and
//! the corpus statistics suite.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pair::{normalize_term, Relation, SemanticPair, Source};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(
        "pair ({term_a:?}, {term_b:?}) occurs in both sources; \
         dictionary pairs must be deconflicted before merging"
    )]
    CrossSourceOverlap { term_a: String, term_b: String },
    #[error("line {line}: {reason}")]
    Read { line: usize, reason: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The merged pair set. Pairs are held sorted by canonical triple with no
/// duplicate triples, so serialization is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pairs: Vec<SemanticPair>,
    source_counts: BTreeMap<Source, usize>,
}

fn triple_key(pair: &SemanticPair) -> (String, String, &'static str) {
    (
        pair.term_a.clone(),
        pair.term_b.clone(),
        pair.relation.as_str(),
    )
}

fn dedup_sorted(pairs: &[SemanticPair]) -> (Vec<SemanticPair>, usize) {
    let mut seen: BTreeSet<(String, String, &'static str)> = BTreeSet::new();
    let mut out = Vec::with_capacity(pairs.len());
    let mut duplicates = 0usize;
    for pair in pairs {
        if seen.insert(triple_key(pair)) {
            out.push(pair.clone());
        } else {
            duplicates += 1;
        }
    }
    out.sort_by(|a, b| triple_key(a).cmp(&triple_key(b)));
    (out, duplicates)
}

impl Corpus {
    pub fn pairs(&self) -> &[SemanticPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_counts(&self) -> &BTreeMap<Source, usize> {
        &self.source_counts
    }

    pub fn relation_counts(&self) -> BTreeMap<Relation, usize> {
        let mut counts = BTreeMap::new();
        for relation in Relation::all() {
            counts.insert(relation, 0);
        }
        for pair in &self.pairs {
            *counts.entry(pair.relation).or_insert(0) += 1;
        }
        counts
    }

    fn from_pairs(pairs: Vec<SemanticPair>) -> Corpus {
        let mut source_counts = BTreeMap::new();
        for pair in &pairs {
            *source_counts.entry(pair.source).or_insert(0) += 1;
        }
        Corpus {
            pairs,
            source_counts,
        }
    }
}

/// Counters reported by [`merge`].
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct MergeReport {
    pub total_pairs: usize,
    pub llm_duplicates_removed: usize,
    pub dictionary_duplicates_removed: usize,
}

/// Merge LLM and dictionary pairs into a corpus: per-source triple dedup,
/// then a cross-source integrity check. Dictionary pairs must already be
/// deconflicted; a shared unordered key between the sources means that
/// contract was violated upstream and is fatal.
pub fn merge(
    llm_pairs: &[SemanticPair],
    dict_pairs: &[SemanticPair],
) -> Result<(Corpus, MergeReport), CorpusError> {
    let (llm, llm_dups) = dedup_sorted(llm_pairs);
    let (dict, dict_dups) = dedup_sorted(dict_pairs);

    let llm_keys: BTreeSet<(&str, &str)> = llm.iter().map(|p| p.key()).collect();
    for pair in &dict {
        if llm_keys.contains(&pair.key()) {
            return Err(CorpusError::CrossSourceOverlap {
                term_a: pair.term_a.clone(),
                term_b: pair.term_b.clone(),
            });
        }
    }

    let mut pairs = llm;
    pairs.extend(dict);
    pairs.sort_by(|a, b| triple_key(a).cmp(&triple_key(b)));
    let corpus = Corpus::from_pairs(pairs);
    let report = MergeReport {
        total_pairs: corpus.len(),
        llm_duplicates_removed: llm_dups,
        dictionary_duplicates_removed: dict_dups,
    };
    Ok((corpus, report))
}

/// Serialize one pair as a corpus line. The byte pattern is pinned: key
/// order `sentence1`, `sentence2`, `label`, a space after each colon and
/// comma, labels exactly `synonym|antonym|co_hyponym`.
fn jsonl_line(pair: &SemanticPair) -> String {
    format!(
        "{{\"sentence1\": {}, \"sentence2\": {}, \"label\": {}}}",
        serde_json::to_string(&pair.term_a).expect("strings serialize"),
        serde_json::to_string(&pair.term_b).expect("strings serialize"),
        serde_json::to_string(pair.relation.as_str()).expect("strings serialize"),
    )
}

/// Write the corpus in the published JSONL schema: UTF-8, no BOM, `\n`
/// line endings, one object per line, sorted by canonical triple.
/// Provenance is not part of the schema; it lives in the sidecar summary.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut sink: W) -> Result<(), CorpusError> {
    for pair in &corpus.pairs {
        sink.write_all(jsonl_line(pair).as_bytes())?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRecord {
    sentence1: String,
    sentence2: String,
    label: String,
}

/// Read a corpus back from the JSONL schema. The schema carries no
/// provenance, so pairs come back with `Source::Unspecified`; duplicated
/// triples collapse to one to restore the corpus invariant.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let record: JsonlRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Read {
            line: line_no,
            reason: e.to_string(),
        })?;
        let relation =
            Relation::from_label(&record.label).ok_or_else(|| CorpusError::UnknownLabel {
                line: line_no,
                label: record.label.clone(),
            })?;
        let pair = SemanticPair::new(
            &record.sentence1,
            &record.sentence2,
            relation,
            Source::Unspecified,
        )
        .map_err(|e| CorpusError::Read {
            line: line_no,
            reason: e.to_string(),
        })?;
        pairs.push(pair);
    }
    let (pairs, _duplicates) = dedup_sorted(&pairs);
    Ok(Corpus::from_pairs(pairs))
}

/// Whitespace tokenizer: the default for corpus statistics.
pub fn whitespace_tokenizer(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Character tokenizer: one token per Unicode scalar, excluding spaces.
/// A rough stand-in for subword tokenizers when estimating input lengths.
pub fn character_tokenizer(text: &str) -> Vec<String> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| c.to_string())
        .collect()
}

/// Corpus distribution and textual statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub total_pairs: usize,
    pub relation_counts: BTreeMap<String, usize>,
    pub relation_percentages: BTreeMap<String, f64>,
    pub source_counts: BTreeMap<String, usize>,
    pub source_percentages: BTreeMap<String, f64>,
    /// Mean whitespace-token count per pair side (a per-record average
    /// would be exactly twice this value).
    pub avg_word_count: f64,
    /// Distinct normalized terms over total term slots (2 × pairs).
    pub type_token_ratio: f64,
    /// Mean per-record token count of the concatenated pair under the
    /// supplied tokenizer.
    pub avg_token_length: f64,
    pub max_token_length: usize,
}

/// Compute distribution and textual statistics. The token-length figures
/// depend on the injected tokenizer; the whitespace default differs from
/// any particular subword tokenizer, so reproducing token statistics from
/// a model's tokenizer requires injecting that tokenizer.
pub fn compute_stats(
    corpus: &Corpus,
    tokenizer: &dyn Fn(&str) -> Vec<String>,
) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let total = corpus.len();
    let pct = |count: usize| count as f64 / total as f64 * 100.0;

    let mut relation_counts = BTreeMap::new();
    let mut relation_percentages = BTreeMap::new();
    for (relation, count) in corpus.relation_counts() {
        relation_counts.insert(relation.as_str().to_string(), count);
        relation_percentages.insert(relation.as_str().to_string(), pct(count));
    }

    let mut source_counts = BTreeMap::new();
    let mut source_percentages = BTreeMap::new();
    for (&source, &count) in corpus.source_counts() {
        source_counts.insert(source.as_str().to_string(), count);
        source_percentages.insert(source.as_str().to_string(), pct(count));
    }

    let mut word_count_sum = 0usize;
    let mut distinct_terms: BTreeSet<String> = BTreeSet::new();
    let mut token_length_sum = 0usize;
    let mut max_token_length = 0usize;
    for pair in corpus.pairs() {
        for term in [&pair.term_a, &pair.term_b] {
            word_count_sum += term.split_whitespace().count();
            distinct_terms.insert(normalize_term(term));
        }
        let record = format!("{} {}", pair.term_a, pair.term_b);
        let tokens = tokenizer(&record).len();
        token_length_sum += tokens;
        max_token_length = max_token_length.max(tokens);
    }
    let sides = (2 * total) as f64;

    Ok(CorpusStats {
        total_pairs: total,
        relation_counts,
        relation_percentages,
        source_counts,
        source_percentages,
        avg_word_count: word_count_sum as f64 / sides,
        type_token_ratio: distinct_terms.len() as f64 / sides,
        avg_token_length: token_length_sum as f64 / total as f64,
        max_token_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str, relation: Relation, source: Source) -> SemanticPair {
        SemanticPair::new(a, b, relation, source).unwrap()
    }

    fn llm(a: &str, b: &str, relation: Relation) -> SemanticPair {
        pair(a, b, relation, Source::Llm)
    }

    fn dict(a: &str, b: &str) -> SemanticPair {
        pair(a, b, Relation::Synonym, Source::Dictionary)
    }

    #[test]
    fn merge_counts_sources() {
        let llm_pairs = vec![
            llm("a", "b", Relation::Synonym),
            llm("c", "d", Relation::Antonym),
            llm("e", "f", Relation::CoHyponym),
        ];
        let dict_pairs = vec![dict("g", "h"), dict("i", "j")];
        let (corpus, report) = merge(&llm_pairs, &dict_pairs).unwrap();
        assert_eq!(corpus.len(), 5);
        assert_eq!(corpus.source_counts()[&Source::Llm], 3);
        assert_eq!(corpus.source_counts()[&Source::Dictionary], 2);
        assert_eq!(report.total_pairs, 5);
    }

    #[test]
    fn merge_dedups_within_source() {
        let llm_pairs = vec![
            llm("a", "b", Relation::Synonym),
            llm("b", "a", Relation::Synonym),
        ];
        let (corpus, report) = merge(&llm_pairs, &[]).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.llm_duplicates_removed, 1);
    }

    #[test]
    fn merge_rejects_cross_source_key_overlap() {
        let llm_pairs = vec![llm("a", "b", Relation::CoHyponym)];
        let dict_pairs = vec![dict("a", "b")];
        assert!(matches!(
            merge(&llm_pairs, &dict_pairs),
            Err(CorpusError::CrossSourceOverlap { .. })
        ));
    }

    #[test]
    fn merge_is_idempotent() {
        let (corpus, _) = merge(
            &[
                llm("a", "b", Relation::Synonym),
                llm("c", "d", Relation::Antonym),
            ],
            &[dict("e", "f")],
        )
        .unwrap();
        let llm_again: Vec<SemanticPair> = corpus.pairs().to_vec();
        let (again, report) = merge(&llm_again, &[]).unwrap();
        assert_eq!(again.pairs(), corpus.pairs());
        assert_eq!(report.llm_duplicates_removed, 0);
    }

    #[test]
    fn jsonl_line_bytes_are_pinned() {
        let corpus_pair = llm("sözleşme", "mukavele", Relation::Synonym);
        assert_eq!(
            jsonl_line(&corpus_pair),
            r#"{"sentence1": "mukavele", "sentence2": "sözleşme", "label": "synonym"}"#
        );
    }

    #[test]
    fn empty_corpus_writes_empty_file() {
        let (corpus, _) = merge(&[], &[]).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&corpus, &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn write_is_byte_identical_across_runs() {
        let (corpus, _) = merge(
            &[
                llm("c", "d", Relation::Antonym),
                llm("a", "b", Relation::Synonym),
            ],
            &[dict("e", "f")],
        )
        .unwrap();
        let mut first = Vec::new();
        write_jsonl(&corpus, &mut first).unwrap();
        let mut second = Vec::new();
        write_jsonl(&corpus, &mut second).unwrap();
        assert_eq!(first, second);
        assert!(!first.is_empty());
    }

    #[test]
    fn round_trip_preserves_pair_triples() {
        let (corpus, _) = merge(
            &[
                llm("mahkeme", "yargı", Relation::Synonym),
                llm("alıcı", "satıcı", Relation::Antonym),
                llm("banka", "sigorta", Relation::CoHyponym),
            ],
            &[dict("sözleşme", "mukavele")],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_jsonl(&corpus, &mut buf).unwrap();
        let back = read_jsonl(std::io::Cursor::new(buf)).unwrap();
        let triples: Vec<_> = back.pairs().iter().map(|p| p.triple()).collect();
        let expected: Vec<_> = corpus.pairs().iter().map(|p| p.triple()).collect();
        assert_eq!(triples, expected);
        // Provenance is not in the schema.
        assert!(back.pairs().iter().all(|p| p.source == Source::Unspecified));
    }

    #[test]
    fn read_reports_malformed_line_numbers() {
        let err = read_jsonl(std::io::Cursor::new(
            "{\"sentence1\": \"a\", \"sentence2\": \"b\", \"label\": \"synonym\"}\nnot json\n",
        ))
        .unwrap_err();
        assert!(matches!(err, CorpusError::Read { line: 2, .. }));
    }

    #[test]
    fn read_rejects_unknown_labels() {
        let err = read_jsonl(std::io::Cursor::new(
            "{\"sentence1\": \"a\", \"sentence2\": \"b\", \"label\": \"hypernym\"}\n",
        ))
        .unwrap_err();
        assert!(matches!(err, CorpusError::UnknownLabel { line: 1, label } if label == "hypernym"));
    }

    #[test]
    fn stats_percentages_match_fixture() {
        let mut pairs = Vec::new();
        for i in 0..7 {
            pairs.push(llm(
                &format!("co{}", i),
                &format!("co{}x", i),
                Relation::CoHyponym,
            ));
        }
        for i in 0..2 {
            pairs.push(llm(
                &format!("syn{}", i),
                &format!("syn{}x", i),
                Relation::Synonym,
            ));
        }
        pairs.push(llm("ant", "antx", Relation::Antonym));
        let (corpus, _) = merge(&pairs, &[]).unwrap();
        let stats = compute_stats(&corpus, &whitespace_tokenizer).unwrap();
        assert_eq!(stats.relation_percentages["co_hyponym"], 70.0);
        assert_eq!(stats.relation_percentages["synonym"], 20.0);
        assert_eq!(stats.relation_percentages["antonym"], 10.0);
        let sum: f64 = stats.relation_percentages.values().sum();
        assert!((sum - 100.0).abs() < 0.01);
    }

    #[test]
    fn ttr_counts_distinct_terms_over_slots() {
        // Two pairs over three distinct terms: 3 / 4 slots.
        let (corpus, _) = merge(
            &[
                llm("a", "b", Relation::Synonym),
                llm("a", "c", Relation::CoHyponym),
            ],
            &[],
        )
        .unwrap();
        let stats = compute_stats(&corpus, &whitespace_tokenizer).unwrap();
        assert_eq!(stats.type_token_ratio, 0.75);
    }

    #[test]
    fn token_length_stats_respect_tokenizer() {
        let (corpus, _) = merge(
            &[
                llm("tek", "çift sayı", Relation::Antonym),
                llm("bir", "iki", Relation::CoHyponym),
            ],
            &[],
        )
        .unwrap();
        let stats = compute_stats(&corpus, &whitespace_tokenizer).unwrap();
        // Records: "bir iki" → 2 tokens, "çift sayı tek" → 3 tokens.
        assert_eq!(stats.max_token_length, 3);
        assert_eq!(stats.avg_token_length, 2.5);
        assert!(stats.max_token_length as f64 >= stats.avg_token_length.ceil());

        let char_stats = compute_stats(&corpus, &character_tokenizer).unwrap();
        assert!(char_stats.max_token_length > stats.max_token_length);
    }

    #[test]
    fn stats_reject_empty_corpus() {
        let (corpus, _) = merge(&[], &[]).unwrap();
        assert!(matches!(
            compute_stats(&corpus, &whitespace_tokenizer),
            Err(CorpusError::EmptyCorpus)
        ));
    }

    #[test]
    fn avg_word_count_is_per_side() {
        let (corpus, _) = merge(&[llm("tek", "çift sayı", Relation::Antonym)], &[]).unwrap();
        let stats = compute_stats(&corpus, &whitespace_tokenizer).unwrap();
        // Sides: "çift sayı" (2 words) and "tek" (1 word) → 1.5.
        assert_eq!(stats.avg_word_count, 1.5);
    }
}
