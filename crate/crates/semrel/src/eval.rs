//! Evaluation harness: masked mean pooling, the cached
//! multiple-negatives ranking loss, top-k retrieval accuracy, and
//! per-class/macro classification metrics.
//!
//! Everything here is a pure numeric operation over supplied vectors and
//! labels; no model is trained or loaded.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::pair::Relation;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("input is empty")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("hidden-state rows have unequal widths")]
    RaggedMatrix,
    #[error("attention mask entries must be 0 or 1, found {0}")]
    BadMaskValue(u8),
    #[error("attention mask selects no rows")]
    AllMaskZero,
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("zero-norm vector at {0}")]
    ZeroNorm(String),
    #[error("vector at {0} has wrong dimension")]
    DimensionMismatch(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("term {0:?} is not embeddable")]
    Oov(String),
    #[error("positive {positive:?} for query {query:?} is not among the candidate terms")]
    PositiveNotInCandidates { query: String, positive: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

fn unit(vector: &[f64], context: &str) -> Result<Vec<f64>, EvalError> {
    let norm: f64 = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(EvalError::ZeroNorm(context.to_string()));
    }
    Ok(vector.iter().map(|v| v / norm).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Mean pooling

/// Hidden states with an attention mask, validated on construction.
#[derive(Debug, Clone)]
pub struct PoolingInput {
    hidden_states: Vec<Vec<f64>>,
    attention_mask: Vec<u8>,
}

impl PoolingInput {
    pub fn new(hidden_states: Vec<Vec<f64>>, attention_mask: Vec<u8>) -> Result<Self, EvalError> {
        if hidden_states.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        if hidden_states.len() != attention_mask.len() {
            return Err(EvalError::LengthMismatch {
                left: hidden_states.len(),
                right: attention_mask.len(),
            });
        }
        let width = hidden_states[0].len();
        if hidden_states.iter().any(|row| row.len() != width) {
            return Err(EvalError::RaggedMatrix);
        }
        if let Some(&bad) = attention_mask.iter().find(|&&m| m > 1) {
            return Err(EvalError::BadMaskValue(bad));
        }
        if attention_mask.iter().all(|&m| m == 0) {
            return Err(EvalError::AllMaskZero);
        }
        Ok(PoolingInput {
            hidden_states,
            attention_mask,
        })
    }
}

/// Masked arithmetic mean of the hidden-state rows:
/// `Σ H_i · M_i / Σ M_i`.
pub fn mean_pool(input: &PoolingInput) -> Vec<f64> {
    let width = input.hidden_states[0].len();
    let mut sums = vec![0f64; width];
    let mut count = 0f64;
    for (row, &mask) in input.hidden_states.iter().zip(&input.attention_mask) {
        if mask == 1 {
            for (acc, &v) in sums.iter_mut().zip(row) {
                *acc += v;
            }
            count += 1.0;
        }
    }
    sums.iter_mut().for_each(|v| *v /= count);
    sums
}

// ---------------------------------------------------------------------------
// Contrastive loss

/// One loss batch: query/positive rows plus an explicit list of extra
/// cached negatives. Vectors are unit-normalized on construction so the
/// similarity kernel is a plain dot product.
#[derive(Debug, Clone)]
pub struct ContrastiveBatch {
    queries: Vec<Vec<f64>>,
    positives: Vec<Vec<f64>>,
    cache: Vec<Vec<f64>>,
    temperature: f64,
}

impl ContrastiveBatch {
    pub fn new(
        queries: Vec<Vec<f64>>,
        positives: Vec<Vec<f64>>,
        cache: Vec<Vec<f64>>,
        temperature: f64,
    ) -> Result<Self, EvalError> {
        if temperature <= 0.0 {
            return Err(EvalError::NonPositiveTemperature(temperature));
        }
        if queries.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        if queries.len() != positives.len() {
            return Err(EvalError::LengthMismatch {
                left: queries.len(),
                right: positives.len(),
            });
        }
        let dim = queries[0].len();
        let normalize = |rows: Vec<Vec<f64>>, what: &str| -> Result<Vec<Vec<f64>>, EvalError> {
            rows.into_iter()
                .enumerate()
                .map(|(i, row)| {
                    if row.len() != dim {
                        return Err(EvalError::DimensionMismatch(format!("{}[{}]", what, i)));
                    }
                    unit(&row, &format!("{}[{}]", what, i))
                })
                .collect()
        };
        Ok(ContrastiveBatch {
            queries: normalize(queries, "queries")?,
            positives: normalize(positives, "positives")?,
            cache: normalize(cache, "cache")?,
            temperature,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.queries.len()
    }
}

/// Mean over rows of the in-batch softmax ranking loss with cached extra
/// negatives:
///
/// `−log( e^{sim(u_i,v_i)/τ} / (e^{sim(u_i,v_i)/τ} + Σ_{j∈B∖{i}∪C} e^{sim(u_i,v_j)/τ}) )`
///
/// where `sim` is cosine similarity. Each row is evaluated with a
/// max-subtracted log-sum-exp, so extreme `sim/τ` ratios stay finite.
pub fn cmnrl_loss(batch: &ContrastiveBatch) -> f64 {
    let b = batch.batch_size();
    let mut total = 0f64;
    let mut logits: Vec<f64> = Vec::with_capacity(b + batch.cache.len());
    for i in 0..b {
        logits.clear();
        let query = &batch.queries[i];
        // The positive term first, then in-batch negatives, then cache.
        logits.push(dot(query, &batch.positives[i]) / batch.temperature);
        for (j, v) in batch.positives.iter().enumerate() {
            if j != i {
                logits.push(dot(query, v) / batch.temperature);
            }
        }
        for c in &batch.cache {
            logits.push(dot(query, c) / batch.temperature);
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        total += lse - logits[0];
    }
    total / b as f64
}

// ---------------------------------------------------------------------------
// Retrieval

/// One retrieval evaluation item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TripletRecord {
    pub query: String,
    pub positive: String,
    pub hard_negatives: Vec<String>,
}

/// Fraction of triplets whose positive ranks within the top `k` candidate
/// terms by descending cosine similarity to the query embedding. The
/// candidate pool is `corpus_terms` minus the query itself; similarity
/// ties rank in ascending term order, so the result is deterministic and
/// independent of candidate-list order.
pub fn retrieval_accuracy(
    triplets: &[TripletRecord],
    embed: &dyn Fn(&str) -> Option<Vec<f64>>,
    corpus_terms: &[String],
    k: usize,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if triplets.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let candidates: BTreeSet<&str> = corpus_terms.iter().map(String::as_str).collect();
    let mut embedded: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for &term in &candidates {
        let vector = embed(term).ok_or_else(|| EvalError::Oov(term.to_string()))?;
        embedded.insert(term, unit(&vector, term)?);
    }

    let mut hits = 0usize;
    for triplet in triplets {
        if !candidates.contains(triplet.positive.as_str()) {
            return Err(EvalError::PositiveNotInCandidates {
                query: triplet.query.clone(),
                positive: triplet.positive.clone(),
            });
        }
        let query_vec =
            embed(&triplet.query).ok_or_else(|| EvalError::Oov(triplet.query.clone()))?;
        let query_unit = unit(&query_vec, &triplet.query)?;

        let mut scored: Vec<(f64, &str)> = embedded
            .iter()
            .filter(|(term, _)| **term != triplet.query.as_str())
            .map(|(term, vector)| (dot(&query_unit, vector), *term))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        if scored
            .iter()
            .take(k)
            .any(|(_, term)| *term == triplet.positive)
        {
            hits += 1;
        }
    }
    Ok(hits as f64 / triplets.len() as f64)
}

/// Build retrieval triplets from a corpus: one record per (term, synonym
/// partner), with that term's antonym partners as hard negatives.
/// Co-hyponym partners join the negatives only when
/// `include_co_hyponyms` is set; that inclusion is a measured quality
/// trade-off, not a clear win, so it defaults off.
pub fn build_triplets(corpus: &Corpus, include_co_hyponyms: bool) -> Vec<TripletRecord> {
    let mut synonyms: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut antonyms: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut co_hyponyms: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for pair in corpus.pairs() {
        let map = match pair.relation {
            Relation::Synonym => &mut synonyms,
            Relation::Antonym => &mut antonyms,
            Relation::CoHyponym => &mut co_hyponyms,
        };
        map.entry(&pair.term_a).or_default().insert(&pair.term_b);
        map.entry(&pair.term_b).or_default().insert(&pair.term_a);
    }

    let mut triplets = Vec::new();
    for (query, positives) in &synonyms {
        for positive in positives {
            let mut negatives: BTreeSet<&str> = BTreeSet::new();
            if let Some(ants) = antonyms.get(query) {
                negatives.extend(ants);
            }
            if include_co_hyponyms {
                if let Some(cos) = co_hyponyms.get(query) {
                    negatives.extend(cos);
                }
            }
            negatives.remove(positive);
            triplets.push(TripletRecord {
                query: query.to_string(),
                positive: positive.to_string(),
                hard_negatives: negatives.iter().map(|n| n.to_string()).collect(),
            });
        }
    }
    triplets
}

// ---------------------------------------------------------------------------
// Classification metrics

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class and macro-averaged precision/recall/F1 over the three
/// relation classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub synonym: ClassMetrics,
    pub antonym: ClassMetrics,
    pub co_hyponym: ClassMetrics,
    pub macro_avg: ClassMetrics,
}

impl ClassificationMetrics {
    pub fn class(&self, relation: Relation) -> ClassMetrics {
        match relation {
            Relation::Synonym => self.synonym,
            Relation::Antonym => self.antonym,
            Relation::CoHyponym => self.co_hyponym,
        }
    }
}

impl std::fmt::Display for ClassificationMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<12} {:>9} {:>9} {:>9}",
            "class", "precision", "recall", "f1"
        )?;
        for relation in Relation::all() {
            let m = self.class(relation);
            writeln!(
                f,
                "{:<12} {:>9.4} {:>9.4} {:>9.4}",
                relation.as_str(),
                m.precision,
                m.recall,
                m.f1
            )?;
        }
        write!(
            f,
            "{:<12} {:>9.4} {:>9.4} {:>9.4}",
            "macro avg", self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1
        )
    }
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    // Zero-division-is-zero convention for empty denominators.
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Standard one-vs-rest precision/recall/F1 per class plus their
/// unweighted macro average. A class absent from both golds and
/// predictions contributes zeros to the macro terms.
pub fn classification_metrics(
    predictions: &[Relation],
    golds: &[Relation],
) -> Result<ClassificationMetrics, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if golds.is_empty() {
        return Err(EvalError::EmptyInput);
    }

    let mut per_class = BTreeMap::new();
    for class in Relation::all() {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&pred, &gold) in predictions.iter().zip(golds) {
            match (pred == class, gold == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.insert(
            class,
            ClassMetrics {
                precision,
                recall,
                f1,
            },
        );
    }

    let classes = Relation::all();
    let macro_avg = ClassMetrics {
        precision: classes.iter().map(|c| per_class[c].precision).sum::<f64>() / 3.0,
        recall: classes.iter().map(|c| per_class[c].recall).sum::<f64>() / 3.0,
        f1: classes.iter().map(|c| per_class[c].f1).sum::<f64>() / 3.0,
    };
    Ok(ClassificationMetrics {
        synonym: per_class[&Relation::Synonym],
        antonym: per_class[&Relation::Antonym],
        co_hyponym: per_class[&Relation::CoHyponym],
        macro_avg,
    })
}

/// Parse wire labels into relations, rejecting anything outside the
/// three-class set.
pub fn parse_labels(labels: &[String]) -> Result<Vec<Relation>, EvalError> {
    labels
        .iter()
        .map(|label| {
            Relation::from_label(label).ok_or_else(|| EvalError::UnknownLabel(label.clone()))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub k: usize,
    pub accuracy: f64,
}

/// Machine-readable evaluation summary; `Display` renders the
/// human-readable table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub triplets_total: usize,
    pub triplets_evaluated: usize,
    pub skipped_unembeddable: usize,
    pub candidate_terms: usize,
    pub retrieval: Vec<RetrievalResult>,
    pub classification: Option<ClassificationMetrics>,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "retrieval over {} triplets ({} skipped as unembeddable, {} candidates):",
            self.triplets_evaluated, self.skipped_unembeddable, self.candidate_terms
        )?;
        for r in &self.retrieval {
            writeln!(f, "  top-{:<3} accuracy {:.4}", r.k, r.accuracy)?;
        }
        match &self.classification {
            Some(metrics) => write!(f, "classification:\n{}", metrics),
            None => write!(f, "classification: no predictions supplied"),
        }
    }
}
