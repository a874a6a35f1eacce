//! Word-vector storage: `.vec` file parsing, per-term lookup, multi-word
//! composition, and the cosine-distance kernel.
//!
//! The `.vec` format is the textual word-vector layout used by common
//! pre-trained embedding releases: a header line `<count> <dimension>`
//! followed by `<term> <f1> ... <fdim>` rows separated by single spaces.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pair::normalize_term;

#[derive(Debug, Error)]
pub enum VecParseError {
    #[error("vector file is empty: missing `<count> <dimension>` header")]
    MissingHeader,
    #[error("garbled header line {0:?}: expected `<count> <dimension>`")]
    GarbledHeader(String),
    #[error("header declares dimension 0")]
    ZeroDimension,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("term is empty after trimming")]
    EmptyTerm,
    #[error("term {0:?} has no in-vocabulary constituent")]
    Oov(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum DistanceError {
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
}

/// How a term's vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The term itself is in the vector table.
    Direct,
    /// Mean of the constituent word vectors of a multi-word expression.
    MweMean,
}

/// A term together with its vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermVector {
    pub term: String,
    pub vector: Vec<f32>,
    pub provenance: Provenance,
}

/// Reasons a `.vec` data line can be skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    WrongComponentCount,
    NonFiniteComponent,
    EmptyTerm,
    DuplicateTerm,
}

/// Per-reason skip counters plus a capped sample of offending lines.
#[derive(Debug, Default, Clone, Serialize)]
pub struct ParseWarnings {
    pub skipped: usize,
    pub by_reason: HashMap<SkipReason, usize>,
    /// `(line_number, reason)` for the first few skipped lines.
    pub samples: Vec<(usize, SkipReason)>,
    /// Set when the number of data lines differs from the header count.
    pub count_mismatch: Option<(usize, usize)>,
}

const WARNING_SAMPLE_CAP: usize = 20;

impl ParseWarnings {
    fn record(&mut self, line_no: usize, reason: SkipReason) {
        self.skipped += 1;
        *self.by_reason.entry(reason).or_insert(0) += 1;
        if self.samples.len() < WARNING_SAMPLE_CAP {
            self.samples.push((line_no, reason));
        }
    }
}

/// Immutable term → vector table. Terms are NFC-normalized and trimmed on
/// insert and on lookup. All stored vectors have exactly `dimension`
/// finite components.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f32>>,
    /// Insertion order, for stable serialization.
    order: Vec<String>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> EmbeddingTable {
        EmbeddingTable {
            dimension,
            entries: HashMap::new(),
            order: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Look up a term (normalized before the probe).
    pub fn get(&self, term: &str) -> Option<&[f32]> {
        self.entries.get(&normalize_term(term)).map(Vec::as_slice)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(&normalize_term(term))
    }

    /// Terms in insertion order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    /// Returns false when the term was already present (first wins).
    fn insert(&mut self, term: String, vector: Vec<f32>) -> bool {
        debug_assert_eq!(vector.len(), self.dimension);
        if self.entries.contains_key(&term) {
            return false;
        }
        self.order.push(term.clone());
        self.entries.insert(term, vector);
        true
    }
}

/// Result of parsing a `.vec` stream: the retained table plus skip warnings.
#[derive(Debug)]
pub struct VecParseOutcome {
    pub table: EmbeddingTable,
    pub warnings: ParseWarnings,
}

/// Parse a textual `.vec` stream.
///
/// The stream is consumed line by line; peak memory is proportional to the
/// retained entries, not the file size. Malformed data lines are skipped
/// and counted; a missing or garbled header, or dimension 0, is fatal.
pub fn parse_vec_file<R: BufRead>(reader: R) -> Result<VecParseOutcome, VecParseError> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(VecParseError::MissingHeader),
    };
    let header = header.trim_end_matches('\r');
    let mut fields = header.split(' ').filter(|f| !f.is_empty());
    let declared_count: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| VecParseError::GarbledHeader(header.to_string()))?;
    let dimension: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| VecParseError::GarbledHeader(header.to_string()))?;
    if fields.next().is_some() {
        return Err(VecParseError::GarbledHeader(header.to_string()));
    }
    if dimension == 0 {
        return Err(VecParseError::ZeroDimension);
    }

    let mut table = EmbeddingTable::new(dimension);
    let mut warnings = ParseWarnings::default();
    let mut data_lines = 0usize;

    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        data_lines += 1;
        let line_no = idx + 2; // header was line 1

        let mut parts = line.split(' ');
        let raw_term = parts.next().unwrap_or("");
        let mut vector = Vec::with_capacity(dimension);
        let mut bad = None;
        for part in parts.by_ref() {
            if vector.len() == dimension {
                bad = Some(SkipReason::WrongComponentCount);
                break;
            }
            match part.parse::<f32>() {
                Ok(v) if v.is_finite() => vector.push(v),
                Ok(_) => {
                    bad = Some(SkipReason::NonFiniteComponent);
                    break;
                }
                Err(_) => {
                    bad = Some(SkipReason::WrongComponentCount);
                    break;
                }
            }
        }
        if bad.is_none() && vector.len() != dimension {
            bad = Some(SkipReason::WrongComponentCount);
        }
        if let Some(reason) = bad {
            warnings.record(line_no, reason);
            continue;
        }

        let term = normalize_term(raw_term);
        if term.is_empty() {
            warnings.record(line_no, SkipReason::EmptyTerm);
            continue;
        }
        if !table.insert(term, vector) {
            warnings.record(line_no, SkipReason::DuplicateTerm);
        }
    }

    if data_lines != declared_count {
        warnings.count_mismatch = Some((declared_count, data_lines));
    }
    Ok(VecParseOutcome { table, warnings })
}

/// Serialize the retained entries back to the `.vec` layout, in insertion
/// order. Floats are written in their shortest round-tripping form, so
/// parse → write → parse is the identity on terms and vectors.
pub fn write_vec_file<W: Write>(table: &EmbeddingTable, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", table.len(), table.dimension())?;
    for term in table.terms() {
        write!(writer, "{}", term)?;
        for v in table.get(term).expect("term listed but absent") {
            write!(writer, " {}", v)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Embed a term: direct lookup for single words, mean of in-vocabulary
/// constituent vectors for whitespace-separated multi-word expressions.
/// Constituents absent from the table are omitted from the mean; a term
/// with no in-vocabulary constituent at all is an error.
pub fn embed_term(table: &EmbeddingTable, term: &str) -> Result<TermVector, EmbedError> {
    let normalized = normalize_term(term);
    if normalized.is_empty() {
        return Err(EmbedError::EmptyTerm);
    }

    let words: Vec<&str> = normalized.split(' ').collect();
    if words.len() == 1 {
        return match table.get(&normalized) {
            Some(vector) => Ok(TermVector {
                term: normalized,
                vector: vector.to_vec(),
                provenance: Provenance::Direct,
            }),
            None => Err(EmbedError::Oov(normalized)),
        };
    }

    let dim = table.dimension();
    let mut sums = vec![0f64; dim];
    let mut found = 0usize;
    for word in words {
        if let Some(vector) = table.get(word) {
            for (acc, &v) in sums.iter_mut().zip(vector) {
                *acc += f64::from(v);
            }
            found += 1;
        }
    }
    if found == 0 {
        return Err(EmbedError::Oov(normalized));
    }
    let vector = sums.iter().map(|&s| (s / found as f64) as f32).collect();
    Ok(TermVector {
        term: normalized,
        vector,
        provenance: Provenance::MweMean,
    })
}

/// Cosine distance `1 − u·v / (‖u‖‖v‖)`, accumulated in f64 and clamped to
/// [0, 2] against floating-point overshoot. Zero-norm input is a domain
/// error rather than a NaN.
pub fn cosine_distance(u: &[f32], v: &[f32]) -> Result<f64, DistanceError> {
    if u.len() != v.len() {
        return Err(DistanceError::LengthMismatch(u.len(), v.len()));
    }
    let mut dot = 0f64;
    let mut nu = 0f64;
    let mut nv = 0f64;
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(DistanceError::ZeroNorm);
    }
    let d = 1.0 - dot / (nu.sqrt() * nv.sqrt());
    Ok(d.clamp(0.0, 2.0))
}
