//! Structured-response parsing with bounded repair.
//!
//! Repair is deliberately limited to stripping what surrounds the first
//! JSON object (code fences, prose preamble, trailing chatter) and
//! removing trailing commas. Anything deeper is a parse failure: silent
//! aggressive repair fabricates data.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResponseParseError {
    #[error("no JSON object found in response")]
    NoJsonObject { raw: String },
    #[error("malformed response object: {reason}")]
    Malformed { reason: String, raw: String },
}

impl ResponseParseError {
    /// The original response text, kept for the audit trail.
    pub fn raw(&self) -> &str {
        match self {
            ResponseParseError::NoJsonObject { raw } => raw,
            ResponseParseError::Malformed { raw, .. } => raw,
        }
    }
}

/// Relation lists reported for one term.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct TermRelations {
    pub synonyms: Vec<String>,
    pub antonyms: Vec<String>,
    pub co_hyponyms: Vec<String>,
}

/// A parsed per-cluster response.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichmentResponse {
    /// term → reported relation lists, in deterministic key order.
    pub terms: BTreeMap<String, TermRelations>,
    pub raw_text: String,
    /// True when any tolerance rule fired while extracting the object.
    pub repair_applied: bool,
    /// Members of the cluster this response answers, when known. Used to
    /// count model-suggested terms from outside the cluster; empty means
    /// no augmentation accounting.
    pub cluster_members: Vec<String>,
}

impl EnrichmentResponse {
    /// Canonical JSON of the per-term map. `parse_response` of this text
    /// reproduces `terms` exactly.
    pub fn serialize_terms(&self) -> String {
        serde_json::to_string_pretty(&self.terms).expect("string maps always serialize")
    }
}

/// Locate the first balanced `{ ... }` region, respecting JSON strings.
/// Returns the byte range, extending to the end when unbalanced (the
/// subsequent parse decides whether that is salvageable).
fn object_span(text: &str) -> Option<(usize, usize)> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((start, i + 1));
                }
            }
            _ => {}
        }
    }
    Some((start, text.len()))
}

/// Drop commas that directly precede a closing bracket, outside strings.
fn strip_trailing_commas(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            out.push(b);
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        if b == b'"' {
            in_string = true;
            out.push(b);
            continue;
        }
        if b == b',' {
            let next = bytes[i + 1..]
                .iter()
                .copied()
                .find(|c| !c.is_ascii_whitespace());
            if matches!(next, Some(b'}') | Some(b']')) {
                continue;
            }
        }
        out.push(b);
    }
    String::from_utf8(out).expect("only ASCII bytes were removed")
}

fn string_list(
    term: &str,
    key: &str,
    value: Option<&serde_json::Value>,
    raw: &str,
) -> Result<Vec<String>, ResponseParseError> {
    let Some(value) = value else {
        return Ok(Vec::new()); // missing relation list defaults to empty
    };
    let items = value
        .as_array()
        .ok_or_else(|| ResponseParseError::Malformed {
            reason: format!("{:?}.{} is not an array", term, key),
            raw: raw.to_string(),
        })?;
    items
        .iter()
        .map(|item| {
            item.as_str()
                .map(str::to_string)
                .ok_or_else(|| ResponseParseError::Malformed {
                    reason: format!("{:?}.{} contains a non-string item", term, key),
                    raw: raw.to_string(),
                })
        })
        .collect()
}

/// Extract and validate the first JSON object in a raw model response.
///
/// Unknown keys inside a term's relation map are ignored; missing relation
/// lists default to empty. `repair_applied` is set when the object had to
/// be dug out of surrounding text or trailing commas were removed.
pub fn parse_response(raw: &str) -> Result<EnrichmentResponse, ResponseParseError> {
    let trimmed = raw.trim();
    let Some((start, end)) = object_span(trimmed) else {
        return Err(ResponseParseError::NoJsonObject {
            raw: raw.to_string(),
        });
    };
    let candidate = &trimmed[start..end];
    let mut repair_applied = candidate.len() != trimmed.len();

    let value: serde_json::Value = match serde_json::from_str(candidate) {
        Ok(v) => v,
        Err(_) => {
            let cleaned = strip_trailing_commas(candidate);
            match serde_json::from_str(&cleaned) {
                Ok(v) => {
                    repair_applied = true;
                    v
                }
                Err(e) => {
                    return Err(ResponseParseError::Malformed {
                        reason: e.to_string(),
                        raw: raw.to_string(),
                    })
                }
            }
        }
    };

    let object = value
        .as_object()
        .expect("object_span yields an object or the parse fails");
    let mut terms = BTreeMap::new();
    for (term, relations) in object {
        let map = relations
            .as_object()
            .ok_or_else(|| ResponseParseError::Malformed {
                reason: format!("value for term {:?} is not an object", term),
                raw: raw.to_string(),
            })?;
        terms.insert(
            term.clone(),
            TermRelations {
                synonyms: string_list(term, "synonyms", map.get("synonyms"), raw)?,
                antonyms: string_list(term, "antonyms", map.get("antonyms"), raw)?,
                co_hyponyms: string_list(term, "co_hyponyms", map.get("co_hyponyms"), raw)?,
            },
        );
    }
    Ok(EnrichmentResponse {
        terms,
        raw_text: raw.to_string(),
        repair_applied,
        cluster_members: Vec::new(),
    })
}
