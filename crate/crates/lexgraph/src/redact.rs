//! Fairness preprocessing: gendered pronouns become `[gender]`, externally
//! supplied name spans become `[REDACTED]`.
//!
//! The pronoun list is exactly {he, him, his, her, she}, matched
//! case-insensitively at token boundaries (a boundary is any position not
//! adjacent to a letter or digit). An extended list can be supplied, but the
//! five-token default is the contract. Name spans arrive as byte offsets in
//! a JSONL spans file and are applied before pronoun replacement so that
//! names containing pronoun substrings disappear as names.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CaseDoc;

/// Replacement token for pronouns.
pub const GENDER_TOKEN: &str = "[gender]";
/// Replacement token for name spans.
pub const REDACTED_TOKEN: &str = "[REDACTED]";
/// The default pronoun list.
pub const PRONOUNS: [&str; 5] = ["he", "him", "his", "her", "she"];

#[derive(Debug, Error, PartialEq)]
pub enum RedactError {
    #[error("span [{start}, {end}) out of bounds for case {case_id:?} (text length {len})")]
    SpanOutOfBounds {
        case_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("overlapping spans at byte {at} for case {case_id:?}")]
    OverlappingSpans { case_id: String, at: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for RedactError {
    fn from(e: std::io::Error) -> Self {
        RedactError::Io(e.to_string())
    }
}

/// One externally detected entity span; byte offsets into the stored text,
/// end exclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub case_id: String,
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

/// Tallies of replacements made over a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedactionReport {
    pub pronoun_count: usize,
    pub span_count: usize,
    /// (case_id, pronouns, spans) per affected case, in corpus order.
    pub per_case: Vec<(String, usize, usize)>,
    /// Span case_ids that matched no corpus document.
    pub unmatched_case_ids: Vec<String>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Replace token-boundary occurrences of the given pronouns (ASCII
/// case-insensitive) with [`GENDER_TOKEN`]. Returns the new text and the
/// replacement count.
pub fn redact_pronouns_with(text: &str, pronouns: &[&str]) -> (String, usize) {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut count = 0;
    let mut i = 0;
    'outer: while i < bytes.len() {
        // Token boundary on the left?
        let left_ok = i == 0 || {
            let prev = text[..i].chars().next_back().unwrap();
            !is_word_char(prev)
        };
        if left_ok {
            // Longest pronoun first so "her" is not split as "he" + "r".
            let mut candidates: Vec<&str> = pronouns.to_vec();
            candidates.sort_by_key(|p| std::cmp::Reverse(p.len()));
            for p in candidates {
                let end = i + p.len();
                if end <= bytes.len()
                    && text.is_char_boundary(end)
                    && text[i..end].eq_ignore_ascii_case(p)
                {
                    let right_ok = end == bytes.len() || {
                        let next = text[end..].chars().next().unwrap();
                        !is_word_char(next)
                    };
                    if right_ok {
                        out.push_str(GENDER_TOKEN);
                        count += 1;
                        i = end;
                        continue 'outer;
                    }
                }
            }
        }
        let ch = text[i..].chars().next().unwrap();
        out.push(ch);
        i += ch.len_utf8();
    }
    (out, count)
}

/// Replace the five default pronouns; see [`redact_pronouns_with`].
pub fn redact_pronouns(text: &str) -> (String, usize) {
    redact_pronouns_with(text, &PRONOUNS)
}

/// Count of token-boundary pronoun occurrences without rewriting. Used as an
/// independent check against the redaction pass.
pub fn scan_pronouns(text: &str, pronouns: &[&str]) -> usize {
    let mut total = 0;
    for token in text.split(|c: char| !is_word_char(c)) {
        if pronouns.iter().any(|p| token.eq_ignore_ascii_case(p)) {
            total += 1;
        }
    }
    total
}

/// Replace each span with [`REDACTED_TOKEN`]. Spans must be sorted,
/// non-overlapping, within bounds, and on UTF-8 character boundaries.
pub fn redact_spans(
    text: &str,
    spans: &[(usize, usize)],
    case_id: &str,
) -> Result<(String, usize), RedactError> {
    let mut prev_end = 0usize;
    for &(start, end) in spans {
        if start >= end
            || end > text.len()
            || !text.is_char_boundary(start)
            || !text.is_char_boundary(end)
        {
            return Err(RedactError::SpanOutOfBounds {
                case_id: case_id.to_string(),
                start,
                end,
                len: text.len(),
            });
        }
        if start < prev_end {
            return Err(RedactError::OverlappingSpans {
                case_id: case_id.to_string(),
                at: start,
            });
        }
        prev_end = end;
    }

    let mut out = String::with_capacity(text.len());
    let mut cursor = 0usize;
    for &(start, end) in spans {
        out.push_str(&text[cursor..start]);
        out.push_str(REDACTED_TOKEN);
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    Ok((out, spans.len()))
}

/// Sort spans and merge any that overlap or touch, so externally produced
/// span sets are always applicable.
pub fn normalize_spans(mut spans: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    spans.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for (start, end) in spans {
        match merged.last_mut() {
            Some((_, last_end)) if start <= *last_end => {
                *last_end = (*last_end).max(end);
            }
            _ => merged.push((start, end)),
        }
    }
    merged
}

/// Parse a spans JSONL file (`case_id`, `start`, `end`, `kind` per line).
pub fn parse_spans_file(path: impl AsRef<Path>) -> Result<Vec<EntitySpan>, RedactError> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut spans = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let span: EntitySpan = serde_json::from_str(&line).map_err(|e| RedactError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        spans.push(span);
    }
    Ok(spans)
}

/// Redact a whole corpus: spans first, then pronouns. Non-text fields are
/// untouched; documents without text pass through unchanged.
pub fn redact_corpus(
    docs: &[CaseDoc],
    spans: &[EntitySpan],
) -> Result<(Vec<CaseDoc>, RedactionReport), RedactError> {
    let mut by_case: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    let mut known: std::collections::HashSet<&str> =
        docs.iter().map(|d| d.case_id.as_str()).collect();
    let mut report = RedactionReport::default();

    for span in spans {
        if known.contains(span.case_id.as_str()) {
            by_case
                .entry(span.case_id.as_str())
                .or_default()
                .push((span.start, span.end));
        } else if !report
            .unmatched_case_ids
            .contains(&span.case_id)
        {
            report.unmatched_case_ids.push(span.case_id.clone());
        }
    }
    known.clear();

    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        let mut redacted = doc.clone();
        let mut pronouns_here = 0;
        let mut spans_here = 0;
        if let Some(text) = &doc.text {
            let case_spans = by_case
                .get(doc.case_id.as_str())
                .cloned()
                .map(normalize_spans)
                .unwrap_or_default();
            let (after_spans, span_count) = redact_spans(text, &case_spans, &doc.case_id)?;
            let (after_pronouns, pronoun_count) = redact_pronouns(&after_spans);
            redacted.text = Some(after_pronouns);
            pronouns_here = pronoun_count;
            spans_here = span_count;
        }
        report.pronoun_count += pronouns_here;
        report.span_count += spans_here;
        if pronouns_here + spans_here > 0 {
            report
                .per_case
                .push((doc.case_id.clone(), pronouns_here, spans_here));
        }
        out.push(redacted);
    }
    Ok((out, report))
}
