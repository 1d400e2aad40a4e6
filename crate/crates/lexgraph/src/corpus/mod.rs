//! Corpus ingestion: JSONL case documents, remote fetch, graph building,
//! and train/test split assignment.
//!
//! A corpus file is UTF-8 JSONL, one object per line:
//!
//! ```json
//! {"case_id":"1960_15","year":1960,"label":1,"split":"train",
//!  "cited_ids":["1955_3"],"act_ids":["IPC-302"],"text":"..."}
//! ```
//!
//! `case_id` and `year` are required; everything else is optional.

mod build;
mod fetch;
mod split;

pub use build::{build_graph, BuildStats};
pub use fetch::{fetch_remote, FetchConfig, FetchError, FetchOutcome};
pub use split::{
    assign_simple_split, assign_temporal_split, default_histogram_ranges, evaluation_windows,
    year_histogram, Direction, HistogramRow, SplitAssignment, SplitPlan, TemporalPool, YearRange,
    BUCKET_WIDTH_YEARS,
};

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which side of the labeled dataset a case was published under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitHint {
    Train,
    Dev,
    Test,
}

/// One case document as read from a corpus file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseDoc {
    pub case_id: String,
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, rename = "split", skip_serializing_if = "Option::is_none")]
    pub split_hint: Option<SplitHint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cited_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub act_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl CaseDoc {
    pub fn new(case_id: impl Into<String>, year: i32) -> Self {
        CaseDoc {
            case_id: case_id.into(),
            year,
            label: None,
            split_hint: None,
            cited_ids: Vec::new(),
            act_ids: Vec::new(),
            text: None,
        }
    }

    pub fn with_label(mut self, label: u8, hint: SplitHint) -> Self {
        self.label = Some(label);
        self.split_hint = Some(hint);
        self
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate case id {0:?}")]
    DuplicateCaseId(String),
    #[error("labeled case {0:?} has no split hint")]
    MissingSplitHint(String),
    #[error("no labeled case on the train side of the split")]
    EmptyTrain,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse a JSONL corpus file. Documents come back in file order; the first
/// malformed line aborts with its 1-based line number.
pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Vec<CaseDoc>, CorpusError> {
    let file = File::open(path.as_ref())?;
    parse_corpus_reader(BufReader::new(file))
}

/// Parse corpus JSONL from any reader; see [`parse_corpus`].
pub fn parse_corpus_reader(reader: impl BufRead) -> Result<Vec<CaseDoc>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: CaseDoc = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if let Some(label) = doc.label {
            if label > 1 {
                return Err(CorpusError::Parse {
                    line: lineno,
                    message: format!("label must be 0 or 1, got {label}"),
                });
            }
        }
        if doc.case_id.is_empty() {
            return Err(CorpusError::Parse {
                line: lineno,
                message: "case_id must be nonempty".into(),
            });
        }
        if !seen.insert(doc.case_id.clone()) {
            return Err(CorpusError::DuplicateCaseId(doc.case_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Write documents as corpus JSONL, one object per line, in order.
pub fn write_corpus(path: impl AsRef<Path>, docs: &[CaseDoc]) -> Result<(), CorpusError> {
    let mut out = std::io::BufWriter::new(File::create(path.as_ref())?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc).map_err(|e| CorpusError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
