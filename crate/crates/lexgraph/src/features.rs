//! Node feature vectors under four embedding regimes: random, a single
//! feature file (vanilla or pretrained), or hierarchical (train-side rows
//! from one file, test-side rows from another).
//!
//! Feature files are UTF-8 text, one record per line: the node key, a tab,
//! then the vector as space-separated decimals. An optional first line
//! `#dim=<d>` pins the dimension; otherwise it is inferred from the first
//! record. Floats are written in shortest round-trip form.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SplitAssignment;
use crate::graph::{LegalGraph, NodeKind};
use crate::rng;

/// Default feature width for the random regime, matching the transformer
/// embedding width used by the file regimes.
pub const DEFAULT_RANDOM_DIM: usize = 768;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("line {line}: row has {got} values, expected {expected}")]
    DimMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate feature key {0:?}")]
    DuplicateKey(String),
    #[error("feature tables disagree on dimension: {0} vs {1}")]
    TableDimMismatch(usize, usize),
    #[error("feature table missing for regime {0:?}")]
    MissingTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable map from node key to feature vector, all of one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        FeatureTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f64>) -> Result<(), FeatureError> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(FeatureError::DimMismatch {
                line: 0,
                expected: self.dim,
                got: vector.len(),
            });
        }
        if self.vectors.contains_key(&key) {
            return Err(FeatureError::DuplicateKey(key));
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.vectors.get(key).map(|v| v.as_slice())
    }
}

/// Load a feature file; see the module docs for the format.
pub fn load_feature_file(path: impl AsRef<Path>) -> Result<FeatureTable, FeatureError> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut dim: Option<usize> = None;
    let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if lineno == 1 && line.starts_with('#') {
            let rest = line.trim_start_matches('#').trim();
            if let Some(d) = rest.strip_prefix("dim=") {
                dim = Some(d.parse().map_err(|_| FeatureError::Parse {
                    line: lineno,
                    message: format!("bad dimension header {line:?}"),
                })?);
                continue;
            }
            return Err(FeatureError::Parse {
                line: lineno,
                message: format!("unrecognized header {line:?}"),
            });
        }
        let (key, values) = line.split_once('\t').ok_or_else(|| FeatureError::Parse {
            line: lineno,
            message: "expected <key>\\t<values>".into(),
        })?;
        let vector: Vec<f64> = values
            .split_ascii_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| FeatureError::Parse {
                    line: lineno,
                    message: format!("bad float {tok:?}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::Parse {
                line: lineno,
                message: "non-finite feature value".into(),
            });
        }
        let expected = *dim.get_or_insert(vector.len());
        if vector.len() != expected {
            return Err(FeatureError::DimMismatch {
                line: lineno,
                expected,
                got: vector.len(),
            });
        }
        if vectors.contains_key(key) {
            return Err(FeatureError::DuplicateKey(key.to_string()));
        }
        vectors.insert(key.to_string(), vector);
    }

    Ok(FeatureTable {
        dim: dim.unwrap_or(0),
        vectors,
    })
}

/// Write a feature table in the file format, rows sorted by key.
pub fn write_feature_file(
    path: impl AsRef<Path>,
    table: &FeatureTable,
) -> Result<(), FeatureError> {
    let mut out = std::io::BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "#dim={}", table.dim)?;
    let mut keys: Vec<&String> = table.vectors.keys().collect();
    keys.sort();
    for key in keys {
        write!(out, "{key}\t")?;
        let vec = &table.vectors[key];
        for (i, v) in vec.iter().enumerate() {
            if i > 0 {
                write!(out, " ")?;
            }
            write!(out, "{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Deterministic per-key random features, each coordinate uniform on
/// [-0.5, 0.5]. The stream is keyed by (seed, key): the same pair yields the
/// same vector on every run and machine.
pub fn random_features(keys: &[String], dim: usize, seed: u64) -> FeatureTable {
    assert!(dim > 0, "feature dimension must be positive");
    let mut table = FeatureTable::new(dim);
    for key in keys {
        table
            .insert(key.clone(), random_vector(seed, key, dim))
            .expect("random feature keys are unique");
    }
    table
}

fn random_vector(seed: u64, key: &str, dim: usize) -> Vec<f64> {
    let mut rng = rng::rng_for(seed, key);
    (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()
}

/// How nodes get their feature vectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Regime {
    Random { seed: u64, dim: usize },
    File { path: PathBuf },
    Hierarchical { train_path: PathBuf, test_path: PathBuf },
}

/// Regime plus the seed for fallback rows (characteristic nodes and cases
/// missing from a feature file).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub regime: Regime,
    pub fallback_seed: u64,
}

/// A [`ProviderSpec`] with its tables loaded into memory.
#[derive(Clone, Debug)]
pub enum ResolvedRegime {
    Random { seed: u64, dim: usize },
    File { table: FeatureTable },
    Hierarchical { train: FeatureTable, test: FeatureTable },
}

#[derive(Clone, Debug)]
pub struct FeatureProvider {
    pub regime: ResolvedRegime,
    pub fallback_seed: u64,
}

impl FeatureProvider {
    pub fn from_spec(spec: &ProviderSpec) -> Result<Self, FeatureError> {
        let regime = match &spec.regime {
            Regime::Random { seed, dim } => ResolvedRegime::Random {
                seed: *seed,
                dim: *dim,
            },
            Regime::File { path } => ResolvedRegime::File {
                table: load_feature_file(path)?,
            },
            Regime::Hierarchical { train_path, test_path } => {
                let train = load_feature_file(train_path)?;
                let test = load_feature_file(test_path)?;
                if train.dim() != test.dim() {
                    return Err(FeatureError::TableDimMismatch(train.dim(), test.dim()));
                }
                ResolvedRegime::Hierarchical { train, test }
            }
        };
        Ok(FeatureProvider {
            regime,
            fallback_seed: spec.fallback_seed,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.regime {
            ResolvedRegime::Random { dim, .. } => *dim,
            ResolvedRegime::File { table } => table.dim(),
            ResolvedRegime::Hierarchical { train, .. } => train.dim(),
        }
    }
}

/// Dense node-count x dim feature matrix; row i belongs to NodeId i.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Stream key for a node's fallback/random vector. Kind-tagged so a case id
/// that happens to equal a year literal never shares a stream with the time
/// node of that year.
fn stream_key(kind: NodeKind, key: &str) -> String {
    let tag = match kind {
        NodeKind::Case => "case",
        NodeKind::Time => "time",
        NodeKind::Act => "act",
    };
    format!("{tag}:{key}")
}

/// Materialize the feature matrix for a graph under the provider's regime.
///
/// Random: every node draws from the seeded stream. File: case nodes take
/// their file vector. Hierarchical: train-side case nodes read the train
/// table, test-side the test table; unlabeled cases read the test table.
/// In every regime, characteristic nodes and cases absent from the tables
/// fall back to deterministic random vectors under `fallback_seed`.
pub fn materialize(
    graph: &LegalGraph,
    split: &SplitAssignment,
    provider: &FeatureProvider,
) -> FeatureMatrix {
    let dim = provider.dim();
    let n = graph.node_count();
    let mut data = Vec::with_capacity(n * dim);

    for node in graph.nodes() {
        let skey = stream_key(node.kind, &node.key);
        let row: Vec<f64> = match &provider.regime {
            ResolvedRegime::Random { seed, dim } => random_vector(*seed, &skey, *dim),
            ResolvedRegime::File { table } => match node.kind {
                NodeKind::Case => table
                    .get(&node.key)
                    .map(|v| v.to_vec())
                    .unwrap_or_else(|| random_vector(provider.fallback_seed, &skey, dim)),
                _ => random_vector(provider.fallback_seed, &skey, dim),
            },
            ResolvedRegime::Hierarchical { train, test } => match node.kind {
                NodeKind::Case => {
                    let table = if split.is_train(node.id) { train } else { test };
                    table
                        .get(&node.key)
                        .map(|v| v.to_vec())
                        .unwrap_or_else(|| random_vector(provider.fallback_seed, &skey, dim))
                }
                _ => random_vector(provider.fallback_seed, &skey, dim),
            },
        };
        debug_assert_eq!(row.len(), dim);
        data.extend_from_slice(&row);
    }

    FeatureMatrix { rows: n, dim, data }
}
