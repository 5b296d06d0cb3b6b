//! Example dataset of buggy inputs with top-k retrieval by context similarity.

use std::cmp::Ordering;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::WidgetContext;

pub const EMBEDDING_DIM: usize = 300;
pub const DEFAULT_K: usize = 5;

/// The shipped seed dataset, one JSON record per line.
pub const SEED_EXAMPLES: &str = include_str!("../data/seed_examples.jsonl");

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("record {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    Seed,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub record_id: u64,
    pub source: RecordSource,
    pub context: WidgetContext,
    pub mutation_rule: Option<String>,
    pub buggy_input: String,
}

/// Sentence embedding of fixed dimension.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Vec<f64>;
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Signed feature hashing of lowercase alphanumeric tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashedBagOfWords;

impl Embedder for HashedBagOfWords {
    fn embed(&self, text: &str) -> Vec<f64> {
        let mut signed = vec![0.0; EMBEDDING_DIM];
        let mut unsigned = vec![0.0; EMBEDDING_DIM];
        let mut any = false;
        for tok in tokens(text) {
            any = true;
            let h = fnv1a(tok.as_bytes());
            let bucket = (h % EMBEDDING_DIM as u64) as usize;
            signed[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
            unsigned[bucket] += 1.0;
        }
        // Opposite signs can cancel to zero; only empty text may embed to zero.
        if any && signed.iter().all(|x| *x == 0.0) {
            return normalize(unsigned);
        }
        normalize(signed)
    }
}

pub fn embed(text: &str) -> Vec<f64> {
    HashedBagOfWords.embed(text)
}

/// Averaged pretrained word vectors (word2vec text format, 300 columns).
/// Unknown tokens are skipped; text with no known token falls back to hashing.
#[derive(Debug, Clone, Default)]
pub struct WordVectorEmbedder {
    vectors: std::collections::HashMap<String, Vec<f64>>,
}

impl WordVectorEmbedder {
    pub fn from_text(text: &str) -> Result<Self, StoreError> {
        let mut vectors = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let values = values.map_err(|e| StoreError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
            // word2vec headers are "<count> <dim>".
            if i == 0 && values.len() == 1 {
                continue;
            }
            if values.len() != EMBEDDING_DIM || values.iter().any(|v| !v.is_finite()) {
                return Err(StoreError::MalformedRecord {
                    line: i + 1,
                    reason: format!("expected {EMBEDDING_DIM} finite components, got {}", values.len()),
                });
            }
            vectors.insert(word.to_lowercase(), values);
        }
        Ok(Self { vectors })
    }
}

impl Embedder for WordVectorEmbedder {
    fn embed(&self, text: &str) -> Vec<f64> {
        let mut sum = vec![0.0; EMBEDDING_DIM];
        let mut hits = 0;
        for tok in tokens(text) {
            if let Some(v) = self.vectors.get(&tok) {
                sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                hits += 1;
            }
        }
        if hits == 0 {
            return HashedBagOfWords.embed(text);
        }
        normalize(sum)
    }
}

/// Cosine similarity; zero when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Similarity descending, then record id ascending.
pub fn rank_order(a: (f64, u64), b: (f64, u64)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

pub struct ExampleStore {
    records: Vec<ExampleRecord>,
    embeddings: Vec<Vec<f64>>,
    embedder: Box<dyn Embedder>,
    path: Option<PathBuf>,
    next_id: u64,
}

impl std::fmt::Debug for ExampleStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExampleStore")
            .field("records", &self.records.len())
            .field("path", &self.path)
            .finish()
    }
}

impl Default for ExampleStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    #[serde(default)]
    record_id: Option<u64>,
    #[serde(default)]
    source: Option<RecordSource>,
    context: WidgetContext,
    #[serde(default)]
    mutation_rule: Option<String>,
    buggy_input: String,
}

impl ExampleStore {
    pub fn in_memory() -> Self {
        Self {
            records: Vec::new(),
            embeddings: Vec::new(),
            embedder: Box::new(HashedBagOfWords),
            path: None,
            next_id: 1,
        }
    }

    pub fn with_embedder(mut self, embedder: Box<dyn Embedder>) -> Self {
        self.embeddings = self.records.iter().map(|r| embedder.embed(&r.context.retrieval_text())).collect();
        self.embedder = embedder;
        self
    }

    /// Parse JSONL records. Ids are renumbered from 1 in file order.
    pub fn from_jsonl(text: &str) -> Result<Self, StoreError> {
        let mut store = Self::in_memory();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| StoreError::MalformedRecord { line: i + 1, reason };
            let rec: RecordLine = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
            if rec.buggy_input.is_empty() {
                return Err(malformed("buggy_input is empty".into()));
            }
            let _ = rec.record_id;
            store.push(ExampleRecord {
                record_id: 0,
                source: rec.source.unwrap_or(RecordSource::Seed),
                context: rec.context,
                mutation_rule: rec.mutation_rule,
                buggy_input: rec.buggy_input,
            });
        }
        Ok(store)
    }

    /// Load a record file and keep appending new records to it.
    pub fn load_seed_dataset(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| StoreError::StorageFailure(format!("{}: {e}", path.display())))?;
        let mut store = Self::from_jsonl(&text)?;
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    /// The built-in seed records, not backed by a file.
    pub fn builtin_seeds() -> Self {
        Self::from_jsonl(SEED_EXAMPLES).expect("shipped seed file parses")
    }

    /// Write all records to `path` and append there from now on.
    pub fn persist_to(&mut self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let path = path.as_ref();
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&serde_json::to_string(r).expect("record serializes"));
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| StoreError::StorageFailure(format!("{}: {e}", path.display())))?;
        self.path = Some(path.to_path_buf());
        Ok(())
    }

    fn push(&mut self, mut rec: ExampleRecord) -> u64 {
        rec.record_id = self.next_id;
        self.next_id += 1;
        self.embeddings.push(self.embedder.embed(&rec.context.retrieval_text()));
        let id = rec.record_id;
        self.records.push(rec);
        id
    }

    /// Append a runtime record, persisting it first when file-backed.
    pub fn add_record(
        &mut self,
        context: WidgetContext,
        mutation_rule: &str,
        buggy_input: &str,
    ) -> Result<u64, StoreError> {
        let rec = ExampleRecord {
            record_id: self.next_id,
            source: RecordSource::Runtime,
            context,
            mutation_rule: Some(mutation_rule.to_string()),
            buggy_input: buggy_input.to_string(),
        };
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&rec).expect("record serializes");
            let mut file = OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(|e| StoreError::StorageFailure(format!("{}: {e}", path.display())))?;
            writeln!(file, "{line}")
                .and_then(|_| file.sync_data())
                .map_err(|e| StoreError::StorageFailure(format!("{}: {e}", path.display())))?;
        }
        Ok(self.push(rec))
    }

    pub fn records(&self) -> &[ExampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Top-k records with their similarity to `query`.
    pub fn retrieve_scored(&self, query: &WidgetContext, k: usize) -> Vec<(&ExampleRecord, f64)> {
        let q = self.embedder.embed(&query.retrieval_text());
        let mut scored: Vec<(usize, f64)> = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| (i, cosine(&q, e)))
            .collect();
        let k = k.min(scored.len());
        if k == 0 {
            return Vec::new();
        }
        let key = |&(i, s): &(usize, f64)| (s, self.records[i].record_id);
        scored.select_nth_unstable_by(k - 1, |a, b| rank_order(key(a), key(b)));
        scored.truncate(k);
        scored.sort_by(|a, b| rank_order(key(a), key(b)));
        scored.into_iter().map(|(i, s)| (&self.records[i], s)).collect()
    }

    pub fn retrieve_top_k(&self, query: &WidgetContext, k: usize) -> Vec<ExampleRecord> {
        self.retrieve_scored(query, k).into_iter().map(|(r, _)| r.clone()).collect()
    }
}
