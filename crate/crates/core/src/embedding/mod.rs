//! In-memory word vector spaces and their on-disk formats.

mod binary;
mod normalize;
mod text;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binary::write_binary;
pub use normalize::NormalizationPolicy;
pub use text::write_text;

use binary::read_binary;
use text::read_text;

use crate::linalg;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("inconsistent dimensionality at row {row}: expected {expected}, found {found}")]
    InconsistentDim { row: usize, expected: usize, found: usize },
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("truncated payload at entry {entry}")]
    Truncated { entry: usize },
    #[error("header/payload mismatch: {0}")]
    HeaderMismatch(String),
    #[error("no parsable rows")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Binary,
}

/// Knobs shared by both loaders.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    /// Stop after this many data rows.
    pub limit: Option<usize>,
    /// Reject the whole file on the first malformed row instead of skipping.
    pub strict: bool,
    pub policy: NormalizationPolicy,
}

/// Provenance and load statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    pub declared_count: Option<usize>,
    pub limit: Option<usize>,
    pub duplicates: usize,
    pub skipped: usize,
    pub zero_rows: usize,
    pub unit_normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookupStatus {
    Exact,
    Normalized,
    PhraseAveraged,
    Oov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupResult {
    pub term: String,
    pub status: LookupStatus,
    /// Present iff `status != Oov`.
    pub vector: Option<Vec<f64>>,
}

impl LookupResult {
    pub fn is_oov(&self) -> bool {
        self.status == LookupStatus::Oov
    }
}

/// Immutable token -> vector table.
#[derive(Clone)]
pub struct EmbeddingSpace {
    name: String,
    dim: usize,
    words: Vec<String>,
    vocab: HashMap<String, usize>,
    /// normalized form -> first row whose token normalizes to it, built with
    /// `policy`
    norm_index: HashMap<String, usize>,
    policy: NormalizationPolicy,
    data: Vec<f32>,
    meta: SourceMeta,
}

impl fmt::Debug for EmbeddingSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingSpace")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("len", &self.words.len())
            .field("meta", &self.meta)
            .finish()
    }
}

/// Result of offering one row to a [`SpaceBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Push {
    Added,
    Duplicate,
}

/// Accumulates rows with keep-first duplicate handling.
pub(crate) struct SpaceBuilder {
    dim: usize,
    words: Vec<String>,
    vocab: HashMap<String, usize>,
    data: Vec<f32>,
    meta: SourceMeta,
}

impl SpaceBuilder {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            vocab: HashMap::new(),
            data: Vec::new(),
            meta: SourceMeta::default(),
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn meta_mut(&mut self) -> &mut SourceMeta {
        &mut self.meta
    }

    /// `values` must have length `dim` and be finite; loaders check that.
    pub(crate) fn push(&mut self, token: &str, values: &[f32]) -> Push {
        debug_assert_eq!(values.len(), self.dim);
        if self.vocab.contains_key(token) {
            self.meta.duplicates += 1;
            log::warn!("duplicate token {token:?} ignored");
            return Push::Duplicate;
        }
        self.vocab.insert(token.to_owned(), self.words.len());
        self.words.push(token.to_owned());
        self.data.extend_from_slice(values);
        Push::Added
    }

    pub(crate) fn finish(
        self,
        name: impl Into<String>,
        policy: NormalizationPolicy,
    ) -> Result<EmbeddingSpace, EmbeddingError> {
        if self.words.is_empty() || self.dim == 0 {
            return Err(EmbeddingError::Empty);
        }
        let mut norm_index = HashMap::new();
        if !policy.is_identity() {
            for (i, w) in self.words.iter().enumerate() {
                norm_index.entry(policy.normalize(w)).or_insert(i);
            }
        }
        Ok(EmbeddingSpace {
            name: name.into(),
            dim: self.dim,
            words: self.words,
            vocab: self.vocab,
            norm_index,
            policy,
            data: self.data,
            meta: self.meta,
        })
    }
}

fn name_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Load a word2vec/fastText `.vec` text file.
pub fn load_text_format(path: &Path, opts: &LoadOptions) -> Result<EmbeddingSpace, EmbeddingError> {
    let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut builder = read_text(std::io::BufReader::new(file), opts)?;
    builder.meta_mut().path = Some(path.to_owned());
    builder.finish(name_from_path(path), opts.policy)
}

/// Load a word2vec binary file.
pub fn load_binary_format(path: &Path, opts: &LoadOptions) -> Result<EmbeddingSpace, EmbeddingError> {
    let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut builder = read_binary(std::io::BufReader::new(file), opts)?;
    builder.meta_mut().path = Some(path.to_owned());
    builder.finish(name_from_path(path), opts.policy)
}

/// Parse text-format rows from any buffered reader.
pub fn read_text_from<R: std::io::BufRead>(
    reader: R,
    name: &str,
    opts: &LoadOptions,
) -> Result<EmbeddingSpace, EmbeddingError> {
    read_text(reader, opts)?.finish(name, opts.policy)
}

/// Parse a binary-format stream from any buffered reader.
pub fn read_binary_from<R: std::io::BufRead>(
    reader: R,
    name: &str,
    opts: &LoadOptions,
) -> Result<EmbeddingSpace, EmbeddingError> {
    read_binary(reader, opts)?.finish(name, opts.policy)
}

pub fn load(path: &Path, format: Format, opts: &LoadOptions) -> Result<EmbeddingSpace, EmbeddingError> {
    match format {
        Format::Text => load_text_format(path, opts),
        Format::Binary => load_binary_format(path, opts),
    }
}

impl EmbeddingSpace {
    /// Build a space from in-memory rows. Rows of the wrong length or with
    /// non-finite values are skipped; duplicates keep the first occurrence.
    pub fn from_rows<I, S>(
        name: impl Into<String>,
        dim: usize,
        rows: I,
        policy: NormalizationPolicy,
    ) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: AsRef<str>,
    {
        let mut builder = SpaceBuilder::new(dim);
        for (token, values) in rows {
            if values.len() != dim || values.iter().any(|v| !v.is_finite()) {
                builder.meta_mut().skipped += 1;
                continue;
            }
            builder.push(token.as_ref(), &values);
        }
        builder.finish(name, policy)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn meta(&self) -> &SourceMeta {
        &self.meta
    }

    pub fn policy(&self) -> NormalizationPolicy {
        self.policy
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.vocab.get(token).copied()
    }

    pub fn row(&self, idx: usize) -> &[f32] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index(token).map(|i| self.row(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), self.row(i)))
    }

    fn row_f64(&self, idx: usize) -> Vec<f64> {
        self.row(idx).iter().map(|&v| v as f64).collect()
    }

    /// Exact token, then its normalized form.
    fn resolve_token(&self, token: &str, policy: &NormalizationPolicy) -> Option<(usize, LookupStatus)> {
        if let Some(i) = self.index(token) {
            return Some((i, LookupStatus::Exact));
        }
        let normalized = policy.normalize(token);
        if let Some(i) = self.index(&normalized) {
            return Some((i, LookupStatus::Normalized));
        }
        if *policy == self.policy {
            if let Some(&i) = self.norm_index.get(&normalized) {
                return Some((i, LookupStatus::Normalized));
            }
        }
        None
    }

    /// Resolve a spec term: exact token, normalized token, underscore-joined
    /// n-gram token, then the mean of whichever constituents resolve.
    pub fn lookup(&self, term: &str, policy: &NormalizationPolicy) -> LookupResult {
        let found = |status, vector| LookupResult {
            term: term.to_owned(),
            status,
            vector: Some(vector),
        };
        if let Some((i, status)) = self.resolve_token(term, policy) {
            return found(status, self.row_f64(i));
        }
        let parts: Vec<&str> = term.split_whitespace().collect();
        if parts.len() > 1 {
            let joined = parts.join("_");
            if let Some((i, _)) = self.resolve_token(&joined, policy) {
                return found(LookupStatus::Normalized, self.row_f64(i));
            }
            let rows: Vec<Vec<f64>> = parts
                .iter()
                .filter_map(|p| self.resolve_token(p, policy))
                .map(|(i, _)| self.row_f64(i))
                .collect();
            if let Some(mean) = linalg::mean(rows.iter().map(Vec::as_slice)) {
                return found(LookupStatus::PhraseAveraged, mean);
            }
        }
        LookupResult {
            term: term.to_owned(),
            status: LookupStatus::Oov,
            vector: None,
        }
    }

    /// Copy of the space with every nonzero row scaled to unit length.
    pub fn unit_normalize(&self) -> EmbeddingSpace {
        let mut out = self.clone();
        let mut zero_rows = 0;
        for row in out.data.chunks_mut(self.dim) {
            let n = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if n == 0.0 {
                zero_rows += 1;
                continue;
            }
            row.iter_mut().for_each(|v| *v = (*v as f64 / n) as f32);
        }
        out.meta.zero_rows = zero_rows;
        out.meta.unit_normalized = true;
        out
    }

    pub fn norm_stats(&self) -> NormStats {
        let mut stats = NormStats {
            min: f64::INFINITY,
            max: 0.0,
            mean: 0.0,
            zero_rows: 0,
        };
        for i in 0..self.len() {
            let n = linalg::norm(&self.row_f64(i));
            if n == 0.0 {
                stats.zero_rows += 1;
            }
            stats.min = stats.min.min(n);
            stats.max = stats.max.max(n);
            stats.mean += n;
        }
        stats.mean /= self.len() as f64;
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub zero_rows: usize,
}
