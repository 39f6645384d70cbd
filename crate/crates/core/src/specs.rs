//! Bias test specifications: parsing, validation, bundled data and
//! vocabulary resolution.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingSpace, LookupStatus, NormalizationPolicy};

/// Default coverage below which a resolved test is flagged.
pub const DEFAULT_MIN_COVERAGE: f64 = 0.2;

/// English WEAT tests 1, 2, 7, 8 and 9.
pub const BUNDLED_EN: &str = include_str!("../data/weat_en.json");
/// Modern Standard Arabic translation of WEAT test 7.
pub const BUNDLED_MSA: &str = include_str!("../data/araweat_msa.json");

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid spec document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported spec file version {0}")]
    Version(u32),
    #[error("duplicate spec id {0:?}")]
    DuplicateId(String),
    #[error("spec {id}: overlapping term sets {left} and {right} share {term:?}")]
    Overlap {
        id: String,
        left: SetLabel,
        right: SetLabel,
        term: String,
    },
    #[error("spec {id}: empty set {set}")]
    EmptySet { id: String, set: SetLabel },
    #[error("spec {id}: implicit specification must not carry attribute terms")]
    ImplicitWithAttributes { id: String },
    #[error("spec {id}: no term of {set} resolved in the vocabulary")]
    NothingResolved { id: String, set: SetLabel },
    #[error("min_coverage must lie in [0, 1], got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetLabel {
    T1,
    T2,
    A1,
    A2,
}

impl fmt::Display for SetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetLabel::T1 => "T1",
            SetLabel::T2 => "T2",
            SetLabel::A1 => "A1",
            SetLabel::A2 => "A2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasSpecification {
    pub id: String,
    pub kind: SpecKind,
    pub bias_type: String,
    pub lang: String,
    pub t1: Vec<String>,
    pub t2: Vec<String>,
    #[serde(default)]
    pub a1: Vec<String>,
    #[serde(default)]
    pub a2: Vec<String>,
}

impl BiasSpecification {
    pub fn set(&self, label: SetLabel) -> &[String] {
        match label {
            SetLabel::T1 => &self.t1,
            SetLabel::T2 => &self.t2,
            SetLabel::A1 => &self.a1,
            SetLabel::A2 => &self.a2,
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == SpecKind::Explicit
    }

    /// Labels of the sets that take part in this kind of test.
    pub fn active_sets(&self) -> &'static [SetLabel] {
        match self.kind {
            SpecKind::Explicit => &[SetLabel::T1, SetLabel::T2, SetLabel::A1, SetLabel::A2],
            SpecKind::Implicit => &[SetLabel::T1, SetLabel::T2],
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let id = || self.id.clone();
        for &set in &[SetLabel::T1, SetLabel::T2] {
            if self.set(set).is_empty() {
                return Err(SpecError::EmptySet { id: id(), set });
            }
        }
        match self.kind {
            SpecKind::Explicit => {
                for &set in &[SetLabel::A1, SetLabel::A2] {
                    if self.set(set).is_empty() {
                        return Err(SpecError::EmptySet { id: id(), set });
                    }
                }
            }
            SpecKind::Implicit => {
                if !self.a1.is_empty() || !self.a2.is_empty() {
                    return Err(SpecError::ImplicitWithAttributes { id: id() });
                }
            }
        }
        for (left, right) in [(SetLabel::T1, SetLabel::T2), (SetLabel::A1, SetLabel::A2)] {
            let seen: HashSet<&str> = self.set(left).iter().map(String::as_str).collect();
            if let Some(term) = self.set(right).iter().find(|t| seen.contains(t.as_str())) {
                return Err(SpecError::Overlap {
                    id: id(),
                    left,
                    right,
                    term: term.clone(),
                });
            }
        }
        Ok(())
    }

    /// Targets-only view of the test. Idempotent.
    pub fn to_implicit(&self) -> BiasSpecification {
        BiasSpecification {
            kind: SpecKind::Implicit,
            a1: Vec::new(),
            a2: Vec::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecFile {
    pub version: u32,
    pub specs: Vec<BiasSpecification>,
}

impl SpecFile {
    pub fn parse_str(src: &str) -> Result<Self, SpecError> {
        let file: SpecFile = serde_json::from_str(src)?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.version != 1 {
            return Err(SpecError::Version(self.version));
        }
        let mut ids = HashSet::new();
        for spec in &self.specs {
            if !ids.insert(spec.id.as_str()) {
                return Err(SpecError::DuplicateId(spec.id.clone()));
            }
            spec.validate()?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&BiasSpecification> {
        self.specs.iter().find(|s| s.id == id)
    }

    pub fn bundled_en() -> Self {
        Self::parse_str(BUNDLED_EN).expect("bundled English specs are valid")
    }

    pub fn bundled_msa() -> Self {
        Self::parse_str(BUNDLED_MSA).expect("bundled MSA specs are valid")
    }
}

pub fn parse_spec_file(path: &Path) -> Result<SpecFile, SpecError> {
    let src = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.to_owned(),
        source,
    })?;
    SpecFile::parse_str(&src)
}

/// Resolved fraction of one term set, kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub resolved: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.resolved as f64 / self.total as f64
        }
    }

    /// `resolved / total < threshold`, decided in integer arithmetic.
    pub fn is_below(&self, threshold: CoverageThreshold) -> bool {
        (self.resolved as u128) * 1_000_000 < (threshold.0 as u128) * (self.total as u128)
    }
}

/// Coverage threshold quantized to parts per million so the flagging rule is
/// exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageThreshold(u32);

impl CoverageThreshold {
    pub fn new(fraction: f64) -> Result<Self, SpecError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(SpecError::BadThreshold(fraction));
        }
        Ok(Self((fraction * 1_000_000.0).round() as u32))
    }

    pub fn fraction(&self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTerm {
    pub term: String,
    pub status: LookupStatus,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedTerm {
    pub term: String,
    pub set: SetLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCoverage {
    pub t1: Coverage,
    pub t2: Coverage,
    pub a1: Coverage,
    pub a2: Coverage,
}

impl SetCoverage {
    pub fn get(&self, label: SetLabel) -> Coverage {
        match label {
            SetLabel::T1 => self.t1,
            SetLabel::T2 => self.t2,
            SetLabel::A1 => self.a1,
            SetLabel::A2 => self.a2,
        }
    }
}

/// A specification after vocabulary resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSpec {
    pub spec: BiasSpecification,
    pub t1v: Vec<ResolvedTerm>,
    pub t2v: Vec<ResolvedTerm>,
    pub a1v: Vec<ResolvedTerm>,
    pub a2v: Vec<ResolvedTerm>,
    /// Out-of-vocabulary terms.
    pub dropped: Vec<DroppedTerm>,
    pub coverage: SetCoverage,
    /// Resolved target terms removed to equalize |T1| and |T2|.
    pub truncation: Vec<DroppedTerm>,
    pub below_threshold: bool,
}

impl ResolvedSpec {
    pub fn terms(&self, label: SetLabel) -> &[ResolvedTerm] {
        match label {
            SetLabel::T1 => &self.t1v,
            SetLabel::T2 => &self.t2v,
            SetLabel::A1 => &self.a1v,
            SetLabel::A2 => &self.a2v,
        }
    }

    pub fn vectors(&self, label: SetLabel) -> Vec<&[f64]> {
        self.terms(label).iter().map(|t| t.vector.as_slice()).collect()
    }

    pub fn is_explicit(&self) -> bool {
        self.spec.is_explicit()
    }

    /// Smallest coverage fraction across the sets the test uses.
    pub fn min_coverage(&self) -> f64 {
        self.spec
            .active_sets()
            .iter()
            .map(|&s| self.coverage.get(s).fraction())
            .fold(1.0, f64::min)
    }

    /// Targets-only view; attribute data is discarded.
    pub fn to_implicit(&self) -> ResolvedSpec {
        let mut out = self.clone();
        out.spec = self.spec.to_implicit();
        out.a1v.clear();
        out.a2v.clear();
        out.dropped.retain(|d| matches!(d.set, SetLabel::T1 | SetLabel::T2));
        out.coverage.a1 = Coverage { resolved: 0, total: 0 };
        out.coverage.a2 = Coverage { resolved: 0, total: 0 };
        out
    }

    /// Build a fully resolved spec straight from vectors. Terms are named
    /// `<set><index>`, coverage is complete and the target sets are balanced
    /// by the same tail-truncation rule as [`resolve`].
    pub fn from_vectors(
        id: &str,
        t1: Vec<Vec<f64>>,
        t2: Vec<Vec<f64>>,
        a1: Vec<Vec<f64>>,
        a2: Vec<Vec<f64>>,
    ) -> ResolvedSpec {
        let named = |label: SetLabel, vs: Vec<Vec<f64>>| -> Vec<ResolvedTerm> {
            vs.into_iter()
                .enumerate()
                .map(|(i, vector)| ResolvedTerm {
                    term: format!("{}_{i}", label.to_string().to_lowercase()),
                    status: LookupStatus::Exact,
                    vector,
                })
                .collect()
        };
        let sets = [
            named(SetLabel::T1, t1),
            named(SetLabel::T2, t2),
            named(SetLabel::A1, a1),
            named(SetLabel::A2, a2),
        ];
        let kind = if sets[2].is_empty() && sets[3].is_empty() {
            SpecKind::Implicit
        } else {
            SpecKind::Explicit
        };
        let terms = |i: usize| sets[i].iter().map(|t| t.term.clone()).collect::<Vec<_>>();
        let spec = BiasSpecification {
            id: id.to_owned(),
            kind,
            bias_type: "fixture".into(),
            lang: "xx".into(),
            t1: terms(0),
            t2: terms(1),
            a1: terms(2),
            a2: terms(3),
        };
        let full = |i: usize| Coverage {
            resolved: sets[i].len(),
            total: sets[i].len(),
        };
        let coverage = SetCoverage {
            t1: full(0),
            t2: full(1),
            a1: full(2),
            a2: full(3),
        };
        let [mut t1v, mut t2v, a1v, a2v] = sets;
        let truncation = balance(&mut t1v, &mut t2v);
        ResolvedSpec {
            spec,
            t1v,
            t2v,
            a1v,
            a2v,
            dropped: Vec::new(),
            coverage,
            truncation,
            below_threshold: false,
        }
    }

    /// Same spec with T1 and T2 exchanged.
    pub fn swap_targets(&self) -> ResolvedSpec {
        let mut out = self.clone();
        std::mem::swap(&mut out.t1v, &mut out.t2v);
        std::mem::swap(&mut out.spec.t1, &mut out.spec.t2);
        std::mem::swap(&mut out.coverage.t1, &mut out.coverage.t2);
        out
    }

    /// Same spec with A1 and A2 exchanged.
    pub fn swap_attributes(&self) -> ResolvedSpec {
        let mut out = self.clone();
        std::mem::swap(&mut out.a1v, &mut out.a2v);
        std::mem::swap(&mut out.spec.a1, &mut out.spec.a2);
        std::mem::swap(&mut out.coverage.a1, &mut out.coverage.a2);
        out
    }

    /// Apply `f` to every vector.
    pub fn map_vectors(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> ResolvedSpec {
        let mut out = self.clone();
        for set in [&mut out.t1v, &mut out.t2v, &mut out.a1v, &mut out.a2v] {
            for t in set.iter_mut() {
                t.vector = f(&t.vector);
            }
        }
        out
    }
}

/// Tail-truncate the larger target set; returns the removed terms.
fn balance(t1v: &mut Vec<ResolvedTerm>, t2v: &mut Vec<ResolvedTerm>) -> Vec<DroppedTerm> {
    let n = t1v.len().min(t2v.len());
    let mut removed = Vec::new();
    for (set, label) in [(t1v, SetLabel::T1), (t2v, SetLabel::T2)] {
        removed.extend(set.drain(n..).map(|t| DroppedTerm {
            term: t.term,
            set: label,
        }));
    }
    removed
}

/// Resolve every term of `spec` against `space`.
pub fn resolve(
    spec: &BiasSpecification,
    space: &EmbeddingSpace,
    policy: &NormalizationPolicy,
    min_coverage: f64,
) -> Result<ResolvedSpec, SpecError> {
    let threshold = CoverageThreshold::new(min_coverage)?;
    let mut dropped = Vec::new();
    let mut resolve_set = |label: SetLabel| -> (Vec<ResolvedTerm>, Coverage) {
        let terms = spec.set(label);
        let mut out = Vec::with_capacity(terms.len());
        for term in terms {
            let hit = space.lookup(term, policy);
            match hit.vector {
                Some(vector) => out.push(ResolvedTerm {
                    term: term.clone(),
                    status: hit.status,
                    vector,
                }),
                None => dropped.push(DroppedTerm {
                    term: term.clone(),
                    set: label,
                }),
            }
        }
        let coverage = Coverage {
            resolved: out.len(),
            total: terms.len(),
        };
        (out, coverage)
    };
    let (mut t1v, c1) = resolve_set(SetLabel::T1);
    let (mut t2v, c2) = resolve_set(SetLabel::T2);
    let (a1v, ca1) = resolve_set(SetLabel::A1);
    let (a2v, ca2) = resolve_set(SetLabel::A2);
    let coverage = SetCoverage {
        t1: c1,
        t2: c2,
        a1: ca1,
        a2: ca2,
    };

    for &set in spec.active_sets() {
        let c = coverage.get(set);
        if c.resolved == 0 {
            return Err(SpecError::NothingResolved {
                id: spec.id.clone(),
                set,
            });
        }
    }
    let below_threshold = spec.active_sets().iter().any(|&s| coverage.get(s).is_below(threshold));
    if !dropped.is_empty() {
        log::debug!("{}: {} terms out of vocabulary", spec.id, dropped.len());
    }
    let truncation = balance(&mut t1v, &mut t2v);
    Ok(ResolvedSpec {
        spec: spec.clone(),
        t1v,
        t2v,
        a1v,
        a2v,
        dropped,
        coverage,
        truncation,
        below_threshold,
    })
}
