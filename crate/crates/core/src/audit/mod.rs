//! Batch audits over many embedding spaces and bias tests.

mod config;
mod report;
mod series;

use std::collections::HashSet;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{AuditConfig, SpaceConfig, SpecSource};
pub use report::{emit_report, render_csv, render_markdown, AuditReport, Cell, Flag, ReportFormat, ReportRow};
pub use series::{avg_vs_conc, series_correlation, AvgConc, ScoreSeries, SeriesError};

use crate::embedding::{self, EmbeddingSpace};
use crate::metrics::{self, KmOptions, Metric, MetricError, MetricScore};
use crate::specs::{self, BiasSpecification, ResolvedSpec, SpecError};
use crate::sts::{self, StsError, StsPair};

/// Test label used for the per-space semantic quality row.
pub const STS_TEST: &str = "STS";

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Sts(#[from] StsError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report: {0}")]
    Report(String),
}

/// 64-bit FNV-1a over the parts, separated by 0xff bytes.
fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in part.iter().chain(&[0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Seed for one (space, test, metric) cell, independent of which other
/// spaces or tests are configured.
pub fn derive_seed(base: u64, space: &str, test: &str, metric: Metric) -> u64 {
    fnv1a(&[
        &base.to_le_bytes(),
        space.as_bytes(),
        test.as_bytes(),
        metric.as_str().as_bytes(),
    ])
}

struct Plan<'a> {
    config: &'a AuditConfig,
    specs: Vec<BiasSpecification>,
    sts_pairs: Option<Vec<StsPair>>,
    km: KmOptions,
}

fn load_specs(config: &AuditConfig) -> Result<Vec<BiasSpecification>, AuditError> {
    let mut specs = Vec::new();
    let mut ids = HashSet::new();
    for source in &config.spec_files {
        for spec in source.load()?.specs {
            if !ids.insert(spec.id.clone()) {
                return Err(SpecError::DuplicateId(spec.id).into());
            }
            specs.push(spec);
        }
    }
    Ok(specs)
}

fn bias_metrics(config: &AuditConfig) -> impl Iterator<Item = Metric> + '_ {
    config.metrics.iter().copied().filter(|&m| m != Metric::Sts)
}

fn error_row(space: &str, test: &str, metric: Metric, error: String) -> ReportRow {
    ReportRow {
        space: space.to_owned(),
        test: test.to_owned(),
        metric,
        value: Cell::Undefined,
        p_value: None,
        significant: None,
        coverage: None,
        flags: vec![Flag::Error],
        error: Some(error),
        aux: serde_json::Value::Null,
    }
}

fn score_row(space: &str, rs: &ResolvedSpec, score: MetricScore) -> ReportRow {
    let mut flags = Vec::new();
    if rs.below_threshold {
        flags.push(Flag::BelowCoverage);
    }
    if !rs.truncation.is_empty() {
        flags.push(Flag::Truncated);
    }
    if score.value.is_none() {
        flags.push(Flag::Undefined);
    }
    ReportRow {
        space: space.to_owned(),
        test: rs.spec.id.clone(),
        metric: score.metric,
        value: score.value.into(),
        p_value: score.significance,
        significant: None,
        coverage: Some(rs.min_coverage()),
        flags,
        error: None,
        aux: score.aux,
    }
}

impl Plan<'_> {
    fn evaluate(&self, space: &EmbeddingSpace, rs: &ResolvedSpec, metric: Metric) -> Result<ReportRow, MetricError> {
        let cfg = self.config;
        let seed = derive_seed(cfg.seed, space.name(), &rs.spec.id, metric);
        let score = match metric {
            Metric::W => {
                let w = metrics::weat(rs, cfg.permutations, seed)?;
                let mut score = MetricScore::new(Metric::W, w.effect_size);
                score.significance = Some(w.p_value);
                score.aux = serde_json::json!({
                    "statistic": w.statistic,
                    "permutations": w.permutations_used,
                    "exact": w.exact,
                });
                let mut row = score_row(space.name(), rs, score);
                row.significant = Some(w.is_significant(cfg.alpha));
                return Ok(row);
            }
            Metric::Ect => metrics::ect_score(rs)?,
            Metric::Bat => metrics::bat_score(rs)?,
            Metric::Km => metrics::km_accuracy(rs, seed, &self.km)?,
            Metric::Sts => unreachable!("STS is scored per space"),
        };
        Ok(score_row(space.name(), rs, score))
    }

    fn sts_row(&self, space: &EmbeddingSpace, pairs: &[StsPair]) -> ReportRow {
        let policy = self.config.space_policy(space.name());
        match sts::sts_pearson(pairs, space, &policy) {
            Ok(r) => ReportRow {
                space: space.name().to_owned(),
                test: STS_TEST.to_owned(),
                metric: Metric::Sts,
                value: r.pearson.into(),
                p_value: None,
                significant: None,
                coverage: Some(1.0 - r.n_empty as f64 / r.n_pairs as f64),
                flags: if r.pearson.is_none() {
                    vec![Flag::Undefined]
                } else {
                    vec![]
                },
                error: None,
                aux: serde_json::json!({ "n_pairs": r.n_pairs, "n_empty": r.n_empty }),
            },
            Err(e) => error_row(space.name(), STS_TEST, Metric::Sts, e.to_string()),
        }
    }

    /// Every row for one configured space, in config order.
    fn run_space(&self, sc: &SpaceConfig) -> (Vec<ReportRow>, Option<String>) {
        let cfg = self.config;
        let space = match embedding::load(&sc.path, sc.format, &sc.load) {
            Ok(s) => {
                let s = s.with_name(&sc.name);
                if sc.unit_normalize {
                    s.unit_normalize()
                } else {
                    s
                }
            }
            Err(e) => {
                let msg = format!("load failed: {e}");
                log::error!("{}: {msg}", sc.name);
                let mut rows = Vec::new();
                for spec in &self.specs {
                    for m in bias_metrics(cfg) {
                        rows.push(error_row(&sc.name, &spec.id, m, msg.clone()));
                    }
                }
                if self.sts_pairs.is_some() {
                    rows.push(error_row(&sc.name, STS_TEST, Metric::Sts, msg.clone()));
                }
                return (rows, Some(msg));
            }
        };
        log::info!("{}: {} tokens, dim {}", sc.name, space.len(), space.dim());

        let mut rows = Vec::new();
        for spec in &self.specs {
            match specs::resolve(spec, &space, &sc.load.policy, cfg.min_coverage) {
                Ok(rs) => {
                    for m in bias_metrics(cfg) {
                        rows.push(
                            self.evaluate(&space, &rs, m)
                                .unwrap_or_else(|e| error_row(&sc.name, &spec.id, m, e.to_string())),
                        );
                    }
                }
                Err(e) => {
                    for m in bias_metrics(cfg) {
                        rows.push(error_row(&sc.name, &spec.id, m, e.to_string()));
                    }
                }
            }
        }
        if let Some(pairs) = &self.sts_pairs {
            rows.push(self.sts_row(&space, pairs));
        }
        (rows, None)
    }
}

/// Load every space once, resolve every spec against it, and score each
/// requested metric. Spaces are processed in parallel; rows come back in
/// config order.
pub fn run_audit(config: &AuditConfig) -> Result<AuditReport, AuditError> {
    config.validate()?;
    let specs = load_specs(config)?;
    let sts_pairs = if config.metrics.contains(&Metric::Sts) {
        let path = config.sts_path.as_ref().expect("validated");
        Some(sts::load_pairs(path)?)
    } else {
        None
    };
    let plan = Plan {
        config,
        specs,
        sts_pairs,
        km: KmOptions {
            runs: config.km_runs,
            normalize: config.km_normalize,
            ..KmOptions::default()
        },
    };
    let per_space: Vec<(Vec<ReportRow>, Option<String>)> =
        config.spaces.par_iter().map(|sc| plan.run_space(sc)).collect();

    let mut rows = Vec::new();
    let mut failed_spaces = Vec::new();
    for (sc, (space_rows, failure)) in config.spaces.iter().zip(per_space) {
        rows.extend(space_rows);
        if failure.is_some() {
            failed_spaces.push(sc.name.clone());
        }
    }
    Ok(AuditReport {
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_echo: config.clone(),
        rows,
        failed_spaces,
    })
}
