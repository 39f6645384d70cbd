//! Keyed score series and the averaged-vs-concatenated comparison.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AuditReport, Cell};
use crate::metrics::Metric;
use crate::stats::pearson;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("duplicate key {0:?} in series")]
    DuplicateKey(String),
    #[error("need at least 3 aligned defined values, found {0}")]
    TooFewAligned(usize),
    #[error("no (test, metric) cell is shared by the reports")]
    NoCommonCells,
    #[error("report covers cell {0} more than once")]
    AmbiguousCell(String),
}

/// Ordered `(key, value)` pairs with unique keys, e.g. one value per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub label: String,
    pub values: Vec<(String, Cell)>,
}

impl ScoreSeries {
    pub fn new(label: impl Into<String>, values: Vec<(String, Cell)>) -> Result<Self, SeriesError> {
        let mut seen = HashSet::new();
        for (k, _) in &values {
            if !seen.insert(k.as_str()) {
                return Err(SeriesError::DuplicateKey(k.clone()));
            }
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn from_values<K: Into<String>>(
        label: impl Into<String>,
        values: impl IntoIterator<Item = (K, f64)>,
    ) -> Result<Self, SeriesError> {
        Self::new(
            label,
            values.into_iter().map(|(k, v)| (k.into(), Cell::Defined(v))).collect(),
        )
    }

    pub fn get(&self, key: &str) -> Option<Cell> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// One value per report for a fixed (test, metric) cell, keyed by the
    /// caller's label (typically a year). Missing or failed cells are
    /// undefined.
    pub fn across_reports(
        label: impl Into<String>,
        reports: &[(String, &AuditReport)],
        test: &str,
        metric: Metric,
    ) -> Result<Self, SeriesError> {
        let values = reports
            .iter()
            .map(|(key, report)| {
                let cell = report
                    .rows
                    .iter()
                    .find(|r| r.test == test && r.metric == metric && !r.is_error())
                    .map_or(Cell::Undefined, |r| r.value);
                (key.clone(), cell)
            })
            .collect();
        Self::new(label, values)
    }
}

/// Pearson correlation over the keys both series define. `Ok(None)` when
/// one side is constant.
pub fn series_correlation(a: &ScoreSeries, b: &ScoreSeries) -> Result<Option<f64>, SeriesError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .values
        .iter()
        .filter_map(|(k, va)| Some((va.value()?, b.get(k)?.value()?)))
        .unzip();
    if xs.len() < 3 {
        return Err(SeriesError::TooFewAligned(xs.len()));
    }
    Ok(pearson(&xs, &ys))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgConc {
    pub avg: ScoreSeries,
    pub conc: ScoreSeries,
    pub correlation: Option<f64>,
}

fn cell_key(test: &str, metric: Metric) -> String {
    format!("{test}/{metric}")
}

/// Average each (test, metric) cell over `sub_reports` and correlate the
/// averages with the same cells of `conc_report`. Undefined and failed
/// values are left out of a cell's mean; significance is ignored.
pub fn avg_vs_conc(sub_reports: &[AuditReport], conc_report: &AuditReport) -> Result<AvgConc, SeriesError> {
    let mut conc_values: Vec<(String, Cell)> = Vec::new();
    for r in conc_report.rows.iter().filter(|r| !r.is_error()) {
        let key = cell_key(&r.test, r.metric);
        if conc_values.iter().any(|(k, _)| *k == key) {
            return Err(SeriesError::AmbiguousCell(key));
        }
        conc_values.push((key, r.value));
    }

    let mut avg_values = Vec::new();
    let mut shared = Vec::new();
    for (key, conc_cell) in conc_values {
        let mut present = false;
        let mut sum = 0.0;
        let mut n = 0usize;
        for row in sub_reports.iter().flat_map(|r| &r.rows) {
            if row.is_error() || cell_key(&row.test, row.metric) != key {
                continue;
            }
            present = true;
            if let Some(v) = row.value.value() {
                sum += v;
                n += 1;
            }
        }
        if !present {
            continue;
        }
        let mean = if n > 0 {
            Cell::Defined(sum / n as f64)
        } else {
            Cell::Undefined
        };
        avg_values.push((key.clone(), mean));
        shared.push((key, conc_cell));
    }
    if shared.is_empty() {
        return Err(SeriesError::NoCommonCells);
    }
    let avg = ScoreSeries::new("AVG", avg_values)?;
    let conc = ScoreSeries::new("CONC", shared)?;
    let correlation = series_correlation(&avg, &conc)?;
    Ok(AvgConc { avg, conc, correlation })
}
