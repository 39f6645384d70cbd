//! Audit reports and their JSON, CSV and markdown renderings.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::{AuditConfig, AuditError};
use crate::metrics::Metric;

const UNDEFINED: &str = "n/a";

/// A metric value, or the undefined marker (rendered `n/a` everywhere).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Defined(f64),
    Undefined,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Cell::Defined(v) => Some(v),
            Cell::Undefined => None,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(v) if v.is_finite() => Cell::Defined(v),
            _ => Cell::Undefined,
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Defined(v) => s.serialize_f64(*v),
            Cell::Undefined => s.serialize_str(UNDEFINED),
        }
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Cell::Defined(v)),
            Raw::Str(s) if s == UNDEFINED => Ok(Cell::Undefined),
            Raw::Str(s) => Err(de::Error::custom(format!("expected a number or \"n/a\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    BelowCoverage,
    Truncated,
    Undefined,
    Error,
}

impl Flag {
    fn as_str(&self) -> &'static str {
        match self {
            Flag::BelowCoverage => "below_coverage",
            Flag::Truncated => "truncated",
            Flag::Undefined => "undefined",
            Flag::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub space: String,
    pub test: String,
    pub metric: Metric,
    pub value: Cell,
    pub p_value: Option<f64>,
    /// Only set on WEAT rows.
    pub significant: Option<bool>,
    /// Smallest per-set coverage of the resolved test.
    pub coverage: Option<f64>,
    pub flags: Vec<Flag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub aux: serde_json::Value,
}

impl ReportRow {
    pub fn is_error(&self) -> bool {
        self.flags.contains(&Flag::Error)
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub created_at: String,
    pub config_echo: AuditConfig,
    pub rows: Vec<ReportRow>,
    /// Spaces that could not be loaded.
    #[serde(default)]
    pub failed_spaces: Vec<String>,
}

impl AuditReport {
    pub fn all_spaces_failed(&self) -> bool {
        !self.config_echo.spaces.is_empty() && self.failed_spaces.len() == self.config_echo.spaces.len()
    }

    pub fn from_json(src: &str) -> Result<Self, AuditError> {
        serde_json::from_str(src).map_err(|e| AuditError::Report(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let src = std::fs::read_to_string(path).map_err(|source| AuditError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn find(&self, space: &str, test: &str, metric: Metric) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.space == space && r.test == test && r.metric == metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn render_csv(report: &AuditReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "space",
        "test",
        "metric",
        "value",
        "p_value",
        "significant",
        "coverage",
        "flags",
        "error",
    ])
    .expect("write to memory");
    for r in &report.rows {
        let value = match r.value {
            Cell::Defined(v) => v.to_string(),
            Cell::Undefined => UNDEFINED.to_owned(),
        };
        let flags: Vec<&str> = r.flags.iter().map(Flag::as_str).collect();
        w.write_record([
            r.space.as_str(),
            r.test.as_str(),
            r.metric.as_str(),
            &value,
            &fmt_opt(r.p_value),
            &r.significant.map(|s| s.to_string()).unwrap_or_default(),
            &fmt_opt(r.coverage),
            &flags.join(";"),
            r.error.as_deref().unwrap_or(""),
        ])
        .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

/// Text of one grid cell: two decimals, `*` on insignificant WEAT values,
/// `†` on tests below the coverage threshold.
fn grid_cell(row: &ReportRow) -> String {
    if row.is_error() {
        return "err".to_owned();
    }
    let mut s = match row.value {
        Cell::Defined(v) => format!("{v:.2}"),
        Cell::Undefined => UNDEFINED.to_owned(),
    };
    if row.significant == Some(false) && row.value != Cell::Undefined {
        s.push('*');
    }
    if row.has(Flag::BelowCoverage) {
        s.push('†');
    }
    s
}

/// One line per space, one column per (test, metric) in first-seen order.
pub fn render_markdown(report: &AuditReport) -> String {
    let mut columns: Vec<(&str, Metric)> = Vec::new();
    let mut spaces: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !columns.contains(&(r.test.as_str(), r.metric)) {
            columns.push((r.test.as_str(), r.metric));
        }
        if !spaces.contains(&r.space.as_str()) {
            spaces.push(&r.space);
        }
    }
    let mut out = String::new();
    out.push_str("| Space |");
    for (test, metric) in &columns {
        if *metric == Metric::Sts {
            out.push_str(" STS |");
        } else {
            let _ = write!(out, " {test} {metric} |");
        }
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(columns.len()));
    out.push('\n');
    for space in &spaces {
        let _ = write!(out, "| {space} |");
        for &(test, metric) in &columns {
            let cell = report
                .find(space, test, metric)
                .map(grid_cell)
                .unwrap_or_else(|| "-".to_owned());
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    let _ = write!(
        out,
        "\n`*` WEAT effect not significant at α = {}. `†` below {} term coverage. `n/a` undefined.\n",
        report.config_echo.alpha, report.config_echo.min_coverage
    );
    let errors: Vec<&ReportRow> = report.rows.iter().filter(|r| r.is_error()).collect();
    if !errors.is_empty() {
        out.push_str("\nErrors:\n");
        for r in errors {
            let _ = writeln!(
                out,
                "- {} / {} / {}: {}",
                r.space,
                r.test,
                r.metric,
                r.error.as_deref().unwrap_or("")
            );
        }
    }
    out
}

pub fn emit_report(report: &AuditReport, format: ReportFormat, path: &Path) -> Result<(), AuditError> {
    let body = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
    };
    std::fs::write(path, body).map_err(|source| AuditError::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{SpaceConfig, SpecSource};
    use crate::embedding::{Format, LoadOptions};

    fn row(test: &str, metric: Metric, value: Cell, p: Option<f64>) -> ReportRow {
        ReportRow {
            space: "ft".into(),
            test: test.into(),
            metric,
            value,
            p_value: p,
            significant: p.map(|p| p < 0.05),
            coverage: Some(1.0),
            flags: if value == Cell::Undefined {
                vec![Flag::Undefined]
            } else {
                vec![]
            },
            error: None,
            aux: serde_json::Value::Null,
        }
    }

    fn report() -> AuditReport {
        let space = SpaceConfig {
            name: "ft".into(),
            path: "ft.vec".into(),
            format: Format::Text,
            load: LoadOptions::default(),
            unit_normalize: false,
        };
        AuditReport {
            created_at: "2020-01-01T00:00:00Z".into(),
            config_echo: AuditConfig::new(vec![space], vec![SpecSource::BundledEn]),
            rows: vec![
                row("weat1", Metric::W, Cell::Defined(0.41), Some(0.3)),
                row("weat1", Metric::Ect, Cell::Undefined, None),
                row("weat1", Metric::Bat, Cell::Defined(0.5), None),
            ],
            failed_spaces: vec![],
        }
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        assert_eq!(AuditReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn undefined_is_na_everywhere() {
        let r = report();
        assert!(r.to_json().contains("\"value\": \"n/a\""));
        assert!(render_csv(&r).contains("weat1,ECT,n/a"));
        assert!(render_markdown(&r).contains("| n/a |"));
    }

    #[test]
    fn insignificant_weat_gets_asterisk() {
        let md = render_markdown(&report());
        assert!(md.contains("| 0.41* |"), "{md}");
        assert!(md.contains("| 0.50 |"));
        assert!(md.starts_with("| Space | weat1 W | weat1 ECT | weat1 BAT |"));
    }

    #[test]
    fn significant_weat_has_no_asterisk() {
        let mut r = report();
        r.rows[0].p_value = Some(0.01);
        r.rows[0].significant = Some(true);
        assert!(render_markdown(&r).contains("| 0.41 |"));
    }

    #[test]
    fn cell_rejects_other_strings() {
        assert!(serde_json::from_str::<Cell>("\"nan\"").is_err());
        assert_eq!(serde_json::from_str::<Cell>("1.5").unwrap(), Cell::Defined(1.5));
    }

    #[test]
    fn format_names() {
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
