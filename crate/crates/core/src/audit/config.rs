use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::embedding::{Format, LoadOptions, NormalizationPolicy};
use crate::metrics::{Metric, DEFAULT_ALPHA, DEFAULT_KM_RUNS, DEFAULT_MAX_PERMUTATIONS};
use crate::specs::{parse_spec_file, SpecError, SpecFile, DEFAULT_MIN_COVERAGE};

/// Where a spec file comes from: a path, or `bundled:en` / `bundled:msa`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum SpecSource {
    BundledEn,
    BundledMsa,
    Path(PathBuf),
}

impl From<String> for SpecSource {
    fn from(s: String) -> Self {
        match s.as_str() {
            "bundled:en" => SpecSource::BundledEn,
            "bundled:msa" => SpecSource::BundledMsa,
            _ => SpecSource::Path(PathBuf::from(s)),
        }
    }
}

impl From<SpecSource> for String {
    fn from(s: SpecSource) -> Self {
        s.to_string()
    }
}

impl fmt::Display for SpecSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecSource::BundledEn => f.write_str("bundled:en"),
            SpecSource::BundledMsa => f.write_str("bundled:msa"),
            SpecSource::Path(p) => write!(f, "{}", p.display()),
        }
    }
}

impl SpecSource {
    pub fn load(&self) -> Result<SpecFile, SpecError> {
        match self {
            SpecSource::BundledEn => Ok(SpecFile::bundled_en()),
            SpecSource::BundledMsa => Ok(SpecFile::bundled_msa()),
            SpecSource::Path(p) => parse_spec_file(p),
        }
    }
}

fn default_format() -> Format {
    Format::Text
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(flatten)]
    pub load: LoadOptions,
    #[serde(default)]
    pub unit_normalize: bool,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::W, Metric::Ect, Metric::Bat, Metric::Km]
}
fn default_min_coverage() -> f64 {
    DEFAULT_MIN_COVERAGE
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_permutations() -> u64 {
    DEFAULT_MAX_PERMUTATIONS
}
fn default_km_runs() -> u32 {
    DEFAULT_KM_RUNS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub spaces: Vec<SpaceConfig>,
    pub spec_files: Vec<SpecSource>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_min_coverage")]
    pub min_coverage: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_permutations")]
    pub permutations: u64,
    #[serde(default = "default_km_runs")]
    pub km_runs: u32,
    #[serde(default)]
    pub km_normalize: bool,
    #[serde(default)]
    pub sts_path: Option<PathBuf>,
}

impl AuditConfig {
    /// Config with defaults for everything but the inputs.
    pub fn new(spaces: Vec<SpaceConfig>, spec_files: Vec<SpecSource>) -> Self {
        Self {
            spaces,
            spec_files,
            metrics: default_metrics(),
            min_coverage: DEFAULT_MIN_COVERAGE,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            permutations: DEFAULT_MAX_PERMUTATIONS,
            km_runs: DEFAULT_KM_RUNS,
            km_normalize: false,
            sts_path: None,
        }
    }

    /// Read a JSON config; relative paths are taken relative to the config
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self, AuditError> {
        let src = std::fs::read_to_string(path).map_err(|source| AuditError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config: AuditConfig =
            serde_json::from_str(&src).map_err(|e| AuditError::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.spaces.iter_mut().for_each(|s| fix(&mut s.path));
        for src in &mut self.spec_files {
            if let SpecSource::Path(p) = src {
                fix(p);
            }
        }
        if let Some(p) = &mut self.sts_path {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        let bad = |msg: &str| Err(AuditError::Config(msg.to_owned()));
        if self.spaces.is_empty() {
            return bad("at least one space is required");
        }
        if self.spec_files.is_empty() {
            return bad("at least one spec file is required");
        }
        if self.metrics.is_empty() {
            return bad("no metrics requested");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return bad("min_coverage must lie in [0, 1]");
        }
        if self.km_runs == 0 {
            return bad("km_runs must be positive");
        }
        if self.metrics.contains(&Metric::Sts) && self.sts_path.is_none() {
            return bad("STS requested without sts_path");
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.spaces {
            if !names.insert(s.name.as_str()) {
                return Err(AuditError::Config(format!("duplicate space name {:?}", s.name)));
            }
        }
        Ok(())
    }

    pub(crate) fn space_policy(&self, name: &str) -> NormalizationPolicy {
        self.spaces
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.load.policy)
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let src = r#"{"spaces":[{"name":"ft","path":"ft.vec"}],"spec_files":["bundled:en","specs/ar.json"]}"#;
        let c: AuditConfig = serde_json::from_str(src).unwrap();
        assert_eq!(c.metrics, default_metrics());
        assert_eq!(c.min_coverage, 0.2);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.km_runs, 20);
        assert_eq!(c.permutations, 100_000);
        assert_eq!(c.spaces[0].format, Format::Text);
        assert_eq!(c.spaces[0].load.policy, NormalizationPolicy::default());
        assert_eq!(c.spec_files[0], SpecSource::BundledEn);
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_json() {
        let src = r#"{"spaces":[{"name":"ft","path":"ft.bin","format":"binary","limit":1000,"strict":true,"policy":{"normalize_alef":true}}],"spec_files":["bundled:msa"],"metrics":["W","KM","STS"],"sts_path":"sts.tsv","seed":7}"#;
        let c: AuditConfig = serde_json::from_str(src).unwrap();
        assert_eq!(c.spaces[0].load.limit, Some(1000));
        assert!(c.spaces[0].load.policy.normalize_alef);
        assert!(c.spaces[0].load.policy.strip_diacritics);
        let back: AuditConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_errors() {
        let space = SpaceConfig {
            name: "a".into(),
            path: "a.vec".into(),
            format: Format::Text,
            load: LoadOptions::default(),
            unit_normalize: false,
        };
        let mut c = AuditConfig::new(vec![space.clone()], vec![SpecSource::BundledEn]);
        c.alpha = 1.0;
        assert!(c.validate().is_err());
        c.alpha = 0.05;
        c.metrics.push(Metric::Sts);
        assert!(c.validate().is_err());
        let c = AuditConfig::new(vec![space.clone(), space], vec![SpecSource::BundledEn]);
        assert!(c.validate().is_err());
        assert!(AuditConfig::new(vec![], vec![SpecSource::BundledEn])
            .validate()
            .is_err());
    }

    #[test]
    fn rebase_relative_paths() {
        let src = r#"{"spaces":[{"name":"ft","path":"ft.vec"},{"name":"abs","path":"/x/y.vec"}],"spec_files":["bundled:en","s.json"],"sts_path":"sts.tsv"}"#;
        let mut c: AuditConfig = serde_json::from_str(src).unwrap();
        c.rebase(Path::new("/cfg"));
        assert_eq!(c.spaces[0].path, PathBuf::from("/cfg/ft.vec"));
        assert_eq!(c.spaces[1].path, PathBuf::from("/x/y.vec"));
        assert_eq!(c.spec_files[1], SpecSource::Path("/cfg/s.json".into()));
        assert_eq!(c.sts_path, Some(PathBuf::from("/cfg/sts.tsv")));
    }
}
