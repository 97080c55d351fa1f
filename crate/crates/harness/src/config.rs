//! `key = value` configuration files and the experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pgss::simulate::SamplerChoice;
use pgss::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PGSS_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "pgss-output";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

/// Flat `key = value` file. `#` starts a comment; blank lines are skipped.
/// Keys use the long flag names (`a0`, `gamma`, `replicates`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: String,
    entries: BTreeMap<String, (u64, String)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(path: &str, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Parse {
                    path: path.into(),
                    line: line_no,
                    message: format!("expected key = value, got {line:?}"),
                });
            };
            let key = key.trim().replace('_', "-");
            if entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(HarnessError::Parse {
                    path: path.into(),
                    line: line_no,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(Self {
            path: path.into(),
            entries,
        })
    }

    /// Parsed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|e| HarnessError::Parse {
                path: self.path.clone(),
                line: *line,
                message: format!("invalid value {raw:?} for {key}: {e}"),
            }),
        }
    }

    /// Comma-separated list under `key`, if present.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => parse_list(raw).map(Some).map_err(|message| HarnessError::Parse {
                path: self.path.clone(),
                line: *line,
                message: format!("{key}: {message}"),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on the first key not in `allowed`, so typos are not ignored.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.iter().filter(|(k, _)| !allowed.contains(&k.as_str())).min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(HarnessError::Parse {
                path: self.path.clone(),
                line: *line,
                message: format!("unknown key {key:?}; expected one of {}", allowed.join(", ")),
            }),
        }
    }
}

pub fn parse_list<T: FromStr>(raw: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| format!("invalid list item {s:?}: {e}")))
        .collect()
}

/// Everything needed to reproduce one ensemble experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub a0: f64,
    pub b0: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub quantiles: Vec<f64>,
    pub histogram_horizons: Vec<usize>,
    pub sampler: SamplerChoice,
    pub output_dir: PathBuf,
    /// Worker threads for replicate-level parallelism; 0 uses all cores.
    /// Does not affect any output byte, so it is left out of the manifest.
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentConfig {
    /// The reference setting: `a0 = 6.5`, `b0 = 1.2`,
    /// `γ = 0.75`, 50000 replicates over 200 horizons.
    pub fn reference(seed: u64) -> Self {
        Self {
            a0: 6.5,
            b0: 1.2,
            gamma: 0.75,
            horizon: 200,
            replicates: 50_000,
            seed,
            quantiles: vec![0.1, 0.5, 0.9],
            histogram_horizons: vec![50, 200],
            sampler: SamplerChoice::Path,
            output_dir: default_output_dir(),
            threads: 0,
        }
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        Ok(ModelSpec::new(self.a0, self.b0, self.gamma)?)
    }

    pub fn validate(&self) -> Result<ModelSpec> {
        let spec = self.spec()?;
        if self.horizon == 0 {
            return Err(HarnessError::Usage("horizon must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(HarnessError::Usage("replicates must be at least 1".into()));
        }
        if let Some(q) = self.quantiles.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(HarnessError::Usage(format!("quantile {q} outside (0, 1)")));
        }
        if let Some(h) = self.histogram_horizons.iter().find(|h| **h == 0 || **h > self.horizon) {
            return Err(HarnessError::Usage(format!(
                "histogram horizon {h} outside 1..={}",
                self.horizon
            )));
        }
        Ok(spec)
    }
}
