//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::backend::MockBackend;
use super::{BenchmarkKind, HarnessError};
use crate::formats::{ChoiceStyle, Family, FormatOptions, RealRange, Treatments, Variant};

/// Environment variable overriding `backend.endpoint`.
pub const ENDPOINT_ENV: &str = "GCD_AUDIT_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Items drawn from each benchmark; all items when absent.
    pub sample_size: Option<usize>,
    /// Generations per cell.
    #[serde(default = "one")]
    pub repeats: u32,
    /// Worker-pool width; overridden by `--jobs`.
    pub jobs: Option<usize>,
    #[serde(default)]
    pub skip_bad: bool,
    pub model: ModelTag,
    pub benchmarks: Vec<BenchmarkSource>,
    #[serde(default)]
    pub grid: GridConfig,
    pub backend: BackendConfig,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTag {
    pub name: String,
    #[serde(default)]
    pub family: String,
    /// Size class, e.g. `small` or `large`.
    #[serde(default)]
    pub size: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSource {
    pub kind: BenchmarkKind,
    pub path: PathBuf,
    /// Name used in records; defaults to the kind.
    pub name: Option<String>,
}

impl BenchmarkSource {
    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub families: Vec<Family>,
    pub variants: Vec<Variant>,
    /// `none`, `space`, `newline` or `space+newline`.
    pub treatments: Vec<String>,
    pub choice_styles: Vec<ChoiceStyle>,
    pub integer_max: u32,
    pub real_range: RealRange,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            families: Family::ALL.to_vec(),
            variants: Variant::ALL.to_vec(),
            treatments: ["none", "space", "newline", "space+newline"]
                .map(String::from)
                .to_vec(),
            choice_styles: ChoiceStyle::ALL.to_vec(),
            integer_max: FormatOptions::default().integer_max,
            real_range: RealRange::default(),
        }
    }
}

impl GridConfig {
    pub fn options(&self) -> FormatOptions {
        FormatOptions {
            integer_max: self.integer_max,
            real_range: self.real_range,
        }
    }

    pub fn parsed_treatments(&self) -> Result<Vec<Treatments>, HarnessError> {
        let mut out: Vec<Treatments> = Vec::new();
        for t in &self.treatments {
            let t: Treatments = t.parse().map_err(HarnessError::Config)?;
            if !out.contains(&t) {
                out.push(t);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Completion URL, e.g. `http://127.0.0.1:8080/completion`.
    pub endpoint: Option<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    /// Server context length; recorded, not sent.
    #[serde(default = "default_context")]
    pub context_length: u32,
    /// Token cap per generation; must cover every format's budget.
    pub max_tokens: Option<u32>,
    /// Tokenizer used to compute exact token budgets.
    pub vocab: Option<PathBuf>,
    #[serde(default)]
    pub prompt_prefix: String,
    #[serde(default)]
    pub prompt_suffix: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub mock: MockBackend,
}

fn default_context() -> u32 {
    512
}

fn default_timeout() -> u64 {
    60
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        for b in &mut self.benchmarks {
            fix(&mut b.path);
        }
        if let Some(v) = &mut self.backend.vocab {
            fix(v);
        }
    }

    /// Applies `GCD_AUDIT_ENDPOINT` when set.
    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(ENDPOINT_ENV) {
            if !url.is_empty() {
                self.backend.endpoint = Some(url);
            }
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.run_id.trim().is_empty() {
            return bad("run_id is empty".into());
        }
        if self.benchmarks.is_empty() {
            return bad("no benchmarks configured".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.sample_size == Some(0) {
            return bad("sample_size must be positive".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        let mut names: Vec<String> = self.benchmarks.iter().map(|b| b.name()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("benchmark names must be distinct".into());
        }
        if !(1..=100).contains(&self.grid.integer_max) {
            return bad(format!("integer_max {} outside 1..=100", self.grid.integer_max));
        }
        self.grid.parsed_treatments()?;
        if self.backend.kind == BackendKind::Http
            && self.backend.endpoint.is_none()
            && std::env::var(ENDPOINT_ENV).is_err()
        {
            return bad(format!("http backend needs `endpoint` or {ENDPOINT_ENV}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"
run_id = "t"
output = "out.jsonl"

[model]
name = "toy"

[[benchmarks]]
kind = "stsb"
path = "sts.tsv"

[backend]
kind = "mock"
"#;

    #[test]
    fn defaults() {
        let c = RunConfig::from_toml_str(MIN).unwrap();
        assert_eq!(c.repeats, 1);
        assert_eq!(c.grid.families.len(), 5);
        assert_eq!(c.grid.parsed_treatments().unwrap().len(), 4);
        assert_eq!(c.grid.integer_max, 10);
        assert_eq!(c.backend.context_length, 512);
        assert_eq!(c.backend.mock.target_rho, 1.0);
    }

    #[test]
    fn grid_options_are_flat_keys() {
        let text = format!(
            "{MIN}\n[grid]\nfamilies = [\"likert\"]\ntreatments = [\"none\"]\ninteger_max = 5\nreal_range = \"tenths\"\n"
        );
        let c = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.grid.families, vec![Family::Likert]);
        assert_eq!(c.grid.integer_max, 5);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml_str(&format!("{MIN}\nbogus = 1\n")).is_err());
        let t = MIN.replace("kind = \"mock\"", "kind = \"mock\"\n[grid]\ntreatments = [\"tab\"]");
        assert!(RunConfig::from_toml_str(&t).is_err());
    }
}
