//! Run configuration: one flat `key = value` file capturing every knob of a
//! pipeline run, so a run can be reproduced from a single artifact. Values
//! resolve in three layers: built-in defaults, then the `--config` file,
//! then command-line flags / `LOGCLEANER_*` environment variables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use logcleaner_core::artifact;
use logcleaner_core::detectors::ModelKind;
use logcleaner_core::ingest::DatasetFormat;
use logcleaner_core::profiler::ProfileConfig;
use logcleaner_core::study::StudyConfig;
use logcleaner_core::template_miner::MinerConfig;

use crate::error::{CliError, Result};

/// Grouping policy: one group per session key, or fixed-size windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowPolicy {
    Session,
    Fixed(usize),
}

impl WindowPolicy {
    pub fn parse(s: &str) -> Result<WindowPolicy> {
        if s == "session" {
            return Ok(WindowPolicy::Session);
        }
        let n: usize = s
            .parse()
            .map_err(|_| CliError::usage(format!("window must be `session` or a positive integer, got `{s}`")))?;
        if n == 0 {
            return Err(CliError::usage("window size must be positive"));
        }
        Ok(WindowPolicy::Fixed(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Dataset family: `hdfs`, `bgl`, `thunderbird`, `generic`, or
    /// `custom:<regex with (?P<content>...)>`.
    pub format: String,
    pub log: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// `per-line` (alert tag in the first column) or `per-session`
    /// (`key,label` CSV table).
    pub label_kind: String,
    pub session_regex: String,
    /// `session` or a fixed window size.
    pub window: String,
    pub miner_depth: usize,
    pub miner_similarity: f64,
    pub miner_max_children: usize,
    pub model: String,
    pub seed: u64,
    pub alpha: f64,
    pub cutoff: f64,
    pub theta_anti: f64,
    pub theta_dup: usize,
    pub xi: f64,
    pub split_ratio: f64,
    pub line_limit: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format: "generic".into(),
            log: None,
            labels: None,
            label_kind: "per-session".into(),
            session_regex: r"blk_\d+".into(),
            window: "session".into(),
            miner_depth: 4,
            miner_similarity: 0.5,
            miner_max_children: 100,
            model: "tree".into(),
            seed: 42,
            alpha: 0.02,
            cutoff: 0.1,
            theta_anti: 0.0,
            theta_dup: 2,
            xi: 0.05,
            split_ratio: 0.8,
            line_limit: None,
        }
    }
}

impl RunConfig {
    /// Serializes every setting, keys sorted, optional keys only when set.
    /// `parse(to_file_string(c)) == c` for any valid config.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("config"));
        out.push('\n');
        let mut kv: Vec<(&str, String)> = vec![
            ("alpha", artifact::fmt_f64(self.alpha)),
            ("cutoff", artifact::fmt_f64(self.cutoff)),
            ("format", self.format.clone()),
            ("label_kind", self.label_kind.clone()),
            ("miner_depth", self.miner_depth.to_string()),
            ("miner_max_children", self.miner_max_children.to_string()),
            ("miner_similarity", artifact::fmt_f64(self.miner_similarity)),
            ("model", self.model.clone()),
            ("seed", self.seed.to_string()),
            ("session_regex", self.session_regex.clone()),
            ("split_ratio", artifact::fmt_f64(self.split_ratio)),
            ("theta_anti", artifact::fmt_f64(self.theta_anti)),
            ("theta_dup", self.theta_dup.to_string()),
            ("window", self.window.clone()),
            ("xi", artifact::fmt_f64(self.xi)),
        ];
        if let Some(p) = &self.log {
            kv.push(("log", p.display().to_string()));
        }
        if let Some(p) = &self.labels {
            kv.push(("labels", p.display().to_string()));
        }
        if let Some(n) = self.line_limit {
            kv.push(("line_limit", n.to_string()));
        }
        kv.sort_by_key(|(k, _)| *k);
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_file_string()).map_err(CliError::from)
    }

    pub fn parse(path: &Path, content: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        let mut seen = Vec::new();
        for (lineno, line) in artifact::check_header(path, "config", content)? {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::data(format!(
                    "{}:{lineno}: expected `key = value`",
                    path.display()
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key.to_string()) {
                return Err(CliError::data(format!(
                    "{}:{lineno}: duplicate key `{key}`",
                    path.display()
                )));
            }
            seen.push(key.to_string());
            let bad = |what: &str| {
                CliError::data(format!("{}:{lineno}: {key}: {what}", path.display()))
            };
            match key {
                "format" => config.format = value.to_string(),
                "log" => config.log = Some(PathBuf::from(value)),
                "labels" => config.labels = Some(PathBuf::from(value)),
                "label_kind" => config.label_kind = value.to_string(),
                "session_regex" => config.session_regex = value.to_string(),
                "window" => config.window = value.to_string(),
                "miner_depth" => {
                    config.miner_depth = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "miner_similarity" => {
                    config.miner_similarity = value.parse().map_err(|_| bad("expected a number"))?
                }
                "miner_max_children" => {
                    config.miner_max_children =
                        value.parse().map_err(|_| bad("expected an integer"))?
                }
                "model" => config.model = value.to_string(),
                "seed" => config.seed = value.parse().map_err(|_| bad("expected an integer"))?,
                "alpha" => config.alpha = value.parse().map_err(|_| bad("expected a number"))?,
                "cutoff" => config.cutoff = value.parse().map_err(|_| bad("expected a number"))?,
                "theta_anti" => {
                    config.theta_anti = value.parse().map_err(|_| bad("expected a number"))?
                }
                "theta_dup" => {
                    config.theta_dup = value.parse().map_err(|_| bad("expected an integer"))?
                }
                "xi" => config.xi = value.parse().map_err(|_| bad("expected a number"))?,
                "split_ratio" => {
                    config.split_ratio = value.parse().map_err(|_| bad("expected a number"))?
                }
                "line_limit" => {
                    config.line_limit =
                        Some(value.parse().map_err(|_| bad("expected an integer"))?)
                }
                other => {
                    return Err(CliError::data(format!(
                        "{}:{lineno}: unknown config key `{other}`",
                        path.display()
                    )))
                }
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let content = artifact::read_to_string(path)?;
        RunConfig::parse(path, &content)
    }

    /// Range-checks every field; violations are usage errors.
    pub fn validate(&self) -> Result<()> {
        self.dataset_format()?;
        if self.label_kind != "per-line" && self.label_kind != "per-session" {
            return Err(CliError::usage(format!(
                "label_kind must be per-line or per-session, got `{}`",
                self.label_kind
            )));
        }
        regex::Regex::new(&self.session_regex)
            .map_err(|e| CliError::usage(format!("session_regex: {e}")))?;
        WindowPolicy::parse(&self.window)?;
        if self.miner_depth < 2 {
            return Err(CliError::usage("miner_depth must be at least 2"));
        }
        if !(self.miner_similarity > 0.0 && self.miner_similarity < 1.0) {
            return Err(CliError::usage("miner_similarity must be in (0, 1)"));
        }
        if self.miner_max_children == 0 {
            return Err(CliError::usage("miner_max_children must be positive"));
        }
        ModelKind::from_name(&self.model).map_err(|e| CliError::usage(e.to_string()))?;
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(CliError::usage(format!("alpha must be in [0, 1), got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.cutoff) {
            return Err(CliError::usage(format!("cutoff must be in [0, 1], got {}", self.cutoff)));
        }
        if !self.theta_anti.is_finite() {
            return Err(CliError::usage("theta_anti must be finite"));
        }
        if self.theta_dup == 1 {
            return Err(CliError::usage(
                "theta_dup must be 0 (stage disabled) or at least 2",
            ));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(CliError::usage(format!("xi must be in (0, 1), got {}", self.xi)));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(CliError::usage(format!(
                "split_ratio must be in (0, 1), got {}",
                self.split_ratio
            )));
        }
        Ok(())
    }

    pub fn dataset_format(&self) -> Result<DatasetFormat> {
        if let Some(pattern) = self.format.strip_prefix("custom:") {
            return DatasetFormat::custom(pattern).map_err(|e| CliError::usage(e.to_string()));
        }
        DatasetFormat::from_name(&self.format).map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn window_policy(&self) -> Result<WindowPolicy> {
        WindowPolicy::parse(&self.window)
    }

    pub fn miner_config(&self) -> MinerConfig {
        MinerConfig {
            depth: self.miner_depth,
            similarity_threshold: self.miner_similarity,
            max_children: self.miner_max_children,
        }
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        ModelKind::from_name(&self.model).map_err(|e| CliError::usage(e.to_string()))
    }

    /// Profiling knobs. The flag grammar is numeric-only, so sentinel
    /// values disable stages: a negative `theta_anti` skips the label
    /// correlation stage, `theta_dup = 0` skips the co-occurrence stage,
    /// and `cutoff = 0` is the frequency stage's own no-op value.
    pub fn profile_config(&self) -> ProfileConfig {
        ProfileConfig {
            frequency_cutoff: self.cutoff,
            theta_anti: (self.theta_anti >= 0.0).then_some(self.theta_anti),
            theta_dup: (self.theta_dup != 0).then_some(self.theta_dup),
            xi: self.xi,
            ..ProfileConfig::default()
        }
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            alpha: self.alpha,
            seed: self.seed,
            split_ratio: self.split_ratio,
            ..StudyConfig::default()
        }
    }
}
