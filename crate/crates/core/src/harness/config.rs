//! Experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. Only `map` is
//! required. List values (`variant`, `metric`, `seeds`) are comma
//! separated, and seeds also accept inclusive ranges such as `1..30`.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::Metric;
use crate::metrics::ConvergenceConfig;
use crate::qlearn::{InitConfig, LearnParams, Variant};
use crate::reward::RewardConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("`{key}`: {message}")]
    Value { key: String, message: String },
    #[error("missing required key `map`")]
    MissingMap,
}

/// Where the grid comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapSource {
    /// One of the shipped maps: `s10`, `s20` or `s30`.
    Builtin(String),
    File(PathBuf),
}

impl MapSource {
    /// Short name used in the `map` column of result files.
    pub fn label(&self) -> String {
        match self {
            MapSource::Builtin(name) => name.clone(),
            MapSource::File(path) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "map".to_string()),
        }
    }

    /// Resolves a relative file path against `base`.
    pub fn resolved(&self, base: &Path) -> MapSource {
        match self {
            MapSource::File(p) if p.is_relative() => MapSource::File(base.join(p)),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: MapSource,
    pub variants: Vec<Variant>,
    /// Metrics tried by the shaped variants c and d.
    pub metrics: Vec<Metric>,
    /// Reward settings of the shaped variants; a and b ignore the metric
    /// and `uch` fields.
    pub reward: RewardConfig,
    pub learn: LearnParams,
    pub init: InitConfig,
    pub convergence: ConvergenceConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(map: MapSource) -> Self {
        ExperimentConfig {
            map,
            variants: Variant::ALL.to_vec(),
            metrics: vec![Metric::Chebyshev],
            reward: RewardConfig::uch(Metric::Chebyshev, RewardConfig::DEFAULT_MU0),
            learn: LearnParams::default(),
            init: InitConfig::default(),
            convergence: ConvergenceConfig::default(),
            seeds: (1..=30).collect(),
            output_dir: PathBuf::from("results"),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let value = |key: &str, message: String| ConfigError::Value {
            key: key.to_string(),
            message,
        };
        if self.seeds.is_empty() {
            return Err(value("seeds", "at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(value("seeds", format!("seed {} is listed twice", w[0])));
        }
        if self.variants.is_empty() {
            return Err(value("variant", "at least one variant is required".into()));
        }
        if self.metrics.is_empty() {
            return Err(value("metric", "at least one metric is required".into()));
        }
        self.learn
            .validate()
            .map_err(|e| value("learn", e.to_string()))?;
        self.reward
            .validate()
            .map_err(|e| value("reward", e.to_string()))?;
        self.init
            .paco
            .validate()
            .map_err(|e| value("paco", e.to_string()))?;
        if !self.init.v_init.is_finite() {
            return Err(value("q_init", "must be finite".into()));
        }
        self.convergence
            .validate()
            .map_err(|e| value("conv", e.to_string()))?;
        if self.learn.episodes < self.convergence.window {
            return Err(value(
                "episodes",
                format!(
                    "{} episodes is fewer than the window of {}",
                    self.learn.episodes, self.convergence.window
                ),
            ));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| ConfigError::Value {
        key: key.to_string(),
        message: format!("cannot parse {raw:?}: {e}"),
    })
}

fn parse_list<T, F>(key: &str, raw: &str, f: F) -> Result<Vec<T>, ConfigError>
where
    F: Fn(&str) -> Result<T, String>,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            f(s).map_err(|message| ConfigError::Value {
                key: key.to_string(),
                message,
            })
        })
        .collect()
}

fn parse_seeds(key: &str, raw: &str) -> Result<Vec<u64>, ConfigError> {
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = parse_num(key, lo.trim())?;
            let hi: u64 = parse_num(key, hi.trim_start_matches('=').trim())?;
            if lo > hi {
                return Err(ConfigError::Value {
                    key: key.to_string(),
                    message: format!("empty range {part:?}"),
                });
            }
            out.extend(lo..=hi);
        } else {
            out.push(parse_num(key, part)?);
        }
    }
    Ok(out)
}

fn parse_switch(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.to_string(),
            message: format!("expected on or off, got {raw:?}"),
        }),
    }
}

fn parse_map(raw: &str) -> MapSource {
    match raw.strip_prefix("builtin:") {
        Some(name) => MapSource::Builtin(name.trim().to_ascii_lowercase()),
        None => MapSource::File(PathBuf::from(raw)),
    }
}

/// Parses and validates a configuration. Relative map paths are kept as
/// written; see [`MapSource::resolved`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::new(MapSource::Builtin(String::new()));
    let mut have_map = false;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: line_no })?;
        let key = key.trim().to_ascii_lowercase();
        let val = val.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: line_no });
        }
        // `seed` and `seeds` name the same setting.
        let canonical = if key == "seed" {
            "seeds".to_string()
        } else {
            key.clone()
        };
        if seen.contains(&canonical) {
            return Err(ConfigError::Duplicate { line: line_no, key });
        }
        seen.push(canonical);

        let k = key.as_str();
        match k {
            "map" => {
                if val.is_empty() {
                    return Err(ConfigError::MissingMap);
                }
                cfg.map = parse_map(val);
                have_map = true;
            }
            "variant" | "variants" => cfg.variants = parse_list(k, val, |s| s.parse())?,
            "metric" | "metrics" => cfg.metrics = parse_list(k, val, |s| s.parse())?,
            "seed" | "seeds" => cfg.seeds = parse_seeds(k, val)?,
            "alpha" => cfg.learn.alpha = parse_num(k, val)?,
            "gamma" => cfg.learn.gamma = parse_num(k, val)?,
            "epsilon" => cfg.learn.epsilon = parse_num(k, val)?,
            "episodes" => cfg.learn.episodes = parse_num(k, val)?,
            "max_steps" => cfg.learn.max_steps = Some(parse_num(k, val)?),
            "uch" => cfg.reward.uch_enabled = parse_switch(k, val)?,
            "mu0" => cfg.reward.mu0 = parse_num(k, val)?,
            "goal_reward" => cfg.reward.goal_reward = parse_num(k, val)?,
            "q_init" => cfg.init.v_init = parse_num(k, val)?,
            "paco.m" => cfg.init.paco.m = parse_num(k, val)?,
            "paco.alpha" => cfg.init.paco.alpha = parse_num(k, val)?,
            "paco.beta" => cfg.init.paco.beta = parse_num(k, val)?,
            "paco.lambda1" => cfg.init.paco.lambda1 = parse_num(k, val)?,
            "paco.lambda" => cfg.init.paco.lambda = parse_num(k, val)?,
            "paco.q" => cfg.init.paco.q_deposit = parse_num(k, val)?,
            "paco.tau0" => cfg.init.paco.tau0 = parse_num(k, val)?,
            "paco.max_iters" => cfg.init.paco.max_iters = parse_num(k, val)?,
            "conv.window" => cfg.convergence.window = parse_num(k, val)?,
            "conv.target" => cfg.convergence.target = parse_num(k, val)?,
            "conv.std_tolerance" => cfg.convergence.std_tolerance = parse_num(k, val)?,
            "output_dir" => cfg.output_dir = PathBuf::from(val),
            _ => {
                return Err(ConfigError::UnknownKey { line: line_no, key });
            }
        }
    }
    if !have_map {
        return Err(ConfigError::MissingMap);
    }
    cfg.validate()?;
    Ok(cfg)
}
