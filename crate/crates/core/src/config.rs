//! Flat `key=value` run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fitting::{CriterionSpec, Objective, Thresholds};
use crate::generation::{GenerationConfig, IntervalMode};
use crate::selection::SelectionConfig;

pub const CACHE_DIR_ENV: &str = "RULEMINE_CACHE_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub m_n: usize,
    pub l_max: usize,
    pub interval_mode: IntervalMode,
    pub cov_min: f64,
    pub k: f64,
    pub alpha: f64,
    pub criterion: String,
    pub window: usize,
    pub objective: Objective,
    pub gamma: f64,
    pub workers: usize,
    pub cache_dir: PathBuf,
    pub keep_cache: bool,
    pub no_prune: bool,
    pub discretize_per_stock: bool,
    pub top_k: usize,
    pub compound: bool,
}

impl Default for Config {
    fn default() -> Self {
        let th = Thresholds::default();
        Config {
            m_n: 5,
            l_max: 2,
            interval_mode: IntervalMode::Full,
            cov_min: th.cov_min,
            k: th.k,
            alpha: th.alpha,
            criterion: "rolling_mean".into(),
            window: 5,
            objective: Objective::Maximize,
            gamma: 0.5,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cache_dir: PathBuf::from("rulemine-cache"),
            keep_cache: false,
            no_prune: false,
            discretize_per_stock: false,
            top_k: 40,
            compound: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "m_n" => self.m_n = parse_num(key, value)?,
            "l_max" => self.l_max = parse_num(key, value)?,
            "interval_mode" => self.interval_mode = value.parse()?,
            "cov_min" => self.cov_min = parse_num(key, value)?,
            "K" | "k" => self.k = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "criterion" => self.criterion = value.to_string(),
            "window" => self.window = parse_num(key, value)?,
            "objective" => self.objective = value.parse()?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "keep_cache" => self.keep_cache = parse_bool(key, value)?,
            "no_prune" => self.no_prune = parse_bool(key, value)?,
            "discretize_per_stock" => self.discretize_per_stock = parse_bool(key, value)?,
            "top_k" => self.top_k = parse_num(key, value)?,
            "compound" => self.compound = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Defaults, then the optional file, then `RULEMINE_CACHE_DIR`, then
    /// `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Config::from_file(p)?,
            None => Config::default(),
        };
        if let Ok(dir) = std::env::var(CACHE_DIR_ENV) {
            if !dir.is_empty() {
                cfg.cache_dir = PathBuf::from(dir);
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            cov_min: self.cov_min,
            k: self.k,
            alpha: self.alpha,
        }
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            m_n: self.m_n,
            l_max: self.l_max,
            interval_mode: self.interval_mode,
            thresholds: self.thresholds(),
            criterion_name: self.criterion.clone(),
            criterion: CriterionSpec {
                window: self.window,
                objective: self.objective,
            },
            workers: self.workers,
            cache_dir: self.cache_dir.clone(),
            keep_cache: self.keep_cache,
            no_prune: self.no_prune,
        }
    }

    pub fn selection(&self) -> Result<SelectionConfig> {
        SelectionConfig::new(self.gamma, self.objective)
    }
}
