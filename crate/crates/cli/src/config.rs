//! Flat `key = value` run configuration.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use recc_core::structmetrics::MetricName;
use recc_core::{FeatureCombo, LossMask, RunConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("required key `{0}` is not set")]
    Missing(&'static str),
    #[error("`{key}` points to {path}, which does not exist")]
    MissingPath { key: &'static str, path: PathBuf },
    #[error("`{key}` = {value} is outside [{lo}, {hi}]")]
    OutOfRange { key: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Every recognized key, in echo order.
pub const KEYS: &[&str] = &[
    "edges",
    "labels",
    "out_dir",
    "alpha_fraction",
    "resim_tol",
    "resim_max_iter",
    "max_nodes",
    "max_dims",
    "combo",
    "global_metrics",
    "local_metrics",
    "k_p",
    "k_n",
    "dropout",
    "epochs_pre",
    "epochs_ft",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "k",
    "tau",
    "loss_mask",
    "restarts",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub edges: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub run: RunConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { edges: None, labels: None, out_dir: PathBuf::from("recc-out"), run: RunConfig::default() }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_metrics(key: &str, value: &str) -> Result<Vec<MetricName>, ConfigError> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn join_metrics(ms: &[MetricName]) -> String {
    ms.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let r = &mut self.run;
        match key {
            "edges" => self.edges = Some(PathBuf::from(value)),
            "labels" => self.labels = (!value.is_empty()).then(|| PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "alpha_fraction" => r.resim.alpha_fraction = parse(key, value)?,
            "resim_tol" => r.resim.tol = parse(key, value)?,
            "resim_max_iter" => r.resim.max_iter = parse(key, value)?,
            "max_nodes" => r.resim.max_nodes = parse(key, value)?,
            "max_dims" => r.max_dims = parse(key, value)?,
            "combo" => r.combo = parse::<FeatureCombo>(key, value)?,
            "global_metrics" => r.representatives.global = parse_metrics(key, value)?,
            "local_metrics" => r.representatives.local = parse_metrics(key, value)?,
            "k_p" => r.k_p = parse(key, value)?,
            "k_n" => r.k_n = parse(key, value)?,
            "dropout" => r.dropout = parse(key, value)?,
            "epochs_pre" => r.train.epochs_pre = parse(key, value)?,
            "epochs_ft" => r.train.epochs_ft = parse(key, value)?,
            "lr" => r.train.adam.lr = parse(key, value)?,
            "beta1" => r.train.adam.beta1 = parse(key, value)?,
            "beta2" => r.train.adam.beta2 = parse(key, value)?,
            "eps" => r.train.adam.eps = parse(key, value)?,
            "k" => r.train.k = parse(key, value)?,
            "tau" => r.train.tau = parse(key, value)?,
            "loss_mask" => r.train.loss_mask = parse::<LossMask>(key, value)?,
            "restarts" => r.train.kmeans_restarts = parse(key, value)?,
            "seed" => r.train.seed = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let r = &self.run;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Some(match key {
            "edges" => path(&self.edges),
            "labels" => path(&self.labels),
            "out_dir" => self.out_dir.display().to_string(),
            "alpha_fraction" => r.resim.alpha_fraction.to_string(),
            "resim_tol" => r.resim.tol.to_string(),
            "resim_max_iter" => r.resim.max_iter.to_string(),
            "max_nodes" => r.resim.max_nodes.to_string(),
            "max_dims" => r.max_dims.to_string(),
            "combo" => r.combo.to_string(),
            "global_metrics" => join_metrics(&r.representatives.global),
            "local_metrics" => join_metrics(&r.representatives.local),
            "k_p" => r.k_p.to_string(),
            "k_n" => r.k_n.to_string(),
            "dropout" => r.dropout.to_string(),
            "epochs_pre" => r.train.epochs_pre.to_string(),
            "epochs_ft" => r.train.epochs_ft.to_string(),
            "lr" => r.train.adam.lr.to_string(),
            "beta1" => r.train.adam.beta1.to_string(),
            "beta2" => r.train.adam.beta2.to_string(),
            "eps" => r.train.adam.eps.to_string(),
            "k" => r.train.k.to_string(),
            "tau" => r.train.tau.to_string(),
            "loss_mask" => r.train.loss_mask.to_string(),
            "restarts" => r.train.kmeans_restarts.to_string(),
            "seed" => r.train.seed.to_string(),
            _ => return None,
        })
    }

    /// All keys with their current values, parseable by [`apply_text`](Self::apply_text).
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default())).collect()
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        KEYS.iter().map(|k| (k.to_string(), self.get(k).unwrap_or_default())).collect()
    }

    /// Checks value ranges and that referenced input files exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let edges = self.edges.as_ref().ok_or(ConfigError::Missing("edges"))?;
        if !edges.exists() {
            return Err(ConfigError::MissingPath { key: "edges", path: edges.clone() });
        }
        if let Some(labels) = &self.labels {
            if !labels.exists() {
                return Err(ConfigError::MissingPath { key: "labels", path: labels.clone() });
            }
        }
        self.validate_params()
    }

    pub fn validate_params(&self) -> Result<(), ConfigError> {
        let r = &self.run;
        let range = |key: &'static str, value: f64, lo: f64, hi: f64| {
            if (lo..=hi).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { key, value, lo, hi })
            }
        };
        range("alpha_fraction", r.resim.alpha_fraction, f64::MIN_POSITIVE, 1.0 - f64::EPSILON)?;
        range("dropout", r.dropout, 0.0, 1.0 - f64::EPSILON)?;
        range("k_p", r.k_p as f64, 1.0, f64::MAX)?;
        range("k_n", r.k_n as f64, 1.0, f64::MAX)?;
        range("k", r.train.k as f64, 2.0, f64::MAX)?;
        range("tau", r.train.tau, f64::MIN_POSITIVE, f64::MAX)?;
        range("lr", r.train.adam.lr, f64::MIN_POSITIVE, f64::MAX)?;
        range("epochs_pre", r.train.epochs_pre as f64, 1.0, f64::MAX)?;
        range("epochs_ft", r.train.epochs_ft as f64, 1.0, f64::MAX)?;
        range("max_dims", r.max_dims as f64, 1.0, f64::MAX)?;
        Ok(())
    }
}
