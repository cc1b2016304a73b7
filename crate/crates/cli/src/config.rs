//! Experiment configuration: a flat TOML document with defaults for every key.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use uplift_core::baseline::{LogisticOptions, DEFAULT_DENOM_EPSILON};
use uplift_core::features::{DEFAULT_BANDWIDTH, DEFAULT_BASIS_SIZE};
use uplift_core::synthetic::policy_gap_grid;
use uplift_core::{HyperParams, Method, MethodParams, SyntheticConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Generate,
    Fit,
    Evaluate,
    Experiment,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Generate => "generate",
            Mode::Fit => "fit",
            Mode::Evaluate => "evaluate",
            Mode::Experiment => "experiment",
        }
    }
}

impl FromStr for Mode {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        [Mode::Generate, Mode::Fit, Mode::Evaluate, Mode::Experiment]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown mode `{s}`; expected generate, fit, evaluate or experiment"
                ))
            })
    }
}

/// Seeds are given either as a count (`0..count`) or as an explicit list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

/// The document as written; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    out_dir: Option<PathBuf>,
    data_dir: Option<PathBuf>,
    predictions_dir: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
    seeds: Option<SeedSpec>,
    b_grid: Option<Vec<f64>>,
    n_grid: Option<Vec<usize>>,
    n_tilde_grid: Option<Vec<usize>>,
    methods: Option<Vec<String>>,
    lambda_f: Option<f64>,
    lambda_g: Option<f64>,
    basis_count: Option<usize>,
    bandwidth: Option<f64>,
    denom_epsilon: Option<f64>,
    clip_binary: Option<bool>,
    logistic_lambda: Option<f64>,
    logistic_max_iter: Option<usize>,
    feature_cov_scale: Option<f64>,
    a_plus: Option<[f64; 2]>,
    a_minus: Option<[f64; 2]>,
    holdout_size: Option<usize>,
    ips: Option<bool>,
    curves: Option<bool>,
    timing: Option<bool>,
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "out_dir",
    "data_dir",
    "predictions_dir",
    "seed",
    "jobs",
    "seeds",
    "b_grid",
    "n_grid",
    "n_tilde_grid",
    "methods",
    "lambda_f",
    "lambda_g",
    "basis_count",
    "bandwidth",
    "denom_epsilon",
    "clip_binary",
    "logistic_lambda",
    "logistic_max_iter",
    "feature_cov_scale",
    "a_plus",
    "a_minus",
    "holdout_size",
    "ips",
    "curves",
    "timing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub out_dir: PathBuf,
    /// Input directory for `fit` and `evaluate`.
    pub data_dir: Option<PathBuf>,
    /// Where `evaluate` looks for prediction files; defaults to `out_dir`.
    pub predictions_dir: Option<PathBuf>,
    pub base_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub seeds: Vec<u64>,
    pub b_grid: Vec<f64>,
    /// Pooled outcome-set sizes `n = n₁ + n₂`.
    pub n_grid: Vec<usize>,
    /// Pooled treatment-set sizes, paired index-wise with `n_grid`.
    pub n_tilde_grid: Vec<usize>,
    pub methods: Vec<Method>,
    pub params: MethodParams,
    pub synthetic: SyntheticConfig,
    pub ips: bool,
    pub curves: bool,
    /// When off, `wall_ms` is written as 0 so reruns are byte-identical.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Experiment,
            out_dir: PathBuf::from("results"),
            data_dir: None,
            predictions_dir: None,
            base_seed: 0,
            jobs: 0,
            seeds: (0..50).collect(),
            b_grid: policy_gap_grid(),
            n_grid: vec![2000],
            n_tilde_grid: vec![2000],
            methods: Method::ALL.to_vec(),
            params: MethodParams::default(),
            synthetic: SyntheticConfig::default(),
            ips: false,
            curves: true,
            timing: true,
        }
    }
}

fn range_error(key: &str, requirement: &str, value: impl std::fmt::Display) -> CliError {
    CliError::Range {
        key: key.to_string(),
        detail: format!("must be {requirement}, got {value}"),
    }
}

fn positive(key: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(range_error(key, "finite and > 0", v))
    }
}

impl ExperimentConfig {
    /// Cells of the sweep in output order: `(b, n, ñ, seed)`.
    pub fn cells(&self) -> Vec<(f64, usize, usize, u64)> {
        let mut out = Vec::new();
        for &b in &self.b_grid {
            for (&n, &nt) in self.n_grid.iter().zip(&self.n_tilde_grid) {
                for &s in &self.seeds {
                    out.push((b, n, nt, s));
                }
            }
        }
        out
    }

    /// Every effective setting as `(key, value)` text pairs.
    pub fn describe(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(" ");
        let p = &self.params;
        let s = &self.synthetic;
        vec![
            ("mode".into(), self.mode.name().into()),
            ("seed".into(), self.base_seed.to_string()),
            ("jobs".into(), self.jobs.to_string()),
            ("seeds".into(), join(self.seeds.iter().map(u64::to_string).collect())),
            ("b_grid".into(), join(self.b_grid.iter().map(f64::to_string).collect())),
            (
                "n_grid".into(),
                join(self.n_grid.iter().map(usize::to_string).collect()),
            ),
            (
                "n_tilde_grid".into(),
                join(self.n_tilde_grid.iter().map(usize::to_string).collect()),
            ),
            (
                "methods".into(),
                join(self.methods.iter().map(|m| m.name().to_string()).collect()),
            ),
            ("lambda_f".into(), p.hyper.lambda_f.to_string()),
            ("lambda_g".into(), p.hyper.lambda_g.to_string()),
            ("basis_count".into(), p.basis_size.to_string()),
            ("bandwidth".into(), p.bandwidth.to_string()),
            ("denom_epsilon".into(), p.denom_epsilon.to_string()),
            ("clip_binary".into(), p.hyper.clip_binary.to_string()),
            ("logistic_lambda".into(), p.logistic.lambda.to_string()),
            ("logistic_max_iter".into(), p.logistic.max_iter.to_string()),
            ("logistic_tol".into(), p.logistic.tol.to_string()),
            ("logistic_max_halvings".into(), p.logistic.max_halvings.to_string()),
            ("feature_cov_scale".into(), s.feature_cov_scale.to_string()),
            ("a_plus".into(), join(s.a_plus.iter().map(f64::to_string).collect())),
            ("a_minus".into(), join(s.a_minus.iter().map(f64::to_string).collect())),
            ("holdout_size".into(), s.holdout.to_string()),
            ("holdout_propensity".into(), "0.5".into()),
            ("ips".into(), self.ips.to_string()),
            ("curves".into(), self.curves.to_string()),
            ("timing".into(), self.timing.to_string()),
        ]
    }
}

/// Parses a configuration document, filling defaults and checking ranges.
pub fn parse_config_str(text: &str) -> CliResult<ExperimentConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let known: BTreeSet<&str> = KNOWN_KEYS.iter().copied().collect();
    let unknown: Vec<String> = table.keys().filter(|k| !known.contains(k.as_str())).cloned().collect();
    if !unknown.is_empty() {
        return Err(CliError::UnknownKeys(unknown));
    }
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    build(raw)
}

pub fn parse_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn build(raw: RawConfig) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(m) = raw.mode {
        cfg.mode = m.parse()?;
    }
    if let Some(d) = raw.out_dir {
        cfg.out_dir = d;
    }
    cfg.data_dir = raw.data_dir;
    cfg.predictions_dir = raw.predictions_dir;
    if let Some(s) = raw.seed {
        cfg.base_seed = s;
    }
    if let Some(j) = raw.jobs {
        cfg.jobs = j;
    }
    match raw.seeds {
        Some(SeedSpec::Count(0)) => return Err(range_error("seeds", ">= 1", 0)),
        Some(SeedSpec::Count(c)) => cfg.seeds = (0..c).collect(),
        Some(SeedSpec::List(l)) if l.is_empty() => return Err(range_error("seeds", "a nonempty list", "[]")),
        Some(SeedSpec::List(l)) => cfg.seeds = l,
        None => {}
    }
    if let Some(b) = raw.b_grid {
        if b.is_empty() {
            return Err(range_error("b_grid", "nonempty", "[]"));
        }
        if let Some(v) = b.iter().find(|v| !v.is_finite()) {
            return Err(range_error("b_grid", "finite", v));
        }
        cfg.b_grid = b;
    }
    if let Some(n) = raw.n_grid {
        if n.is_empty() {
            return Err(range_error("n_grid", "nonempty", "[]"));
        }
        cfg.n_grid = n;
    }
    match raw.n_tilde_grid {
        Some(nt) if nt.len() != cfg.n_grid.len() => {
            return Err(range_error(
                "n_tilde_grid",
                &format!("the same length as n_grid ({})", cfg.n_grid.len()),
                nt.len(),
            ))
        }
        Some(nt) => cfg.n_tilde_grid = nt,
        None => cfg.n_tilde_grid = cfg.n_grid.clone(),
    }
    for (key, grid) in [("n_grid", &cfg.n_grid), ("n_tilde_grid", &cfg.n_tilde_grid)] {
        if let Some(v) = grid.iter().find(|&&v| v < 2) {
            return Err(range_error(key, "entries >= 2 (one sample per population)", v));
        }
    }
    if let Some(ms) = raw.methods {
        if ms.is_empty() {
            return Err(range_error("methods", "nonempty", "[]"));
        }
        cfg.methods = ms
            .iter()
            .map(|m| {
                m.parse::<Method>()
                    .map_err(|_| range_error("methods", "one of minmax, four_ridge, four_logistic", m))
            })
            .collect::<CliResult<_>>()?;
    }

    let hyper = HyperParams {
        lambda_f: positive("lambda_f", raw.lambda_f.unwrap_or(HyperParams::default().lambda_f))?,
        lambda_g: positive("lambda_g", raw.lambda_g.unwrap_or(HyperParams::default().lambda_g))?,
        clip_binary: raw.clip_binary.unwrap_or(false),
    };
    let basis_size = raw.basis_count.unwrap_or(DEFAULT_BASIS_SIZE);
    if basis_size == 0 {
        return Err(range_error("basis_count", ">= 1", 0));
    }
    let defaults = LogisticOptions::default();
    let logistic = LogisticOptions {
        lambda: positive("logistic_lambda", raw.logistic_lambda.unwrap_or(defaults.lambda))?,
        max_iter: match raw.logistic_max_iter {
            Some(0) => return Err(range_error("logistic_max_iter", ">= 1", 0)),
            Some(v) => v,
            None => defaults.max_iter,
        },
        ..defaults
    };
    cfg.params = MethodParams {
        hyper,
        basis_size,
        bandwidth: positive("bandwidth", raw.bandwidth.unwrap_or(DEFAULT_BANDWIDTH))?,
        denom_epsilon: positive("denom_epsilon", raw.denom_epsilon.unwrap_or(DEFAULT_DENOM_EPSILON))?,
        logistic,
    };

    if let Some(v) = raw.feature_cov_scale {
        cfg.synthetic.feature_cov_scale = positive("feature_cov_scale", v)?;
    }
    for (key, value, slot) in [
        ("a_plus", raw.a_plus, &mut cfg.synthetic.a_plus),
        ("a_minus", raw.a_minus, &mut cfg.synthetic.a_minus),
    ] {
        if let Some(a) = value {
            if let Some(v) = a.iter().find(|v| !v.is_finite()) {
                return Err(range_error(key, "finite", v));
            }
            *slot = a;
        }
    }
    if let Some(h) = raw.holdout_size {
        if h == 0 {
            return Err(range_error("holdout_size", ">= 1", 0));
        }
        cfg.synthetic.holdout = h;
    }
    cfg.ips = raw.ips.unwrap_or(false);
    cfg.curves = raw.curves.unwrap_or(true);
    cfg.timing = raw.timing.unwrap_or(true);
    Ok(cfg)
}
