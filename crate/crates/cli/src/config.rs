//! Flat TOML run configuration.
//!
//! Every key is optional at parse time; validation fills defaults and
//! reports the first offending field by name. Relative file paths are
//! resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use hsd_core::experiments::{ExperimentConfig, OperatingPoint};
use hsd_core::{BackgroundModel, Family, ModelKind};
use serde::{Deserialize, Serialize};

use crate::bundle::{load_bundle, BundleSource, DatasetBundle, SyntheticSpec};
use crate::error::{CliError, CliResult, ConfigError};

/// Keys as they appear in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub family: Option<String>,
    pub nu: Option<f64>,

    pub t_source: Option<String>,
    pub t_file: Option<PathBuf>,
    pub mu_file: Option<PathBuf>,
    pub sigma_file: Option<PathBuf>,

    pub rho: Option<f64>,
    pub noise_std: Option<f64>,
    pub mu_level: Option<f64>,
    pub target_center: Option<f64>,
    pub target_width: Option<f64>,

    pub alpha: Option<f64>,
    pub truth: Option<String>,
    pub beta: Option<f64>,
    pub beta_grid: Option<Vec<f64>>,
    pub trials_h0: Option<usize>,
    pub trials_h1: Option<usize>,
    pub seed: Option<u64>,
    pub operating_point: Option<String>,
    pub operating_value: Option<f64>,
    pub threads: Option<usize>,

    pub y_file: Option<PathBuf>,
    pub z_file: Option<PathBuf>,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub n: usize,
    pub family: Family,
    pub source: BundleSource,
    pub alpha: Option<f64>,
    pub truth: ModelKind,
    pub beta: Option<f64>,
    pub beta_grid: Vec<f64>,
    pub trials_h0: usize,
    pub trials_h1: usize,
    pub seed: u64,
    pub operating_point: OperatingPoint,
    pub threads: Option<usize>,
    pub y_file: Option<PathBuf>,
    pub z_file: Option<PathBuf>,
}

pub const DEFAULT_BETA_GRID: [f64; 5] = [0.7, 0.8, 0.9, 1.0, 1.1];
pub const DEFAULT_TRIALS: usize = 10_000;

/// Parses the TOML text; unknown keys are rejected by name.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let field = e.message().split('`').nth(1).unwrap_or("<file>").to_string();
        ConfigError::new(field, e.message().trim().to_string())
    })
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
    }
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn parse_family(raw: &RawConfig) -> Result<Family, ConfigError> {
    match raw.family.as_deref().unwrap_or("student") {
        "student" => {
            let nu = raw
                .nu
                .ok_or_else(|| ConfigError::new("nu", "required when family = \"student\""))?;
            if !(nu > 2.0) || !nu.is_finite() {
                return Err(ConfigError::new("nu", format!("must be finite and exceed 2, got {nu}")));
            }
            Ok(Family::Student { nu })
        }
        "gaussian" => Ok(Family::Gaussian),
        other => Err(ConfigError::new(
            "family",
            format!("expected \"student\" or \"gaussian\", got {other:?}"),
        )),
    }
}

fn parse_model(field: &str, value: Option<&str>, default: ModelKind) -> Result<ModelKind, ConfigError> {
    match value {
        None => Ok(default),
        Some("additive") => Ok(ModelKind::Additive),
        Some("replacement") => Ok(ModelKind::Replacement),
        Some("mixed") => Ok(ModelKind::Mixed),
        Some(other) => Err(ConfigError::new(
            field,
            format!("expected \"additive\", \"replacement\" or \"mixed\", got {other:?}"),
        )),
    }
}

fn parse_source(raw: &RawConfig, base: Option<&Path>) -> Result<BundleSource, ConfigError> {
    match raw.t_source.as_deref().unwrap_or("synthetic") {
        "synthetic" => {
            let p = raw
                .p
                .ok_or_else(|| ConfigError::new("p", "required when t_source = \"synthetic\""))?;
            if p == 0 {
                return Err(ConfigError::new("p", "must be at least 1"));
            }
            let rho = raw.rho.unwrap_or(0.9);
            if !(rho.abs() < 1.0) {
                return Err(ConfigError::new("rho", format!("must lie in (-1, 1), got {rho}")));
            }
            let mu_level = raw.mu_level.unwrap_or(0.0);
            if !mu_level.is_finite() {
                return Err(ConfigError::new("mu_level", "must be finite"));
            }
            let target_center = raw.target_center.unwrap_or(0.6);
            if !(0.0..=1.0).contains(&target_center) {
                return Err(ConfigError::new(
                    "target_center",
                    format!("must lie in [0, 1], got {target_center}"),
                ));
            }
            Ok(BundleSource::Synthetic(SyntheticSpec {
                p,
                rho,
                noise_std: positive("noise_std", raw.noise_std.unwrap_or(1.0))?,
                mu_level,
                target_center,
                target_width: positive("target_width", raw.target_width.unwrap_or(0.15))?,
            }))
        }
        "file" => {
            let need = |field: &str, v: &Option<PathBuf>| {
                v.as_deref()
                    .map(|p| resolve(base, p))
                    .ok_or_else(|| ConfigError::new(field, "required when t_source = \"file\""))
            };
            Ok(BundleSource::Files {
                t: need("t_file", &raw.t_file)?,
                mu: need("mu_file", &raw.mu_file)?,
                sigma: need("sigma_file", &raw.sigma_file)?,
            })
        }
        other => Err(ConfigError::new(
            "t_source",
            format!("expected \"synthetic\" or \"file\", got {other:?}"),
        )),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        Self::from_raw(parse_raw(text)?, base)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self::from_toml_str(&text, path.parent())?)
    }

    pub fn from_raw(raw: RawConfig, base: Option<&Path>) -> Result<Self, ConfigError> {
        let family = parse_family(&raw)?;
        let source = parse_source(&raw, base)?;
        let n = raw.n.ok_or_else(|| ConfigError::new("n", "required"))?;
        if let (BundleSource::Synthetic(s), Some(_)) = (&source, raw.p) {
            if n <= s.p {
                return Err(ConfigError::new("n", format!("must exceed p = {}, got {n}", s.p)));
            }
        }
        let alpha = raw.alpha;
        if let Some(a) = alpha {
            if !a.is_finite() || !(0.0..1.0).contains(&a) {
                return Err(ConfigError::new("alpha", format!("must lie in [0, 1), got {a}")));
            }
        }
        let truth = parse_model("truth", raw.truth.as_deref(), ModelKind::Replacement)?;
        let beta = raw.beta.map(|b| positive("beta", b)).transpose()?;
        if truth == ModelKind::Mixed && beta.is_none() {
            return Err(ConfigError::new("beta", "required when truth = \"mixed\""));
        }
        let beta_grid = raw.beta_grid.clone().unwrap_or_else(|| DEFAULT_BETA_GRID.to_vec());
        if beta_grid.is_empty() {
            return Err(ConfigError::new("beta_grid", "must not be empty"));
        }
        for &b in &beta_grid {
            if !(b > 0.0) || !b.is_finite() {
                return Err(ConfigError::new("beta_grid", format!("entries must be positive, got {b}")));
            }
        }
        let trials = |field: &str, v: Option<usize>| match v.unwrap_or(DEFAULT_TRIALS) {
            0 => Err(ConfigError::new(field, "must be at least 1")),
            k => Ok(k),
        };
        let trials_h0 = trials("trials_h0", raw.trials_h0)?;
        let trials_h1 = trials("trials_h1", raw.trials_h1)?;
        let value = raw.operating_value.unwrap_or(0.5);
        if !(value > 0.0 && value < 1.0) {
            return Err(ConfigError::new(
                "operating_value",
                format!("must lie in (0, 1), got {value}"),
            ));
        }
        let operating_point = match raw.operating_point.as_deref().unwrap_or("fixed_pd") {
            "fixed_pd" => OperatingPoint::FixedPd(value),
            "fixed_pfa" => OperatingPoint::FixedPfa(value),
            other => {
                return Err(ConfigError::new(
                    "operating_point",
                    format!("expected \"fixed_pd\" or \"fixed_pfa\", got {other:?}"),
                ))
            }
        };
        if raw.threads == Some(0) {
            return Err(ConfigError::new("threads", "must be at least 1"));
        }
        Ok(Self {
            n,
            family,
            source,
            alpha,
            truth,
            beta,
            beta_grid,
            trials_h0,
            trials_h1,
            seed: raw.seed.unwrap_or(0),
            operating_point,
            threads: raw.threads,
            y_file: raw.y_file.as_deref().map(|p| resolve(base, p)),
            z_file: raw.z_file.as_deref().map(|p| resolve(base, p)),
            raw,
        })
    }

    /// Loads the bundle and checks `n` against its dimension.
    pub fn bundle(&self) -> CliResult<DatasetBundle> {
        let bundle = load_bundle(&self.source)?;
        if self.n <= bundle.p() {
            return Err(ConfigError::new("n", format!("must exceed p = {}, got {}", bundle.p(), self.n)).into());
        }
        Ok(bundle)
    }

    pub fn background(&self, bundle: &DatasetBundle) -> CliResult<BackgroundModel<f64>> {
        Ok(BackgroundModel::new(bundle.mu.clone(), bundle.sigma.clone(), self.family)?)
    }

    pub fn experiment(&self, bundle: &DatasetBundle) -> CliResult<ExperimentConfig> {
        let alpha = self
            .alpha
            .ok_or_else(|| ConfigError::new("alpha", "required for Monte-Carlo runs"))?;
        if self.truth == ModelKind::Replacement && alpha >= 1.0 {
            return Err(ConfigError::new("alpha", "replacement truth needs alpha < 1").into());
        }
        let config = ExperimentConfig {
            model: self.background(bundle)?,
            n: self.n,
            t: bundle.t.clone(),
            alpha,
            truth: self.truth,
            beta: self.beta.unwrap_or(1.0),
            beta_grid: self.beta_grid.clone(),
            trials_h0: self.trials_h0,
            trials_h1: self.trials_h1,
            seed: self.seed,
            operating_point: self.operating_point,
            threads: self.threads,
        };
        config.validate()?;
        Ok(config)
    }
}
