//! Experiment configuration: per-experiment defaults, JSON file, environment and flags.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use htsgd_core::dynamics::StepSchedule;
use htsgd_core::models::{Covariate, DiscreteLaw, ModelSpec};
use htsgd_core::rng::StableParams;

use crate::error::{config_err, ExperimentError, Result};

pub const SEED_ENV: &str = "HTSGD_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ConstantPath,
    DecayHist,
    Coverage,
    LogisticPath,
    LogisticHist,
    StationaryDensity,
    AngularCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ConstantPath => "constant-path",
            Self::DecayHist => "decay-hist",
            Self::Coverage => "coverage",
            Self::LogisticPath => "logistic-path",
            Self::LogisticHist => "logistic-hist",
            Self::StationaryDensity => "stationary-density",
            Self::AngularCheck => "angular-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `f(theta) = theta^T A theta / 2 + b^T theta` with additive stable noise per coordinate.
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64>, noise_scale: f64, noise_beta: f64 },
    /// One-dimensional regularised logistic regression with a symmetric stable covariate.
    Logistic { theta_star: f64, lambda: f64, covariate_scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { eta: f64 },
    /// `eta_n = c (n + shift)^{-rho}`.
    Polynomial { c: f64, rho: f64, shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpNormConfig {
    Euclidean,
    PerCoordinate,
}

/// Normalising constant applied to scaled errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum B1Mode {
    /// `b1 = 1`: raw scaled error.
    Unit,
    /// The model's tail normalisation.
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AngularConfig {
    /// Least squares with discrete covariates and symmetric Pareto noise.
    Ols { points: Vec<Vec<f64>>, probs: Option<Vec<f64>>, theta: Vec<f64>, theta_star: Vec<f64>, draws: usize, quantile: f64 },
    /// Logistic regression with Pareto covariate radius along discrete unit directions.
    Logistic { directions: Vec<Vec<f64>>, theta: Vec<f64>, theta_star: Vec<f64>, lambda: f64, draws: usize, quantile: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub alpha: f64,
    /// Required to run with `alpha = 2`, where the noise is Gaussian.
    pub gaussian_sanity: bool,
    pub model: ModelConfig,
    pub schedule: ScheduleConfig,
    pub steps: usize,
    pub replications: usize,
    pub master_seed: u64,
    /// Defaults to the model optimum when absent.
    pub theta0: Option<Vec<f64>>,
    pub out_dir: PathBuf,
    pub plots: bool,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    pub jump_threshold: f64,
    pub jump_norm: JumpNormConfig,
    pub bins: usize,
    pub b1: B1Mode,
    pub coverage_level: f64,
    /// 1-based coordinate reported by `coverage`.
    pub coverage_coordinate: usize,
    /// Monte Carlo draws for the gradient covariance in `logistic-hist`.
    pub variance_draws: usize,
    pub angular: AngularConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub no_plots: bool,
    pub threads: Option<usize>,
}

fn quadratic_default() -> Value {
    json!({"kind": "quadratic", "a": [[2.0, 0.0], [0.0, 1.0]], "b": [1.0, 1.0], "noise_scale": 1.0, "noise_beta": 0.0})
}

fn logistic_default() -> Value {
    json!({"kind": "logistic", "theta_star": 1.0, "lambda": 0.1, "covariate_scale": 1.0})
}

fn constant_default() -> Value {
    json!({"kind": "constant", "eta": 1e-3})
}

fn polynomial_default() -> Value {
    json!({"kind": "polynomial", "c": 1.0, "rho": 0.6, "shift": 0.0})
}

fn ols_default() -> Value {
    json!({
        "design": "ols",
        "points": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 2.0]],
        "probs": null,
        "theta": [0.0, 0.0],
        "theta_star": [1.0, -1.0],
        "draws": 1_000_000,
        "quantile": 0.999
    })
}

fn logistic_design_default() -> Value {
    json!({
        "design": "logistic",
        "directions": [[1.0], [-1.0]],
        "theta": [-1.0],
        "theta_star": [1.0],
        "lambda": 0.1,
        "draws": 1_000_000,
        "quantile": 0.999
    })
}

/// Default for a tagged sub-object when the file switches its variant.
fn variant_default(tag: &str, value: &str) -> Option<Value> {
    match (tag, value) {
        ("kind", "quadratic") => Some(quadratic_default()),
        ("kind", "logistic") => Some(logistic_default()),
        ("kind", "constant") => Some(constant_default()),
        ("kind", "polynomial") => Some(polynomial_default()),
        ("design", "ols") => Some(ols_default()),
        ("design", "logistic") => Some(logistic_design_default()),
        _ => None,
    }
}

/// Built-in settings for `kind`.
pub fn defaults(kind: ExperimentKind) -> Value {
    use ExperimentKind::*;
    let mut v = json!({
        "experiment": kind,
        "alpha": 1.5,
        "gaussian_sanity": false,
        "model": quadratic_default(),
        "schedule": polynomial_default(),
        "steps": 1000,
        "replications": 10_000,
        "master_seed": 20_240_601u64,
        "theta0": [0.0, 0.0],
        "out_dir": format!("out/{}", kind.name()),
        "plots": true,
        "threads": null,
        "jump_threshold": 1.0,
        "jump_norm": "euclidean",
        "bins": 60,
        "b1": "model",
        "coverage_level": 0.95,
        "coverage_coordinate": 1,
        "variance_draws": 1_000_000,
        "angular": ols_default(),
    });
    let o = v.as_object_mut().unwrap();
    match kind {
        ConstantPath => {
            o.insert("schedule".into(), constant_default());
            o.insert("steps".into(), json!(5000));
            o.insert("replications".into(), json!(200));
            o.insert("b1".into(), json!("unit"));
        }
        DecayHist => {}
        Coverage => {
            o.insert("steps".into(), json!(100));
        }
        LogisticPath => {
            o.insert("model".into(), logistic_default());
            o.insert("schedule".into(), constant_default());
            o.insert("steps".into(), json!(5000));
            o.insert("replications".into(), json!(200));
            o.insert("theta0".into(), json!([-1.0]));
            o.insert("b1".into(), json!("unit"));
        }
        LogisticHist => {
            o.insert("model".into(), logistic_default());
            o.insert("theta0".into(), json!([1.0]));
        }
        StationaryDensity => {
            o.insert("model".into(), json!({"kind": "quadratic", "a": [[2.0]], "b": [0.0], "noise_scale": 1.0, "noise_beta": 0.0}));
            o.insert("steps".into(), json!(1));
            o.insert("replications".into(), json!(100_000));
            o.insert("theta0".into(), Value::Null);
        }
        AngularCheck => {
            o.insert("steps".into(), json!(1));
            o.insert("replications".into(), json!(1));
            o.insert("theta0".into(), Value::Null);
        }
    }
    v
}

/// Recursively overlays `top` on `base`. A tagged object whose tag changes
/// restarts from that variant's defaults.
fn merge(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for tag in ["kind", "design"] {
                if let (Some(Value::String(old)), Some(Value::String(new))) = (b.get(tag), t.get(tag)) {
                    if old != new {
                        if let Some(Value::Object(fresh)) = variant_default(tag, new) {
                            *b = fresh;
                        }
                    }
                }
            }
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

impl ExperimentConfig {
    /// Builds the configuration for `kind` with precedence flags > environment
    /// seed > file > defaults, then validates it.
    pub fn resolve(kind: ExperimentKind, file_json: Option<&str>, env_seed: Option<&str>, overrides: &Overrides) -> Result<Self> {
        let mut v = defaults(kind);
        if let Some(text) = file_json {
            let file: Value = serde_json::from_str(text).map_err(|e| config_err("config file", e))?;
            if !file.is_object() {
                return Err(config_err("config file", "top level must be a JSON object"));
            }
            if let Some(e) = file.get("experiment") {
                if e != &json!(kind) {
                    return Err(config_err("experiment", format!("file names {e} but the command line asks for \"{}\"", kind.name())));
                }
            }
            merge(&mut v, &file);
        }
        let o = v.as_object_mut().unwrap();
        if let Some(s) = env_seed {
            let seed: u64 = s.trim().parse().map_err(|_| config_err("master_seed", format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
            o.insert("master_seed".into(), json!(seed));
        }
        if let Some(seed) = overrides.seed {
            o.insert("master_seed".into(), json!(seed));
        }
        if let Some(dir) = &overrides.out_dir {
            o.insert("out_dir".into(), json!(dir));
        }
        if overrides.no_plots {
            o.insert("plots".into(), json!(false));
        }
        if let Some(t) = overrides.threads {
            o.insert("threads".into(), json!(t));
        }
        let cfg: Self = serde_json::from_value(v).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults for `kind` with no file, environment or flags.
    pub fn default_for(kind: ExperimentKind) -> Self {
        Self::resolve(kind, None, None, &Overrides::default()).expect("built-in defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.replications < 1 {
            return Err(config_err("replications", "must be at least 1"));
        }
        if self.steps < 1 {
            return Err(config_err("steps", "must be at least 1"));
        }
        if self.alpha == 2.0 {
            if !self.gaussian_sanity {
                return Err(config_err("alpha", "alpha = 2 needs gaussian_sanity = true"));
            }
            if !matches!(self.experiment, ConstantPath) || !matches!(self.model, ModelConfig::Quadratic { .. }) {
                return Err(config_err("alpha", "the alpha = 2 sanity mode is only available for constant-path with a quadratic model"));
            }
        } else if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(config_err("alpha", format!("{} not in (1, 2)", self.alpha)));
        }
        match &self.model {
            ModelConfig::Quadratic { a, b, noise_scale, noise_beta } => {
                let d = b.len();
                if d == 0 {
                    return Err(config_err("model.b", "must be non-empty"));
                }
                if a.len() != d || a.iter().any(|r| r.len() != d) {
                    return Err(config_err("model.a", format!("must be {d} x {d} to match model.b")));
                }
                if !(*noise_scale >= 0.0 && noise_scale.is_finite()) {
                    return Err(config_err("model.noise_scale", "must be finite and nonnegative"));
                }
                if !(-1.0..=1.0).contains(noise_beta) {
                    return Err(config_err("model.noise_beta", "must lie in [-1, 1]"));
                }
            }
            ModelConfig::Logistic { theta_star, lambda, covariate_scale } => {
                if !theta_star.is_finite() {
                    return Err(config_err("model.theta_star", "must be finite"));
                }
                if !(*lambda > 0.0) {
                    return Err(config_err("model.lambda", "must be positive"));
                }
                if !(*covariate_scale >= 0.0 && covariate_scale.is_finite()) {
                    return Err(config_err("model.covariate_scale", "must be finite and nonnegative"));
                }
            }
        }
        match self.schedule {
            ScheduleConfig::Constant { eta } => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(config_err("schedule.eta", "must be positive"));
                }
            }
            ScheduleConfig::Polynomial { c, rho, shift } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(config_err("schedule.c", "must be positive"));
                }
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(config_err("schedule.rho", format!("{rho} not in (0, 1]")));
                }
                if !(shift >= 0.0 && shift.is_finite()) {
                    return Err(config_err("schedule.shift", "must be nonnegative"));
                }
            }
        }
        let needs_constant = matches!(self.experiment, ConstantPath | LogisticPath);
        let needs_decay = matches!(self.experiment, DecayHist | Coverage | LogisticHist);
        let is_constant = matches!(self.schedule, ScheduleConfig::Constant { .. });
        if needs_constant && !is_constant {
            return Err(config_err("schedule.kind", format!("{} needs a constant schedule", self.experiment.name())));
        }
        if needs_decay && is_constant {
            return Err(config_err("schedule.kind", format!("{} needs a polynomial schedule", self.experiment.name())));
        }
        let logistic = matches!(self.model, ModelConfig::Logistic { .. });
        if matches!(self.experiment, LogisticPath | LogisticHist) && !logistic {
            return Err(config_err("model.kind", format!("{} needs the logistic model", self.experiment.name())));
        }
        if let Some(t0) = &self.theta0 {
            if t0.len() != self.model_dim() {
                return Err(config_err("theta0", format!("length {} but the model has dimension {}", t0.len(), self.model_dim())));
            }
            if t0.iter().any(|x| !x.is_finite()) {
                return Err(config_err("theta0", "must be finite"));
            }
        }
        if !(self.jump_threshold > 0.0) {
            return Err(config_err("jump_threshold", "must be positive"));
        }
        if self.bins < 1 {
            return Err(config_err("bins", "must be at least 1"));
        }
        if !(self.coverage_level > 0.0 && self.coverage_level < 1.0) {
            return Err(config_err("coverage_level", "must lie in (0, 1)"));
        }
        if self.coverage_coordinate < 1 || self.coverage_coordinate > self.model_dim() {
            return Err(config_err("coverage_coordinate", format!("must lie in 1..={}", self.model_dim())));
        }
        if self.variance_draws < 2 {
            return Err(config_err("variance_draws", "must be at least 2"));
        }
        if self.threads == Some(0) {
            return Err(config_err("threads", "must be at least 1"));
        }
        self.validate_angular()
    }

    fn validate_angular(&self) -> Result<()> {
        let (theta_star, draws, quantile, dim) = match &self.angular {
            AngularConfig::Ols { points, probs, theta, theta_star, draws, quantile } => {
                let d = theta.len();
                if points.is_empty() || points.iter().any(|p| p.len() != d) {
                    return Err(config_err("angular.points", format!("need at least one point of dimension {d}")));
                }
                if points.iter().any(|p| p.iter().all(|x| *x == 0.0)) {
                    return Err(config_err("angular.points", "zero covariate"));
                }
                if let Some(pr) = probs {
                    if pr.len() != points.len() {
                        return Err(config_err("angular.probs", "one probability per point"));
                    }
                }
                (theta_star, *draws, *quantile, d)
            }
            AngularConfig::Logistic { directions, theta, theta_star, lambda, draws, quantile } => {
                let d = theta.len();
                if directions.is_empty() || directions.iter().any(|p| p.len() != d) {
                    return Err(config_err("angular.directions", format!("need at least one direction of dimension {d}")));
                }
                if !(*lambda >= 0.0) {
                    return Err(config_err("angular.lambda", "must be nonnegative"));
                }
                (theta_star, *draws, *quantile, d)
            }
        };
        if !(1..=2).contains(&dim) {
            return Err(config_err("angular.theta", "angular checks support dimension 1 or 2"));
        }
        if theta_star.len() != dim {
            return Err(config_err("angular.theta_star", format!("must have dimension {dim}")));
        }
        if draws < 1000 {
            return Err(config_err("angular.draws", "need at least 1000 draws"));
        }
        if !(quantile > 0.0 && quantile < 1.0) {
            return Err(config_err("angular.quantile", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn model_dim(&self) -> usize {
        match &self.model {
            ModelConfig::Quadratic { b, .. } => b.len(),
            ModelConfig::Logistic { .. } => 1,
        }
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        Ok(match &self.model {
            ModelConfig::Quadratic { a, b, noise_scale, noise_beta } => {
                let d = b.len();
                let a = DMatrix::from_fn(d, d, |i, j| a[i][j]);
                let noise = StableParams::new(self.alpha, *noise_beta, *noise_scale, 0.0)?;
                ModelSpec::quadratic(a, DVector::from_vec(b.clone()), noise)?
            }
            ModelConfig::Logistic { theta_star, lambda, covariate_scale } => {
                let cov = if *covariate_scale == 0.0 {
                    Covariate::PointMass(0.0)
                } else {
                    Covariate::Stable(StableParams::new(self.alpha, 0.0, *covariate_scale, 0.0)?)
                };
                ModelSpec::logistic(*theta_star, *lambda, cov)?
            }
        })
    }

    pub fn build_schedule(&self) -> Result<StepSchedule> {
        Ok(match self.schedule {
            ScheduleConfig::Constant { eta } => StepSchedule::constant(eta)?,
            ScheduleConfig::Polynomial { c, rho, shift } => StepSchedule::polynomial_shifted(c, rho, shift)?,
        })
    }

    /// Starting point, or the model optimum when none is configured.
    pub fn theta0(&self, model: &ModelSpec) -> Result<DVector<f64>> {
        match &self.theta0 {
            Some(t) => Ok(DVector::from_vec(t.clone())),
            None => Ok(model.optimum()?),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON, ignoring settings that cannot change CSV output.
    pub fn config_hash(&self) -> String {
        let mut v = self.to_json();
        let o = v.as_object_mut().unwrap();
        for k in ["out_dir", "threads", "plots"] {
            o.remove(k);
        }
        let digest = Sha256::digest(serde_json::to_string(&v).unwrap().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn discrete_law(points: &[Vec<f64>], probs: Option<&[f64]>) -> Result<DiscreteLaw> {
    let pts: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_vec(p.clone())).collect();
    Ok(match probs {
        Some(p) => DiscreteLaw::new(pts, p.to_vec())?,
        None => DiscreteLaw::uniform(pts)?,
    })
}
