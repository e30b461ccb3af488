//! Run configuration: parsing (JSON or TOML, strict keys), validation with
//! path-qualified errors, and resolution into concrete runnable pieces
//! (instance, rates, oracle, initial point).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::optimizers::{
    schedule_stepsizes, Method, RecordSpec, Regime, RegimeConstants, ScheduleOpts, StepSizes,
    StopSpec,
};
use crate::oracles::{NoiseKind, OracleParams};
use crate::problems::{
    NccBilinear, PrimalCoeff, PrimalDualPoint, Problem, QuadNcsc, QuadNcscParams, WganInstance,
    WganParams,
};
use crate::rng::{Lane, Stream};
use crate::spectral;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Problem instance selector (the `kind` tag mirrors the JSON interface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    QuadNcsc {
        ell: f64,
        mu: f64,
        #[serde(default)]
        mu_x: f64,
        #[serde(default = "default_primal_coeff")]
        primal_coeff: PrimalCoeff,
    },
    NccBilinear {
        /// Dual half-width D.
        #[serde(alias = "D")]
        radius: f64,
        /// Direct ramp curvature L; exclusive with the target fields.
        #[serde(default, alias = "L")]
        curvature: Option<f64>,
        /// Target smoothness; used with `target_g` as L = min{ell/2, G}/D.
        #[serde(default, alias = "ell")]
        target_ell: Option<f64>,
        /// Target primal Lipschitz constant.
        #[serde(default, alias = "G")]
        target_g: Option<f64>,
    },
    Wgan {
        #[serde(default)]
        mu_data: f64,
        #[serde(default = "default_sigma_data")]
        sigma_data: f64,
        #[serde(default = "default_lambda_reg")]
        lambda_reg: f64,
        #[serde(default = "default_gen_hidden")]
        gen_hidden: usize,
        #[serde(default = "default_dataset_seed")]
        dataset_seed: u64,
        #[serde(default = "default_eval_size")]
        eval_size: usize,
    },
}

fn default_primal_coeff() -> PrimalCoeff {
    PrimalCoeff::HalfEll
}
fn default_sigma_data() -> f64 {
    0.1
}
fn default_lambda_reg() -> f64 {
    0.001
}
fn default_gen_hidden() -> usize {
    5
}
fn default_dataset_seed() -> u64 {
    1
}
fn default_eval_size() -> usize {
    1024
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem, ConfigError> {
        match self {
            ProblemSpec::QuadNcsc {
                ell,
                mu,
                mu_x,
                primal_coeff,
            } => {
                let params = QuadNcscParams::derive(*ell, *mu, *mu_x, *primal_coeff)
                    .map_err(|e| invalid("problem", e.to_string()))?;
                Ok(Problem::QuadNcsc(QuadNcsc::new(params)))
            }
            ProblemSpec::NccBilinear {
                radius,
                curvature,
                target_ell,
                target_g,
            } => {
                let inst = match (curvature, target_ell, target_g) {
                    (Some(l), None, None) => NccBilinear::from_curvature(*l, *radius),
                    (None, Some(ell), Some(g)) => NccBilinear::from_target(*ell, *g, *radius),
                    _ => {
                        return Err(invalid(
                            "problem",
                            "give either curvature, or target_ell with target_g",
                        ))
                    }
                }
                .map_err(|e| invalid("problem", e.to_string()))?;
                Ok(Problem::NccBilinear(inst))
            }
            ProblemSpec::Wgan {
                mu_data,
                sigma_data,
                lambda_reg,
                gen_hidden,
                dataset_seed,
                eval_size,
            } => {
                let params = WganParams {
                    mu_data: *mu_data,
                    sigma_data: *sigma_data,
                    lambda_reg: *lambda_reg,
                    gen_hidden: *gen_hidden,
                };
                let inst = WganInstance::new(params, *dataset_seed, *eval_size)
                    .map_err(|e| invalid("problem", e.to_string()))?;
                Ok(Problem::Wgan(inst))
            }
        }
    }
}

/// Step sizes: explicit record, or the published schedule (optionally with
/// a multiplier and generalized-OGDA ratios).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepsSpec {
    /// The literal string "schedule".
    Named(ScheduleName),
    Schedule {
        schedule: ScheduleParams,
    },
    Explicit(StepSizes),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleParams {
    pub multiplier: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            multiplier: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Explicit primal/dual vectors.
    Point { x: Vec<f64>, y: Vec<f64> },
    /// Aligned with the small-eigenvalue eigenvector of the game matrix,
    /// scaled so the primal component equals `x_scale` (quadratic only).
    Eigenvector { x_scale: f64 },
    /// Primal coordinates uniform in `[lo, hi)` from the run seed; the dual
    /// starts at zero for the WGAN instance and uniform otherwise.
    RandomUniform { lo: f64, hi: f64 },
}

/// Oracle configuration; the seed defaults to the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub sigma: f64,
    pub m_x: usize,
    pub m_y: usize,
    pub seed: Option<u64>,
    pub noise_kind: NoiseKind,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            sigma: 0.0,
            m_x: 1,
            m_y: 1,
            seed: None,
            noise_kind: NoiseKind::AdditiveGaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    #[serde(default)]
    pub regime: Option<Regime>,
    pub steps: StepsSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    pub init: InitSpec,
    pub stop: StopSpec,
    #[serde(default)]
    pub record: RecordSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    0
}

/// Everything needed to execute a run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub instance: Problem,
    pub method: Method,
    pub steps: StepSizes,
    pub oracle: OracleParams,
    pub init: PrimalDualPoint,
    pub stop: StopSpec,
    pub record: RecordSpec,
    pub seed: u64,
    pub config_hash: String,
}

/// Parse a configuration file; the format is chosen by extension
/// (`.toml` is TOML, anything else JSON). Unknown keys are errors.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let config: RunConfig = if is_toml {
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
    } else {
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
    };
    config.validate()?;
    Ok(config)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: "<inline>".into(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Field-level validation with JSON-pointer-style paths.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let StepsSpec::Explicit(s) = &self.steps {
            if s.eta_x <= 0.0 && s.eta_x1.is_none() {
                return Err(invalid("steps.eta_x", "must be positive"));
            }
            if s.eta_y <= 0.0 && s.eta_y1.is_none() {
                return Err(invalid("steps.eta_y", "must be positive"));
            }
        } else if self.regime.is_none() {
            return Err(invalid("regime", "required when steps = \"schedule\""));
        }
        if self.oracle.sigma < 0.0 {
            return Err(invalid("oracle.sigma", "must be >= 0"));
        }
        if self.oracle.m_x == 0 || self.oracle.m_y == 0 {
            return Err(invalid("oracle.m_x/m_y", "minibatch sizes must be >= 1"));
        }
        if self.oracle.noise_kind == NoiseKind::Empirical
            && !matches!(self.problem, ProblemSpec::Wgan { .. })
        {
            return Err(invalid(
                "oracle.noise_kind",
                "empirical sampling is only defined for the wgan instance",
            ));
        }
        if let Some(eps) = self.stop.epsilon {
            if eps <= 0.0 {
                return Err(invalid("stop.epsilon", "must be positive when set"));
            }
        }
        if let InitSpec::RandomUniform { lo, hi } = self.init {
            if !(lo < hi) {
                return Err(invalid("init.lo/hi", "need lo < hi"));
            }
        }
        if matches!(self.init, InitSpec::Eigenvector { .. })
            && !matches!(self.problem, ProblemSpec::QuadNcsc { .. })
        {
            return Err(invalid(
                "init",
                "eigenvector initialization is defined for the quadratic instance only",
            ));
        }
        Ok(())
    }

    /// Canonical JSON (defaults materialized, stable key order).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex-encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_json().as_bytes());
        hex_string(&h.finalize())
    }

    /// Regime constants derived from the instance for schedule resolution.
    fn regime_constants(&self, instance: &Problem) -> Result<RegimeConstants, ConfigError> {
        match instance {
            Problem::QuadNcsc(q) => Ok(RegimeConstants::Ncsc {
                ell: q.params().ell,
                mu: q.params().mu,
            }),
            Problem::NccBilinear(q) => Ok(RegimeConstants::Ncc {
                ell: q.params().ell,
                g_lip: q.params().g_lip,
                radius: q.params().radius,
                sigma: self.oracle.sigma,
            }),
            Problem::Wgan(_) => Err(invalid(
                "steps",
                "the wgan instance has no declared constants; give explicit step sizes",
            )),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedRun, ConfigError> {
        self.validate()?;
        let instance = self.problem.build()?;
        let steps = match &self.steps {
            StepsSpec::Explicit(s) => {
                s.resolve(self.method)
                    .map_err(|e| invalid("steps", e.to_string()))?;
                *s
            }
            named_or_params => {
                let params = match named_or_params {
                    StepsSpec::Schedule { schedule } => *schedule,
                    _ => ScheduleParams::default(),
                };
                let regime = self
                    .regime
                    .ok_or_else(|| invalid("regime", "required when steps = \"schedule\""))?;
                let constants = self.regime_constants(&instance)?;
                schedule_stepsizes(
                    self.method,
                    regime,
                    constants,
                    self.stop.epsilon,
                    ScheduleOpts {
                        multiplier: params.multiplier,
                        alpha: params.alpha,
                        beta: params.beta,
                    },
                )
                .map_err(|e| invalid("steps", e.to_string()))?
            }
        };
        let oracle = OracleParams {
            sigma: self.oracle.sigma,
            m_x: self.oracle.m_x,
            m_y: self.oracle.m_y,
            seed: self.oracle.seed.unwrap_or(self.seed),
            noise_kind: self.oracle.noise_kind,
        };
        let init = self.resolve_init(&instance, &steps)?;
        Ok(ResolvedRun {
            instance,
            method: self.method,
            steps,
            oracle,
            init,
            stop: self.stop,
            record: self.record,
            seed: self.seed,
            config_hash: self.hash(),
        })
    }

    fn resolve_init(
        &self,
        instance: &Problem,
        steps: &StepSizes,
    ) -> Result<PrimalDualPoint, ConfigError> {
        let (m, n) = instance.dims();
        match &self.init {
            InitSpec::Point { x, y } => {
                if x.len() != m || y.len() != n {
                    return Err(invalid(
                        "init.x/y",
                        format!("expected dims ({m}, {n}), got ({}, {})", x.len(), y.len()),
                    ));
                }
                Ok(PrimalDualPoint::new(x.clone(), y.clone()))
            }
            InitSpec::Eigenvector { x_scale } => {
                let q = match instance {
                    Problem::QuadNcsc(q) => q,
                    _ => unreachable!("validated"),
                };
                let rates = steps
                    .resolve(self.method)
                    .map_err(|e| invalid("steps", e.to_string()))?;
                let r = rates.y1 / rates.x1;
                let mm =
                    spectral::build_m(q.params(), r).map_err(|e| invalid("init", e.to_string()))?;
                let (l1, _) = spectral::eigen2(&mm);
                if l1.im != 0.0 {
                    return Err(invalid(
                        "init",
                        format!("leading eigenvalue is complex ({l1}); no real eigenvector"),
                    ));
                }
                let v = spectral::eigenvector(&mm, l1.re)
                    .map_err(|e| invalid("init", e.to_string()))?;
                Ok(PrimalDualPoint::scalar(*x_scale, x_scale * v[1]))
            }
            InitSpec::RandomUniform { lo, hi } => {
                let mut s = Stream::new(self.seed, 0, Lane::Init);
                let x: Vec<f64> = (0..m).map(|_| s.next_range(*lo, *hi)).collect();
                let y: Vec<f64> = match instance {
                    Problem::Wgan(_) => vec![0.0; n],
                    _ => (0..n).map(|_| s.next_range(*lo, *hi)).collect(),
                };
                Ok(PrimalDualPoint::new(x, y))
            }
        }
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
