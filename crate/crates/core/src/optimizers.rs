//! Update rules and run loop.
//!
//! GDA, OGDA, EG and generalized OGDA, all simultaneous: both players'
//! gradients are evaluated at the same pre-update point. Dual updates are
//! projected whenever the instance declares a bounded dual box. GDA, OGDA
//! and generalized OGDA share one update kernel
//!
//! `x' = x - η_{x,1}·g_x - η_{x,2}·(g_x - g_x_prev)`
//!
//! so the reduction identities (equal paired rates ≡ OGDA, zero correction
//! rates ≡ GDA) hold bit-for-bit, not merely to rounding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics;
use crate::oracles::{sample_gradients, OracleError, OracleParams, OracleSample, Stage};
use crate::problems::{project_box, GradPair, PrimalDualPoint, Problem, ProblemError};
use crate::rng::{Lane, Stream};

/// Iterate norms above this are treated as divergence (an expected outcome
/// of the lower-bound regimes, recorded rather than crashed on).
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid step sizes: {0}")]
    InvalidSteps(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gda,
    Ogda,
    Eg,
    GenOgda,
}

impl Method {
    pub fn tracks_ghost(self) -> bool {
        matches!(self, Method::Ogda | Method::GenOgda)
    }
}

/// Full learning-rate record. `eta_x`/`eta_y` drive GDA, OGDA and EG;
/// the split rates drive generalized OGDA (`eta_x1` on the gradient,
/// `eta_x2` on the correction term, and likewise for the dual).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct StepSizes {
    pub eta_x: f64,
    pub eta_y: f64,
    pub eta_x1: Option<f64>,
    pub eta_x2: Option<f64>,
    pub eta_y1: Option<f64>,
    pub eta_y2: Option<f64>,
    /// `eta_x2 / eta_x1`.
    pub alpha: Option<f64>,
    /// `eta_y1 / eta_y2`.
    pub beta: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl StepSizes {
    pub fn plain(eta_x: f64, eta_y: f64) -> Self {
        StepSizes {
            eta_x,
            eta_y,
            ..Default::default()
        }
    }

    pub fn generalized(eta_x1: f64, eta_x2: f64, eta_y1: f64, eta_y2: f64) -> Self {
        StepSizes {
            eta_x: eta_x1,
            eta_y: eta_y1,
            eta_x1: Some(eta_x1),
            eta_x2: Some(eta_x2),
            eta_y1: Some(eta_y1),
            eta_y2: Some(eta_y2),
            alpha: Some(eta_x2 / eta_x1),
            beta: Some(eta_y1 / eta_y2),
            ..Default::default()
        }
    }

    /// Concrete `(x1, x2, y1, y2)` rates for the shared update kernel.
    pub fn resolve(&self, method: Method) -> Result<ResolvedRates, OptError> {
        let positive = |v: f64, name: &str| -> Result<f64, OptError> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(OptError::InvalidSteps(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match method {
            Method::Gda => Ok(ResolvedRates {
                x1: positive(self.eta_x, "eta_x")?,
                x2: 0.0,
                y1: positive(self.eta_y, "eta_y")?,
                y2: 0.0,
            }),
            Method::Ogda | Method::Eg => {
                let ex = positive(self.eta_x, "eta_x")?;
                let ey = positive(self.eta_y, "eta_y")?;
                Ok(ResolvedRates {
                    x1: ex,
                    x2: ex,
                    y1: ey,
                    y2: ey,
                })
            }
            Method::GenOgda => {
                let x1 = positive(
                    self.eta_x1
                        .ok_or_else(|| OptError::InvalidSteps("eta_x1 missing".into()))?,
                    "eta_x1",
                )?;
                let y1 = positive(
                    self.eta_y1
                        .ok_or_else(|| OptError::InvalidSteps("eta_y1 missing".into()))?,
                    "eta_y1",
                )?;
                let x2 = match (self.eta_x2, self.alpha) {
                    (Some(v), _) => v,
                    (None, Some(a)) => a * x1,
                    (None, None) => return Err(OptError::InvalidSteps("eta_x2 missing".into())),
                };
                let y2 = match (self.eta_y2, self.beta) {
                    (Some(v), _) => v,
                    // beta = eta_y1/eta_y2, so eta_y2 = eta_y1/beta.
                    (None, Some(b)) if b > 0.0 => y1 / b,
                    (None, _) => return Err(OptError::InvalidSteps("eta_y2 missing".into())),
                };
                if x2 < 0.0 || y2 < 0.0 || !x2.is_finite() || !y2.is_finite() {
                    return Err(OptError::InvalidSteps(
                        "correction rates must be finite and >= 0".into(),
                    ));
                }
                if let Some(a) = self.alpha {
                    if self.eta_x2.is_some() && (a - x2 / x1).abs() > 1e-12 * a.abs().max(1.0) {
                        return Err(OptError::InvalidSteps(format!(
                            "alpha = {a} contradicts eta_x2/eta_x1 = {}",
                            x2 / x1
                        )));
                    }
                }
                if let Some(b) = self.beta {
                    if self.eta_y2.is_some() && (b - y1 / y2).abs() > 1e-12 * b.abs().max(1.0) {
                        return Err(OptError::InvalidSteps(format!(
                            "beta = {b} contradicts eta_y1/eta_y2 = {}",
                            y1 / y2
                        )));
                    }
                }
                Ok(ResolvedRates { x1, x2, y1, y2 })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRates {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

impl ResolvedRates {
    /// `alpha = eta_x2/eta_x1` as used in the generalized analysis.
    pub fn alpha(&self) -> f64 {
        self.x2 / self.x1
    }

    /// `beta = eta_y1/eta_y2`; 1 when there is no correction rate.
    pub fn beta(&self) -> f64 {
        if self.y2 == 0.0 {
            1.0
        } else {
            self.y1 / self.y2
        }
    }
}

/// Problem regime a schedule targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Ncsc,
    Ncc,
    NccStochastic,
}

/// Instance constants consumed by the schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeConstants {
    Ncsc {
        ell: f64,
        mu: f64,
    },
    Ncc {
        ell: f64,
        g_lip: f64,
        radius: f64,
        sigma: f64,
    },
}

/// Options for [`schedule_stepsizes`]: the NC-C rates are stated up to a
/// leading constant, exposed here as a multiplier (default 1).
#[derive(Debug, Clone, Copy)]
pub struct ScheduleOpts {
    pub multiplier: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScheduleOpts {
    fn default() -> Self {
        ScheduleOpts {
            multiplier: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// The published step-size schedules.
///
/// NC-SC: OGDA `η_x = 1/(50κ²ℓ), η_y = 1/(6ℓ)`; EG `η_x = 1/(75κ²ℓ),
/// η_y = 1/(4ℓ)`; GDA `η_x = 1/(κ²ℓ), η_y = 1/ℓ`; generalized OGDA
/// `η_{x,1} = 1/(50κ²ℓ), η_{y,2} = 1/(6ℓ)` with ratio constraints
/// `β <= 1`, `α <= 2κ²√β` (violations warn, they do not refuse).
///
/// NC-C (deterministic): `η_x = min{ε/(ℓG), ε²/(ℓG²), ε⁴/(D²G²ℓ³)}`,
/// `η_y = 1/(2ℓ)`. NC-C stochastic: `η_x = min{ε²/(ℓ(G²+σ²)),
/// ε⁴/(D²ℓ³G√(G²+σ²)), ε⁶/(D²ℓ³σ²G√(G²+σ²))}`,
/// `η_y = min{1/(4ℓ), ε²/(ℓσ²)}`.
pub fn schedule_stepsizes(
    method: Method,
    regime: Regime,
    constants: RegimeConstants,
    epsilon: Option<f64>,
    opts: ScheduleOpts,
) -> Result<StepSizes, OptError> {
    match (regime, constants) {
        (Regime::Ncsc, RegimeConstants::Ncsc { ell, mu }) => {
            if !(ell > 0.0 && mu > 0.0) {
                return Err(OptError::InvalidSteps("ell, mu must be positive".into()));
            }
            let kappa = ell / mu;
            match method {
                Method::Gda => {
                    let mut s = StepSizes::plain(1.0 / (kappa * kappa * ell), 1.0 / ell);
                    s.c1 = Some(1.0);
                    s.c2 = Some(1.0);
                    Ok(s)
                }
                Method::Ogda => {
                    let (c1, c2) = (1.0 / 50.0, 1.0 / 6.0);
                    let mut s = StepSizes::plain(c1 / (kappa * kappa * ell), c2 / ell);
                    s.c1 = Some(c1);
                    s.c2 = Some(c2);
                    Ok(s)
                }
                Method::Eg => {
                    let (c1, c2) = (1.0 / 75.0, 1.0 / 4.0);
                    let mut s = StepSizes::plain(c1 / (kappa * kappa * ell), c2 / ell);
                    s.c1 = Some(c1);
                    s.c2 = Some(c2);
                    Ok(s)
                }
                Method::GenOgda => {
                    let (alpha, beta) = (opts.alpha, opts.beta);
                    if beta > 1.0 || alpha > 2.0 * kappa * kappa * beta.sqrt() {
                        log::warn!(
                            "generalized OGDA ratios outside the analyzed range: \
                             beta = {beta} (needs <= 1), alpha = {alpha} \
                             (needs <= 2k^2 sqrt(beta) = {})",
                            2.0 * kappa * kappa * beta.sqrt()
                        );
                    }
                    let x1 = 1.0 / (50.0 * kappa * kappa * ell);
                    let y2 = 1.0 / (6.0 * ell);
                    let mut s = StepSizes::generalized(x1, alpha * x1, beta * y2, y2);
                    s.c1 = Some(1.0 / 50.0);
                    s.c2 = Some(1.0 / 6.0);
                    Ok(s)
                }
            }
        }
        (
            Regime::Ncc,
            RegimeConstants::Ncc {
                ell, g_lip, radius, ..
            },
        ) => {
            let eps = require_epsilon(epsilon)?;
            if method == Method::GenOgda {
                return Err(OptError::Unsupported(
                    "no published schedule for generalized OGDA in the NC-C regime".into(),
                ));
            }
            let g2 = g_lip * g_lip;
            let eta_x = opts.multiplier
                * (eps / (ell * g_lip))
                    .min(eps * eps / (ell * g2))
                    .min(eps.powi(4) / (radius * radius * g2 * ell.powi(3)));
            Ok(StepSizes::plain(eta_x, 1.0 / (2.0 * ell)))
        }
        (
            Regime::NccStochastic,
            RegimeConstants::Ncc {
                ell,
                g_lip,
                radius,
                sigma,
            },
        ) => {
            let eps = require_epsilon(epsilon)?;
            if !matches!(method, Method::Ogda | Method::Eg) {
                return Err(OptError::Unsupported(format!(
                    "no published schedule for {method:?} in the stochastic NC-C regime"
                )));
            }
            let gs = (g_lip * g_lip + sigma * sigma).sqrt();
            let d2l3 = radius * radius * ell.powi(3);
            let mut eta_x = (eps * eps / (ell * (g_lip * g_lip + sigma * sigma)))
                .min(eps.powi(4) / (d2l3 * g_lip * gs));
            let mut eta_y = 1.0 / (4.0 * ell);
            if sigma > 0.0 {
                eta_x = eta_x.min(eps.powi(6) / (d2l3 * sigma * sigma * g_lip * gs));
                eta_y = eta_y.min(eps * eps / (ell * sigma * sigma));
            }
            Ok(StepSizes::plain(opts.multiplier * eta_x, eta_y))
        }
        (regime, constants) => Err(OptError::Unsupported(format!(
            "schedule for regime {regime:?} needs matching constants, got {constants:?}"
        ))),
    }
}

fn require_epsilon(epsilon: Option<f64>) -> Result<f64, OptError> {
    match epsilon {
        Some(e) if e > 0.0 => Ok(e),
        _ => Err(OptError::InvalidSteps(
            "NC-C schedules depend on epsilon; provide epsilon > 0".into(),
        )),
    }
}

/// Live optimizer state: current and one-step-lagged iterates, lagged
/// sample gradients, the EG midpoint, the OGDA ghost dual iterate `z_t`
/// and the last combined primal direction `g_t = 2g_{x,t} - g_{x,t-1}`.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub t: u64,
    pub cur: PrimalDualPoint,
    pub prev: PrimalDualPoint,
    /// Sample gradients at `prev`; `None` before the first step encodes the
    /// `x_{-1} = x_0` convention (the first correction term vanishes).
    pub g_prev: Option<GradPair>,
    /// Midpoint of the most recent EG step.
    pub mid: Option<PrimalDualPoint>,
    /// Ghost dual iterate `z_t` (OGDA family), `z_0 = y_0`.
    pub z: Vec<f64>,
    /// Combined primal direction of the most recent step.
    pub g_combined: Option<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(init: PrimalDualPoint) -> Self {
        OptimizerState {
            t: 0,
            z: init.y.clone(),
            prev: init.clone(),
            cur: init,
            g_prev: None,
            mid: None,
            g_combined: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Ok,
    Diverged,
}

fn guard(p: &PrimalDualPoint) -> StepStatus {
    if !p.is_finite() || p.inf_norm() > DIVERGENCE_GUARD {
        StepStatus::Diverged
    } else {
        StepStatus::Ok
    }
}

/// Shared kernel: descent on x, ascent on y, optional correction terms,
/// projection onto the dual box when the instance has one.
fn kernel_update(
    instance: &Problem,
    cur: &PrimalDualPoint,
    g: &OracleSample,
    g_prev: &GradPair,
    r: &ResolvedRates,
) -> PrimalDualPoint {
    let x: Vec<f64> = cur
        .x
        .iter()
        .enumerate()
        .map(|(i, xi)| xi - r.x1 * g.g_x[i] - r.x2 * (g.g_x[i] - g_prev.gx[i]))
        .collect();
    let mut y: Vec<f64> = cur
        .y
        .iter()
        .enumerate()
        .map(|(j, yj)| yj + r.y1 * g.g_y[j] + r.y2 * (g.g_y[j] - g_prev.gy[j]))
        .collect();
    if let Some(radius) = instance.dual_radius() {
        project_box(&mut y, radius);
    }
    PrimalDualPoint::new(x, y)
}

fn kernel_step(
    state: &mut OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    rates: &ResolvedRates,
) -> Result<StepStatus, OptError> {
    if guard(&state.cur) == StepStatus::Diverged {
        return Ok(StepStatus::Diverged);
    }
    let g = sample_gradients(instance, &state.cur, oracle, state.t, Stage::Base)?;
    let g_prev = state.g_prev.clone().unwrap_or_else(|| g.grads());
    // Ghost dual iterate: z_{t+1} = y_t + eta_{y,1} g_{y,t} - eta_{y,2} g_{y,t-1}.
    let z: Vec<f64> = state
        .cur
        .y
        .iter()
        .enumerate()
        .map(|(j, yj)| yj + rates.y1 * g.g_y[j] - rates.y2 * g_prev.gy[j])
        .collect();
    let combined: Vec<f64> = g
        .g_x
        .iter()
        .zip(&g_prev.gx)
        .map(|(gi, pi)| gi + rates.x2 / rates.x1 * (gi - pi))
        .collect();
    let next = kernel_update(instance, &state.cur, &g, &g_prev, rates);
    state.prev = std::mem::replace(&mut state.cur, next);
    state.g_prev = Some(g.grads());
    state.z = z;
    state.g_combined = Some(combined);
    state.mid = None;
    state.t += 1;
    Ok(guard(&state.cur))
}

/// One GDA step: `x' = x - η_x g_x`, `y' = P(y + η_y g_y)`, both gradients
/// at the pre-update point.
pub fn gda_step(
    state: &mut OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    steps: &StepSizes,
) -> Result<StepStatus, OptError> {
    let rates = steps.resolve(Method::Gda)?;
    kernel_step(state, instance, oracle, &rates)
}

/// One OGDA step: `x' = x - η_x(2g_{x,t} - g_{x,t-1})` and the mirrored
/// ascent on `y`, projected. The first step uses the `x_{-1} = x_0`
/// convention, so it coincides with a GDA step.
pub fn ogda_step(
    state: &mut OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    steps: &StepSizes,
) -> Result<StepStatus, OptError> {
    let rates = steps.resolve(Method::Ogda)?;
    kernel_step(state, instance, oracle, &rates)
}

/// One generalized OGDA step with split gradient/correction rates.
pub fn gen_ogda_step(
    state: &mut OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    steps: &StepSizes,
) -> Result<StepStatus, OptError> {
    let rates = steps.resolve(Method::GenOgda)?;
    kernel_step(state, instance, oracle, &rates)
}

/// One EG step: probe to the midpoint with the base-point gradient, then
/// update from the base point with the midpoint gradient. The stochastic
/// variant draws an independent sample at the midpoint.
pub fn eg_step(
    state: &mut OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    steps: &StepSizes,
) -> Result<StepStatus, OptError> {
    let rates = steps.resolve(Method::Eg)?;
    if guard(&state.cur) == StepStatus::Diverged {
        return Ok(StepStatus::Diverged);
    }
    let g = sample_gradients(instance, &state.cur, oracle, state.t, Stage::Base)?;
    let mut mid = PrimalDualPoint::new(
        state
            .cur
            .x
            .iter()
            .enumerate()
            .map(|(i, xi)| xi - rates.x1 * g.g_x[i])
            .collect(),
        state
            .cur
            .y
            .iter()
            .enumerate()
            .map(|(j, yj)| yj + rates.y1 * g.g_y[j])
            .collect(),
    );
    if let Some(radius) = instance.dual_radius() {
        project_box(&mut mid.y, radius);
    }
    if guard(&mid) == StepStatus::Diverged {
        state.prev = state.cur.clone();
        state.cur = mid.clone();
        state.mid = Some(mid);
        state.t += 1;
        return Ok(StepStatus::Diverged);
    }
    let g_mid = sample_gradients(instance, &mid, oracle, state.t, Stage::Mid)?;
    let mut next = PrimalDualPoint::new(
        state
            .cur
            .x
            .iter()
            .enumerate()
            .map(|(i, xi)| xi - rates.x1 * g_mid.g_x[i])
            .collect(),
        state
            .cur
            .y
            .iter()
            .enumerate()
            .map(|(j, yj)| yj + rates.y1 * g_mid.g_y[j])
            .collect(),
    );
    if let Some(radius) = instance.dual_radius() {
        project_box(&mut next.y, radius);
    }
    state.prev = std::mem::replace(&mut state.cur, next);
    state.g_prev = Some(g.grads());
    state.mid = Some(mid);
    state.g_combined = None;
    state.t += 1;
    Ok(guard(&state.cur))
}

pub fn step(
    method: Method,
    state: &mut OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    steps: &StepSizes,
) -> Result<StepStatus, OptError> {
    match method {
        Method::Gda => gda_step(state, instance, oracle, steps),
        Method::Ogda => ogda_step(state, instance, oracle, steps),
        Method::Eg => eg_step(state, instance, oracle, steps),
        Method::GenOgda => gen_ogda_step(state, instance, oracle, steps),
    }
}

/// Stationarity measure used for stopping and first-hit detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `‖∇Φ(x)‖`.
    GradPhi,
    /// `‖∇Φ_{1/2ℓ}(x)‖`.
    Moreau,
    /// `‖∇_x f‖² + ‖∇_y f‖²` (the WGAN experiment metric).
    GradFSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub t_max: u64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_measure")]
    pub measure: Measure,
}

fn default_measure() -> Measure {
    Measure::GradPhi
}

/// What the run loop records per iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecordSpec {
    /// Keep the full iterate history (and EG midpoints).
    pub points: bool,
    /// Keep per-iterate sample gradients.
    pub grads: bool,
    /// Record `‖∇Φ(x_t)‖`.
    pub grad_phi: bool,
    /// Record `‖∇Φ_{1/2ℓ}(x_t)‖` every k-th iterate (0 = never).
    pub moreau_every: usize,
    /// Record the potential `r_t` (OGDA family only).
    pub potentials: bool,
    /// Record `‖∇f‖²` from the exact gradient.
    pub grad_f_sq: bool,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec {
            points: true,
            grads: true,
            grad_phi: false,
            moreau_every: 0,
            potentials: false,
            grad_f_sq: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    HitEpsilon,
    Diverged,
}

/// Time-indexed record of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Iterates `x_0..x_T` (empty when point recording is off).
    pub points: Vec<PrimalDualPoint>,
    /// EG midpoints, one per executed step.
    pub midpoints: Vec<PrimalDualPoint>,
    /// Sample gradients at each iterate (the sample step `t+1` consumes).
    pub sample_grads: Vec<GradPair>,
    /// The stopping measure at each iterate.
    pub measure: Vec<f64>,
    /// `‖∇f‖²` at each iterate when recorded.
    pub grad_f_sq: Vec<f64>,
    /// `‖∇Φ‖` at each iterate when recorded.
    pub grad_phi: Vec<f64>,
    /// `(t, ‖∇Φ_{1/2ℓ}(x_t)‖)` at the requested cadence.
    pub moreau_grad: Vec<(u64, f64)>,
    /// `r_t` at each iterate when recorded (OGDA family).
    pub potentials: Vec<f64>,
    pub stop_reason: StopReason,
    /// Number of executed steps; `points.len() == steps + 1` when recorded.
    pub steps: u64,
    /// Final iterate.
    pub last: PrimalDualPoint,
    /// Uniformly chosen iterate index in `1..=T` (0 when T = 0).
    pub returned_index: u64,
    /// The iterate at `returned_index` (the last iterate when point
    /// recording is off).
    pub returned: PrimalDualPoint,
    /// Final state, for diagnostics.
    pub final_state: OptimizerState,
}

impl Trajectory {
    /// Smallest `t` with `measure(x_t) <= epsilon`.
    pub fn first_hit(&self, epsilon: f64) -> Option<u64> {
        self.measure
            .iter()
            .position(|m| *m <= epsilon)
            .map(|i| i as u64)
    }
}

/// Run `method` from `init` until `stop.t_max` steps, the measure dropping
/// to `stop.epsilon`, or the divergence guard. Divergence is a recorded
/// outcome, not an error.
pub fn run(
    instance: &Problem,
    method: Method,
    steps: &StepSizes,
    oracle: &OracleParams,
    init: PrimalDualPoint,
    stop: &StopSpec,
    record: &RecordSpec,
) -> Result<Trajectory, OptError> {
    oracle.validate()?;
    if record.potentials && !method.tracks_ghost() {
        return Err(OptError::Unsupported(
            "potential r_t is defined for the OGDA family only".into(),
        ));
    }
    let rates = steps.resolve(method)?;
    let mut state = OptimizerState::new(init);
    let mut traj = Trajectory {
        points: Vec::new(),
        midpoints: Vec::new(),
        sample_grads: Vec::new(),
        measure: Vec::new(),
        grad_f_sq: Vec::new(),
        grad_phi: Vec::new(),
        moreau_grad: Vec::new(),
        potentials: Vec::new(),
        stop_reason: StopReason::MaxIters,
        steps: 0,
        last: state.cur.clone(),
        returned_index: 0,
        returned: state.cur.clone(),
        final_state: state.clone(),
    };

    record_iterate(&mut traj, &state, instance, oracle, record, stop, &rates)?;
    if let Some(eps) = stop.epsilon {
        if traj.measure[0] <= eps {
            traj.stop_reason = StopReason::HitEpsilon;
            return Ok(finish(traj, state, oracle));
        }
    }
    for _ in 1..=stop.t_max {
        let status = step(method, &mut state, instance, oracle, steps)?;
        if record.points {
            if let Some(mid) = &state.mid {
                traj.midpoints.push(mid.clone());
            }
        }
        record_iterate(&mut traj, &state, instance, oracle, record, stop, &rates)?;
        traj.steps = state.t;
        if status == StepStatus::Diverged {
            traj.stop_reason = StopReason::Diverged;
            break;
        }
        if let Some(eps) = stop.epsilon {
            if *traj.measure.last().unwrap() <= eps {
                traj.stop_reason = StopReason::HitEpsilon;
                break;
            }
        }
    }
    Ok(finish(traj, state, oracle))
}

#[allow(clippy::too_many_arguments)]
fn record_iterate(
    traj: &mut Trajectory,
    state: &OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    record: &RecordSpec,
    stop: &StopSpec,
    rates: &ResolvedRates,
) -> Result<(), OptError> {
    let p = &state.cur;
    let finite = p.is_finite();
    if record.points {
        traj.points.push(p.clone());
    }
    if record.grads {
        if finite {
            let s = sample_gradients(instance, p, oracle, state.t, Stage::Base)?;
            traj.sample_grads.push(s.grads());
        } else {
            let (m, n) = instance.dims();
            traj.sample_grads.push(GradPair {
                gx: vec![f64::NAN; m],
                gy: vec![f64::NAN; n],
            });
        }
    }
    if record.potentials {
        let r = if finite {
            metrics::potential_from_state(state, instance, oracle, rates)?.r
        } else {
            f64::NAN
        };
        traj.potentials.push(r);
    }
    let measure = if finite {
        metrics::eval_measure(instance, p, stop.measure)?
    } else {
        f64::NAN
    };
    traj.measure.push(measure);
    if record.grad_f_sq {
        let v = if finite {
            instance.grad(p)?.norm_sq()
        } else {
            f64::NAN
        };
        traj.grad_f_sq.push(v);
    }
    if record.grad_phi {
        let v = if finite {
            let (_, g) = instance.primal(&p.x)?;
            crate::problems::dot(&g, &g).sqrt()
        } else {
            f64::NAN
        };
        traj.grad_phi.push(v);
    }
    if record.moreau_every > 0 && (state.t as usize).is_multiple_of(record.moreau_every) && finite {
        let rep = metrics::moreau_grad(instance, &p.x, None)?;
        traj.moreau_grad.push((state.t, rep.grad_norm));
    }
    Ok(())
}

fn finish(mut traj: Trajectory, state: OptimizerState, oracle: &OracleParams) -> Trajectory {
    traj.last = state.cur.clone();
    traj.steps = state.t;
    if state.t > 0 {
        let mut s = Stream::new(oracle.seed, 0, Lane::ReturnChoice);
        let ix = 1 + s.next_index(state.t as usize) as u64;
        traj.returned_index = ix;
        traj.returned = if traj.points.is_empty() {
            state.cur.clone()
        } else {
            traj.points[ix as usize].clone()
        };
    } else {
        traj.returned_index = 0;
        traj.returned = state.cur.clone();
    }
    traj.final_state = state;
    traj
}
