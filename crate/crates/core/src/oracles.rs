//! Stochastic first-order oracles.
//!
//! Synthetic instances get additive Gaussian noise injected post-averaging
//! (`g = ∇f + ζ/sqrt(M)`, per-coordinate variance `σ²/M`); the WGAN
//! instance gets true minibatch gradients over freshly drawn samples. Draws
//! are keyed by `(seed, iteration, lane)` so replay is exact and parallel
//! runs never share streams. The deviations `δ = g - ∇f` are surfaced for
//! diagnostics only and are never consumed by the optimizers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::{GradPair, PrimalDualPoint, Problem};
use crate::rng::{Lane, Stream};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error("empirical sampling is only defined for the wgan instance")]
    EmpiricalOnSynthetic,
    #[error(transparent)]
    Problem(#[from] crate::problems::ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    AdditiveGaussian,
    /// True minibatch sampling; WGAN only.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Per-sample noise standard deviation; 0 means deterministic.
    pub sigma: f64,
    /// Primal minibatch size.
    pub m_x: usize,
    /// Dual minibatch size.
    pub m_y: usize,
    /// Reproducibility seed.
    pub seed: u64,
    pub noise_kind: NoiseKind,
}

impl OracleParams {
    pub fn deterministic(seed: u64) -> Self {
        OracleParams {
            sigma: 0.0,
            m_x: 1,
            m_y: 1,
            seed,
            noise_kind: NoiseKind::AdditiveGaussian,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.m_x == 0 || self.m_y == 0 {
            return Err(OracleError::InvalidConfig(
                "minibatch sizes must be >= 1".into(),
            ));
        }
        if !(self.sigma >= 0.0) {
            return Err(OracleError::InvalidConfig("sigma must be >= 0".into()));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        match self.noise_kind {
            NoiseKind::AdditiveGaussian => self.sigma == 0.0,
            NoiseKind::Empirical => false,
        }
    }
}

/// Which point of an iteration the sample is drawn at. EG draws fresh
/// samples at the midpoint; the two stages use disjoint streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Base,
    Mid,
}

/// One stochastic gradient sample plus its deviation from the exact
/// gradient (diagnostics only).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub g_x: Vec<f64>,
    pub g_y: Vec<f64>,
    pub delta_x: Vec<f64>,
    pub delta_y: Vec<f64>,
}

impl OracleSample {
    pub fn grads(&self) -> GradPair {
        GradPair {
            gx: self.g_x.clone(),
            gy: self.g_y.clone(),
        }
    }
}

/// Draw the `(seed, t)` gradient sample at `point`.
///
/// `sigma = 0` with the additive-Gaussian kind returns the exact gradient
/// bit-for-bit (no noise path is entered at all).
pub fn sample_gradients(
    instance: &Problem,
    point: &PrimalDualPoint,
    params: &OracleParams,
    t: u64,
    stage: Stage,
) -> Result<OracleSample, OracleError> {
    params.validate()?;
    match params.noise_kind {
        NoiseKind::AdditiveGaussian => {
            let exact = instance.grad(point)?;
            if params.sigma == 0.0 {
                let zx = vec![0.0; exact.gx.len()];
                let zy = vec![0.0; exact.gy.len()];
                return Ok(OracleSample {
                    g_x: exact.gx,
                    g_y: exact.gy,
                    delta_x: zx,
                    delta_y: zy,
                });
            }
            let (lane_x, lane_y) = stage_lanes(stage);
            let mut sx = Stream::new(params.seed, t, lane_x);
            let mut sy = Stream::new(params.seed, t, lane_y);
            let scale_x = params.sigma / (params.m_x as f64).sqrt();
            let scale_y = params.sigma / (params.m_y as f64).sqrt();
            let delta_x: Vec<f64> = exact.gx.iter().map(|_| scale_x * sx.next_gauss()).collect();
            let delta_y: Vec<f64> = exact.gy.iter().map(|_| scale_y * sy.next_gauss()).collect();
            Ok(OracleSample {
                g_x: exact.gx.iter().zip(&delta_x).map(|(g, d)| g + d).collect(),
                g_y: exact.gy.iter().zip(&delta_y).map(|(g, d)| g + d).collect(),
                delta_x,
                delta_y,
            })
        }
        NoiseKind::Empirical => {
            let wgan = match instance {
                Problem::Wgan(w) => w,
                _ => return Err(OracleError::EmpiricalOnSynthetic),
            };
            let exact = instance.grad(point)?;
            let (lane_x, lane_y) = stage_lanes(stage);
            // Primal sample: the real-data term does not touch the
            // generator, so only noise draws are needed.
            let mut sx = Stream::new(params.seed, t, lane_x);
            let noise_x: Vec<f64> = (0..params.m_x)
                .map(|_| wgan.sample_noise(&mut sx))
                .collect();
            let gx = wgan.batch_grad(&point.x, &point.y, &[0.0], &noise_x)?.gx;
            // Dual sample: fresh real batch, then fresh noise batch.
            let mut sy = Stream::new(params.seed, t, lane_y);
            let real_y: Vec<f64> = (0..params.m_y).map(|_| wgan.sample_real(&mut sy)).collect();
            let noise_y: Vec<f64> = (0..params.m_y)
                .map(|_| wgan.sample_noise(&mut sy))
                .collect();
            let gy = wgan.batch_grad(&point.x, &point.y, &real_y, &noise_y)?.gy;
            let delta_x = gx.iter().zip(&exact.gx).map(|(s, e)| s - e).collect();
            let delta_y = gy.iter().zip(&exact.gy).map(|(s, e)| s - e).collect();
            Ok(OracleSample {
                g_x: gx,
                g_y: gy,
                delta_x,
                delta_y,
            })
        }
    }
}

fn stage_lanes(stage: Stage) -> (Lane, Lane) {
    match stage {
        Stage::Base => (Lane::GradX, Lane::GradY),
        Stage::Mid => (Lane::GradXMid, Lane::GradYMid),
    }
}

/// Regimes whose minibatch schedules appear in the convergence statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchRegime {
    /// OGDA: `M_x = max{1, σ²/ε²}`, `M_y = max{1, κσ²/ε²}`.
    NcscOgda,
    /// EG: `M = max{1, κσ²/ε²}` on both sides.
    NcscEg,
    /// The NC-C statements use unit batches (the dual rate absorbs σ).
    Ncc,
}

/// The minibatch schedule for a target accuracy, rounded up, floored at 1.
pub fn schedule_batches(
    regime: BatchRegime,
    kappa: f64,
    sigma: f64,
    epsilon: f64,
) -> Result<(usize, usize), OracleError> {
    if !(epsilon > 0.0) {
        return Err(OracleError::InvalidConfig("epsilon must be > 0".into()));
    }
    if !(kappa >= 1.0) {
        return Err(OracleError::InvalidConfig("kappa must be >= 1".into()));
    }
    if !(sigma >= 0.0) {
        return Err(OracleError::InvalidConfig("sigma must be >= 0".into()));
    }
    let cap = |v: f64| -> usize { v.max(1.0).ceil() as usize };
    let ratio = sigma * sigma / (epsilon * epsilon);
    Ok(match regime {
        BatchRegime::NcscOgda => (cap(ratio), cap(kappa * ratio)),
        BatchRegime::NcscEg => {
            let m = cap(kappa * ratio);
            (m, m)
        }
        BatchRegime::Ncc => (1, 1),
    })
}

/// Sample mean and per-coordinate variance of the oracle deviations.
#[derive(Debug, Clone, Serialize)]
pub struct BiasVarianceReport {
    pub n_draws: usize,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
}

/// Empirical check of the oracle's unbiasedness and variance at one point:
/// the caller compares the means against 0 (tolerance `4σ/sqrt(M·n)`) and
/// the variances against `σ²/M`.
pub fn estimate_bias_variance(
    instance: &Problem,
    point: &PrimalDualPoint,
    params: &OracleParams,
    n_draws: usize,
) -> Result<BiasVarianceReport, OracleError> {
    if n_draws < 100 {
        return Err(OracleError::InvalidConfig("n_draws must be >= 100".into()));
    }
    let (m, n) = instance.dims();
    let mut sum_x = vec![0.0; m];
    let mut sum_y = vec![0.0; n];
    let mut sq_x = vec![0.0; m];
    let mut sq_y = vec![0.0; n];
    for t in 0..n_draws {
        let s = sample_gradients(instance, point, params, t as u64, Stage::Base)?;
        for i in 0..m {
            sum_x[i] += s.delta_x[i];
            sq_x[i] += s.delta_x[i] * s.delta_x[i];
        }
        for i in 0..n {
            sum_y[i] += s.delta_y[i];
            sq_y[i] += s.delta_y[i] * s.delta_y[i];
        }
    }
    let nf = n_draws as f64;
    let var = |sum: f64, sq: f64| (sq - sum * sum / nf) / (nf - 1.0);
    Ok(BiasVarianceReport {
        n_draws,
        mean_x: sum_x.iter().map(|s| s / nf).collect(),
        mean_y: sum_y.iter().map(|s| s / nf).collect(),
        var_x: sum_x.iter().zip(&sq_x).map(|(s, q)| var(*s, *q)).collect(),
        var_y: sum_y.iter().zip(&sq_y).map(|(s, q)| var(*s, *q)).collect(),
    })
}
