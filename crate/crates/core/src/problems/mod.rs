//! Analytic two-player objectives with exact gradients.
//!
//! Three instance families: the quadratic strongly-concave hard instances,
//! the piecewise `h(x)·y` instance on a box-constrained dual, and the toy
//! WGAN with a linear-quadratic discriminator. All instances are immutable
//! after construction and safe to share across concurrent runs.

mod ncc;
mod quad;
mod wgan;

pub use ncc::{h_eval, NccBilinear, NccBilinearParams};
pub use quad::{PrimalCoeff, QuadNcsc, QuadNcscParams};
pub use wgan::{wgan_loss_grads, WganInstance, WganParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("non-finite input at {0}")]
    NonFinite(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dual point outside the feasible box (|y| <= {radius}); project first")]
    DualOutOfDomain { radius: f64 },
    #[error("empty sample batch: {0}")]
    EmptyBatch(&'static str),
    #[error("operation unsupported for this instance: {0}")]
    Unsupported(&'static str),
    #[error("inner solver did not converge within {iters} iterations (residual {residual:.3e})")]
    Convergence { iters: usize, residual: f64 },
}

/// A primal/dual pair `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        PrimalDualPoint { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        PrimalDualPoint {
            x: vec![x],
            y: vec![y],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn inf_norm(&self) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Partial gradients `(∇_x f, ∇_y f)` at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradPair {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradPair {
    pub fn zeros(m: usize, n: usize) -> Self {
        GradPair {
            gx: vec![0.0; m],
            gy: vec![0.0; n],
        }
    }

    /// `‖∇_x f‖² + ‖∇_y f‖²`, the metric plotted for the WGAN experiment.
    pub fn norm_sq(&self) -> f64 {
        dot(&self.gx, &self.gx) + dot(&self.gy, &self.gy)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Coordinate-wise clamp of a dual vector onto `[-radius, radius]^n`.
/// Idempotent.
pub fn project_box(y: &mut [f64], radius: f64) {
    for v in y {
        *v = v.clamp(-radius, radius);
    }
}

/// A differentiable two-player objective.
#[derive(Debug, Clone)]
pub enum Problem {
    QuadNcsc(QuadNcsc),
    NccBilinear(NccBilinear),
    Wgan(WganInstance),
}

impl Problem {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Problem::QuadNcsc(_) | Problem::NccBilinear(_) => (1, 1),
            Problem::Wgan(w) => w.dims(),
        }
    }

    /// Half-width of the dual box, when the instance constrains `y`.
    pub fn dual_radius(&self) -> Option<f64> {
        match self {
            Problem::NccBilinear(p) => Some(p.params().radius),
            _ => None,
        }
    }

    /// Declared smoothness constant, when the instance has one.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            Problem::QuadNcsc(p) => Some(p.params().ell),
            Problem::NccBilinear(p) => Some(p.params().ell),
            Problem::Wgan(_) => None,
        }
    }

    pub fn value(&self, p: &PrimalDualPoint) -> Result<f64, ProblemError> {
        check_point(self, p)?;
        Ok(match self {
            Problem::QuadNcsc(q) => q.value(p.x[0], p.y[0]),
            Problem::NccBilinear(q) => q.value(p.x[0], p.y[0]),
            Problem::Wgan(w) => w.eval_value(&p.x, &p.y),
        })
    }

    /// Exact partial gradients. Rejects non-finite points and (for bounded
    /// duals) points outside the feasible box.
    pub fn grad(&self, p: &PrimalDualPoint) -> Result<GradPair, ProblemError> {
        check_point(self, p)?;
        Ok(match self {
            Problem::QuadNcsc(q) => q.grad(p.x[0], p.y[0]),
            Problem::NccBilinear(q) => q.grad(p.x[0], p.y[0]),
            Problem::Wgan(w) => w.eval_grad(&p.x, &p.y),
        })
    }

    /// Best response `y*(x)`: closed form where it exists, projected dual
    /// ascent for the WGAN instance.
    pub fn best_response(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite("x"));
        }
        match self {
            Problem::QuadNcsc(q) => Ok(vec![q.best_response(x[0])]),
            Problem::NccBilinear(q) => Ok(vec![q.best_response(x[0])]),
            Problem::Wgan(w) => w.best_response(x),
        }
    }

    /// Primal function `Φ(x) = max_y f(x, y)` and, when available, its
    /// gradient `∇Φ(x) = ∇_x f(x, y*(x))`.
    pub fn primal(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ProblemError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite("x"));
        }
        match self {
            Problem::QuadNcsc(q) => {
                let (v, g) = q.primal(x[0]);
                Ok((v, vec![g]))
            }
            Problem::NccBilinear(q) => {
                let (v, g) = q.primal(x[0]);
                Ok((v, vec![g]))
            }
            Problem::Wgan(w) => w.primal(x),
        }
    }

    /// Global minimum of `Φ`, known in closed form for the hard instances.
    pub fn primal_min(&self) -> Option<f64> {
        match self {
            Problem::QuadNcsc(_) | Problem::NccBilinear(_) => Some(0.0),
            Problem::Wgan(_) => None,
        }
    }
}

fn check_point(problem: &Problem, p: &PrimalDualPoint) -> Result<(), ProblemError> {
    let (m, n) = problem.dims();
    if p.x.len() != m || p.y.len() != n {
        return Err(ProblemError::InvalidParams(format!(
            "point dims ({}, {}) do not match instance dims ({m}, {n})",
            p.x.len(),
            p.y.len()
        )));
    }
    if !p.is_finite() {
        return Err(ProblemError::NonFinite("point"));
    }
    if let Some(radius) = problem.dual_radius() {
        if p.y.iter().any(|v| v.abs() > radius) {
            return Err(ProblemError::DualOutOfDomain { radius });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_oracles {
    //! Independent numeric oracles used to freeze expected test values.
    use super::*;

    /// Central finite-difference gradient of `f` at `p`, step `h`.
    #[allow(clippy::needless_range_loop)]
    pub fn fd_grad<F: Fn(&PrimalDualPoint) -> f64>(f: F, p: &PrimalDualPoint, h: f64) -> GradPair {
        let mut gx = vec![0.0; p.x.len()];
        let mut gy = vec![0.0; p.y.len()];
        for i in 0..p.x.len() {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi.x[i] += h;
            lo.x[i] -= h;
            gx[i] = (f(&hi) - f(&lo)) / (2.0 * h);
        }
        for i in 0..p.y.len() {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi.y[i] += h;
            lo.y[i] -= h;
            gy[i] = (f(&hi) - f(&lo)) / (2.0 * h);
        }
        GradPair { gx, gy }
    }

    /// 1-D concave maximization by coarse grid plus golden-section refine.
    pub fn argmax_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
        let n = 2000;
        let mut best = lo;
        let mut best_v = f(lo);
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(x);
            if v > best_v {
                best_v = v;
                best = x;
            }
        }
        let width = (hi - lo) / n as f64;
        let (mut a, mut b) = (best - width, best + width);
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) < f(d) {
                a = c;
            } else {
                b = d;
            }
        }
        0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_box_clamps_and_is_idempotent() {
        let mut y = vec![1.5, -0.3, -2.0];
        project_box(&mut y, 1.0);
        assert_eq!(y, vec![1.0, -0.3, -1.0]);
        let snapshot = y.clone();
        project_box(&mut y, 1.0);
        assert_eq!(y, snapshot);
    }

    #[test]
    fn grad_rejects_non_finite_points() {
        let q =
            QuadNcsc::new(QuadNcscParams::derive(1.0, 0.25, 0.0625, PrimalCoeff::HalfEll).unwrap());
        let p = Problem::QuadNcsc(q);
        let bad = PrimalDualPoint::scalar(f64::NAN, 0.0);
        assert!(matches!(p.grad(&bad), Err(ProblemError::NonFinite(_))));
    }

    #[test]
    fn grad_rejects_dual_outside_box() {
        let inst = Problem::NccBilinear(NccBilinear::from_curvature(2.0, 1.0).unwrap());
        let out = PrimalDualPoint::scalar(0.5, 1.5);
        assert!(matches!(
            inst.grad(&out),
            Err(ProblemError::DualOutOfDomain { .. })
        ));
    }
}
