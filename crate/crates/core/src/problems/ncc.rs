//! Piecewise `f(x, y) = h(x)·y` on the dual box `[-D, D]`.
//!
//! `h` ramps quadratically from 0 to a plateau at `L`:
//! `(L/2)x²` on `|x| <= 1`, `L - (L/2)(|x|-2)²` on `1 <= |x| <= 2`, `L`
//! beyond. The instance is `2LD`-smooth, `LD`-Lipschitz in `x`, concave
//! (linear) in `y`, with primal function `Φ(x) = D·h(x)` attained at
//! `y = D`, and a closed-form Moreau envelope on `|x| <= 1`.

use serde::{Deserialize, Serialize};

use super::{GradPair, ProblemError};

/// `(h(x), h'(x))`. The one-sided limits of both branches agree at
/// `|x| ∈ {1, 2}` exactly in floating point.
pub fn h_eval(x: f64, curvature: f64) -> (f64, f64) {
    let l = curvature;
    let a = x.abs();
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    if a <= 1.0 {
        (0.5 * l * x * x, l * x)
    } else if a <= 2.0 {
        (l - 0.5 * l * (a - 2.0) * (a - 2.0), -l * (a - 2.0) * sign)
    } else {
        (l, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NccBilinearParams {
    /// Curvature `L > 0` of the ramp.
    pub curvature: f64,
    /// Dual half-width `D > 0`.
    pub radius: f64,
    /// Smoothness of the instance, `2LD`.
    pub ell: f64,
    /// Primal Lipschitz constant of the instance, `LD`.
    pub g_lip: f64,
}

#[derive(Debug, Clone)]
pub struct NccBilinear {
    params: NccBilinearParams,
}

impl NccBilinear {
    /// Build directly from the curvature `L` and dual half-width `D`.
    pub fn from_curvature(curvature: f64, radius: f64) -> Result<Self, ProblemError> {
        if !(curvature > 0.0 && radius > 0.0) {
            return Err(ProblemError::InvalidParams(
                "curvature and radius must be positive".into(),
            ));
        }
        Ok(NccBilinear {
            params: NccBilinearParams {
                curvature,
                radius,
                ell: 2.0 * curvature * radius,
                g_lip: curvature * radius,
            },
        })
    }

    /// Build from target constants `(ℓ, G, D)` with `L = min{ℓ/2, G}/D`,
    /// which guarantees the instance is `ℓ`-smooth and `G`-Lipschitz.
    pub fn from_target(ell: f64, g_lip: f64, radius: f64) -> Result<Self, ProblemError> {
        if !(ell > 0.0 && g_lip > 0.0 && radius > 0.0) {
            return Err(ProblemError::InvalidParams(
                "target ell, g_lip, radius must be positive".into(),
            ));
        }
        Self::from_curvature((0.5 * ell).min(g_lip) / radius, radius)
    }

    pub fn params(&self) -> &NccBilinearParams {
        &self.params
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        h_eval(x, self.params.curvature).0 * y
    }

    pub fn grad(&self, x: f64, y: f64) -> GradPair {
        let (h, dh) = h_eval(x, self.params.curvature);
        GradPair {
            gx: vec![dh * y],
            gy: vec![h],
        }
    }

    /// `y* = D` since `h >= 0` everywhere.
    pub fn best_response(&self, _x: f64) -> f64 {
        self.params.radius
    }

    /// `Φ(x) = D·h(x)`.
    pub fn primal(&self, x: f64) -> (f64, f64) {
        let (h, dh) = h_eval(x, self.params.curvature);
        (self.params.radius * h, self.params.radius * dh)
    }

    /// Closed-form `1/(2ℓ)`-Moreau envelope value and gradient on `|x| <= 1`:
    /// `Φ_{1/2ℓ}(x) = (LDℓ/(LD+2ℓ))x²`.
    pub fn moreau_closed_form(&self, x: f64) -> Option<(f64, f64)> {
        if x.abs() > 1.0 {
            return None;
        }
        let p = &self.params;
        let ld = p.g_lip;
        let c = ld * p.ell / (ld + 2.0 * p.ell);
        Some((c * x * x, 2.0 * c * x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::test_oracles::fd_grad;
    use crate::problems::{PrimalDualPoint, Problem};
    use crate::rng::{Lane, Stream};
    use approx::assert_relative_eq;

    #[test]
    fn h_piecewise_values() {
        assert_eq!(h_eval(1.0, 2.0), (1.0, 2.0));
        assert_eq!(h_eval(3.0, 2.0), (2.0, 0.0));
        let (h, dh) = h_eval(1.5, 2.0);
        assert_eq!(h, 1.75);
        assert_eq!(dh, 1.0);
        // Finite-difference check on the middle branch.
        let fd = (h_eval(1.5 + 1e-6, 2.0).0 - h_eval(1.5 - 1e-6, 2.0).0) / 2e-6;
        assert_relative_eq!(dh, fd, max_relative = 1e-8);
    }

    #[test]
    fn h_branches_agree_exactly_at_junctions() {
        for l in [0.5, 1.0, 2.0, 3.75] {
            for s in [-1.0, 1.0] {
                // |x| = 1: quadratic branch vs ramp branch.
                let inner = (0.5 * l * 1.0_f64, l * s);
                let ramp = (
                    l - 0.5 * l * (1.0 - 2.0) * (1.0 - 2.0),
                    -l * (1.0 - 2.0) * s,
                );
                assert_eq!(inner, ramp);
                // |x| = 2: ramp branch vs plateau.
                let ramp2 = (l - 0.5 * l * 0.0, -l * 0.0 * s);
                assert_eq!(ramp2.0, l);
                assert_eq!(ramp2.1, 0.0);
            }
        }
    }

    #[test]
    fn grad_examples() {
        let q = NccBilinear::from_curvature(2.0, 1.0).unwrap();
        let g = q.grad(1.0, 1.0);
        assert_eq!((g.gx[0], g.gy[0]), (2.0, 1.0));
        let fd = fd_grad(
            |p| q.value(p.x[0], p.y[0]),
            &PrimalDualPoint::scalar(1.0 - 1e-3, 1.0 - 1e-3),
            1e-7,
        );
        let ga = q.grad(1.0 - 1e-3, 1.0 - 1e-3);
        assert_relative_eq!(ga.gx[0], fd.gx[0], max_relative = 1e-5);
        assert_relative_eq!(ga.gy[0], fd.gy[0], max_relative = 1e-5);

        // h(0) = h'(0) = 0.
        for y in [-1.0, 0.0, 0.3] {
            let g = q.grad(0.0, y);
            assert_eq!((g.gx[0], g.gy[0]), (0.0, 0.0));
        }
        // Plateau region: h' = 0, h = L.
        let g = q.grad(3.0, 0.5);
        assert_eq!((g.gx[0], g.gy[0]), (0.0, 2.0));
    }

    #[test]
    fn target_construction_caps_curvature() {
        // L = min{ell/2, G}/D.
        let q = NccBilinear::from_target(2.0, 1.0, 1.0).unwrap();
        assert_eq!(q.params().curvature, 1.0);
        assert_eq!(q.params().ell, 2.0);
        assert_eq!(q.params().g_lip, 1.0);
        let q = NccBilinear::from_target(10.0, 1.0, 2.0).unwrap();
        assert_eq!(q.params().curvature, 0.5);
    }

    #[test]
    fn primal_is_radius_times_h() {
        let q = NccBilinear::from_curvature(2.0, 1.0).unwrap();
        assert_eq!(q.primal(1.0).0, 1.0);
        assert_eq!(q.best_response(0.3), 1.0);
    }

    #[test]
    fn gradient_consistency_on_random_points() {
        let q = NccBilinear::from_curvature(1.0, 1.0).unwrap();
        let mut s = Stream::new(9, 0, Lane::Dataset);
        let mut checked = 0;
        while checked < 1000 {
            let x = s.next_range(-3.0, 3.0);
            // Stay away from the |x| in {1, 2} kinks of h'' (h' itself is
            // continuous, but FD at the junction of branches loses accuracy).
            if (x.abs() - 1.0).abs() < 1e-4 || (x.abs() - 2.0).abs() < 1e-4 {
                continue;
            }
            let y = s.next_range(-1.0, 1.0);
            let p = PrimalDualPoint::scalar(x, y);
            let fd = fd_grad(|p| q.value(p.x[0], p.y[0]), &p, 1e-6);
            let g = q.grad(x, y);
            assert_relative_eq!(g.gx[0], fd.gx[0], max_relative = 1e-5, epsilon = 1e-7);
            assert_relative_eq!(g.gy[0], fd.gy[0], max_relative = 1e-5, epsilon = 1e-7);
            checked += 1;
        }
    }

    #[test]
    fn smoothness_certificate_on_random_pairs() {
        let q = NccBilinear::from_curvature(1.5, 2.0).unwrap();
        let ell = q.params().ell;
        let mut s = Stream::new(12, 0, Lane::Dataset);
        for _ in 0..1000 {
            let a = PrimalDualPoint::scalar(s.next_range(-3.0, 3.0), s.next_range(-2.0, 2.0));
            let b = PrimalDualPoint::scalar(s.next_range(-3.0, 3.0), s.next_range(-2.0, 2.0));
            let ga = q.grad(a.x[0], a.y[0]);
            let gb = q.grad(b.x[0], b.y[0]);
            let dg = ((ga.gx[0] - gb.gx[0]).powi(2) + (ga.gy[0] - gb.gy[0]).powi(2)).sqrt();
            let dp = ((a.x[0] - b.x[0]).powi(2) + (a.y[0] - b.y[0]).powi(2)).sqrt();
            assert!(dg <= ell * dp * (1.0 + 1e-12), "{dg} > {ell} * {dp}");
        }
    }

    #[test]
    fn interior_critical_point_is_best_response_condition() {
        // If grad_y f(x, y0) = 0 with y0 interior then h(x) = 0, i.e. x = 0,
        // and every feasible y maximizes; the first-order condition holds.
        let q = Problem::NccBilinear(NccBilinear::from_curvature(2.0, 1.0).unwrap());
        let g = q.grad(&PrimalDualPoint::scalar(0.0, 0.2)).unwrap();
        assert_eq!(g.gy[0], 0.0);
    }
}
