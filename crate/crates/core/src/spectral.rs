//! Exact linear-time-invariant analysis of the quadratic instances.
//!
//! On the quadratic game the methods advance iterates by fixed linear
//! operators built from `M = [[-2c, -b], [r b, -μ r]]` (`c` the primal
//! coefficient, `r = η_y/η_x`): GDA by `I + η_x M`, EG by
//! `I + η_x M + η_x² M²`, OGDA by the two-step recurrence
//! `w_{k+1} = w_k + 2η_x M w_k - η_x M w_{k-1}`, whose modes are the roots
//! of `s² - (1 + 2η_x λ)s + η_x λ` per eigenvalue `λ` of `M`. The spectral
//! radius of the transition operator decides contraction or divergence and
//! yields closed-form iterate predictions for eigenvector-aligned starts.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::problems::QuadNcscParams;

/// Classification margin around spectral radius 1; distinguishes the
/// exactly-marginal `η_x = 0` case from roundoff.
pub const RHO_MARGIN: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("initialization is not aligned with the selected eigenvector (angle residual {residual:.3e})")]
    NotEigenAligned { residual: f64 },
    #[error("selected eigenvalue is complex ({0}); no real eigenvector to align with")]
    ComplexMode(Complex64),
}

/// The game matrix of the linear system `w' = (I + η_x M) w` plus the
/// ratio it was built with.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GameMatrix {
    /// Row-major entries `[[m11, m12], [m21, m22]]`.
    pub m: [[f64; 2]; 2],
    /// Step-size ratio `r = η_y / η_x`.
    pub r: f64,
    /// `r μ μ_x`, the exact determinant for both parameterizations.
    pub det_identity: f64,
}

impl GameMatrix {
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Determinant by Kahan's compensated product difference (one rounding
    /// of the exact `ad - bc` of the stored entries). The residual against
    /// `det_identity` is then dominated by the rounding of `b` itself.
    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.m;
        let w = b * c;
        let e = b.mul_add(c, -w); // exact error of w
        let f = a.mul_add(d, -w);
        f - e
    }

    pub fn mul(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Build `M` from instance parameters and the step-size ratio. The
/// determinant identity `det(M) = r μ μ_x` is checked at construction.
pub fn build_m(params: &QuadNcscParams, r: f64) -> Result<GameMatrix, SpectralError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(SpectralError::Invalid(format!(
            "ratio r must be positive, got {r}"
        )));
    }
    let m11 = -2.0 * params.primal_coeff.value(params.ell);
    let b = params.b;
    let m = GameMatrix {
        m: [[m11, -b], [r * b, -params.mu * r]],
        r,
        det_identity: r * params.mu * params.mu_x,
    };
    // b^2 carries one rounding of the product mu*(..); the raw determinant
    // cancels m11*mu against it, so the achievable agreement degrades as
    // ell/mu_x grows.
    let tol = 8.0 * f64::EPSILON * r * b * b + 1e-300;
    let err = (m.det() - m.det_identity).abs();
    if err > tol {
        return Err(SpectralError::Invalid(format!(
            "determinant identity violated: |{} - {}| = {err:.3e} > {tol:.3e}",
            m.det(),
            m.det_identity
        )));
    }
    Ok(m)
}

/// Eigenvalues of a real 2x2 matrix, ordered by real part descending, then
/// imaginary part descending. The smaller real root is recovered from the
/// product of roots, which avoids cancellation when it is near zero.
pub fn eigen2(m: &GameMatrix) -> (Complex64, Complex64) {
    let tr = m.trace();
    let det = m.det();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let big = if tr >= 0.0 {
            0.5 * (tr + sq)
        } else {
            0.5 * (tr - sq)
        };
        let small = if big == 0.0 {
            0.5 * (tr + sq)
        } else {
            det / big
        };
        let (l1, l2) = if big >= small {
            (big, small)
        } else {
            (small, big)
        };
        (Complex64::new(l1, 0.0), Complex64::new(l2, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im))
    }
}

/// Eigenvector of `M` for eigenvalue `lambda`, scaled so the primal
/// component is 1. Uses the row with the larger pivot.
pub fn eigenvector(m: &GameMatrix, lambda: f64) -> Result<[f64; 2], SpectralError> {
    // Row 1 gives v = (m12, lambda - m11); row 2 gives v = (lambda - m22, m21).
    let v1 = [m.m[0][1], lambda - m.m[0][0]];
    let v2 = [lambda - m.m[1][1], m.m[1][0]];
    let n1 = v1[0].abs().max(v1[1].abs());
    let n2 = v2[0].abs().max(v2[1].abs());
    let v = if n1 >= n2 { v1 } else { v2 };
    if v[0].abs() <= 1e-300 * v[1].abs() {
        return Err(SpectralError::Invalid(
            "eigenvector has no primal component; cannot normalize".into(),
        ));
    }
    Ok([1.0, v[1] / v[0]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralRegime {
    Contracting,
    Marginal,
    Diverging,
}

fn classify(rho: f64) -> SpectralRegime {
    if rho < 1.0 - RHO_MARGIN {
        SpectralRegime::Contracting
    } else if rho > 1.0 + RHO_MARGIN {
        SpectralRegime::Diverging
    } else {
        SpectralRegime::Marginal
    }
}

/// Closed-form iterate predictor attached to a transition analysis.
#[derive(Debug, Clone, Serialize)]
pub enum Predictor {
    /// One-step methods: `w_T = s1^T w_0` on the `λ1` eigenline.
    Power { s1: Complex64 },
    /// OGDA on the `λ1` eigenline with `z_{-1} = z_0 = 1`:
    /// `z_k = a α^k + b β^k`.
    Recurrence {
        alpha: Complex64,
        beta: Complex64,
        a: Complex64,
        b: Complex64,
    },
}

/// Spectrum of a method's transition operator on the quadratic game.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    /// Eigenvalues of `M`.
    pub eigenvalues: [Complex64; 2],
    /// Eigenvalues of the method's transition operator (2 for GDA/EG,
    /// 4 for OGDA: the recurrence roots per eigenvalue of `M`).
    pub transition_eigs: Vec<Complex64>,
    pub rho: f64,
    pub regime: SpectralRegime,
    pub predictor: Predictor,
}

/// Roots of `s² - (1 + 2u)s + u = 0` for `u = η_x λ`. The larger-magnitude
/// root comes from the quadratic formula, the other from the product of
/// roots, which is exact to rounding for tiny `u`.
pub fn ogda_mode_roots(u: Complex64) -> (Complex64, Complex64) {
    let disc = (Complex64::new(1.0, 0.0) + 4.0 * u * u).sqrt();
    let cand1 = 0.5 * (Complex64::new(1.0, 0.0) + 2.0 * u + disc);
    let cand2 = 0.5 * (Complex64::new(1.0, 0.0) + 2.0 * u - disc);
    let big = if cand1.norm() >= cand2.norm() {
        cand1
    } else {
        cand2
    };
    if big.norm() == 0.0 {
        (cand1, cand2)
    } else {
        let small = u / big;
        if big.norm() >= small.norm() {
            (big, small)
        } else {
            (small, big)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    Gda,
    Ogda,
    Eg,
}

/// Spectral analysis of `method` on the game matrix at primal rate `eta_x`
/// (the dual rate is `r·eta_x`, already folded into `M`).
pub fn transition(
    method: SpectralMethod,
    m: &GameMatrix,
    eta_x: f64,
) -> Result<SpectralReport, SpectralError> {
    if !(eta_x >= 0.0) || !eta_x.is_finite() {
        return Err(SpectralError::Invalid(format!(
            "eta_x must be >= 0, got {eta_x}"
        )));
    }
    let (l1, l2) = eigen2(m);
    let (transition_eigs, predictor) = match method {
        SpectralMethod::Gda => {
            let s: Vec<Complex64> = [l1, l2].iter().map(|l| 1.0 + eta_x * l).collect();
            (s.clone(), Predictor::Power { s1: s[0] })
        }
        SpectralMethod::Eg => {
            let s: Vec<Complex64> = [l1, l2]
                .iter()
                .map(|l| {
                    let u = eta_x * l;
                    1.0 + u + u * u
                })
                .collect();
            (s.clone(), Predictor::Power { s1: s[0] })
        }
        SpectralMethod::Ogda => {
            let (a1, b1) = ogda_mode_roots(eta_x * l1);
            let (a2, b2) = ogda_mode_roots(eta_x * l2);
            let disc = (Complex64::new(1.0, 0.0) + 4.0 * (eta_x * l1) * (eta_x * l1)).sqrt();
            // z_{-1} = z_0 = 1 gives a = 1/2 + 1/(2 sqrt(1+4u^2)) and
            // b = (sqrt(1+4u^2) - 1)/(2 sqrt(1+4u^2)); the small difference
            // is computed cancellation-free as 4u^2/(s+1).
            let a = 0.5 + 0.5 / disc;
            let u = eta_x * l1;
            let b = (4.0 * u * u / (disc + 1.0)) / (2.0 * disc);
            (
                vec![a1, b1, a2, b2],
                Predictor::Recurrence {
                    alpha: a1,
                    beta: b1,
                    a,
                    b,
                },
            )
        }
    };
    let rho = transition_eigs.iter().map(|s| s.norm()).fold(0.0, f64::max);
    Ok(SpectralReport {
        eigenvalues: [l1, l2],
        transition_eigs,
        rho,
        regime: classify(rho),
        predictor,
    })
}

/// Closed-form iterate after `T` steps from an eigenvector-aligned start.
///
/// `init` must be parallel (within angle residual 1e-10) to the `λ1`
/// eigenvector of `M`; for OGDA the start obeys the two-point convention
/// `w_{-1} = w_0` (equivalently `z_{-1} = z_0 = 1`), matching the
/// algorithm's first-step convention.
pub fn predict_iterates(
    method: SpectralMethod,
    m: &GameMatrix,
    eta_x: f64,
    init: [f64; 2],
    t: u64,
) -> Result<[f64; 2], SpectralError> {
    let report = transition(method, m, eta_x)?;
    let l1 = report.eigenvalues[0];
    if l1.im != 0.0 {
        return Err(SpectralError::ComplexMode(l1));
    }
    let v = eigenvector(m, l1.re)?;
    // Angle residual between init and the eigenline.
    let cross = init[0] * v[1] - init[1] * v[0];
    let norms = (init[0] * init[0] + init[1] * init[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt();
    if norms == 0.0 {
        return Ok([0.0, 0.0]);
    }
    let residual = (cross / norms).abs();
    if residual > 1e-10 {
        return Err(SpectralError::NotEigenAligned { residual });
    }
    let scale = match report.predictor {
        Predictor::Power { s1 } => s1.re.powi(t as i32),
        Predictor::Recurrence { alpha, beta, a, b } => {
            (a * alpha.powi(t as i32) + b * beta.powi(t as i32)).re
        }
    };
    Ok([init[0] * scale, init[1] * scale])
}

/// Exact OGDA two-step block operator: maps `[w_k; w_{k-1}]` to
/// `[w_{k+1}; w_k]`. Materialized as a cross-check of the per-mode roots.
pub fn ogda_companion(m: &GameMatrix, eta_x: f64) -> [[f64; 4]; 4] {
    let a = |i: usize, j: usize| {
        let id = if i == j { 1.0 } else { 0.0 };
        id + 2.0 * eta_x * m.m[i][j]
    };
    [
        [a(0, 0), a(0, 1), -eta_x * m.m[0][0], -eta_x * m.m[0][1]],
        [a(1, 0), a(1, 1), -eta_x * m.m[1][0], -eta_x * m.m[1][1]],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
}

/// Sufficient-condition bookkeeping for the trace-based divergence
/// argument.
#[derive(Debug, Clone, Serialize)]
pub struct TraceCheck {
    /// `trace(M) = m11 - μr`; `>= 0` forces a non-contracting mode for GDA.
    pub trace_m: f64,
    /// `trace(M²) = trace(M)² - 2 det(M)`.
    pub trace_m_sq: f64,
    /// `μ_x <= trace(M)²/(2 r μ)`, the "small enough ε" condition the
    /// OGDA/EG trace argument needs on top of `r <= κ`.
    pub mu_x_condition_holds: bool,
    /// Whether the argument's premises hold for this configuration.
    pub sufficient: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub diverges: bool,
    pub rho: f64,
    pub regime: SpectralRegime,
    /// Witness initialization `[x_0, 0]` and per-step growth rate.
    pub witness_init: [f64; 2],
    pub growth_rate: f64,
    pub trace_check: TraceCheck,
}

/// Decide divergence of `method` on the quadratic instance at rates
/// `(eta_x, eta_y)` from the spectral radius, and report whether the
/// trace-based sufficient condition independently predicts it.
pub fn certify_divergence(
    method: SpectralMethod,
    params: &QuadNcscParams,
    eta_x: f64,
    eta_y: f64,
) -> Result<DivergenceReport, SpectralError> {
    if !(eta_x > 0.0 && eta_y > 0.0) {
        // eta_x = 0 is the identity transition: exactly marginal.
        if eta_x == 0.0 {
            let m = build_m(params, 1.0)?;
            let report = transition(SpectralMethod::Gda, &m, 0.0)?;
            return Ok(DivergenceReport {
                diverges: false,
                rho: report.rho,
                regime: report.regime,
                witness_init: [1.0, 0.0],
                growth_rate: report.rho,
                trace_check: TraceCheck {
                    trace_m: m.trace(),
                    trace_m_sq: m.trace() * m.trace() - 2.0 * m.det_identity,
                    mu_x_condition_holds: false,
                    sufficient: false,
                },
            });
        }
        return Err(SpectralError::Invalid("step sizes must be positive".into()));
    }
    let r = eta_y / eta_x;
    let m = build_m(params, r)?;
    let report = transition(method, &m, eta_x)?;
    let kappa = params.kappa();
    let trace_m = m.trace();
    let trace_m_sq = trace_m * trace_m - 2.0 * m.det_identity;
    let mu_x_cond = params.mu_x <= trace_m * trace_m / (2.0 * r * params.mu);
    let sufficient = match method {
        // trace(M) >= 0 (i.e. r <= m11/μ) plus μ_x > 0 forces ρ > 1.
        SpectralMethod::Gda => trace_m >= 0.0 && params.mu_x > 0.0,
        // The OGDA/EG argument additionally needs trace(M²) >= 0.
        SpectralMethod::Ogda | SpectralMethod::Eg => r <= kappa && params.mu_x > 0.0 && mu_x_cond,
    };
    Ok(DivergenceReport {
        diverges: report.rho > 1.0 + RHO_MARGIN,
        rho: report.rho,
        regime: report.regime,
        witness_init: [1.0, 0.0],
        growth_rate: report.rho,
        trace_check: TraceCheck {
            trace_m,
            trace_m_sq,
            mu_x_condition_holds: mu_x_cond,
            sufficient,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::PrimalCoeff;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn tightness_params(ell: f64, mu: f64, mu_x: f64) -> QuadNcscParams {
        QuadNcscParams::derive(ell, mu, mu_x, PrimalCoeff::HalfEll).unwrap()
    }

    #[test]
    fn build_m_example_values() {
        // ell=1, mu=0.25, mu_x=0.0625, r=8: M = [[1, -b],[8b, -2]], det = 0.125.
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 8.0).unwrap();
        assert_eq!(m.m[0][0], 1.0);
        assert_relative_eq!(m.m[0][1], -0.515388, max_relative = 1e-6);
        assert_relative_eq!(m.m[1][0], 4.123106, max_relative = 1e-6);
        assert_eq!(m.m[1][1], -2.0);
        // 2x2 determinant oracle against the identity r*mu*mu_x.
        assert_relative_eq!(m.det(), 8.0 * 0.25 * 0.0625, max_relative = 1e-13);
        assert_eq!(m.det_identity, 0.125);
    }

    #[test]
    fn degenerate_coupling_is_singular() {
        let p = tightness_params(1.0, 0.25, 0.0);
        let m = build_m(&p, 4.0).unwrap();
        assert!(m.det().abs() < 1e-15);
    }

    #[test]
    fn trace_vanishes_when_mu_r_equals_m11() {
        // r = kappa makes mu*r = ell for the half-ell instance.
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 4.0).unwrap();
        assert_eq!(m.trace(), 0.0);
    }

    #[test]
    fn eigen_examples() {
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 8.0).unwrap();
        let (l1, l2) = eigen2(&m);
        // Characteristic-polynomial root oracle: tr = -1, det = 0.125.
        // lambda = (-1 +- sqrt(1 - 0.5))/2.
        let sq = 0.5_f64.sqrt();
        assert_relative_eq!(l1.re, (-1.0 + sq) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(l2.re, (-1.0 - sq) / 2.0, max_relative = 1e-12);
        assert_relative_eq!(l1.re, -0.146447, max_relative = 1e-5);
        assert_relative_eq!(l2.re, -0.853553, max_relative = 1e-5);
        // Identity matrix.
        let id = GameMatrix {
            m: [[1.0, 0.0], [0.0, 1.0]],
            r: 1.0,
            det_identity: 1.0,
        };
        let (l1, l2) = eigen2(&id);
        assert_eq!((l1.re, l2.re), (1.0, 1.0));
        // Zero trace, positive det (r = kappa): complex pair +- i sqrt(det).
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 4.0).unwrap();
        let (l1, l2) = eigen2(&m);
        assert_eq!(l1.re, 0.0);
        assert_relative_eq!(l1.im, m.det_identity.sqrt(), max_relative = 1e-12);
        assert_eq!(l1.im, -l2.im);
    }

    #[test]
    fn eigenvalues_satisfy_characteristic_polynomial() {
        let p = tightness_params(2.0, 0.5, 0.2);
        for r in [1.0, 4.0, 16.0, 50.0] {
            let m = build_m(&p, r).unwrap();
            let (tr, det) = (m.trace(), m.det());
            for l in [eigen2(&m).0, eigen2(&m).1] {
                let res = l * l - tr * l + det;
                assert!(res.norm() <= 1e-12 * (1.0 + l.norm_sqr()), "residual {res}");
            }
        }
    }

    #[test]
    fn small_eigenvalue_respects_the_minus_four_mu_x_bound() {
        // Regime r = c kappa, mu_x < ell/8: 0 >= lambda_1 >= -4 mu_x.
        let p = tightness_params(1.0, 0.25, 0.1);
        for c in [2.0, 4.0, 8.0] {
            let m = build_m(&p, c * 4.0).unwrap();
            let (l1, _) = eigen2(&m);
            assert!(l1.im == 0.0);
            assert!(l1.re <= 0.0 && l1.re >= -4.0 * 0.1, "lambda1 {l1}");
        }
    }

    #[test]
    fn ogda_roots_example_and_identity() {
        let u = Complex64::new(-0.01, 0.0);
        let (alpha, beta) = ogda_mode_roots(u);
        assert_relative_eq!(alpha.re, 0.990100, max_relative = 1e-6);
        assert_relative_eq!(beta.re, -0.010100, max_relative = 1e-4);
        // Root identity: s^2 - (1+2u)s + u = 0 to 1e-14.
        for s in [alpha, beta] {
            let res = s * s - (1.0 + 2.0 * u) * s + u;
            assert!(res.norm() <= 1e-14, "residual {res}");
        }
        // (1+2u)^2 - 4u = 1 + 4u^2 symbolically; check numerically.
        let lhs = (1.0 + 2.0 * u) * (1.0 + 2.0 * u) - 4.0 * u;
        let rhs = 1.0 + 4.0 * u * u;
        assert!((lhs - rhs).norm() <= 1e-15);
    }

    #[test]
    fn ogda_predictor_coefficients() {
        let p = tightness_params(1.0, 0.25, 0.0625);
        // Arrange eta_x * lambda_1 = -0.01 by scaling eta_x.
        let m = build_m(&p, 8.0).unwrap();
        let (l1, _) = eigen2(&m);
        let eta = -0.01 / l1.re;
        let report = transition(SpectralMethod::Ogda, &m, eta).unwrap();
        match report.predictor {
            Predictor::Recurrence { a, b, .. } => {
                assert_relative_eq!(a.re, 0.99990, max_relative = 1e-4);
                assert_relative_eq!(b.re, 1.0e-4, max_relative = 1e-2);
                assert_relative_eq!((a + b).re, 1.0, epsilon = 1e-14);
            }
            _ => panic!("expected recurrence predictor"),
        }
    }

    #[test]
    fn eg_modes_contract_on_the_unit_interval() {
        // For real u = eta*lambda in (-1, 0): s = 1 + u + u^2 in (0, 1).
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 8.0).unwrap();
        let report = transition(SpectralMethod::Eg, &m, 0.2).unwrap();
        for s in &report.transition_eigs {
            assert!(s.im == 0.0 && s.re > 0.0 && s.re < 1.0, "mode {s}");
        }
        assert_eq!(report.regime, SpectralRegime::Contracting);
    }

    #[test]
    fn gda_with_nonnegative_trace_does_not_contract() {
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 4.0).unwrap(); // trace 0
        let report = transition(SpectralMethod::Gda, &m, 0.1).unwrap();
        assert!(report.rho > 1.0);
        assert_ne!(report.regime, SpectralRegime::Contracting);
    }

    #[test]
    fn companion_matrix_modes_match_quadratic_roots() {
        let p = tightness_params(1.0, 0.25, 0.05);
        let m = build_m(&p, 50.0 / 6.0 * 16.0).unwrap();
        let eta = 1.0 / 800.0;
        let c = ogda_companion(&m, eta);
        // trace(C) = sum of the four mode roots = sum over modes of (1 + 2u).
        let trace_c: f64 = (0..4).map(|i| c[i][i]).sum();
        let report = transition(SpectralMethod::Ogda, &m, eta).unwrap();
        let sum_roots: Complex64 = report.transition_eigs.iter().sum();
        assert_relative_eq!(trace_c, sum_roots.re, epsilon = 1e-12);
        // trace(C^2) = sum of squared roots.
        let mut c2 = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                c2[i][j] = (0..4).map(|k| c[i][k] * c[k][j]).sum();
            }
        }
        let trace_c2: f64 = (0..4).map(|i| c2[i][i]).sum();
        let sum_sq: Complex64 = report.transition_eigs.iter().map(|s| s * s).sum();
        assert_relative_eq!(trace_c2, sum_sq.re, epsilon = 1e-12);
        // Corrected closed form: trace(C^2) = 2 + 2 eta tr(M) + 4 eta^2 tr(M^2).
        let tr_m = m.trace();
        let tr_m2 = tr_m * tr_m - 2.0 * m.det();
        assert_relative_eq!(
            trace_c2,
            2.0 + 2.0 * eta * tr_m + 4.0 * eta * eta * tr_m2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn predict_t0_returns_init() {
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 8.0).unwrap();
        let (l1, _) = eigen2(&m);
        let v = eigenvector(&m, l1.re).unwrap();
        let got = predict_iterates(SpectralMethod::Gda, &m, 0.01, v, 0).unwrap();
        assert_eq!(got, v);
    }

    #[test]
    fn misaligned_init_is_rejected() {
        let p = tightness_params(1.0, 0.25, 0.0625);
        let m = build_m(&p, 8.0).unwrap();
        let bad = [1.0, -123.0];
        assert!(matches!(
            predict_iterates(SpectralMethod::Gda, &m, 0.01, bad, 5),
            Err(SpectralError::NotEigenAligned { .. })
        ));
    }

    #[test]
    fn gda_power_prediction_matches_simulation() {
        // s1 = 0.99875, T = 1000: x_T = s1^1000 ~ 0.2863; direct simulation
        // of the linear system agrees with powering to 1e-10 relative.
        let p = tightness_params(1.0, 0.25, 0.05);
        let m = build_m(&p, 16.0).unwrap();
        let (l1, _) = eigen2(&m);
        let eta = 0.00125;
        let v = eigenvector(&m, l1.re).unwrap();
        let mut w = v;
        for _ in 0..1000 {
            let mv = m.mul(w);
            w = [w[0] + eta * mv[0], w[1] + eta * mv[1]];
        }
        let pred = predict_iterates(SpectralMethod::Gda, &m, eta, v, 1000).unwrap();
        assert_relative_eq!(w[0], pred[0], max_relative = 1e-10);
        assert_relative_eq!(w[1], pred[1], max_relative = 1e-10);
    }

    #[test]
    fn certify_divergence_examples() {
        let p = tightness_params(1.0, 0.25, 0.0625);
        // GDA with r <= kappa diverges.
        let eta_y = 1.0;
        for r in [1.0, 2.0, 4.0] {
            let rep = certify_divergence(SpectralMethod::Gda, &p, eta_y / r, eta_y).unwrap();
            assert!(rep.diverges, "r = {r}: {rep:?}");
            assert!(rep.trace_check.sufficient);
        }
        // GDA with r = 2 kappa and the schedule-sized eta contracts.
        let rep = certify_divergence(SpectralMethod::Gda, &p, 1.0 / 8.0, 1.0).unwrap();
        assert!(!rep.diverges);
        assert!(rep.rho < 1.0);
        // eta_x = 0 is exactly marginal.
        let rep = certify_divergence(SpectralMethod::Gda, &p, 0.0, 1.0).unwrap();
        assert_eq!(rep.regime, SpectralRegime::Marginal);
        assert_eq!(rep.rho, 1.0);
    }

    #[test]
    fn ogda_eg_trace_condition_implies_divergence() {
        let p = tightness_params(1.0, 0.25, 0.01);
        for method in [SpectralMethod::Ogda, SpectralMethod::Eg] {
            // r = 2 <= kappa and mu_x small: sufficient condition holds.
            let rep = certify_divergence(method, &p, 0.5, 1.0).unwrap();
            assert!(rep.trace_check.sufficient, "{method:?}");
            assert!(rep.diverges, "{method:?} rho = {}", rep.rho);
        }
    }
}
