//! Stationarity measures and per-step inequality diagnostics.
//!
//! Covers the primal function and its gradient, the `1/(2ℓ)`-Moreau
//! envelope via a damped-gradient proximal solve, the OGDA potential
//! `r_t = ‖z_{t+1} - y*_t‖² + (β/4)‖y_t - y_{t-1}‖²`, initial-gap
//! constants, and runnable per-step forms of the paper-style descent
//! inequalities (primal descent, dual potential contraction and its
//! cumulative form, Moreau descent).

use serde::Serialize;
use thiserror::Error;

use crate::optimizers::{Measure, Method, ResolvedRates, StepSizes, Trajectory};
use crate::oracles::{sample_gradients, OracleParams, Stage};
use crate::problems::{dot, norm, PrimalDualPoint, Problem, ProblemError};

/// First-order residual tolerance of the proximal subproblem solver.
pub const TAU_PROX: f64 = 1e-10;
/// Iteration cap of the proximal solver.
pub const PROX_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("lemma not applicable: {hypothesis}")]
    NotApplicable { hypothesis: String },
    #[error(
        "proximal solver did not converge within {iters} iterations (residual {residual:.3e})"
    )]
    ProxNoConverge { iters: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Oracle(#[from] crate::oracles::OracleError),
}

/// `Φ(x)` and `∇Φ(x)` (closed form for the hard instances, best response
/// plus the envelope-gradient identity otherwise).
pub fn primal_value(instance: &Problem, x: &[f64]) -> Result<(f64, Vec<f64>), MetricsError> {
    Ok(instance.primal(x)?)
}

/// Result of the proximal solve for `Φ_p`.
#[derive(Debug, Clone, Serialize)]
pub struct MoreauReport {
    pub p: f64,
    /// `Φ_p(x)`.
    pub envelope: f64,
    /// The proximal point `x̂`.
    pub prox_point: Vec<f64>,
    /// `‖∇Φ_p(x)‖ = ‖x - x̂‖ / p`.
    pub grad_norm: f64,
    /// Final first-order residual of the subproblem.
    pub residual: f64,
    pub iters: usize,
}

/// Numeric `p`-Moreau envelope of `Φ` at `x` (default `p = 1/(2ℓ)`).
///
/// Solves `min_u Φ(u) + ‖u - x‖²/(2p)` by fixed-step gradient descent. For
/// `p = 1/(2ℓ)` the objective is at least `ℓ`-strongly convex because `Φ`
/// is `ℓ`-weakly convex on these instances, so convergence is geometric.
pub fn moreau_grad(
    instance: &Problem,
    x: &[f64],
    p: Option<f64>,
) -> Result<MoreauReport, MetricsError> {
    let ell = instance.smoothness().ok_or_else(|| {
        MetricsError::Unsupported("Moreau envelope needs a declared smoothness constant".into())
    })?;
    let p = p.unwrap_or(1.0 / (2.0 * ell));
    if !(p > 0.0) {
        return Err(MetricsError::Unsupported("p must be positive".into()));
    }
    // Curvature bound of Phi used for the step size.
    let phi_curv = match instance {
        Problem::QuadNcsc(q) => q.params().mu_x,
        Problem::NccBilinear(q) => q.params().g_lip, // |D h''| <= LD
        Problem::Wgan(_) => {
            return Err(MetricsError::Unsupported(
                "no curvature bound for the WGAN primal function".into(),
            ))
        }
    };
    let lip = 1.0 / p + phi_curv;
    let step = 1.0 / lip;
    let mut u = x.to_vec();
    let mut residual = f64::INFINITY;
    for it in 0..PROX_CAP {
        let (_, gphi) = instance.primal(&u)?;
        let g: Vec<f64> = gphi
            .iter()
            .zip(u.iter().zip(x))
            .map(|(gp, (ui, xi))| gp + (ui - xi) / p)
            .collect();
        residual = norm(&g);
        if residual <= TAU_PROX {
            let (phi_hat, _) = instance.primal(&u)?;
            let dist_sq: f64 = u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            let grad_norm = dist_sq.sqrt() / p;
            return Ok(MoreauReport {
                p,
                envelope: phi_hat + dist_sq / (2.0 * p),
                prox_point: u,
                grad_norm,
                residual,
                iters: it,
            });
        }
        for (ui, gi) in u.iter_mut().zip(&g) {
            *ui -= step * gi;
        }
    }
    Err(MetricsError::ProxNoConverge {
        iters: PROX_CAP,
        residual,
    })
}

/// Closed-form `‖∇Φ_{1/2ℓ}‖` where one exists: the quadratic instance
/// everywhere, the piecewise instance on `|x| <= 1`.
pub fn moreau_grad_closed_form(instance: &Problem, x: &[f64]) -> Option<f64> {
    match instance {
        Problem::QuadNcsc(q) => {
            let p = 1.0 / (2.0 * q.params().ell);
            let mu_x = q.params().mu_x;
            Some((mu_x * x[0] / (1.0 + p * mu_x)).abs())
        }
        Problem::NccBilinear(q) => q.moreau_closed_form(x[0]).map(|(_, g)| g.abs()),
        Problem::Wgan(_) => None,
    }
}

/// Stationarity quantities at one point.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub grad_phi_norm: Option<f64>,
    pub moreau_grad_norm: Option<f64>,
    pub moreau_p: Option<f64>,
    pub prox_point: Option<Vec<f64>>,
    pub grad_f_sq: f64,
    pub epsilon_target: Option<f64>,
}

pub fn stationarity(
    instance: &Problem,
    point: &PrimalDualPoint,
    with_moreau: bool,
    epsilon_target: Option<f64>,
) -> Result<StationarityReport, MetricsError> {
    let grad_f_sq = instance.grad(point)?.norm_sq();
    let grad_phi_norm = instance.primal(&point.x).ok().map(|(_, g)| norm(&g));
    let (moreau_grad_norm, moreau_p, prox_point) = if with_moreau {
        let rep = moreau_grad(instance, &point.x, None)?;
        (Some(rep.grad_norm), Some(rep.p), Some(rep.prox_point))
    } else {
        (None, None, None)
    };
    Ok(StationarityReport {
        grad_phi_norm,
        moreau_grad_norm,
        moreau_p,
        prox_point,
        grad_f_sq,
        epsilon_target,
    })
}

/// Evaluate one stationarity measure, preferring closed forms (the run
/// loop calls this every iterate).
pub fn eval_measure(
    instance: &Problem,
    point: &PrimalDualPoint,
    measure: Measure,
) -> Result<f64, MetricsError> {
    match measure {
        Measure::GradPhi => {
            let (_, g) = instance.primal(&point.x)?;
            Ok(norm(&g))
        }
        Measure::Moreau => match moreau_grad_closed_form(instance, &point.x) {
            Some(v) => Ok(v),
            None => Ok(moreau_grad(instance, &point.x, None)?.grad_norm),
        },
        Measure::GradFSq => Ok(instance.grad(point)?.norm_sq()),
    }
}

/// Initial-gap constants entering the complexity bounds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapConstants {
    /// `max(Φ(x_1), Φ(x_0)) - min Φ`.
    pub delta_phi: f64,
    /// `Φ_{1/2ℓ}(x_0) - min Φ_{1/2ℓ}`.
    pub delta_phi_hat: f64,
    /// `Φ(x_0) - min Φ`.
    pub delta0_hat: f64,
    /// `max(‖x_1-x_0‖², ‖y_1-y_0‖², ‖y_1-y*_1‖², ‖y_0-y*_0‖²)`.
    pub d0: f64,
}

pub fn gap_constants(
    instance: &Problem,
    p0: &PrimalDualPoint,
    p1: &PrimalDualPoint,
) -> Result<GapConstants, MetricsError> {
    let phi_min = instance.primal_min().ok_or_else(|| {
        MetricsError::Unsupported("no closed-form primal minimum for this instance".into())
    })?;
    let (phi0, _) = instance.primal(&p0.x)?;
    let (phi1, _) = instance.primal(&p1.x)?;
    let env0 = match instance {
        Problem::QuadNcsc(q) => {
            let p = 1.0 / (2.0 * q.params().ell);
            let mu_x = q.params().mu_x;
            0.5 * mu_x / (1.0 + p * mu_x) * p0.x[0] * p0.x[0]
        }
        Problem::NccBilinear(q) if p0.x[0].abs() <= 1.0 => {
            q.moreau_closed_form(p0.x[0]).expect("|x| <= 1").0
        }
        _ => moreau_grad(instance, &p0.x, None)?.envelope,
    };
    let dist_sq =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    let ystar0 = instance.best_response(&p0.x)?;
    let ystar1 = instance.best_response(&p1.x)?;
    let d0 = dist_sq(&p1.x, &p0.x)
        .max(dist_sq(&p1.y, &p0.y))
        .max(dist_sq(&p1.y, &ystar1))
        .max(dist_sq(&p0.y, &ystar0));
    Ok(GapConstants {
        delta_phi: phi0.max(phi1) - phi_min,
        delta_phi_hat: env0 - phi_min,
        delta0_hat: phi0 - phi_min,
        d0,
    })
}

/// The OGDA dual potential at the state's current index.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PotentialRecord {
    /// `r_t = ‖z_{t+1} - y*_t‖² + (β/4)‖y_t - y_{t-1}‖²`.
    pub r: f64,
    /// `‖g_t‖²` with `g_t = (1+α) g_{x,t} - α g_{x,t-1}`.
    pub g_norm_sq: f64,
}

/// Potential from live optimizer state. Draws the deterministic `(seed, t)`
/// sample the next step will use, so it never perturbs the run.
pub fn potential_from_state(
    state: &crate::optimizers::OptimizerState,
    instance: &Problem,
    oracle: &OracleParams,
    rates: &ResolvedRates,
) -> Result<PotentialRecord, MetricsError> {
    let g = sample_gradients(instance, &state.cur, oracle, state.t, Stage::Base)?;
    let g_prev = state.g_prev.clone().unwrap_or_else(|| g.grads());
    let z_next: Vec<f64> = state
        .cur
        .y
        .iter()
        .enumerate()
        .map(|(j, yj)| yj + rates.y1 * g.g_y[j] - rates.y2 * g_prev.gy[j])
        .collect();
    let ystar = instance.best_response(&state.cur.x)?;
    let beta = rates.beta();
    let alpha = rates.alpha();
    let mut r = 0.0;
    for j in 0..z_next.len() {
        let d = z_next[j] - ystar[j];
        r += d * d;
        let dy = state.cur.y[j] - state.prev.y[j];
        r += beta / 4.0 * dy * dy;
    }
    let g_comb: Vec<f64> = g
        .g_x
        .iter()
        .zip(&g_prev.gx)
        .map(|(gi, pi)| (1.0 + alpha) * gi - alpha * pi)
        .collect();
    Ok(PotentialRecord {
        r,
        g_norm_sq: dot(&g_comb, &g_comb),
    })
}

/// Public wrapper enforcing that the method tracks a ghost iterate.
pub fn potential_r(
    state: &crate::optimizers::OptimizerState,
    instance: &Problem,
    method: Method,
    oracle: &OracleParams,
    steps: &StepSizes,
) -> Result<PotentialRecord, MetricsError> {
    if !method.tracks_ghost() {
        return Err(MetricsError::Unsupported(format!(
            "potential r_t requires the OGDA family, got {method:?}"
        )));
    }
    let rates = steps
        .resolve(method)
        .map_err(|e| MetricsError::Unsupported(e.to_string()))?;
    potential_from_state(state, instance, oracle, &rates)
}

/// The per-step inequalities that can be replayed on a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// Primal descent for OGDA (expectation form, σ = 0 instantiation).
    PrimalDescent,
    /// Dual potential contraction `r_t <= (1 - 1/(12κ)) r_{t-1} + ...`,
    /// hypothesis `η_y = 1/(6ℓ)`.
    DualPotential,
    /// Cumulative form of the dual potential bound, checked at every prefix.
    DualPotentialCumulative,
    /// Moreau-envelope descent for OGDA on the piecewise NC-C instance,
    /// hypothesis `η_y = 1/(2ℓ)`.
    MoreauDescent,
}

/// Slack trace of one lemma over a trajectory: `slack_t = RHS_t - LHS_t`.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSlack {
    pub lemma: Lemma,
    /// First step index the lemma applies to.
    pub start_t: u64,
    pub slacks: Vec<f64>,
    pub min_slack: f64,
    pub min_at: u64,
    /// First step with strictly negative slack, if any.
    pub first_violation: Option<(u64, f64)>,
}

fn summarize(lemma: Lemma, start_t: u64, slacks: Vec<f64>) -> LemmaSlack {
    let (mut min_slack, mut min_at) = (f64::INFINITY, start_t);
    let mut first_violation = None;
    for (i, s) in slacks.iter().enumerate() {
        let t = start_t + i as u64;
        if *s < min_slack {
            min_slack = *s;
            min_at = t;
        }
        if *s < 0.0 && first_violation.is_none() {
            first_violation = Some((t, *s));
        }
    }
    LemmaSlack {
        lemma,
        start_t,
        slacks,
        min_slack,
        min_at,
        first_violation,
    }
}

fn not_applicable(hypothesis: impl Into<String>) -> MetricsError {
    MetricsError::NotApplicable {
        hypothesis: hypothesis.into(),
    }
}

/// Replay the requested inequalities on a deterministic OGDA trajectory.
///
/// Hypothesis mismatches (wrong method, stochastic oracle, wrong dual rate,
/// missing recordings) are errors, not failed checks.
pub fn verify_descent_lemmas(
    traj: &Trajectory,
    instance: &Problem,
    method: Method,
    steps: &StepSizes,
    oracle: &OracleParams,
    lemmas: &[Lemma],
) -> Result<Vec<LemmaSlack>, MetricsError> {
    if method != Method::Ogda {
        return Err(not_applicable(format!(
            "descent lemmas are stated for OGDA; got {method:?}"
        )));
    }
    if !oracle.is_deterministic() {
        return Err(not_applicable(
            "lemmas are verified in their deterministic (sigma = 0) instantiation",
        ));
    }
    if traj.points.is_empty() || traj.sample_grads.is_empty() {
        return Err(not_applicable(
            "trajectory must record points and gradients (record.points, record.grads)",
        ));
    }
    let rates = steps
        .resolve(method)
        .map_err(|e| MetricsError::Unsupported(e.to_string()))?;
    let (eta_x, eta_y) = (rates.x1, rates.y1);
    let mut out = Vec::new();
    for lemma in lemmas {
        let slack = match lemma {
            Lemma::PrimalDescent => primal_descent_slacks(traj, instance, eta_x)?,
            Lemma::DualPotential => dual_potential_slacks(traj, instance, eta_x, eta_y, false)?,
            Lemma::DualPotentialCumulative => {
                dual_potential_slacks(traj, instance, eta_x, eta_y, true)?
            }
            Lemma::MoreauDescent => moreau_descent_slacks(traj, instance, eta_x, eta_y)?,
        };
        out.push(slack);
    }
    Ok(out)
}

fn quad_constants(instance: &Problem) -> Result<(f64, f64), MetricsError> {
    match instance {
        Problem::QuadNcsc(q) => Ok((q.params().ell, q.params().kappa())),
        _ => Err(not_applicable(
            "the NC-SC lemmas need a strongly-concave instance with closed-form y* \
             and declared (ell, mu); use the quadratic instance",
        )),
    }
}

/// Combined primal direction `g_i = 2 g_{x,i} - g_{x,i-1}` with the
/// `g_{x,-1} = g_{x,0}` convention, scalar instances.
fn combined_g(traj: &Trajectory, i: usize) -> f64 {
    let g = traj.sample_grads[i].gx[0];
    let gp = if i == 0 {
        g
    } else {
        traj.sample_grads[i - 1].gx[0]
    };
    2.0 * g - gp
}

fn primal_descent_slacks(
    traj: &Trajectory,
    instance: &Problem,
    eta_x: f64,
) -> Result<LemmaSlack, MetricsError> {
    let (ell, kappa) = quad_constants(instance)?;
    let t_final = traj.points.len() - 1;
    if t_final < 2 {
        return Err(not_applicable("need at least 2 steps"));
    }
    let mut slacks = Vec::with_capacity(t_final - 1);
    for t in 2..=t_final {
        let x_t = traj.points[t].x[0];
        let x_p = traj.points[t - 1].x[0];
        let y_p = traj.points[t - 1].y[0];
        let y_pp = traj.points[t - 2].y[0];
        let (phi_t, _) = instance.primal(&[x_t])?;
        let (phi_p, gphi_p) = instance.primal(&[x_p])?;
        let ystar_p = instance.best_response(&[x_p])?[0];
        let g1 = combined_g(traj, t - 1);
        let g2 = combined_g(traj, t - 2);
        let rhs = phi_p
            - 0.5 * eta_x * gphi_p[0] * gphi_p[0]
            - 0.5 * eta_x * (1.0 - 2.0 * kappa * ell * eta_x) * g1 * g1
            + 1.5 * eta_x.powi(3) * ell * ell * g2 * g2
            + 1.5 * eta_x * ell * ell * (ystar_p - y_p) * (ystar_p - y_p)
            + 1.5 * eta_x * ell * ell * (y_p - y_pp) * (y_p - y_pp);
        slacks.push(rhs - phi_t);
    }
    Ok(summarize(Lemma::PrimalDescent, 2, slacks))
}

/// `r_t` from a recorded trajectory (scalar instances), with
/// `z_{t+1} = y_t + η_y (g_{y,t} - g_{y,t-1})`.
fn r_from_traj(
    traj: &Trajectory,
    instance: &Problem,
    eta_y: f64,
    t: usize,
) -> Result<f64, MetricsError> {
    let y_t = traj.points[t].y[0];
    let y_p = if t == 0 { y_t } else { traj.points[t - 1].y[0] };
    let gy = traj.sample_grads[t].gy[0];
    let gy_p = if t == 0 {
        gy
    } else {
        traj.sample_grads[t - 1].gy[0]
    };
    let z_next = y_t + eta_y * (gy - gy_p);
    let ystar = instance.best_response(&traj.points[t].x)?[0];
    Ok((z_next - ystar) * (z_next - ystar) + 0.25 * (y_t - y_p) * (y_t - y_p))
}

fn dual_potential_slacks(
    traj: &Trajectory,
    instance: &Problem,
    eta_x: f64,
    eta_y: f64,
    cumulative: bool,
) -> Result<LemmaSlack, MetricsError> {
    let (ell, kappa) = quad_constants(instance)?;
    let hyp = 1.0 / (6.0 * ell);
    if (eta_y - hyp).abs() > 1e-15 * hyp {
        return Err(not_applicable(format!(
            "dual potential lemma requires eta_y = 1/(6 ell) = {hyp}, got {eta_y}"
        )));
    }
    let t_final = traj.points.len() - 1;
    if t_final < 2 {
        return Err(not_applicable("need at least 2 steps"));
    }
    let r: Vec<f64> = (0..=t_final)
        .map(|t| r_from_traj(traj, instance, eta_y, t))
        .collect::<Result<_, _>>()?;
    if cumulative {
        // sum_{i=1..t} r_i <= 12k r_1 + (2/3)k ||x_1 - x_0||^2
        //                     + 145 eta_x^2 k^4 sum_{i=1..t-1} ||g_i||^2.
        let dx10 = traj.points[1].x[0] - traj.points[0].x[0];
        let mut lhs = 0.0;
        let mut gsum = 0.0;
        let mut slacks = Vec::with_capacity(t_final);
        for t in 1..=t_final {
            lhs += r[t];
            if t >= 2 {
                let g = combined_g(traj, t - 1);
                gsum += g * g;
            }
            let rhs = 12.0 * kappa * r[1]
                + 2.0 / 3.0 * kappa * dx10 * dx10
                + 145.0 * eta_x * eta_x * kappa.powi(4) * gsum;
            slacks.push(rhs - lhs);
        }
        Ok(summarize(Lemma::DualPotentialCumulative, 1, slacks))
    } else {
        let mut slacks = Vec::with_capacity(t_final - 1);
        for t in 2..=t_final {
            let g1 = combined_g(traj, t - 1);
            let g2 = combined_g(traj, t - 2);
            let rhs = (1.0 - 1.0 / (12.0 * kappa)) * r[t - 1]
                + 12.0 * eta_x * eta_x * kappa.powi(3) * g1 * g1
                + eta_x * eta_x / 18.0 * g2 * g2;
            slacks.push(rhs - r[t]);
        }
        Ok(summarize(Lemma::DualPotential, 2, slacks))
    }
}

fn moreau_descent_slacks(
    traj: &Trajectory,
    instance: &Problem,
    eta_x: f64,
    eta_y: f64,
) -> Result<LemmaSlack, MetricsError> {
    let ncc = match instance {
        Problem::NccBilinear(q) => q,
        _ => {
            return Err(not_applicable(
                "the Moreau descent lemma is verified on the piecewise NC-C instance",
            ))
        }
    };
    let ell = ncc.params().ell;
    let g_lip = ncc.params().g_lip;
    let hyp = 1.0 / (2.0 * ell);
    if (eta_y - hyp).abs() > 1e-15 * hyp {
        return Err(not_applicable(format!(
            "Moreau descent lemma requires eta_y = 1/(2 ell) = {hyp}, got {eta_y}"
        )));
    }
    let t_final = traj.points.len() - 1;
    if t_final < 2 {
        return Err(not_applicable("need at least 2 steps"));
    }
    if traj.points.iter().any(|p| p.x[0].abs() > 1.0) {
        return Err(not_applicable(
            "closed-form Moreau envelope requires all iterates in |x| <= 1",
        ));
    }
    let envelope = |x: f64| ncc.moreau_closed_form(x).expect("|x| <= 1 checked");
    let mut slacks = Vec::with_capacity(t_final - 1);
    for t in 2..=t_final {
        let x_t = traj.points[t].x[0];
        let x_p = traj.points[t - 1].x[0];
        let y_p = traj.points[t - 1].y[0];
        let (env_t, _) = envelope(x_t);
        let (env_p, genv_p) = envelope(x_p);
        let (phi_p, _) = ncc.primal(x_p);
        let f_p = ncc.value(x_p, y_p);
        let gx_p = traj.sample_grads[t - 1].gx[0];
        let gx_pp = traj.sample_grads[t - 2].gx[0];
        let dgrad = gx_p - gx_pp;
        let rhs = env_p + 2.0 * eta_x * ell * (phi_p - f_p) - eta_x / 8.0 * genv_p * genv_p
            + 3.0 * ell * eta_x * eta_x * g_lip * g_lip
            + 0.5 * eta_x * dgrad * dgrad;
        slacks.push(rhs - env_t);
    }
    Ok(summarize(Lemma::MoreauDescent, 2, slacks))
}

/// Smallest index with `measure <= epsilon` in an arbitrary sequence.
pub fn first_hit(measures: &[f64], epsilon: f64) -> Option<usize> {
    measures.iter().position(|m| *m <= epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{NccBilinear, PrimalCoeff, QuadNcsc, QuadNcscParams};
    use crate::rng::{Lane, Stream};
    use approx::assert_relative_eq;

    fn quad(mu_x: f64) -> Problem {
        Problem::QuadNcsc(QuadNcsc::new(
            QuadNcscParams::derive(1.0, 0.25, mu_x, PrimalCoeff::HalfEll).unwrap(),
        ))
    }

    fn ncc_unit() -> Problem {
        // Target (ell, G, D) = (2, 1, 1) so L = 1.
        Problem::NccBilinear(NccBilinear::from_target(2.0, 1.0, 1.0).unwrap())
    }

    #[test]
    fn prox_matches_quadratic_closed_form() {
        // Phi = (mu_x/2) x^2: x_hat = x/(1 + p mu_x), grad = mu_x x/(1 + p mu_x).
        let inst = quad(0.0625);
        let p = 1.0 / 2.0; // 1/(2 ell), ell = 1
        let rep = moreau_grad(&inst, &[2.0], None).unwrap();
        assert_relative_eq!(rep.p, p);
        let expect = 0.0625 * 2.0 / (1.0 + p * 0.0625);
        assert_relative_eq!(rep.grad_norm, expect, epsilon = 1e-9);
        assert_relative_eq!(rep.prox_point[0], 2.0 / (1.0 + p * 0.0625), epsilon = 1e-9);
    }

    #[test]
    fn prox_matches_ncc_closed_form_inside_unit_interval() {
        let inst = ncc_unit();
        // ell = 2, G = 1, D = 1, L = 1: grad = 0.8 x, envelope = 0.4 x^2.
        let rep = moreau_grad(&inst, &[0.5], None).unwrap();
        assert_relative_eq!(rep.grad_norm, 0.4, epsilon = 1e-7);
        assert_relative_eq!(rep.envelope, 0.1, epsilon = 1e-7);
        // Symmetry: x = 0 is a fixed point of the prox.
        let rep = moreau_grad(&inst, &[0.0], None).unwrap();
        assert_eq!(rep.grad_norm, 0.0);
    }

    #[test]
    fn prox_point_is_a_genuine_minimizer() {
        let inst = ncc_unit();
        let x = [0.7];
        let rep = moreau_grad(&inst, &x, None).unwrap();
        let p = rep.p;
        let obj = |u: f64| {
            let (phi, _) = inst.primal(&[u]).unwrap();
            phi + (u - x[0]) * (u - x[0]) / (2.0 * p)
        };
        let at_hat = obj(rep.prox_point[0]);
        let mut s = Stream::new(21, 0, Lane::Dataset);
        for _ in 0..1000 {
            let probe = s.next_range(-2.0, 2.0);
            assert!(
                at_hat <= obj(probe) + 1e-9,
                "probe {probe} beats prox point"
            );
        }
        // The envelope-gradient identity holds to solver tolerance.
        let dist = (rep.prox_point[0] - x[0]).abs();
        assert!(dist <= p * rep.grad_norm + TAU_PROX);
    }

    #[test]
    fn danskin_gradient_matches_finite_differences() {
        let inst = quad(0.0625);
        for x in [-3.0, -0.2, 0.4, 2.5] {
            let (_, g) = primal_value(&inst, &[x]).unwrap();
            let h = 1e-6;
            let (hi, _) = primal_value(&inst, &[x + h]).unwrap();
            let (lo, _) = primal_value(&inst, &[x - h]).unwrap();
            assert_relative_eq!(
                g[0],
                (hi - lo) / (2.0 * h),
                max_relative = 1e-6,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn gap_constants_are_nonnegative_and_consistent() {
        let inst = quad(0.0625);
        let p0 = PrimalDualPoint::scalar(2.0, 0.3);
        let p1 = PrimalDualPoint::scalar(1.8, 0.5);
        let g = gap_constants(&inst, &p0, &p1).unwrap();
        assert!(g.delta_phi >= 0.0 && g.delta_phi_hat >= 0.0);
        assert!(g.delta0_hat >= 0.0 && g.d0 >= 0.0);
        assert_relative_eq!(g.delta_phi, 0.5 * 0.0625 * 4.0, epsilon = 1e-12);
        assert_relative_eq!(g.delta0_hat, 0.125, epsilon = 1e-12);
    }

    #[test]
    fn stationarity_report_assembles_all_measures() {
        let inst = quad(0.0625);
        let p = PrimalDualPoint::scalar(2.0, 0.3);
        let rep = stationarity(&inst, &p, true, Some(0.1)).unwrap();
        assert_relative_eq!(rep.grad_phi_norm.unwrap(), 0.0625 * 2.0, epsilon = 1e-12);
        let expect_moreau = 0.0625 * 2.0 / (1.0 + 0.5 * 0.0625);
        assert_relative_eq!(rep.moreau_grad_norm.unwrap(), expect_moreau, epsilon = 1e-9);
        assert!(rep.grad_f_sq > 0.0);
        assert_eq!(rep.epsilon_target, Some(0.1));
        // Envelope-gradient inequality at the prox point.
        let xhat = rep.prox_point.unwrap();
        assert!(
            (xhat[0] - 2.0).abs()
                <= rep.moreau_p.unwrap() * rep.moreau_grad_norm.unwrap() + TAU_PROX
        );
    }

    #[test]
    fn first_hit_basics() {
        assert_eq!(first_hit(&[0.05, 0.2], 0.1), Some(0));
        assert_eq!(first_hit(&[0.5, 0.2, 0.09], 0.1), Some(2));
        assert_eq!(first_hit(&[0.5, 0.2], 0.1), None);
    }
}
