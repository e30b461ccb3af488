//! Toy WGAN on synthetic 1-D Gaussian data.
//!
//! The generator is a one-hidden-layer network with rectified-linear
//! activation (`1 -> hidden -> 1`, weights and biases); the discriminator is
//! `D(u) = φ1·u + φ2·u²`. The objective is
//!
//! `f(w_G, φ) = mean_real[D(x)] - mean_noise[D(G(z))] - λ‖φ‖²`,
//!
//! minimized over generator weights (primal) and maximized over `φ` (dual).
//! The `λ`-regularizer makes the dual `2λ`-strongly concave. Gradients are
//! exact reverse-mode accumulation; the rectifier subgradient at the kink
//! is 0.
//!
//! The instance carries a fixed evaluation dataset; its deterministic
//! gradient is the full-batch gradient on that set. Minibatch oracles draw
//! fresh samples per iteration (see `oracles`).

use serde::{Deserialize, Serialize};

use super::{GradPair, ProblemError};
use crate::rng::{Lane, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WganParams {
    /// Data mean.
    pub mu_data: f64,
    /// Data standard deviation.
    pub sigma_data: f64,
    /// Dual l2-regularizer `λ > 0`.
    pub lambda_reg: f64,
    /// Hidden width of the generator.
    pub gen_hidden: usize,
}

impl Default for WganParams {
    fn default() -> Self {
        WganParams {
            mu_data: 0.0,
            sigma_data: 0.1,
            lambda_reg: 0.001,
            gen_hidden: 5,
        }
    }
}

impl WganParams {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.lambda_reg <= 0.0 {
            return Err(ProblemError::InvalidParams("lambda_reg must be > 0".into()));
        }
        if self.gen_hidden == 0 {
            return Err(ProblemError::InvalidParams(
                "gen_hidden must be >= 1".into(),
            ));
        }
        if !(self.sigma_data >= 0.0) {
            return Err(ProblemError::InvalidParams(
                "sigma_data must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Generator parameter count: input weights, hidden biases, output
    /// weights, output bias.
    pub fn gen_dim(&self) -> usize {
        3 * self.gen_hidden + 1
    }
}

/// Generator forward pass. Layout of `w`: `[w1 | b1 | w2 | b2]`, each block
/// of length `hidden` except the final scalar bias.
fn gen_forward(w: &[f64], hidden: usize, z: f64) -> f64 {
    let (w1, rest) = w.split_at(hidden);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden);
    let mut out = b2[0];
    for i in 0..hidden {
        let a = w1[i] * z + b1[i];
        if a > 0.0 {
            out += w2[i] * a;
        }
    }
    out
}

/// Accumulate `scale * d G(z)/dw` into `grad`.
fn gen_backward(w: &[f64], hidden: usize, z: f64, scale: f64, grad: &mut [f64]) {
    let (w1, rest) = w.split_at(hidden);
    let (b1, _) = rest.split_at(hidden);
    let w2 = &w[2 * hidden..3 * hidden];
    for i in 0..hidden {
        let a = w1[i] * z + b1[i];
        if a > 0.0 {
            grad[i] += scale * w2[i] * z; // d/dw1
            grad[hidden + i] += scale * w2[i]; // d/db1
            grad[2 * hidden + i] += scale * a; // d/dw2
        }
    }
    grad[3 * hidden] += scale; // d/db2
}

/// Loss and exact gradients of the WGAN objective on explicit batches.
///
/// Returns `(loss, ∇_gen, ∇_disc)` with `disc = (φ1, φ2)`.
pub fn wgan_loss_grads(
    gen_weights: &[f64],
    disc_weights: (f64, f64),
    batch_real: &[f64],
    batch_noise: &[f64],
    params: &WganParams,
) -> Result<(f64, Vec<f64>, [f64; 2]), ProblemError> {
    params.validate()?;
    if batch_real.is_empty() {
        return Err(ProblemError::EmptyBatch("batch_real"));
    }
    if batch_noise.is_empty() {
        return Err(ProblemError::EmptyBatch("batch_noise"));
    }
    if gen_weights.len() != params.gen_dim() {
        return Err(ProblemError::InvalidParams(format!(
            "generator weight vector has length {}, expected {}",
            gen_weights.len(),
            params.gen_dim()
        )));
    }
    if gen_weights.iter().any(|v| !v.is_finite())
        || !disc_weights.0.is_finite()
        || !disc_weights.1.is_finite()
    {
        return Err(ProblemError::NonFinite("weights"));
    }
    let (phi1, phi2) = disc_weights;
    let h = params.gen_hidden;

    let nr = batch_real.len() as f64;
    let (mut real_m1, mut real_m2) = (0.0, 0.0);
    for &x in batch_real {
        real_m1 += x;
        real_m2 += x * x;
    }
    real_m1 /= nr;
    real_m2 /= nr;

    let nz = batch_noise.len() as f64;
    let (mut fake_m1, mut fake_m2) = (0.0, 0.0);
    let mut grad_gen = vec![0.0; params.gen_dim()];
    for &z in batch_noise {
        let g = gen_forward(gen_weights, h, z);
        fake_m1 += g;
        fake_m2 += g * g;
        // d loss / dw = -(1/nz) * D'(G(z)) * dG/dw.
        let dprime = phi1 + 2.0 * phi2 * g;
        gen_backward(gen_weights, h, z, -dprime / nz, &mut grad_gen);
    }
    fake_m1 /= nz;
    fake_m2 /= nz;

    let loss = phi1 * real_m1 + phi2 * real_m2
        - (phi1 * fake_m1 + phi2 * fake_m2)
        - params.lambda_reg * (phi1 * phi1 + phi2 * phi2);
    let grad_disc = [
        real_m1 - fake_m1 - 2.0 * params.lambda_reg * phi1,
        real_m2 - fake_m2 - 2.0 * params.lambda_reg * phi2,
    ];
    Ok((loss, grad_gen, grad_disc))
}

#[derive(Debug, Clone)]
pub struct WganInstance {
    params: WganParams,
    eval_real: Vec<f64>,
    eval_noise: Vec<f64>,
}

impl WganInstance {
    /// Build with a fixed evaluation dataset drawn from the data and noise
    /// distributions under `dataset_seed`.
    pub fn new(
        params: WganParams,
        dataset_seed: u64,
        eval_size: usize,
    ) -> Result<Self, ProblemError> {
        params.validate()?;
        if eval_size == 0 {
            return Err(ProblemError::InvalidParams("eval_size must be >= 1".into()));
        }
        let mut s = Stream::new(dataset_seed, 0, Lane::Dataset);
        let eval_real: Vec<f64> = (0..eval_size)
            .map(|_| params.mu_data + params.sigma_data * s.next_gauss())
            .collect();
        let eval_noise: Vec<f64> = (0..eval_size).map(|_| s.next_gauss()).collect();
        Ok(WganInstance {
            params,
            eval_real,
            eval_noise,
        })
    }

    pub fn params(&self) -> &WganParams {
        &self.params
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.params.gen_dim(), 2)
    }

    /// Draw a fresh sample of the data distribution.
    pub fn sample_real(&self, s: &mut Stream) -> f64 {
        self.params.mu_data + self.params.sigma_data * s.next_gauss()
    }

    /// Draw a fresh sample of the noise distribution.
    pub fn sample_noise(&self, s: &mut Stream) -> f64 {
        s.next_gauss()
    }

    pub fn eval_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let (loss, _, _) = wgan_loss_grads(
            x,
            (y[0], y[1]),
            &self.eval_real,
            &self.eval_noise,
            &self.params,
        )
        .expect("evaluation dataset is non-empty and weights were checked");
        loss
    }

    pub fn eval_grad(&self, x: &[f64], y: &[f64]) -> GradPair {
        let (_, gx, gy) = wgan_loss_grads(
            x,
            (y[0], y[1]),
            &self.eval_real,
            &self.eval_noise,
            &self.params,
        )
        .expect("evaluation dataset is non-empty and weights were checked");
        GradPair {
            gx,
            gy: gy.to_vec(),
        }
    }

    /// Gradients on explicit minibatches (used by the empirical oracle).
    pub fn batch_grad(
        &self,
        x: &[f64],
        y: &[f64],
        batch_real: &[f64],
        batch_noise: &[f64],
    ) -> Result<GradPair, ProblemError> {
        let (_, gx, gy) = wgan_loss_grads(x, (y[0], y[1]), batch_real, batch_noise, &self.params)?;
        Ok(GradPair {
            gx,
            gy: gy.to_vec(),
        })
    }

    /// Dual maximizer via gradient ascent on the `2λ`-strongly-concave
    /// regularized dual, to tolerance 1e-8 on the gradient norm (cap 1e5).
    /// Convergence is geometric; with step `1/(2λ)` it lands in one move.
    pub fn best_response(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let tol = 1e-8;
        let cap = 100_000;
        let step = 1.0 / (2.0 * self.params.lambda_reg);
        let mut phi = [0.0, 0.0];
        let mut residual = f64::INFINITY;
        for _ in 0..cap {
            let g = self.eval_grad(x, &phi).gy;
            residual = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if residual <= tol {
                return Ok(phi.to_vec());
            }
            phi[0] += step * g[0];
            phi[1] += step * g[1];
        }
        Err(ProblemError::Convergence {
            iters: cap,
            residual,
        })
    }

    /// `Φ(x) = f(x, φ*(x))` with `∇Φ(x) = ∇_x f(x, φ*(x))` by Danskin.
    pub fn primal(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ProblemError> {
        let phi = self.best_response(x)?;
        let v = self.eval_value(x, &phi);
        let g = self.eval_grad(x, &phi);
        Ok((v, g.gx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::test_oracles::fd_grad;
    use crate::problems::PrimalDualPoint;
    use approx::assert_relative_eq;

    fn random_weights(seed: u64, dim: usize) -> Vec<f64> {
        let mut s = Stream::new(seed, 0, Lane::Init);
        (0..dim).map(|_| s.next_range(-0.5, 0.5)).collect()
    }

    #[test]
    fn zero_weights_zero_batches_give_zero_everything() {
        let params = WganParams::default();
        let w = vec![0.0; params.gen_dim()];
        let (loss, gg, gd) =
            wgan_loss_grads(&w, (0.0, 0.0), &[0.0; 8], &[0.3, -0.7, 1.1], &params).unwrap();
        assert_eq!(loss, 0.0);
        assert!(gg.iter().all(|v| *v == 0.0));
        assert_eq!(gd, [0.0, 0.0]);
    }

    #[test]
    fn zero_weights_generic_batches_zero_loss_and_generator_grad() {
        // With phi = 0 the discriminator and its derivative vanish, so the
        // loss and generator gradient are exactly zero; the discriminator
        // gradient reduces to the batch moments.
        let params = WganParams::default();
        let w = vec![0.0; params.gen_dim()];
        let real = [0.05, -0.1, 0.2];
        let (loss, gg, gd) = wgan_loss_grads(&w, (0.0, 0.0), &real, &[0.3, -0.7], &params).unwrap();
        assert_eq!(loss, 0.0);
        assert!(gg.iter().all(|v| *v == 0.0));
        let m1: f64 = real.iter().sum::<f64>() / 3.0;
        let m2: f64 = real.iter().map(|x| x * x).sum::<f64>() / 3.0;
        assert_relative_eq!(gd[0], m1, epsilon = 1e-15);
        assert_relative_eq!(gd[1], m2, epsilon = 1e-15);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradients_match_finite_differences() {
        let params = WganParams::default();
        let w = random_weights(101, params.gen_dim());
        let phi = (0.4, -0.2);
        let real: Vec<f64> = (0..16).map(|i| 0.1 * ((i as f64) - 8.0) / 8.0).collect();
        let noise: Vec<f64> = (0..16).map(|i| ((i as f64) - 7.3) / 4.0).collect();
        // Keep every hidden pre-activation away from the rectifier kink so
        // central differences are well-posed.
        for &z in &noise {
            for i in 0..params.gen_hidden {
                let a = w[i] * z + w[params.gen_hidden + i];
                assert!(a.abs() > 1e-4, "pre-activation too close to the kink");
            }
        }
        let (_, gg, gd) = wgan_loss_grads(&w, phi, &real, &noise, &params).unwrap();
        let p = PrimalDualPoint::new(w.clone(), vec![phi.0, phi.1]);
        let fd = fd_grad(
            |p| {
                wgan_loss_grads(&p.x, (p.y[0], p.y[1]), &real, &noise, &params)
                    .unwrap()
                    .0
            },
            &p,
            1e-6,
        );
        for i in 0..gg.len() {
            assert_relative_eq!(gg[i], fd.gx[i], max_relative = 1e-5, epsilon = 1e-9);
        }
        assert_relative_eq!(gd[0], fd.gy[0], max_relative = 1e-5, epsilon = 1e-9);
        assert_relative_eq!(gd[1], fd.gy[1], max_relative = 1e-5, epsilon = 1e-9);
    }

    #[test]
    fn linear_discriminator_gradient_expands_by_hand() {
        // phi = (1, 0): d loss/d phi1 = mean(real) - mean(G(z)) - 2 lambda.
        let params = WganParams::default();
        let h = params.gen_hidden;
        // "Identity-like" generator: first unit passes z through (ReLU-gated).
        let mut w = vec![0.0; params.gen_dim()];
        w[0] = 1.0; // w1[0]
        w[2 * h] = 1.0; // w2[0]
        let real = [0.2, -0.1, 0.4];
        let noise = [0.5, 1.5, -0.3];
        let (_, _, gd) = wgan_loss_grads(&w, (1.0, 0.0), &real, &noise, &params).unwrap();
        let mean_real: f64 = real.iter().sum::<f64>() / 3.0;
        let mean_fake: f64 = noise.iter().map(|z| z.max(0.0)).sum::<f64>() / 3.0;
        assert_relative_eq!(
            gd[0],
            mean_real - mean_fake - 2.0 * params.lambda_reg,
            epsilon = 1e-15
        );
    }

    #[test]
    fn empty_batches_and_bad_weights_are_rejected() {
        let params = WganParams::default();
        let w = vec![0.0; params.gen_dim()];
        assert!(matches!(
            wgan_loss_grads(&w, (0.0, 0.0), &[], &[0.1], &params),
            Err(ProblemError::EmptyBatch("batch_real"))
        ));
        assert!(matches!(
            wgan_loss_grads(&w, (0.0, 0.0), &[0.1], &[], &params),
            Err(ProblemError::EmptyBatch("batch_noise"))
        ));
        let mut bad = w.clone();
        bad[0] = f64::INFINITY;
        assert!(matches!(
            wgan_loss_grads(&bad, (0.0, 0.0), &[0.1], &[0.1], &params),
            Err(ProblemError::NonFinite(_))
        ));
    }

    #[test]
    fn best_response_maximizes_the_regularized_dual() {
        let params = WganParams::default();
        let inst = WganInstance::new(params, 77, 256).unwrap();
        let w = random_weights(5, params.gen_dim());
        let phi = inst.best_response(&w).unwrap();
        let g = inst.eval_grad(&w, &phi);
        assert!((g.gy[0].powi(2) + g.gy[1].powi(2)).sqrt() <= 1e-8);
        // The dual is quadratic: the stationary point is A/(2 lambda).
        let g0 = inst.eval_grad(&w, &[0.0, 0.0]);
        assert_relative_eq!(phi[0], g0.gy[0] / (2.0 * params.lambda_reg), epsilon = 1e-7);
        assert_relative_eq!(phi[1], g0.gy[1] / (2.0 * params.lambda_reg), epsilon = 1e-7);
    }

    #[test]
    fn interior_stationary_dual_point_is_best_response() {
        let params = WganParams::default();
        let inst = WganInstance::new(params, 78, 128).unwrap();
        let w = random_weights(6, params.gen_dim());
        let phi = inst.best_response(&w).unwrap();
        // First-order condition: grad_y f = 0 at an interior y0 implies
        // y0 = y*.
        let again = inst.best_response(&w).unwrap();
        assert_eq!(phi, again);
    }
}
