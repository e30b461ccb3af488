//! Ordinary least squares in log-log coordinates for first-hit scaling.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateFitError {
    #[error("need at least 3 pairs with distinct epsilon, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive value in pair ({0}, {1}); log-log fit undefined")]
    NonPositive(f64, f64),
}

/// Least-squares fit of `log T` on `log(1/eps)`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit `T ~ C * (1/eps)^slope` from `(eps, T)` pairs. Censored pairs
/// (runs that never hit) must be dropped by the caller.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit, RateFitError> {
    let mut eps_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    eps_values.sort_by(f64::total_cmp);
    eps_values.dedup();
    if eps_values.len() < 3 {
        return Err(RateFitError::TooFewPoints(eps_values.len()));
    }
    let mut pts = Vec::with_capacity(pairs.len());
    for &(eps, t) in pairs {
        if !(eps > 0.0 && t > 0.0) {
            return Err(RateFitError::NonPositive(eps, t));
        }
        pts.push(((1.0 / eps).ln(), t.ln()));
    }
    let n = pts.len() as f64;
    let mean_u = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut suu = 0.0;
    let mut suy = 0.0;
    let mut syy = 0.0;
    for (u, y) in &pts {
        suu += (u - mean_u) * (u - mean_u);
        suy += (u - mean_u) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = suy / suu;
    let intercept = mean_y - slope * mean_u;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (suy * suy) / (suu * syy)
    };
    Ok(RateFit {
        pairs: pairs.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_square_law() {
        let pairs: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|e| (*e, 3.0 / (e * e)))
            .collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope - 2.0).abs() <= 1e-12, "slope {}", fit.slope);
        assert!((fit.r_squared - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exact_sixth_power_law() {
        let pairs: Vec<(f64, f64)> = [0.2_f64, 0.1, 0.05]
            .iter()
            .map(|&e| (e, 0.5 / e.powi(6)))
            .collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope - 6.0).abs() <= 1e-12, "slope {}", fit.slope);
    }

    #[test]
    fn too_few_distinct_epsilons() {
        let pairs = [(0.1, 10.0), (0.1, 11.0), (0.2, 5.0)];
        assert!(matches!(
            fit_rate(&pairs),
            Err(RateFitError::TooFewPoints(2))
        ));
    }
}
