use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the band around a target order.
pub const ORDER_TOLERANCE: f64 = 0.3;

/// Errors at a sequence of resolutions and the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Grid sizes, strictly increasing.
    pub resolutions: Vec<usize>,
    /// Mesh spacing per level, strictly decreasing.
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(spacing)`.
    pub order: f64,
    /// Slopes between consecutive levels.
    pub pairwise_orders: Vec<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn order_at_least(&self, min: f64) -> bool {
        self.order >= min
    }
}

/// Fits the observed order of `errors` measured at grid sizes `resolutions`
/// on a domain where spacing is `length / resolution`.
pub fn estimate_order(
    resolutions: &[usize],
    spacings: &[f64],
    errors: &[f64],
    target: f64,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if resolutions.len() != errors.len() || spacings.len() != errors.len() {
        return Err(Error::Convergence("resolutions, spacings and errors differ in length".into()));
    }
    if errors.len() < 3 {
        return Err(Error::Convergence(format!(
            "need at least 3 resolutions (got {})",
            errors.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::Convergence(format!("errors must be positive and finite (got {e})")));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) || spacings.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::Convergence("resolutions must be strictly increasing".into()));
    }
    let x: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let order = sxy / sxx;
    let pairwise_orders = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0]))
        .collect();
    Ok(ConvergenceReport {
        resolutions: resolutions.to_vec(),
        spacings: spacings.to_vec(),
        errors: errors.to_vec(),
        order,
        pairwise_orders,
        target,
        tolerance,
        passed: (order - target).abs() <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_orders() {
        let r = estimate_order(&[1, 2, 4], &[1.0, 0.5, 0.25], &[1.0, 0.25, 1.0 / 16.0], 2.0, 0.3).unwrap();
        assert!((r.order - 2.0).abs() < 1e-14 && r.passed);
        let r = estimate_order(&[1, 2, 4], &[1.0, 0.5, 0.25], &[1.0, 0.5, 0.25], 2.0, 0.3).unwrap();
        assert!((r.order - 1.0).abs() < 1e-14 && !r.passed);
        assert!(r.pairwise_orders.iter().all(|p| (p - 1.0).abs() < 1e-14));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(estimate_order(&[1, 2], &[1.0, 0.5], &[1.0, 0.5], 1.0, 0.3).is_err());
        assert!(estimate_order(&[1, 2, 4], &[1.0, 0.5, 0.25], &[1.0, 0.0, 0.1], 1.0, 0.3).is_err());
        assert!(estimate_order(&[1, 4, 2], &[1.0, 0.25, 0.5], &[1.0, 0.5, 0.1], 1.0, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn recovers_power_law(p in 0.5f64..5.0, c in 1e-6f64..1e3) {
            let h: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
            let e: Vec<f64> = h.iter().map(|h| c * h.powf(p)).collect();
            let r = estimate_order(&[10, 20, 40, 80], &h, &e, p, 0.3).unwrap();
            prop_assert!((r.order - p).abs() < 1e-9);
        }
    }
}
