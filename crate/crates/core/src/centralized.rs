//! Centralized rate-distortion function by reverse water-filling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::GaussianSource;

/// Water level and per-mode distortions of the centralized code.
#[derive(Clone, Debug, Serialize)]
pub struct WaterFilling {
    /// Water level δ.
    pub delta: f64,
    /// `min(δ, λ_ℓ)` for each eigenvalue, ascending by eigenvalue.
    pub allocations: Vec<f64>,
    /// Rate in nats.
    pub rate: f64,
}

const BISECTION_TOL: f64 = 1e-13;

/// `r_C(d)` for average per-source distortion `d`.
pub fn r_centralized(src: &GaussianSource, d: f64) -> Result<WaterFilling> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidDistortion(d));
    }
    let lambdas = src.spectrum();
    let l = lambdas.len() as f64;
    let trace: f64 = lambdas.iter().sum();
    let budget = (l * d).min(trace);
    let filled = |delta: f64| lambdas.iter().map(|&x| delta.min(x)).sum::<f64>();

    let lambda_max = lambdas[lambdas.len() - 1];
    let (mut lo, mut hi) = (0.0, lambda_max);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if filled(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let approx = 0.5 * (lo + hi);
    // the bracket pins down which modes sit below the water line; on that
    // set the level is linear in the budget and can be solved exactly
    let delta = if budget >= trace {
        lambda_max
    } else {
        let below: Vec<f64> = lambdas.iter().copied().filter(|&x| x <= approx).collect();
        let active = lambdas.len() - below.len();
        if active == 0 {
            approx
        } else {
            (budget - below.iter().sum::<f64>()) / active as f64
        }
    };
    let allocations: Vec<f64> = lambdas.iter().map(|&x| delta.min(x)).collect();
    let rate = 0.5
        * lambdas
            .iter()
            .zip(&allocations)
            .map(|(&x, &a)| (x / a).ln())
            .sum::<f64>();
    Ok(WaterFilling {
        delta,
        allocations,
        rate: rate.max(0.0),
    })
}

/// `½ log(det Γ / d^L)`, valid for `d` below the smallest eigenvalue.
pub fn shannon_lower_bound(src: &GaussianSource, d: f64) -> f64 {
    0.5 * (src.logdet_gamma() - src.len() as f64 * d.ln())
}
