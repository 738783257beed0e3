//! Closed-form sum-rates: two-terminal distributed coding, the two-pairs
//! system `{{1,2},{1,3}}`, the triangle `{{1,2},{1,3},{2,3}}`, and the
//! conditional two-terminal rate used in the two-pairs converse.
//!
//! These formulas hold only for small distortions. Every entry point checks
//! `d` against [`trusted_radius`] and refuses to extrapolate beyond it.

use serde::Serialize;

use crate::centralized::r_centralized;
use crate::error::{Error, Result};
use crate::model::{conditional_covariance, GaussianSource};

/// Fraction of the smallest covariance eigenvalue inside which the
/// small-distortion formulas are trusted.
pub const TRUSTED_FRACTION: f64 = 0.25;

/// Argument tolerance of the golden-section searches.
pub const GOLDEN_TOL: f64 = 1e-12;

pub fn trusted_radius(src: &GaussianSource) -> f64 {
    TRUSTED_FRACTION * src.min_eigenvalue()
}

pub(crate) fn check_trusted(src: &GaussianSource, d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidDistortion(d));
    }
    let radius = trusted_radius(src);
    if d > radius {
        return Err(Error::OutOfTrustedRange { d, radius });
    }
    Ok(())
}

fn check_len(src: &GaussianSource, l: usize) -> Result<()> {
    if src.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: src.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedFormResult {
    /// Sum-rate in nats.
    pub rate: f64,
    /// Per-source distortions at the optimum.
    pub optimizer: Vec<f64>,
    /// Set when the distortion lies inside [`trusted_radius`].
    pub valid_small_d: bool,
    /// Distance of the optimizer from the truncated-objective stationarity
    /// formula (two-pairs only).
    pub stationarity_residual: Option<f64>,
}

/// `log((1 + √(1 + 4θ²p)) / 2)`, accurate when `θ²p` is tiny.
fn log_half_one_plus_root(theta_sq: f64, product: f64) -> f64 {
    let x = 4.0 * theta_sq * product;
    let root = (1.0 + x).sqrt();
    (x / (2.0 * (1.0 + root))).ln_1p()
}

/// Minimizes a unimodal `f` on `[a, b]` until the bracket is narrower than `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    0.5 * (a + b)
}

/// Two-terminal rate `r(d₁, d₂) = ½ log(det Γ (1 + √(1 + 4θ₁₂² d₁d₂)) / (2 d₁ d₂))`.
pub fn r_two_terminal_general(src: &GaussianSource, d1: f64, d2: f64) -> Result<f64> {
    check_len(src, 2)?;
    check_trusted(src, d1)?;
    check_trusted(src, d2)?;
    let theta_sq = src.theta().get(0, 1).powi(2);
    Ok(0.5 * (src.logdet_gamma() - d1.ln() - d2.ln() + log_half_one_plus_root(theta_sq, d1 * d2)))
}

/// Sum-rate of distributed coding of two sources.
pub fn r_two_terminal(src: &GaussianSource, d: f64) -> Result<ClosedFormResult> {
    let rate = r_two_terminal_general(src, d, d)?;
    Ok(ClosedFormResult {
        rate,
        optimizer: vec![d, d],
        valid_small_d: true,
        stationarity_residual: None,
    })
}

/// Golden-section minimization of `r(d + u, d − u)` over the budget line
/// `d₁ + d₂ = 2d`. Returns `(d₁, d₂, rate)`.
pub fn two_terminal_line_search(src: &GaussianSource, d: f64) -> Result<(f64, f64, f64)> {
    check_len(src, 2)?;
    check_trusted(src, d)?;
    let theta_sq = src.theta().get(0, 1).powi(2);
    // excess over the Shannon bound along the budget line; constant terms dropped
    let excess = |u: f64| {
        let (a, b) = (u / d, -u / d);
        -0.5 * (a.ln_1p() + b.ln_1p()) + 0.5 * log_half_one_plus_root(theta_sq, (d + u) * (d - u))
    };
    let u = golden_section(excess, -0.999 * d, 0.999 * d, GOLDEN_TOL);
    let (d1, d2) = (d + u, d - u);
    Ok((d1, d2, r_two_terminal_general(src, d1, d2)?))
}

/// `r(d₁, d₂, d₃) = ½ log(det Γ (1 + √(1 + 4θ₂₃² d₂d₃)) / (2 d₁d₂d₃))`.
pub fn r_two_pairs_general(src: &GaussianSource, d1: f64, d2: f64, d3: f64) -> Result<f64> {
    check_len(src, 3)?;
    for d in [d1, d2, d3] {
        check_trusted(src, d)?;
    }
    let theta_sq = src.theta().get(1, 2).powi(2);
    Ok(0.5
        * (src.logdet_gamma() - d1.ln() - d2.ln() - d3.ln()
            + log_half_one_plus_root(theta_sq, d2 * d3)))
}

/// Sum-rate of the two-pairs system with encoders `{1,2}` and `{1,3}`
/// (0-based `{0,1}`, `{0,2}`).
///
/// Minimizes `r(d₁, d₂, d₂)` over `d₁ + 2d₂ = 3d` by golden section, then
/// records how far the optimizer sits from
/// `d₂ = 2d₁ / (1 + √(1 + 4θ₂₃² d₁²))`, the stationary point of the
/// objective with its correction term truncated at `½θ₂₃²d₂²`.
pub fn r_two_pairs(src: &GaussianSource, d: f64) -> Result<ClosedFormResult> {
    check_len(src, 3)?;
    check_trusted(src, d)?;
    let theta_sq = src.theta().get(1, 2).powi(2);
    // d₁ = d + 2u, d₂ = d₃ = d − u
    let excess = |u: f64| {
        -0.5 * (2.0 * u / d).ln_1p() - (-u / d).ln_1p()
            + 0.5 * log_half_one_plus_root(theta_sq, (d - u) * (d - u))
    };
    let u = golden_section(excess, -0.499 * d, 0.999 * d, GOLDEN_TOL);
    let (d1, d2) = (d + 2.0 * u, d - u);
    let predicted = 2.0 * d1 / (1.0 + (1.0 + 4.0 * theta_sq * d1 * d1).sqrt());
    // the trusted radius applies to the average; individual allocations may
    // sit marginally above it
    let rate = 0.5
        * (src.logdet_gamma() - d1.ln() - 2.0 * d2.ln() + log_half_one_plus_root(theta_sq, d2 * d2));
    Ok(ClosedFormResult {
        rate,
        optimizer: vec![d1, d2, d2],
        valid_small_d: true,
        stationarity_residual: Some((d2 - predicted).abs()),
    })
}

/// Triangle system: coincides with centralized coding at small `d`.
pub fn r_triangle(src: &GaussianSource, d: f64) -> Result<f64> {
    check_len(src, 3)?;
    check_trusted(src, d)?;
    Ok(r_centralized(src, d)?.rate)
}

/// Minimum sum-rate of two-terminal coding of `(X₂, X₃)` given `X₁` under
/// distortions `(δ₂, δ₃)`.
///
/// The inactive-regime branch is `½ log max{1, γ₂₂|₁/δ₂, γ₃₃|₁/δ₃}`. Ties on
/// the regime boundary go to the active branch.
pub fn rtilde_conditional(src: &GaussianSource, delta2: f64, delta3: f64) -> Result<f64> {
    check_len(src, 3)?;
    for d in [delta2, delta3] {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidDistortion(d));
        }
    }
    let cond = conditional_covariance(src, &[1, 2], &[0])?;
    let (g22, g33, g23) = (cond.get(0, 0), cond.get(1, 1), cond.get(0, 1));
    let (a, b) = (delta2 / g22, delta3 / g33);
    let corr_sq = g23 * g23 / (g22 * g33);
    let bound = 1f64.min((1.0 - corr_sq) + corr_sq * a.min(b));
    if a.max(b) <= bound {
        let gamma11 = src.gamma().get(0, 0);
        let theta_sq = src.theta().get(1, 2).powi(2);
        Ok(0.5
            * (src.logdet_gamma() - gamma11.ln() - delta2.ln() - delta3.ln()
                + log_half_one_plus_root(theta_sq, delta2 * delta3)))
    } else {
        Ok(0.5 * (1f64.max(g22 / delta2).max(g33 / delta3)).ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centralized::shannon_lower_bound;
    use crate::linalg::SymMatrix;

    fn two(rho: f64) -> GaussianSource {
        GaussianSource::new(SymMatrix::from_lower(2, &[1.0, rho, 1.0]).unwrap()).unwrap()
    }

    fn equi3(rho: f64) -> GaussianSource {
        GaussianSource::new(SymMatrix::from_lower(3, &[1.0, rho, 1.0, rho, rho, 1.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn independent_two_terminal_is_centralized() {
        let s = GaussianSource::new(SymMatrix::from_diag(&[1.0, 2.0]).unwrap()).unwrap();
        for d in [1e-3, 0.01, 0.2] {
            let r = r_two_terminal(&s, d).unwrap().rate;
            assert!((r - r_centralized(&s, d).unwrap().rate).abs() < 1e-13);
        }
    }

    #[test]
    fn two_terminal_reference_values() {
        // frozen from a 50-digit mpmath evaluation of the two-terminal formula
        let s = two(0.5);
        let r = r_two_terminal(&s, 0.1).unwrap().rate;
        assert!((r - 2.160_951_608_809_222).abs() < 1e-12, "{r}");
        let gap = r - r_centralized(&s, 0.1).unwrap().rate;
        assert!((gap - 0.002_207_552_041_067).abs() < 1e-12, "{gap}");
        let gap = r_two_terminal(&s, 0.01).unwrap().rate - r_centralized(&s, 0.01).unwrap().rate;
        assert!((gap - 2.222_074_088_704e-5).abs() < 1e-13, "{gap}");
    }

    #[test]
    fn two_terminal_general_is_symmetric_and_consistent() {
        let s = two(0.5);
        assert_eq!(
            r_two_terminal_general(&s, 0.03, 0.07).unwrap(),
            r_two_terminal_general(&s, 0.07, 0.03).unwrap()
        );
        assert_eq!(
            r_two_terminal_general(&s, 0.1, 0.1).unwrap(),
            r_two_terminal(&s, 0.1).unwrap().rate
        );
    }

    #[test]
    fn golden_section_recovers_equal_split() {
        let s = two(0.5);
        let (d1, d2, rate) = two_terminal_line_search(&s, 0.1).unwrap();
        assert!((d1 - 0.1).abs() < 1e-6 && (d2 - 0.1).abs() < 1e-6);
        assert!((rate - r_two_terminal(&s, 0.1).unwrap().rate).abs() < 1e-8);
    }

    #[test]
    fn trusted_radius_enforced() {
        let s = two(0.5);
        assert!((trusted_radius(&s) - 0.125).abs() < 1e-15);
        assert!(matches!(
            r_two_terminal(&s, 0.2),
            Err(Error::OutOfTrustedRange { .. })
        ));
        assert!(matches!(r_two_terminal(&s, -0.1), Err(Error::InvalidDistortion(_))));
        assert!(matches!(r_two_pairs(&equi3(0.5), 0.2), Err(Error::OutOfTrustedRange { .. })));
    }

    #[test]
    fn two_pairs_without_hub_coupling_is_centralized() {
        // θ₂₃ = 0 when X₂ and X₃ are conditionally independent given X₁
        let g = SymMatrix::from_lower(3, &[1.0, 0.5, 1.0, 0.5, 0.25, 1.0]).unwrap();
        let s = GaussianSource::new(g).unwrap();
        assert!(s.theta().get(1, 2).abs() < 1e-15);
        let r = r_two_pairs(&s, 0.01).unwrap();
        for x in &r.optimizer {
            assert!((x - 0.01).abs() < 1e-11);
        }
        assert!((r.rate - r_centralized(&s, 0.01).unwrap().rate).abs() < 1e-12);
    }

    #[test]
    fn two_pairs_gap_and_optimizer_asymptotics() {
        let s = equi3(0.5);
        let r = r_two_pairs(&s, 0.01).unwrap();
        let gap = r.rate - r_centralized(&s, 0.01).unwrap().rate;
        assert!((gap / 1.25e-5 - 1.0).abs() < 0.02, "{gap}");
        assert!(r.stationarity_residual.unwrap() < 1e-8);

        let d = 0.05;
        let r = r_two_pairs(&s, d).unwrap();
        let ratio = (r.optimizer[0] - d) / d.powi(3);
        assert!((ratio / (2.0 / 3.0 * 0.25) - 1.0).abs() < 0.1, "{ratio}");
        let mean = r.optimizer.iter().sum::<f64>() / 3.0;
        assert!((mean - d).abs() < 1e-15);
    }

    #[test]
    fn triangle_examples() {
        let s = equi3(0.5);
        let r = r_triangle(&s, 0.05).unwrap();
        assert!((r - 0.5 * (0.5 / 0.05f64.powi(3)).ln()).abs() < 1e-12);
        let ind = GaussianSource::new(SymMatrix::identity(3).unwrap()).unwrap();
        let r = r_triangle(&ind, 0.1).unwrap();
        assert!((r + 1.5 * 0.1f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rtilde_zero_when_distortions_exceed_conditional_variances() {
        let s = equi3(0.5);
        // γ₂₂|₁ = γ₃₃|₁ = 0.75
        assert_eq!(rtilde_conditional(&s, 0.8, 2.0).unwrap(), 0.0);
        assert!(matches!(
            rtilde_conditional(&s, 0.0, 0.1),
            Err(Error::InvalidDistortion(_))
        ));
    }

    #[test]
    fn rtilde_factorizes_without_conditional_coupling() {
        let g = SymMatrix::from_lower(3, &[1.0, 0.5, 1.0, 0.5, 0.25, 1.0]).unwrap();
        let s = GaussianSource::new(g).unwrap();
        let c = conditional_covariance(&s, &[1, 2], &[0]).unwrap();
        for (d2, d3) in [(0.01, 0.02), (0.1, 0.05), (0.3, 0.3)] {
            let r = rtilde_conditional(&s, d2, d3).unwrap();
            let expect = 0.5 * (c.get(0, 0) / d2).ln() + 0.5 * (c.get(1, 1) / d3).ln();
            assert!((r - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn rtilde_monotone_on_grid() {
        let s = GaussianSource::new(
            SymMatrix::from_lower(3, &[1.3, 0.4, 0.9, -0.3, 0.5, 1.1]).unwrap(),
        )
        .unwrap();
        let grid: Vec<f64> = (1..=120).map(|k| k as f64 * 0.01).collect();
        for &d2 in &grid {
            let row: Vec<f64> = grid.iter().map(|&d3| rtilde_conditional(&s, d2, d3).unwrap()).collect();
            for w in row.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "d2 = {d2}: {w:?}");
            }
        }
        for &d3 in &grid {
            let col: Vec<f64> = grid.iter().map(|&d2| rtilde_conditional(&s, d2, d3).unwrap()).collect();
            for w in col.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "d3 = {d3}: {w:?}");
            }
        }
    }

    #[test]
    fn sandwich_and_vanishing_gap() {
        for s in [equi3(0.5), equi3(-0.3)] {
            for d in [1e-4, 1e-3, 0.01, 0.05] {
                let rc = r_centralized(&s, d).unwrap().rate;
                let tp = r_two_pairs(&s, d).unwrap().rate;
                assert!(tp >= rc - 1e-9);
                if d == 1e-4 {
                    assert!(tp - rc < 1e-6);
                }
                assert!((rc - shannon_lower_bound(&s, d)).abs() < 1e-10);
            }
        }
    }
}
