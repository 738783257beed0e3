//! Explicit Gaussian test channels for the two-pairs and triangle systems.
//!
//! For each source pair `(i,j)` with `θᵢⱼ ≠ 0` the channel
//! `U_ij = (1−λ)X_a ± λX_b + η_ij N_ij` adds `a aᵀ/η²` to the posterior
//! precision, and with `η² = λ(1−λ)/|θᵢⱼ|` that term cancels `θᵢⱼ` exactly.
//! Per-source channels `V_ℓ = α_ℓ X_ℓ + Z_ℓ` then set the diagonal.
//!
//! Auxiliary variables are grouped per encoder:
//!
//! | topology  | groups                                              |
//! |-----------|-----------------------------------------------------|
//! | two-pairs | `{1,2}: (U12, V1, V2)`, `{1,3}: (U13, V3)`          |
//! | triangle  | `{1,2}: (U12, V1)`, `{1,3}: (U13, V3)`, `{2,3}: (U23, V2)` |

use serde::Serialize;

use crate::cover::Topology;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::{conditional_covariance, mmse_cov, GaussianSource};

/// Zero-pattern tolerance for the conditional covariance.
pub const STRUCTURE_TOL: f64 = 1e-9;

const ETA_TOL: f64 = 1e-12;

/// Source pairs in storage order: (1,2), (1,3), (2,3).
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Which coefficient sits on which source: the first gets `1−λ`, the second `λ`.
fn weighted_order(pair: usize) -> (usize, usize) {
    match pair {
        0 => (0, 1),
        1 => (2, 0),
        _ => (1, 2),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestChannelSpec {
    pub topology: Topology,
    pub lambda: f64,
    pub alphas: [f64; 3],
    /// `η` per pair; `None` when the pair has no channel.
    pub etas: [Option<f64>; 3],
    /// `+1` for the sum form (`θ < 0`), `−1` for the difference form.
    pub signs: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct AchievabilityResult {
    /// `cov(X₁, X₂, X₃ | all auxiliary variables)`.
    pub cond_cov: SymMatrix,
    /// Nats.
    pub rate: f64,
    pub distortions: Vec<f64>,
    /// Largest deviation from the required zero pattern (and, for two pairs,
    /// from the closed-form (2,3) entry).
    pub structure_residual: f64,
    /// Largest `|cov(W_S, X_{Sᶜ} | X_S)|` over encoder groups.
    pub markov_residual: f64,
    /// Conditional correlation of sources 2 and 3 (two pairs only).
    pub rho_tilde: Option<f64>,
}

fn check_source(src: &GaussianSource, topology: Topology) -> Result<()> {
    if src.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: src.len(),
        });
    }
    match topology {
        Topology::TwoPairs | Topology::Triangle => Ok(()),
        other => Err(Error::UnsupportedTopology(other.name().to_string())),
    }
}

fn uses_pair(topology: Topology, pair: usize) -> bool {
    topology == Topology::Triangle || pair < 2
}

/// `√(λ(1−λ)(γ_ii|k γ_jj|k − γ_ij|k²)/|γ_ij|k|)` with `k` the third source;
/// `None` when the pair is conditionally independent.
pub fn eta(src: &GaussianSource, pair: usize, lambda: f64) -> Result<Option<f64>> {
    let (i, j) = PAIRS[pair];
    if src.theta().get(i, j) == 0.0 {
        return Ok(None);
    }
    let k = 3 - i - j;
    let c = conditional_covariance(src, &[i, j], &[k])?;
    let num = c.get(0, 0) * c.get(1, 1) - c.get(0, 1).powi(2);
    Ok(Some((lambda * (1.0 - lambda) * num / c.get(0, 1).abs()).sqrt()))
}

impl TestChannelSpec {
    /// Spec with the derived `η`s and signs for `src`.
    pub fn new(
        src: &GaussianSource,
        topology: Topology,
        lambda: f64,
        alphas: [f64; 3],
    ) -> Result<Self> {
        check_source(src, topology)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidConfig(format!("lambda {lambda} outside (0,1)")));
        }
        if alphas.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidConfig(format!("alphas {alphas:?} must be nonnegative")));
        }
        let mut etas = [None; 3];
        let mut signs = [0.0; 3];
        for p in 0..3 {
            let (i, j) = PAIRS[p];
            let theta = src.theta().get(i, j);
            signs[p] = if theta < 0.0 {
                1.0
            } else if theta > 0.0 {
                -1.0
            } else {
                0.0
            };
            if uses_pair(topology, p) {
                etas[p] = eta(src, p, lambda)?;
            }
        }
        Ok(Self {
            topology,
            lambda,
            alphas,
            etas,
            signs,
        })
    }

    /// `(coefficients on X, noise std)` for every auxiliary variable, U's
    /// first (pair order), then V₁..V₃.
    fn channels(&self) -> Vec<([f64; 3], f64)> {
        let mut out = Vec::new();
        for p in 0..3 {
            if let Some(eta) = self.etas[p] {
                let (a, b) = weighted_order(p);
                let mut coef = [0.0; 3];
                coef[a] = 1.0 - self.lambda;
                coef[b] = self.signs[p] * self.lambda;
                out.push((coef, eta));
            }
        }
        for l in 0..3 {
            let mut coef = [0.0; 3];
            coef[l] = self.alphas[l];
            out.push((coef, 1.0));
        }
        out
    }

    /// Positions (in the joint) of each encoder group, with the sources it sees.
    fn groups(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut u_pos = [None; 3];
        let mut next = 3;
        for p in 0..3 {
            if self.etas[p].is_some() {
                u_pos[p] = Some(next);
                next += 1;
            }
        }
        let v = |l: usize| next + l;
        let with_u = |p: usize, mut rest: Vec<usize>| {
            if let Some(pos) = u_pos[p] {
                rest.insert(0, pos);
            }
            rest
        };
        match self.topology {
            Topology::TwoPairs => vec![
                (with_u(0, vec![v(0), v(1)]), vec![0, 1]),
                (with_u(1, vec![v(2)]), vec![0, 2]),
            ],
            _ => vec![
                (with_u(0, vec![v(0)]), vec![0, 1]),
                (with_u(1, vec![v(2)]), vec![0, 2]),
                (with_u(2, vec![v(1)]), vec![1, 2]),
            ],
        }
    }
}

/// Joint covariance of `(X₁, X₂, X₃, U's, V₁, V₂, V₃)`.
pub fn build_joint(src: &GaussianSource, spec: &TestChannelSpec) -> Result<SymMatrix> {
    let fresh = TestChannelSpec::new(src, spec.topology, spec.lambda, spec.alphas)?;
    for p in 0..3 {
        let mismatch = match (spec.etas[p], fresh.etas[p]) {
            (Some(a), Some(b)) => (a - b).abs() > ETA_TOL * b.max(1.0),
            (None, None) => false,
            _ => true,
        };
        if mismatch || spec.signs[p] != fresh.signs[p] {
            return Err(Error::SpecMismatch {
                field: ["eta12", "eta13", "eta23"][p],
                stored: spec.etas[p].unwrap_or(0.0),
                recomputed: fresh.etas[p].unwrap_or(0.0),
            });
        }
    }
    let gamma = src.gamma();
    let channels = spec.channels();
    let n = 3 + channels.len();
    let mut joint = SymMatrix::zeros(n)?;
    let g_times = |a: &[f64; 3]| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|c| gamma.get(r, c) * a[c]).sum();
        }
        out
    };
    for i in 0..3 {
        for j in 0..=i {
            joint.set(i, j, gamma.get(i, j));
        }
    }
    for (k, (a, sigma)) in channels.iter().enumerate() {
        let ga = g_times(a);
        for (i, v) in ga.iter().enumerate() {
            joint.set(3 + k, i, *v);
        }
        for (m, (b, _)) in channels.iter().enumerate().take(k + 1) {
            let mut v: f64 = (0..3).map(|r| b[r] * ga[r]).sum();
            if m == k {
                v += sigma * sigma;
            }
            joint.set(3 + k, 3 + m, v);
        }
    }
    Ok(joint)
}

/// `½ (log det Γ − log det cond_cov)`.
pub fn achievable_rate(src: &GaussianSource, result: &AchievabilityResult) -> Result<f64> {
    Ok(0.5 * (src.logdet_gamma() - result.cond_cov.logdet()?))
}

/// Conditional correlation `ρ̃` of sources 2 and 3 in the two-pairs
/// construction, given their conditional variances.
pub fn rho_tilde(theta23: f64, d2: f64, d3: f64) -> f64 {
    let x = 4.0 * theta23 * theta23 * d2 * d3;
    // 1 − 2/(1+t) = x/(1+t)² with t = √(1+x)
    let mag = x.sqrt() / (1.0 + (1.0 + x).sqrt());
    if theta23 > 0.0 {
        -mag
    } else {
        mag
    }
}

/// Conditional covariance of the sources given every auxiliary variable,
/// checked against the zero pattern the construction guarantees.
pub fn conditional_structure(
    src: &GaussianSource,
    spec: &TestChannelSpec,
) -> Result<AchievabilityResult> {
    let joint = build_joint(src, spec)?;
    let aux: Vec<usize> = (3..joint.order()).collect();
    let cond_cov = mmse_cov(&joint, &[0, 1, 2], &aux)?;
    let distortions = cond_cov.diag();

    let mut residual = cond_cov.get(0, 1).abs().max(cond_cov.get(0, 2).abs());
    let mut rho = None;
    match spec.topology {
        Topology::Triangle => residual = residual.max(cond_cov.get(1, 2).abs()),
        _ => {
            let r = rho_tilde(src.theta().get(1, 2), distortions[1], distortions[2]);
            let expected = r * (distortions[1] * distortions[2]).sqrt();
            residual = residual.max((cond_cov.get(1, 2) - expected).abs());
            rho = Some(r);
        }
    }

    let mut markov: f64 = 0.0;
    for (group, seen) in spec.groups() {
        let unseen: Vec<usize> = (0..3).filter(|i| !seen.contains(i)).collect();
        let mut target = group.clone();
        target.extend(&unseen);
        let c = mmse_cov(&joint, &target, &seen)?;
        for g in 0..group.len() {
            for u in 0..unseen.len() {
                markov = markov.max(c.get(g, group.len() + u).abs());
            }
        }
    }

    if residual > STRUCTURE_TOL || markov > STRUCTURE_TOL {
        return Err(Error::StructureViolation(residual.max(markov)));
    }
    let mut result = AchievabilityResult {
        cond_cov,
        rate: 0.0,
        distortions,
        structure_residual: residual,
        markov_residual: markov,
        rho_tilde: rho,
    };
    result.rate = achievable_rate(src, &result)?;
    Ok(result)
}

/// Posterior precision `Θ + Σ a aᵀ/η² + diag(α²)`, the information-form
/// counterpart of conditioning on the joint.
fn posterior_precision(src: &GaussianSource, spec: &TestChannelSpec) -> Result<SymMatrix> {
    let mut p = src.theta().clone();
    for (a, sigma) in spec.channels() {
        let w = 1.0 / (sigma * sigma);
        for i in 0..3 {
            for j in 0..=i {
                p.set(i, j, p.get(i, j) + w * a[i] * a[j]);
            }
        }
    }
    Ok(p)
}

const TUNE_TOL: f64 = 1e-13;

/// Chooses `α` so the conditional variances hit `target` (relative accuracy
/// `1e-13`). Newton on `α²` with the exact Jacobian `∂D_ℓℓ/∂α_m² = −D_ℓm²`,
/// halving steps until the residual shrinks.
pub fn tune_alphas(
    src: &GaussianSource,
    topology: Topology,
    lambda: f64,
    target: &[f64; 3],
) -> Result<TestChannelSpec> {
    if target.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidDistortion(
            target.iter().cloned().fold(f64::INFINITY, f64::min),
        ));
    }
    let base = TestChannelSpec::new(src, topology, lambda, [0.0; 3])?;
    let cov_at = |beta: &[f64; 3]| -> Result<SymMatrix> {
        let mut spec = base.clone();
        spec.alphas = beta.map(f64::sqrt);
        posterior_precision(src, &spec)?.inverse()
    };
    let zero = cov_at(&[0.0; 3])?;
    for l in 0..3 {
        let ceiling = zero.get(l, l);
        if target[l] > ceiling * (1.0 + TUNE_TOL) {
            return Err(Error::TargetUnreachable {
                index: l,
                target: target[l],
                ceiling,
            });
        }
    }
    let residual = |c: &SymMatrix| -> [f64; 3] { [0, 1, 2].map(|l| c.get(l, l) / target[l] - 1.0) };
    let norm = |r: &[f64; 3]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let p0 = posterior_precision(src, &base)?;
    let mut beta = [0, 1, 2].map(|l| (1.0 / target[l] - p0.get(l, l)).max(0.0));
    let mut cov = cov_at(&beta)?;
    let mut r = residual(&cov);
    for iter in 0..200 {
        if norm(&r) < TUNE_TOL {
            let mut spec = base;
            spec.alphas = beta.map(f64::sqrt);
            return Ok(spec);
        }
        // rows scaled by 1/target to match the residual
        let mut full = [[0.0; 3]; 3];
        for l in 0..3 {
            for m in 0..3 {
                full[l][m] = -cov.get(l, m).powi(2) / target[l];
            }
        }
        let step = solve3(full, r.map(|v| -v)).ok_or_else(|| Error::DidNotConverge {
            what: "alpha tuning Jacobian",
            iterations: iter,
            residual: norm(&r),
            last_iterate: beta.to_vec(),
        })?;
        let mut t = 1.0;
        loop {
            let trial = [0, 1, 2].map(|l| (beta[l] + t * step[l]).max(0.0));
            let c = cov_at(&trial)?;
            let rt = residual(&c);
            if norm(&rt) < norm(&r) {
                beta = trial;
                cov = c;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(Error::DidNotConverge {
                    what: "alpha tuning line search",
                    iterations: iter,
                    residual: norm(&r),
                    last_iterate: beta.to_vec(),
                });
            }
        }
    }
    Err(Error::DidNotConverge {
        what: "alpha tuning",
        iterations: 200,
        residual: norm(&r),
        last_iterate: beta.to_vec(),
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(&m) / d;
    }
    Some(x)
}
