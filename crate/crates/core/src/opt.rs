//! Log-det programs for the distributed (`{{1},{2},{3}}`) and pair+singleton
//! (`{{1,2},{3}}`) systems.
//!
//! Both minimize `½ log(det Γ / det D)` with `D = (Θ + Ξ⁻¹)⁻¹` over a
//! quantization-noise covariance `Ξ ≻ 0` whose off-diagonal entries are zero
//! except on the pattern's free pairs, subject to `tr D ≤ L·d`.
//!
//! The solver is a primal log-barrier method on the trace constraint. Diagonal
//! noise entries are parameterized as `ξᵢᵢ = exp(sᵢ)`; a free entry is written
//! as `ξᵢⱼ = cᵢⱼ √(ξᵢᵢ ξⱼⱼ)` and kept inside the PD cone by the barrier
//! `−μ log det R`, where `R` is the correlation matrix of `Ξ`.

use serde::Serialize;

use crate::closed::check_trusted;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::{mmse_cov, GaussianSource};

/// Barrier duality-gap target.
pub const DUALITY_GAP_TOL: f64 = 1e-10;

/// Which off-diagonal noise entries may be nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NoisePattern {
    l: usize,
    free_offdiag: Vec<(usize, usize)>,
}

impl NoisePattern {
    /// Diagonal noise: every encoder sees one source.
    pub fn distributed(l: usize) -> Self {
        Self {
            l,
            free_offdiag: Vec::new(),
        }
    }

    /// Sources 0 and 1 share an encoder; source 2 is alone.
    pub fn pair_plus_singleton() -> Self {
        Self {
            l: 3,
            free_offdiag: vec![(0, 1)],
        }
    }

    pub fn new(l: usize, free_offdiag: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &free_offdiag {
            if i >= l || j >= l || i == j {
                return Err(Error::IndexOutOfRange { index: i.max(j), order: l });
            }
        }
        let mut free: Vec<(usize, usize)> =
            free_offdiag.into_iter().map(|(i, j)| (i.min(j), i.max(j))).collect();
        free.sort_unstable();
        free.dedup();
        Ok(Self { l, free_offdiag: free })
    }

    pub fn num_sources(&self) -> usize {
        self.l
    }

    pub fn free_offdiag(&self) -> &[(usize, usize)] {
        &self.free_offdiag
    }

    /// Number of free `Ξ` entries: the diagonal plus the free pairs.
    pub fn num_free(&self) -> usize {
        self.l + self.free_offdiag.len()
    }

    fn is_free(&self, i: usize, j: usize) -> bool {
        i == j || self.free_offdiag.contains(&(i.min(j), i.max(j)))
    }

    fn check_xi(&self, xi: &SymMatrix) -> Result<()> {
        if xi.order() != self.l {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                found: xi.order(),
            });
        }
        for i in 0..self.l {
            for j in 0..i {
                if !self.is_free(i, j) && xi.get(i, j) != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "noise entry ({},{}) must be zero for this pattern",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    /// Initial barrier weight μ.
    pub barrier_init: f64,
    /// Factor applied to μ after each centering step.
    pub barrier_shrink: f64,
    /// Bound on the Lagrangian gradient (log-scaled parameters) at exit.
    pub newton_tol: f64,
    pub max_outer: usize,
    /// Permitted violation of `tr D ≤ L·d`.
    pub trace_slack_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            barrier_init: 1e-2,
            barrier_shrink: 0.1,
            newton_tol: 1e-9,
            max_outer: 40,
            trace_slack_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.barrier_init > 0.0
            && self.barrier_shrink > 0.0
            && self.barrier_shrink < 1.0
            && self.newton_tol > 0.0
            && self.max_outer > 0
            && self.trace_slack_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverResult {
    pub xi_star: SymMatrix,
    pub d_star: SymMatrix,
    /// Sum-rate in nats.
    pub rate: f64,
    pub kkt_residual: f64,
    /// `L·d − tr D*`.
    pub trace_gap: f64,
    pub outer_iterations: usize,
    pub newton_steps: usize,
}

/// `D = (Θ + Ξ⁻¹)⁻¹`.
pub fn compute_d(theta: &SymMatrix, xi: &SymMatrix) -> Result<SymMatrix> {
    theta.add(&xi.inverse()?)?.inverse()
}

/// `Γ − Γ(Γ + Ξ)⁻¹Γ`, the error covariance of estimating `X` from `X + N`
/// with `N ~ N(0, Ξ)`. Algebraically equal to [`compute_d`].
pub fn compute_d_schur(gamma: &SymMatrix, xi: &SymMatrix) -> Result<SymMatrix> {
    let l = gamma.order();
    if xi.order() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: xi.order(),
        });
    }
    xi.cholesky()?;
    let mut joint = SymMatrix::zeros(2 * l)?;
    for i in 0..l {
        for j in 0..=i {
            let g = gamma.get(i, j);
            joint.set(i, j, g);
            joint.set(l + i, j, g);
            joint.set(l + j, i, g);
            joint.set(l + i, l + j, g + xi.get(i, j));
        }
    }
    let target: Vec<usize> = (0..l).collect();
    let observed: Vec<usize> = (l..2 * l).collect();
    mmse_cov(&joint, &target, &observed).map_err(|e| match e {
        Error::SingularObservation => Error::NotPositiveDefinite { index: 0, pivot: 0.0 },
        other => other,
    })
}

struct Derivs {
    d: SymMatrix,
    objective: f64,
    /// ∂f/∂ξ over the pattern's free entries (diagonal first).
    grad_f: Vec<f64>,
    /// ∂ tr D/∂ξ, same layout.
    grad_tr: Vec<f64>,
}

fn derivs(src: &GaussianSource, xi: &SymMatrix, pattern: &NoisePattern) -> Result<Derivs> {
    let xi_inv = xi.inverse()?;
    let m = src.theta().add(&xi_inv)?;
    let chol = m.cholesky()?;
    let d = chol.inverse();
    let objective = 0.5 * (src.logdet_gamma() + chol.logdet());
    let g = d.congruence(&xi_inv)?;
    let d_sq = SymMatrix::symmetrize(&d.mul(&d)?)?;
    let h = d_sq.congruence(&xi_inv)?;
    let l = pattern.l;
    let mut grad_f = Vec::with_capacity(pattern.num_free());
    let mut grad_tr = Vec::with_capacity(pattern.num_free());
    for i in 0..l {
        grad_f.push(-0.5 * g.get(i, i));
        grad_tr.push(h.get(i, i));
    }
    for &(i, j) in &pattern.free_offdiag {
        grad_f.push(-g.get(i, j));
        grad_tr.push(2.0 * h.get(i, j));
    }
    Ok(Derivs {
        d,
        objective,
        grad_f,
        grad_tr,
    })
}

/// Objective `½ log(det Γ / det D)` and its gradient with respect to the
/// free entries of `Ξ`: the diagonal entries in order, then each free
/// off-diagonal pair (perturbing both stored positions together).
pub fn objective_and_gradient(
    src: &GaussianSource,
    xi: &SymMatrix,
    pattern: &NoisePattern,
) -> Result<(f64, Vec<f64>)> {
    if src.len() != pattern.l {
        return Err(Error::DimensionMismatch {
            expected: pattern.l,
            found: src.len(),
        });
    }
    pattern.check_xi(xi)?;
    let dv = derivs(src, xi, pattern)?;
    Ok((dv.objective, dv.grad_f))
}

struct Barrier<'a> {
    src: &'a GaussianSource,
    pattern: &'a NoisePattern,
    budget: f64,
}

struct Point {
    objective: f64,
    slack: f64,
    corr_logdet: f64,
    grad_f: Vec<f64>,
    grad_tr: Vec<f64>,
    grad_corr: Vec<f64>,
}

impl Barrier<'_> {
    fn l(&self) -> usize {
        self.pattern.l
    }

    fn correlation(&self, x: &[f64]) -> Result<SymMatrix> {
        let mut r = SymMatrix::identity(self.l())?;
        for (k, &(i, j)) in self.pattern.free_offdiag.iter().enumerate() {
            r.set(i, j, x[self.l() + k]);
        }
        Ok(r)
    }

    fn xi(&self, x: &[f64]) -> Result<SymMatrix> {
        let l = self.l();
        let mut xi = SymMatrix::zeros(l)?;
        for i in 0..l {
            xi.set(i, i, x[i].exp());
        }
        for (k, &(i, j)) in self.pattern.free_offdiag.iter().enumerate() {
            xi.set(i, j, x[l + k] * (0.5 * (x[i] + x[j])).exp());
        }
        Ok(xi)
    }

    /// Evaluates objective, slack and their parameter-space gradients;
    /// `None` outside the barrier's domain.
    fn eval(&self, x: &[f64]) -> Option<Point> {
        self.eval_raw(x).filter(|p| p.slack > 0.0)
    }

    /// As [`Self::eval`], but the trace constraint may be violated.
    fn eval_raw(&self, x: &[f64]) -> Option<Point> {
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let r = self.correlation(x).ok()?;
        let r_chol = r.cholesky().ok()?;
        let xi = self.xi(x).ok()?;
        let dv = derivs(self.src, &xi, self.pattern).ok()?;
        let slack = self.budget - dv.d.trace();
        let l = self.l();
        let r_inv = r_chol.inverse();
        let to_params = |g: &[f64]| {
            let mut out = vec![0.0; g.len()];
            for i in 0..l {
                out[i] += xi.get(i, i) * g[i];
            }
            for (k, &(i, j)) in self.pattern.free_offdiag.iter().enumerate() {
                let gij = g[l + k];
                out[i] += 0.5 * xi.get(i, j) * gij;
                out[j] += 0.5 * xi.get(i, j) * gij;
                out[l + k] = (xi.get(i, i) * xi.get(j, j)).sqrt() * gij;
            }
            out
        };
        let mut grad_corr = vec![0.0; self.pattern.num_free()];
        for (k, &(i, j)) in self.pattern.free_offdiag.iter().enumerate() {
            grad_corr[l + k] = 2.0 * r_inv.get(i, j);
        }
        Some(Point {
            objective: dv.objective,
            slack,
            corr_logdet: r_chol.logdet(),
            grad_f: to_params(&dv.grad_f),
            grad_tr: to_params(&dv.grad_tr),
            grad_corr,
        })
    }

    fn value(&self, p: &Point, mu: f64) -> f64 {
        p.objective - mu * p.slack.ln() - mu * p.corr_logdet
    }

    fn gradient(&self, p: &Point, mu: f64) -> Vec<f64> {
        (0..p.grad_f.len())
            .map(|k| p.grad_f[k] + mu * p.grad_tr[k] / p.slack - mu * p.grad_corr[k])
            .collect()
    }

    /// Central differences of the analytic gradients of the objective, the
    /// trace and the correlation barrier.
    fn second_derivatives(&self, x: &[f64]) -> Option<[Vec<Vec<f64>>; 3]> {
        let n = x.len();
        let mut out = [vec![vec![0.0; n]; n], vec![vec![0.0; n]; n], vec![vec![0.0; n]; n]];
        let h = 1e-5;
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let (pp, pm) = match (self.eval_raw(&xp), self.eval_raw(&xm)) {
                (Some(a), Some(b)) => (a, b),
                _ => return None,
            };
            for r in 0..n {
                out[0][r][k] = (pp.grad_f[r] - pm.grad_f[r]) / (2.0 * h);
                out[1][r][k] = (pp.grad_tr[r] - pm.grad_tr[r]) / (2.0 * h);
                out[2][r][k] = (pp.grad_corr[r] - pm.grad_corr[r]) / (2.0 * h);
            }
        }
        Some(out)
    }

    /// Hessian of the barrier function. The rank-one slack term is exact,
    /// since it dominates as μ → 0.
    fn hessian(&self, x: &[f64], p: &Point, mu: f64) -> Option<Vec<Vec<f64>>> {
        let n = x.len();
        let [hf, ht, hc] = self.second_derivatives(x)?;
        let mut hess = vec![vec![0.0; n]; n];
        for r in 0..n {
            for k in 0..n {
                hess[r][k] = hf[r][k] + mu * ht[r][k] / p.slack - mu * hc[r][k]
                    + mu * p.grad_tr[r] * p.grad_tr[k] / (p.slack * p.slack);
            }
        }
        symmetrize(&mut hess);
        Some(hess)
    }

    /// Newton steps on the stationarity conditions with the trace constraint
    /// held as an equality. Removes the O(μ) bias the barrier leaves behind.
    fn polish(&self, mut x: Vec<f64>) -> Vec<f64> {
        let n = x.len();
        let best = x.clone();
        for _ in 0..6 {
            let Some(p) = self.eval_raw(&x) else { return best };
            let Some([hf, ht, _]) = self.second_derivatives(&x) else { return best };
            let nu = -dot(&p.grad_f, &p.grad_tr) / dot(&p.grad_tr, &p.grad_tr);
            let mut a = vec![vec![0.0; n + 1]; n + 1];
            let mut b = vec![0.0; n + 1];
            for r in 0..n {
                for k in 0..n {
                    a[r][k] = hf[r][k] + nu * ht[r][k];
                }
                a[r][n] = p.grad_tr[r];
                a[n][r] = p.grad_tr[r];
                b[r] = -p.grad_f[r];
            }
            b[n] = p.slack;
            let Some(sol) = solve_dense(a, b) else { return best };
            let step_norm = sol[..n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let trial: Vec<f64> = x.iter().zip(&sol).map(|(v, s)| v + s).collect();
            if self.eval_raw(&trial).is_none() {
                return best;
            }
            x = trial;
            if step_norm < 1e-15 {
                break;
            }
        }
        x
    }

    fn kkt_residual(p: &Point) -> f64 {
        let nu = -dot(&p.grad_f, &p.grad_tr) / dot(&p.grad_tr, &p.grad_tr);
        p.grad_f
            .iter()
            .zip(&p.grad_tr)
            .map(|(gf, gt)| (gf + nu * gt).abs())
            .fold(0.0, f64::max)
    }
}

fn symmetrize(m: &mut [Vec<f64>]) {
    for r in 0..m.len() {
        for k in 0..r {
            let avg = 0.5 * (m[r][k] + m[k][r]);
            m[r][k] = avg;
            m[k][r] = avg;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `H Δ = −g`, shifting the diagonal until `H` factors.
fn newton_direction(hess: &[Vec<f64>], grad: &[f64]) -> Option<Vec<f64>> {
    let n = grad.len();
    let scale = (0..n).map(|i| hess[i][i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..60 {
        let mut m = SymMatrix::zeros(n).ok()?;
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, hess[i][j] + if i == j { shift } else { 0.0 });
            }
        }
        if let Ok(chol) = m.cholesky() {
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            return Some(chol.solve(&neg));
        }
        shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
    }
    None
}

/// Minimizes the sum-rate objective under the pattern and trace budget.
pub fn solve_rd(
    src: &GaussianSource,
    pattern: &NoisePattern,
    d: f64,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    if src.len() != pattern.l {
        return Err(Error::DimensionMismatch {
            expected: pattern.l,
            found: src.len(),
        });
    }
    check_trusted(src, d)?;
    let l = pattern.l;
    let problem = Barrier {
        src,
        pattern,
        budget: l as f64 * d,
    };
    // Ξ = (d/2)·I is strictly feasible because D ≼ Ξ
    let mut x: Vec<f64> = vec![(0.5 * d).ln(); l];
    x.resize(x.len() + pattern.free_offdiag.len(), 0.0);
    let barrier_count = 1.0 + pattern.free_offdiag.len() as f64;

    let mut mu = cfg.barrier_init;
    let mut newton_steps = 0;
    let mut kkt = f64::INFINITY;
    let fail = |what, iterations, residual, x: &[f64]| Error::DidNotConverge {
        what,
        iterations,
        residual,
        last_iterate: x.to_vec(),
    };
    for outer in 1..=cfg.max_outer {
        let mut p = problem
            .eval(&x)
            .ok_or_else(|| fail("barrier iterate left the domain", outer, kkt, &x))?;
        let mut stalled = 0;
        for _ in 0..100 {
            let grad = problem.gradient(&p, mu);
            let hess = problem
                .hessian(&x, &p, mu)
                .ok_or_else(|| fail("finite-difference Hessian left the domain", outer, kkt, &x))?;
            let step = newton_direction(&hess, &grad)
                .ok_or_else(|| fail("Newton system could not be factored", outer, kkt, &x))?;
            newton_steps += 1;
            let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
            if decrement <= 1e-10 * mu {
                break;
            }
            let phi = problem.value(&p, mu);
            let noise = 1e-13 * phi.abs().max(1.0);
            let grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
            if decrement < noise {
                stalled += 1;
                if stalled > 3 {
                    break;
                }
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                if let Some(q) = problem.eval(&trial) {
                    let phi_q = problem.value(&q, mu);
                    let armijo = phi_q <= phi - 1e-4 * t * decrement;
                    // value changes below round-off: judge by the gradient
                    let smaller_grad = decrement < noise
                        && problem
                            .gradient(&q, mu)
                            .iter()
                            .fold(0.0_f64, |m, g| m.max(g.abs()))
                            < grad_norm;
                    if armijo || smaller_grad {
                        accepted = Some((trial, q));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((trial, q)) => {
                    x = trial;
                    p = q;
                }
                None if decrement < noise => break,
                None => return Err(fail("line search stalled", outer, decrement, &x)),
            }
        }
        // least-squares multiplier; μ/slack loses digits once the slack
        // reaches round-off
        kkt = Barrier::kkt_residual(&p);
        if barrier_count * mu < DUALITY_GAP_TOL && kkt < cfg.newton_tol {
            if p.slack < 1e-6 * problem.budget {
                let polished = problem.polish(x.clone());
                if let Some(q) = problem.eval_raw(&polished) {
                    let k = Barrier::kkt_residual(&q);
                    if q.slack >= -cfg.trace_slack_tol && k <= kkt.max(1e-12) {
                        x = polished;
                        kkt = k;
                    }
                }
            }
            let xi_star = problem.xi(&x)?;
            let d_star = compute_d(src.theta(), &xi_star)?;
            let rate = 0.5 * (src.logdet_gamma() - d_star.logdet()?);
            let trace_gap = problem.budget - d_star.trace();
            if trace_gap < -cfg.trace_slack_tol {
                return Err(fail("trace budget violated", outer, -trace_gap, &x));
            }
            return Ok(SolverResult {
                xi_star,
                d_star,
                rate,
                kkt_residual: kkt,
                trace_gap,
                outer_iterations: outer,
                newton_steps,
            });
        }
        mu *= cfg.barrier_shrink;
    }
    Err(fail("barrier method", cfg.max_outer, kkt, &x))
}

/// Noise covariance `Ξ` on the pattern with `diag(D) = target` and
/// `D[i][j] = 0` on every free pair. Newton iteration with a central-difference
/// Jacobian, started from `Ξ = diag(target)`.
pub fn find_xi_for_target_diag(
    src: &GaussianSource,
    pattern: &NoisePattern,
    target: &[f64],
) -> Result<SymMatrix> {
    let l = pattern.l;
    if src.len() != l || target.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: if src.len() != l { src.len() } else { target.len() },
        });
    }
    for &t in target {
        check_trusted(src, t)?;
    }
    let n = pattern.num_free();
    let build = |x: &[f64]| -> Result<SymMatrix> {
        let mut xi = SymMatrix::from_diag(&x[..l])?;
        for (k, &(i, j)) in pattern.free_offdiag.iter().enumerate() {
            xi.set(i, j, x[l + k]);
        }
        Ok(xi)
    };
    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        let xi = build(x).ok()?;
        let d = compute_d(src.theta(), &xi).ok()?;
        let mut r: Vec<f64> = (0..l).map(|i| d.get(i, i) - target[i]).collect();
        r.extend(pattern.free_offdiag.iter().map(|&(i, j)| d.get(i, j)));
        Some(r)
    };
    let norm = |r: &[f64]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = target.iter().cloned().fold(0.0, f64::max);

    let mut x: Vec<f64> = target.to_vec();
    x.resize(x.len() + pattern.free_offdiag.len(), 0.0);
    let mut r = residual(&x).ok_or(Error::NotPositiveDefinite { index: 0, pivot: 0.0 })?;
    for iter in 0..100 {
        if norm(&r) < 1e-12 * scale {
            return build(&x);
        }
        let mut jac = vec![vec![0.0; n]; n];
        for k in 0..n {
            let h = 1e-6 * scale;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let (rp, rm) = match (residual(&xp), residual(&xm)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::DidNotConverge {
                        what: "target-diagonal Jacobian",
                        iterations: iter,
                        residual: norm(&r),
                        last_iterate: x,
                    })
                }
            };
            for row in 0..n {
                jac[row][k] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let step = solve_dense(jac, r.iter().map(|v| -v).collect()).ok_or_else(|| {
            Error::DidNotConverge {
                what: "singular target-diagonal Jacobian",
                iterations: iter,
                residual: norm(&r),
                last_iterate: x.clone(),
            }
        })?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if let Some(rt) = residual(&trial) {
                if norm(&rt) < norm(&r) || t < 1e-6 {
                    x = trial;
                    r = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::DidNotConverge {
                    what: "target-diagonal line search",
                    iterations: iter,
                    residual: norm(&r),
                    last_iterate: x,
                });
            }
        }
    }
    Err(Error::DidNotConverge {
        what: "target-diagonal Newton",
        iterations: 100,
        residual: norm(&r),
        last_iterate: x,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}
