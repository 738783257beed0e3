#![allow(dead_code)]

use mtrd_core::closed::trusted_radius;
use mtrd_core::opt::compute_d;
use mtrd_core::{GaussianSource, SymMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gram-Schmidt on a matrix with uniform entries.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (a, b) in v.iter_mut().zip(u) {
                *a -= p * b;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    q
}

/// `Q diag(λ) Qᵀ` with eigenvalues log-uniform in `[lo, hi]`.
pub fn random_source(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> GaussianSource {
    let q = random_orthogonal(rng, n);
    let lambdas: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(lo.ln()..hi.ln()).exp())
        .collect();
    let mut dense = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            dense[i][j] = (0..n).map(|k| q[k][i] * lambdas[k] * q[k][j]).sum();
        }
    }
    GaussianSource::new(SymMatrix::symmetrize(&dense).unwrap()).unwrap()
}

/// Condition number at most 50; `d = 1e-2` stays inside the trusted radius.
pub fn acceptance_source(rng: &mut ChaCha8Rng, n: usize) -> GaussianSource {
    random_source(rng, n, 0.1, 5.0)
}

/// Unit-scale 2×2 covariance with `|ρ| ≤ 0.95` whose trusted radius admits `d_max`.
pub fn random_pair(rng: &mut ChaCha8Rng, d_max: f64) -> GaussianSource {
    loop {
        let v1: f64 = rng.gen_range(0.5f64.ln()..2f64.ln()).exp();
        let v2: f64 = rng.gen_range(0.5f64.ln()..2f64.ln()).exp();
        let rho: f64 = rng.gen_range(-0.95..0.95);
        let c = rho * (v1 * v2).sqrt();
        let s = GaussianSource::new(SymMatrix::from_lower(2, &[v1, c, v2]).unwrap()).unwrap();
        if trusted_radius(&s) >= d_max {
            return s;
        }
    }
}

/// Gap `−½ log det(D/d)` of the best noise covariance found by a zooming
/// grid over `Ξ = s·[[1+u, w√((1+u)(1+v)), 0], [·, 1+v, 0], [0, 0, 1]]`,
/// with `s` set by bisection so that `tr D = 3d`. `free_pair` enables `w`.
pub fn grid_oracle_gap(src: &GaussianSource, d: f64, free_pair: bool) -> f64 {
    let eval = |u: f64, v: f64, w: f64| -> f64 {
        let shape = |s: f64| {
            let mut xi = SymMatrix::from_diag(&[s * (1.0 + u), s * (1.0 + v), s]).unwrap();
            xi.set(1, 0, s * w * ((1.0 + u) * (1.0 + v)).sqrt());
            xi
        };
        let (mut lo, mut hi) = (0.2 * d, 5.0 * d);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if compute_d(src.theta(), &shape(mid)).unwrap().trace() < 3.0 * d {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let dm = compute_d(src.theta(), &shape(lo)).unwrap();
        -0.5 * dm.scale(1.0 / d).logdet().unwrap()
    };
    let (mut c, mut width) = ([0.0f64; 3], 0.5);
    let mut best = eval(0.0, 0.0, 0.0);
    let span = 5i32;
    for _ in 0..11 {
        let mut arg = c;
        let w_range = if free_pair { -span..=span } else { 0..=0 };
        for a in -span..=span {
            for b in -span..=span {
                for e in w_range.clone() {
                    let step = width / span as f64;
                    let p = [c[0] + step * a as f64, c[1] + step * b as f64, c[2] + step * e as f64];
                    if p[0] <= -0.9 || p[1] <= -0.9 || p[2].abs() >= 0.9 {
                        continue;
                    }
                    let val = eval(p[0], p[1], p[2]);
                    if val < best {
                        best = val;
                        arg = p;
                    }
                }
            }
        }
        c = arg;
        width /= 4.0;
    }
    best
}
