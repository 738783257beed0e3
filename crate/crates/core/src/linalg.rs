//! Small dense symmetric matrices.
//!
//! Everything here works on matrices of order at most [`MAX_ORDER`]; all
//! solvers are direct. Storage is packed lower-triangular, so symmetry holds
//! by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported matrix order. Sources are capped at 8; the
/// Berger–Tung joint covariance of three sources and six auxiliaries needs 9.
pub const MAX_ORDER: usize = 9;

/// Relative Cholesky pivot threshold (scaled by the largest diagonal entry).
pub const PD_PIVOT_TOL: f64 = 1e-12;

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// Symmetric matrix with one stored copy per entry pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self {
            order,
            data: vec![0.0; order * (order + 1) / 2],
        })
    }

    pub fn identity(order: usize) -> Result<Self> {
        let mut m = Self::zeros(order)?;
        for i in 0..order {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        Ok(m)
    }

    /// Builds from full rows; the upper and lower triangles must agree exactly.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for j in 0..=i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::NotSymmetric { i, j });
                }
                m.set(i, j, rows[i][j]);
            }
        }
        Ok(m)
    }

    /// Builds from a row-major lower triangle: `a00, a10, a11, a20, a21, a22, ...`.
    pub fn from_lower(order: usize, lower: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(order)?;
        if lower.len() != m.data.len() {
            return Err(Error::DimensionMismatch {
                expected: m.data.len(),
                found: lower.len(),
            });
        }
        m.data.copy_from_slice(lower);
        Ok(m)
    }

    /// Symmetric part `(A + Aᵀ)/2` of a square dense matrix.
    pub fn symmetrize(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, 0.5 * (a[i][j] + a[j][i]));
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed(i, j)] = v;
    }

    /// Packed lower triangle, row-major.
    pub fn lower(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            order: self.order,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            order: self.order,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: other.order,
            });
        }
        Ok(())
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.order, other.order);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Dense product `self · other` (not symmetric in general).
    pub fn mul(&self, other: &Self) -> Result<Vec<Vec<f64>>> {
        self.check_same(other)?;
        let n = self.order;
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
                    .collect()
            })
            .collect())
    }

    /// `a · self · a` for symmetric `a`.
    pub fn congruence(&self, a: &Self) -> Result<Self> {
        let left = a.mul(self)?;
        let n = self.order;
        let mut out = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..n).map(|k| left[i][k] * a.get(k, j)).sum();
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        for &i in idx {
            if i >= self.order {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    order: self.order,
                });
            }
        }
        let mut m = Self::zeros(idx.len())?;
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().take(a + 1) {
                m.set(a, b, self.get(i, j));
            }
        }
        Ok(m)
    }

    /// Simultaneous row/column permutation: entry `(i, j)` moves to
    /// `(perm[i], perm[j])`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: perm.len(),
            });
        }
        let mut m = Self::zeros(self.order)?;
        for i in 0..self.order {
            for j in 0..=i {
                m.set(perm[i], perm[j], self.get(i, j));
            }
        }
        Ok(m)
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(self)
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(self.cholesky()?.inverse())
    }

    pub fn logdet(&self) -> Result<f64> {
        Ok(self.cholesky()?.logdet())
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues(self)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Lower Cholesky factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    order: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Fails with `NotPositiveDefinite` when a pivot drops to
    /// `PD_PIVOT_TOL × max diagonal` or below.
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let n = a.order();
        let scale = (0..n).map(|i| a.get(i, i)).fold(0.0_f64, f64::max);
        let threshold = PD_PIVOT_TOL * scale;
        let mut l = vec![0.0; n * (n + 1) / 2];
        for j in 0..n {
            let mut s = a.get(j, j);
            for k in 0..j {
                s -= l[packed(j, k)] * l[packed(j, k)];
            }
            if !(s > threshold) || !(scale > 0.0) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: s });
            }
            let pivot = s.sqrt();
            l[packed(j, j)] = pivot;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[packed(i, k)] * l[packed(j, k)];
                }
                l[packed(i, j)] = s / pivot;
            }
        }
        Ok(Self { order: n, l })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn factor(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[packed(i, j)]
        }
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.order).map(|i| self.factor(i, i).ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.factor(i, k) * y[k];
            }
            y[i] = s / self.factor(i, i);
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.factor(k, i) * x[k];
            }
            x[i] = s / self.factor(i, i);
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.order;
        let mut inv = SymMatrix::zeros(n).expect("order already validated");
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in j..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }
}

/// Eigenvalues in ascending order. Orders up to 3 use closed-form roots of
/// the characteristic polynomial; larger orders and near-degenerate cubic
/// spectra go through cyclic Jacobi.
pub fn eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let mut ev = match m.order() {
        1 => vec![m.get(0, 0)],
        2 => eig2(m),
        3 => eig3(m).unwrap_or_else(|| jacobi_eigenvalues(m)),
        _ => jacobi_eigenvalues(m),
    };
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn eig2(m: &SymMatrix) -> Vec<f64> {
    let (a, b, c) = (m.get(0, 0), m.get(1, 0), m.get(1, 1));
    let mean = 0.5 * (a + c);
    let r = (0.5 * (a - c)).hypot(b);
    let hi = mean + r;
    // the smaller root is recovered from the determinant when it would
    // otherwise lose digits to cancellation
    let lo = if mean.abs() > 0.0 && (mean - r).abs() < 0.5 * mean.abs() && hi != 0.0 {
        (a * c - b * b) / hi
    } else {
        mean - r
    };
    vec![lo, hi]
}

/// Trigonometric solution of the depressed cubic; `None` when the spectrum
/// is close enough to degenerate that the arccos loses precision.
fn eig3(m: &SymMatrix) -> Option<Vec<f64>> {
    let off = m.get(1, 0).powi(2) + m.get(2, 0).powi(2) + m.get(2, 1).powi(2);
    let q = m.trace() / 3.0;
    let scale = m.max_abs();
    if off == 0.0 {
        return Some(m.diag());
    }
    let p2 = (m.get(0, 0) - q).powi(2)
        + (m.get(1, 1) - q).powi(2)
        + (m.get(2, 2) - q).powi(2)
        + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    if p <= 1e-8 * scale {
        return None;
    }
    let b = m.map(|v| v / p);
    let b00 = b.get(0, 0) - q / p;
    let b11 = b.get(1, 1) - q / p;
    let b22 = b.get(2, 2) - q / p;
    let (b10, b20, b21) = (b.get(1, 0), b.get(2, 0), b.get(2, 1));
    let det = b00 * (b11 * b22 - b21 * b21) - b10 * (b10 * b22 - b21 * b20)
        + b20 * (b10 * b21 - b11 * b20);
    let r = 0.5 * det;
    if (1.0 - r.abs()) < 1e-6 && (1.0 - r.abs()) != 0.0 {
        return None;
    }
    let phi = r.clamp(-1.0, 1.0).acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + two_pi_3).cos();
    let l2 = 3.0 * q - l1 - l3;
    Some(vec![l1, l2, l3])
}

/// Cyclic Jacobi eigenvalue iteration.
pub fn jacobi_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let n = m.order();
    let mut a = m.to_rows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `Σ_TT − Σ_TG Σ_GG⁻¹ Σ_GT` for index sets `target` and `given` of `joint`.
pub(crate) fn schur_complement(joint: &SymMatrix, target: &[usize], given: &[usize]) -> Result<SymMatrix> {
    let tt = joint.submatrix(target)?;
    if given.is_empty() {
        return Ok(tt);
    }
    let gg = joint.submatrix(given)?;
    let chol = gg.cholesky().map_err(|_| Error::SingularObservation)?;
    let whitened: Vec<Vec<f64>> = target
        .iter()
        .map(|&t| {
            let col: Vec<f64> = given.iter().map(|&g| joint.get(g, t)).collect();
            chol.forward(&col)
        })
        .collect();
    let mut out = tt;
    for a in 0..target.len() {
        for b in 0..=a {
            let dot: f64 = whitened[a].iter().zip(&whitened[b]).map(|(x, y)| x * y).sum();
            out.set(a, b, out.get(a, b) - dot);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn symmetric_storage_is_single_copy() {
        let mut m = SymMatrix::zeros(3).unwrap();
        m.set(0, 2, 5.0);
        assert_eq!(m.get(2, 0), 5.0);
        assert_eq!(m.lower().len(), 6);
    }

    #[test]
    fn rejects_asymmetric_rows_and_bad_order() {
        let rows = vec![vec![1.0, 0.5], vec![0.4, 1.0]];
        assert!(matches!(SymMatrix::from_rows(&rows), Err(Error::NotSymmetric { .. })));
        assert!(matches!(SymMatrix::zeros(0), Err(Error::UnsupportedOrder(0))));
        assert!(matches!(SymMatrix::zeros(10), Err(Error::UnsupportedOrder(10))));
    }

    #[test]
    fn logdet_examples() {
        assert_eq!(SymMatrix::identity(3).unwrap().logdet().unwrap(), 0.0);
        let d = SymMatrix::from_diag(&[1.0, 4.0]).unwrap();
        assert!(close(d.logdet().unwrap(), 4f64.ln(), 1e-15));
        let m = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(close(m.logdet().unwrap(), 0.75f64.ln(), 1e-15));
        let s = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(s.logdet(), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn eigenvalue_examples() {
        let d = SymMatrix::from_diag(&[4.0, 1.0]).unwrap();
        assert_eq!(d.eigenvalues(), vec![1.0, 4.0]);
        let m = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let ev = m.eigenvalues();
        assert!(close(ev[0], 0.5, 1e-14) && close(ev[1], 1.5, 1e-14));
        let eq = SymMatrix::from_lower(3, &[1.0, 0.5, 1.0, 0.5, 0.5, 1.0]).unwrap();
        let ev = eq.eigenvalues();
        for (a, b) in ev.iter().zip([0.5, 0.5, 2.0]) {
            assert!(close(*a, b, 1e-13), "{ev:?}");
        }
    }

    #[test]
    fn closed_form_cubic_agrees_with_jacobi() {
        let m = SymMatrix::from_lower(3, &[2.0, 0.3, 1.5, -0.2, 0.7, 0.9]).unwrap();
        let a = eigenvalues(&m);
        let b = jacobi_eigenvalues(&m);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13 * m.max_abs(), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn jacobi_handles_order_five() {
        let diag = [0.1, 0.7, 1.0, 2.5, 3.0];
        let m = SymMatrix::from_diag(&diag).unwrap();
        assert_eq!(jacobi_eigenvalues(&m), diag.to_vec());
    }

    #[test]
    fn inverse_and_permutation() {
        let m = SymMatrix::from_lower(3, &[2.0, 0.3, 1.5, -0.2, 0.7, 0.9]).unwrap();
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv).unwrap();
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-14);
            }
        }
        let p = m.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(2, 0), m.get(0, 1));
        assert_eq!(p.get(0, 0), m.get(1, 1));
    }

    #[test]
    fn schur_complement_on_empty_given_is_block() {
        let m = SymMatrix::from_lower(3, &[2.0, 0.3, 1.5, -0.2, 0.7, 0.9]).unwrap();
        let s = schur_complement(&m, &[1, 2], &[]).unwrap();
        assert_eq!(s, m.submatrix(&[1, 2]).unwrap());
    }
}
