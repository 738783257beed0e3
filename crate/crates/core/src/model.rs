//! Gaussian sources and MMSE conditioning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{schur_complement, SymMatrix};

/// Largest number of sources a [`GaussianSource`] may carry.
pub const MAX_SOURCES: usize = 8;

/// Zero-mean Gaussian vector described by its covariance and precision.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianSource {
    gamma: SymMatrix,
    theta: SymMatrix,
    spectrum: Vec<f64>,
}

impl GaussianSource {
    /// Validates `gamma` and precomputes its inverse and spectrum.
    pub fn new(gamma: SymMatrix) -> Result<Self> {
        if gamma.order() > MAX_SOURCES {
            return Err(Error::UnsupportedOrder(gamma.order()));
        }
        let theta = gamma.inverse()?;
        let spectrum = gamma.eigenvalues();
        Ok(Self {
            gamma,
            theta,
            spectrum,
        })
    }

    /// Number of sources.
    pub fn len(&self) -> usize {
        self.gamma.order()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn gamma(&self) -> &SymMatrix {
        &self.gamma
    }

    pub fn theta(&self) -> &SymMatrix {
        &self.theta
    }

    /// Eigenvalues of the covariance, ascending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum[0]
    }

    pub fn logdet_gamma(&self) -> f64 {
        self.gamma.logdet().expect("validated at construction")
    }

    /// Relabels sources: source `i` becomes source `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(self.gamma.permute(perm)?)
    }

    /// Covariance of `X_target` given `X_given` (Schur complement of Γ).
    pub fn conditional_covariance(&self, target: &[usize], given: &[usize]) -> Result<SymMatrix> {
        conditional_covariance(self, target, given)
    }
}

fn check_indices(order: usize, sets: &[&[usize]]) -> Result<()> {
    let mut seen = vec![false; order];
    for set in sets {
        for &i in *set {
            if i >= order {
                return Err(Error::IndexOutOfRange { index: i, order });
            }
            if seen[i] {
                return Err(Error::InvalidIndexSets);
            }
            seen[i] = true;
        }
    }
    Ok(())
}

/// `Γ_TT − Γ_TG Γ_GG⁻¹ Γ_GT`. Both index sets must be nonempty and disjoint.
pub fn conditional_covariance(
    src: &GaussianSource,
    target: &[usize],
    given: &[usize],
) -> Result<SymMatrix> {
    if target.is_empty() || given.is_empty() {
        return Err(Error::InvalidIndexSets);
    }
    check_indices(src.len(), &[target, given])?;
    schur_complement(src.gamma(), target, given)
}

/// Error covariance of the MMSE estimate of the `target` block of a jointly
/// Gaussian vector from its `observed` block. An empty `observed` set
/// returns the target block unchanged.
pub fn mmse_cov(joint: &SymMatrix, target: &[usize], observed: &[usize]) -> Result<SymMatrix> {
    if target.is_empty() {
        return Err(Error::InvalidIndexSets);
    }
    check_indices(joint.order(), &[target, observed])?;
    schur_complement(joint, target, observed)
}
