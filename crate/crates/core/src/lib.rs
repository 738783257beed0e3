//! Rate-distortion functions of generalized Gaussian multiterminal source
//! coding systems in the high-resolution regime.
//!
//! A system is a Gaussian source vector with covariance Γ plus a [`Cover`]
//! describing which sources each encoder observes. The crate computes the
//! centralized rate-distortion function by reverse water-filling, the sum-rate
//! of the distributed and partially-connected systems with up to three
//! sources (closed forms and log-det programs), explicit Berger–Tung test
//! channels certifying achievability, and the small-distortion gap to
//! centralized coding, which is predicted to be `½ Σ θᵢⱼ² d²` over the source
//! pairs that no encoder observes jointly.
//!
//! All rates are in nats.

pub mod asymptotics;
pub mod berger_tung;
pub mod centralized;
pub mod closed;
pub mod cover;
pub mod error;
pub mod linalg;
pub mod model;
pub mod opt;

pub use cover::{classify, gap_coefficient, Cover, IndexSet, Topology, TopologyClass};
pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use model::{conditional_covariance, mmse_cov, GaussianSource};
