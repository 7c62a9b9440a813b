//! Gaussian-message algebra and matrix utilities.
//!
//! Every estimator in this crate ultimately manipulates multivariate real
//! Gaussians in one of two parameterizations:
//!
//! - **moment** form `(mu, sigma)` — convenient for marginal extraction;
//! - **canonical** form `(eta = sigma^+ mu, lambda = sigma^+)` — products of
//!   densities reduce to parameter addition, and rank-deficient (improper)
//!   messages are representable.
//!
//! Normalization constants are never tracked; all message semantics are "up
//! to proportionality", which is all that posterior means and covariances
//! need. Rank deficiency is handled exclusively through Moore–Penrose
//! pseudo-inversion with a relative singular-value cutoff — there is no
//! hidden ridge regularization anywhere, so results are reproducible
//! bit-for-bit given a seed.

pub mod gaussian;
pub mod linalg;
pub(crate) mod solve;

pub use gaussian::{product, GaussianCanonical, GaussianMoment};
pub use linalg::{pseudo_inverse, DEFAULT_RTOL};
