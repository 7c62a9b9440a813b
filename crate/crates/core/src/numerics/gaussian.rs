//! Moment and canonical parameterizations of multivariate real Gaussians,
//! with the product / marginalization / embedding operations that Gaussian
//! message passing is built on.
//!
//! Canonical messages may be rank-deficient: a flat (information-free)
//! direction is simply a zero row/column of `lambda`. Marginalization is
//! therefore implemented in canonical form via a Schur complement with a
//! pseudo-inverted block, which stays well defined for improper messages
//! that have no proper moment form. On nonsingular inputs this agrees with
//! the classical moment-form rule (take the sub-vector and sub-block).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::linalg::{
    asymmetry, ensure_finite_matrix, ensure_finite_vector, pseudo_inverse, symmetrize,
    DEFAULT_RTOL,
};

const SYMMETRY_RTOL: f64 = 1e-10;
const RANGE_RTOL: f64 = 1e-8;
const EIGEN_FLOOR_RTOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Moment form
// ---------------------------------------------------------------------------

/// A Gaussian in moment form: mean `mu` and covariance `sigma` (symmetric
/// positive semidefinite).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoment {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl GaussianMoment {
    /// Validates symmetry (within `1e-10` relative to the largest entry) and
    /// that no eigenvalue lies below `-1e-9` times the largest one.
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        ensure_finite_vector(&mu, "GaussianMoment")?;
        ensure_finite_matrix(&sigma, "GaussianMoment")?;
        if sigma.nrows() != sigma.ncols() || sigma.nrows() != mu.len() {
            return Err(Error::DimensionMismatch(format!(
                "GaussianMoment: mu has dimension {}, sigma is {}x{}",
                mu.len(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let scale = sigma.amax();
        if asymmetry(&sigma) > SYMMETRY_RTOL * scale {
            return Err(Error::InvalidInput("GaussianMoment: sigma is not symmetric".into()));
        }
        let sym = symmetrize(&sigma);
        let eigen = sym.clone().symmetric_eigen().eigenvalues;
        let max_eig = eigen.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_eig = eigen.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_FLOOR_RTOL * max_eig {
            return Err(Error::InvalidInput(format!(
                "GaussianMoment: sigma is not positive semidefinite (eigenvalues in [{min_eig}, {max_eig}])"
            )));
        }
        Ok(Self { mu, sigma: sym })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Convert to canonical form: `lambda = sigma^+`, `eta = sigma^+ mu`.
    pub fn to_canonical(&self) -> Result<GaussianCanonical> {
        let lambda = symmetrize(&pseudo_inverse(&self.sigma, DEFAULT_RTOL)?);
        let eta = &lambda * &self.mu;
        Ok(GaussianCanonical::from_parts_unchecked(eta, lambda))
    }
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

/// A Gaussian in canonical form: `eta` (information vector) and `lambda`
/// (precision matrix, possibly singular). The normalization constant is not
/// tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCanonical {
    eta: DVector<f64>,
    lambda: DMatrix<f64>,
}

impl GaussianCanonical {
    /// Validates symmetry and that `eta` lies in the range of `lambda`
    /// (relative least-squares residual below `1e-8`); an `eta` outside the
    /// range would encode an inconsistent degenerate Gaussian.
    pub fn new(eta: DVector<f64>, lambda: DMatrix<f64>) -> Result<Self> {
        ensure_finite_vector(&eta, "GaussianCanonical")?;
        ensure_finite_matrix(&lambda, "GaussianCanonical")?;
        if lambda.nrows() != lambda.ncols() || lambda.nrows() != eta.len() {
            return Err(Error::DimensionMismatch(format!(
                "GaussianCanonical: eta has dimension {}, lambda is {}x{}",
                eta.len(),
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        if asymmetry(&lambda) > SYMMETRY_RTOL * lambda.amax() {
            return Err(Error::InvalidInput("GaussianCanonical: lambda is not symmetric".into()));
        }
        let lambda = symmetrize(&lambda);
        let eta_norm = eta.norm();
        if eta_norm > 0.0 {
            let pinv = pseudo_inverse(&lambda, DEFAULT_RTOL)?;
            let residual = &eta - &lambda * (pinv * &eta);
            if residual.norm() > RANGE_RTOL * eta_norm {
                return Err(Error::InvalidInput(
                    "GaussianCanonical: eta is not in the range of lambda".into(),
                ));
            }
        }
        Ok(Self { eta, lambda })
    }

    /// Constructor for operation outputs that preserve the invariants by
    /// construction (sums of valid messages, Schur complements, embeddings).
    pub(crate) fn from_parts_unchecked(eta: DVector<f64>, lambda: DMatrix<f64>) -> Self {
        debug_assert_eq!(eta.len(), lambda.nrows());
        debug_assert_eq!(lambda.nrows(), lambda.ncols());
        Self { eta, lambda }
    }

    /// The flat (information-free) message of a given dimension.
    pub fn flat(dim: usize) -> Self {
        Self {
            eta: DVector::zeros(dim),
            lambda: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &DVector<f64> {
        &self.eta
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// Convert to moment form: `sigma = lambda^+`, `mu = sigma eta`.
    pub fn to_moment(&self) -> Result<GaussianMoment> {
        let sigma = symmetrize(&pseudo_inverse(&self.lambda, DEFAULT_RTOL)?);
        let mu = &sigma * &self.eta;
        GaussianMoment::new(mu, sigma)
    }

    /// Marginalize onto the coordinates listed in `keep` (0-based, distinct,
    /// a strict subset), dropping all others.
    ///
    /// Canonical-form rule with the dropped block pseudo-inverted:
    /// `eta' = eta_1 - L12 L22^+ eta_2`, `lambda' = L11 - L12 L22^+ L21`.
    /// The dropped block need not be invertible: a flat dropped direction
    /// contributes nothing, which is exactly flat-prior marginalization.
    pub fn marginalize(&self, keep: &[usize]) -> Result<Self> {
        let d = self.dim();
        if keep.is_empty() {
            return Err(Error::InvalidInput("marginalize: empty keep set".into()));
        }
        let mut seen = vec![false; d];
        for &idx in keep {
            if idx >= d {
                return Err(Error::InvalidInput(format!(
                    "marginalize: index {idx} out of range for dimension {d}"
                )));
            }
            if seen[idx] {
                return Err(Error::InvalidInput(format!("marginalize: duplicate index {idx}")));
            }
            seen[idx] = true;
        }
        if keep.len() == d {
            return Err(Error::InvalidInput(
                "marginalize: keep set must be a strict subset of the coordinates".into(),
            ));
        }
        let drop: Vec<usize> = (0..d).filter(|i| !seen[*i]).collect();

        let l11 = self.lambda.select_rows(keep).select_columns(keep);
        let l12 = self.lambda.select_rows(keep).select_columns(&drop);
        let l22 = self.lambda.select_rows(&drop).select_columns(&drop);
        let eta1 = self.eta.select_rows(keep);
        let eta2 = self.eta.select_rows(&drop);

        let l22_pinv = pseudo_inverse(&l22, DEFAULT_RTOL)?;
        let gain = &l12 * &l22_pinv;
        let eta = eta1 - &gain * eta2;
        let lambda = symmetrize(&(l11 - gain * l12.transpose()));
        Ok(Self::from_parts_unchecked(eta, lambda))
    }

    /// Scatter this message into a `target_dim`-dimensional one: coordinate
    /// `i` goes to `positions[i]`, every other coordinate becomes flat.
    pub fn embed(&self, positions: &[usize], target_dim: usize) -> Result<Self> {
        let d = self.dim();
        if positions.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "embed: {} positions for a {d}-dimensional message",
                positions.len()
            )));
        }
        let mut used = vec![false; target_dim];
        for &p in positions {
            if p >= target_dim {
                return Err(Error::InvalidInput(format!(
                    "embed: position {p} out of range for target dimension {target_dim}"
                )));
            }
            if used[p] {
                return Err(Error::InvalidInput(format!("embed: position {p} used twice")));
            }
            used[p] = true;
        }
        let mut eta = DVector::zeros(target_dim);
        let mut lambda = DMatrix::zeros(target_dim, target_dim);
        for (src_i, &dst_i) in positions.iter().enumerate() {
            eta[dst_i] = self.eta[src_i];
            for (src_j, &dst_j) in positions.iter().enumerate() {
                lambda[(dst_i, dst_j)] = self.lambda[(src_i, src_j)];
            }
        }
        Ok(Self::from_parts_unchecked(eta, lambda))
    }
}

/// Product of Gaussian densities: canonical parameters add
/// (proportionality constants are dropped).
pub fn product<'a, I>(msgs: I) -> Result<GaussianCanonical>
where
    I: IntoIterator<Item = &'a GaussianCanonical>,
{
    let mut iter = msgs.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidInput("product: needs at least one message".into()))?;
    let mut eta = first.eta.clone();
    let mut lambda = first.lambda.clone();
    for msg in iter {
        if msg.dim() != eta.len() {
            return Err(Error::DimensionMismatch(format!(
                "product: message of dimension {} mixed with dimension {}",
                msg.dim(),
                eta.len()
            )));
        }
        eta += &msg.eta;
        lambda += &msg.lambda;
    }
    Ok(GaussianCanonical::from_parts_unchecked(eta, lambda))
}
