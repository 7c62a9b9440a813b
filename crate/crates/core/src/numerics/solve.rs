//! Complex linear solves used by the asynchronous estimators.
//!
//! Two routes are provided: a dense Hermitian solve (Cholesky with a flagged
//! pseudo-inverse fallback) and a block-tridiagonal Hermitian solve for the
//! chain-structured normal matrix `G^H Sigma_z^-1 G`, whose blocks couple
//! only adjacent symbol indices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Moore–Penrose pseudo-inverse of a complex matrix (same singular-value
/// cutoff convention as the real version).
pub(crate) fn pseudo_inverse_complex(
    m: &DMatrix<Complex64>,
    rtol: f64,
) -> Result<DMatrix<Complex64>> {
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("complex SVD did not converge".into()))?;
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.pseudo_inverse(rtol * sigma_max)
        .map_err(|e| Error::NumericalFailure(format!("complex pseudo-inverse: {e}")))
}

/// Solve `a x = rhs` for Hermitian positive definite `a` by Cholesky.
/// Falls back to the pseudo-inverse when the factorization fails; the
/// returned flag records whether the fallback was taken.
pub(crate) fn solve_hermitian(
    a: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    rtol: f64,
) -> Result<(DMatrix<Complex64>, bool)> {
    match Cholesky::new(a.clone()) {
        Some(chol) => Ok((chol.solve(rhs), false)),
        None => {
            let pinv = pseudo_inverse_complex(a, rtol)?;
            Ok((pinv * rhs, true))
        }
    }
}

// ---------------------------------------------------------------------------
// Block-tridiagonal Hermitian systems
// ---------------------------------------------------------------------------

/// Hermitian block-tridiagonal matrix: `diag[j]` on the block diagonal and
/// `upper[j]` at block position `(j, j+1)`; the sub-diagonal is implied by
/// Hermitian symmetry.
pub(crate) struct BlockTridiagHermitian {
    pub diag: Vec<DMatrix<Complex64>>,
    pub upper: Vec<DMatrix<Complex64>>,
}

/// Block LDL^H-style factorization of a [`BlockTridiagHermitian`]:
/// `pivots[j]` holds the Cholesky factor of the Schur-complement pivot
/// `S_j = T_j - U_{j-1}^H S_{j-1}^-1 U_{j-1}`.
pub(crate) struct BlockTridiagFactor {
    pivots: Vec<Cholesky<Complex64, Dyn>>,
    upper: Vec<DMatrix<Complex64>>,
    block: usize,
}

impl BlockTridiagHermitian {
    /// Forward block elimination. Returns `None` if any pivot fails to be
    /// positive definite (the caller decides how to fall back).
    pub fn factor(self) -> Option<BlockTridiagFactor> {
        let n = self.diag.len();
        debug_assert_eq!(self.upper.len(), n.saturating_sub(1));
        let block = self.diag[0].nrows();
        let mut pivots = Vec::with_capacity(n);
        let mut schur = self.diag[0].clone();
        for j in 0..n {
            let chol = Cholesky::new(schur.clone())?;
            if j + 1 < n {
                let u = &self.upper[j];
                // S_{j+1} = T_{j+1} - U_j^H S_j^-1 U_j
                let sinv_u = chol.solve(u);
                schur = &self.diag[j + 1] - u.adjoint() * sinv_u;
            }
            pivots.push(chol);
        }
        Some(BlockTridiagFactor {
            pivots,
            upper: self.upper,
            block,
        })
    }
}

impl BlockTridiagFactor {
    pub fn num_blocks(&self) -> usize {
        self.pivots.len()
    }

    /// Solve for one right-hand side of length `num_blocks * block`.
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.num_blocks();
        let bl = self.block;
        debug_assert_eq!(b.len(), n * bl);
        // Forward sweep: c_{j+1} = b_{j+1} - U_j^H S_j^-1 c_j
        let mut c: Vec<DVector<Complex64>> =
            (0..n).map(|j| b.rows(j * bl, bl).into_owned()).collect();
        for j in 0..n - 1 {
            let sinv_c = self.pivots[j].solve(&c[j]);
            let update = self.upper[j].adjoint() * sinv_c;
            c[j + 1] -= update;
        }
        // Backward sweep: x_j = S_j^-1 (c_j - U_j x_{j+1})
        let mut x = vec![DVector::<Complex64>::zeros(bl); n];
        x[n - 1] = self.pivots[n - 1].solve(&c[n - 1]);
        for j in (0..n - 1).rev() {
            let rhs = &c[j] - &self.upper[j] * &x[j + 1];
            x[j] = self.pivots[j].solve(&rhs);
        }
        let mut out = DVector::zeros(n * bl);
        for (j, xj) in x.iter().enumerate() {
            out.rows_mut(j * bl, bl).copy_from(xj);
        }
        out
    }

    /// Diagonal blocks of the inverse, via the backward recursion
    /// `D_n = S_n^-1`, `D_j = S_j^-1 + V_j D_{j+1} V_j^H` with
    /// `V_j = S_j^-1 U_j`.
    pub fn inverse_diag_blocks(&self) -> Vec<DMatrix<Complex64>> {
        let n = self.num_blocks();
        let bl = self.block;
        let eye = DMatrix::<Complex64>::identity(bl, bl);
        let mut out = vec![DMatrix::<Complex64>::zeros(bl, bl); n];
        out[n - 1] = self.pivots[n - 1].solve(&eye);
        for j in (0..n - 1).rev() {
            let v = self.pivots[j].solve(&self.upper[j]);
            out[j] = self.pivots[j].solve(&eye) + &v * &out[j + 1] * v.adjoint();
        }
        out
    }
}
