//! Pseudo-inverse and small matrix helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by every pseudo-inversion in the
/// crate unless a caller overrides it.
pub const DEFAULT_RTOL: f64 = 1e-10;

/// Moore–Penrose pseudo-inverse of an arbitrary rectangular real matrix.
///
/// Computed by SVD; singular values below `rtol * sigma_max` are treated as
/// zero. Returns an error for non-finite entries or a non-positive `rtol`.
pub fn pseudo_inverse(m: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    if !(rtol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pseudo_inverse: rtol must be positive, got {rtol}"
        )));
    }
    ensure_finite_matrix(m, "pseudo_inverse")?;
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.pseudo_inverse(rtol * sigma_max)
        .map_err(|e| Error::NumericalFailure(format!("pseudo-inverse: {e}")))
}

pub(crate) fn ensure_finite_matrix(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what}: matrix has non-finite entries")))
    }
}

pub(crate) fn ensure_finite_vector(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what}: vector has non-finite entries")))
    }
}

/// Largest absolute deviation from symmetry, i.e. `max |a_ij - a_ji|`.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(m + m^T) / 2`, used to scrub rounding drift off symmetric results.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::rng::substream(seed, 0, crate::rng::Purpose::Symbols, 0);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_inverts_to_identity() {
        let id = DMatrix::<f64>::identity(3, 3);
        let p = pseudo_inverse(&id, DEFAULT_RTOL).unwrap();
        assert!((p - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn rank_deficient_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        let p = pseudo_inverse(&m, DEFAULT_RTOL).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert_eq!(p[(1, 1)], 0.0);
    }

    #[test]
    fn penrose_conditions_on_random_rectangular() {
        // Oracle: verify A P A = A and P A P = P by direct multiplication.
        let a = seeded_matrix(5, 3, 11);
        let p = pseudo_inverse(&a, DEFAULT_RTOL).unwrap();
        assert!((&a * &p * &a - &a).amax() < 1e-8);
        assert!((&p * &a * &p - &p).amax() < 1e-8);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(
            pseudo_inverse(&m, DEFAULT_RTOL),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_bad_rtol() {
        let m = DMatrix::<f64>::identity(2, 2);
        assert!(pseudo_inverse(&m, 0.0).is_err());
        assert!(pseudo_inverse(&m, -1.0).is_err());
    }
}
