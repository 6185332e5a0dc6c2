//! Real roots of low-degree polynomials via companion-matrix eigenvalues.

use nalgebra::{Matrix2, Matrix3, Schur};

use crate::error::{Error, Result};

/// Eigenvalues whose imaginary part is below this are treated as real.
pub(crate) const IMAG_TOL: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 500;

/// Real roots of `c[0] + c[1] x + c[2] x² + c[3] x³`, unsorted.
///
/// Leading coefficients that contribute less than machine precision
/// relative to the remaining ones are dropped, so a vanishing cubic term
/// degrades gracefully to a quadratic or linear solve.
pub(crate) fn real_roots(c: [f64; 4]) -> Result<Vec<f64>> {
    let scale = |k: usize| c[..k].iter().map(|v| v.abs()).sum::<f64>();
    if c[3].abs() > f64::EPSILON * scale(3) {
        let monic = [c[0] / c[3], c[1] / c[3], c[2] / c[3]];
        #[rustfmt::skip]
        let companion = Matrix3::new(
            0.0, 0.0, -monic[0],
            1.0, 0.0, -monic[1],
            0.0, 1.0, -monic[2],
        );
        let schur =
            Schur::try_new(companion, f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenSolver)?;
        Ok(schur
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < IMAG_TOL && z.re.is_finite())
            .map(|z| z.re)
            .collect())
    } else if c[2].abs() > f64::EPSILON * scale(2) {
        let companion = Matrix2::new(0.0, -c[0] / c[2], 1.0, -c[1] / c[2]);
        let schur =
            Schur::try_new(companion, f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenSolver)?;
        Ok(schur
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < IMAG_TOL && z.re.is_finite())
            .map(|z| z.re)
            .collect())
    } else if c[1] != 0.0 {
        Ok(vec![-c[0] / c[1]])
    } else {
        Ok(Vec::new())
    }
}
