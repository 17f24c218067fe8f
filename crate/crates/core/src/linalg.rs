//! Thin dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Numerical rank test on the design: smallest singular value relative to
/// the largest.
pub fn full_column_rank(x: &DMatrix<f64>) -> bool {
    if x.nrows() < x.ncols() || x.ncols() == 0 {
        return false;
    }
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && min > max * 1e-10
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(Error::SingularDesign)?;
    Ok(chol.inverse())
}

/// Solve `m * x = b` for symmetric positive-definite `m`.
pub fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = m.clone().cholesky().ok_or(Error::SingularDesign)?;
    Ok(chol.solve(b))
}

/// Least squares through QR; the caller checks rank first.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * y;
    qr.r().solve_upper_triangular(&qty).ok_or(Error::SingularDesign)
}
