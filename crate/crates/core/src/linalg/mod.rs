//! Dense linear algebra over exact and floating-point scalars.

pub mod dense;
mod matrix;
mod upoly;

pub use matrix::{Matrix, Rref};
pub use upoly::{char_poly, UPoly};

use crate::scalar::Scalar;

/// Coordinates `X` with `b X = m` for a full-column-rank `b`, plus the
/// residual max-norm. Exact scalars solve exactly and return `None` when
/// `m` leaves the column space; floats use least squares and return `None`
/// when the residual exceeds `tol`.
pub fn solve_in_basis<T: Scalar>(b: &Matrix<T>, m: &Matrix<T>, tol: f64) -> Option<(Matrix<T>, f64)> {
    if b.cols() == 0 {
        let res = m.max_abs();
        return if m.is_negligible(tol) { Some((Matrix::zeros(0, m.cols()), res)) } else { None };
    }
    if T::EXACT {
        let x = b.solve(m, 0.0)?;
        Some((x, 0.0))
    } else {
        let (x, res) = dense::lstsq(&b.to_f64(), &m.to_f64());
        (res <= tol).then(|| (x.map(|v| T::from_f64(*v)), res))
    }
}
