//! Dense complex linear algebra: SVD, unitary projection, Hermitian
//! eigendecomposition, Kronecker products and index regrouping.

mod matrix;
pub mod random;
mod regroup;
mod svd;

use alloc::vec::Vec;

pub use matrix::{kron, ComplexMatrix};
pub use regroup::{regroup, Regroup};
pub use svd::{svd, SvdResult};

use crate::error::{Error, Result};
use crate::C64;

/// Smallest singular value accepted by [`project_to_unitary`].
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Closest unitary in Frobenius norm: `U·V†` for `x = U·diag(s)·V†`.
pub fn project_to_unitary(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() {
        return Err(Error::Shape { context: "project_to_unitary", expected: (x.rows(), x.rows()), found: x.shape() });
    }
    let f = svd(x)?;
    let smin = f.s.last().copied().unwrap_or(0.0);
    if smin <= RANK_TOLERANCE {
        return Err(Error::Singular { min_singular_value: smin });
    }
    Ok(&f.u * &f.v.adjoint())
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in non-increasing order.
///
/// The matrix is shifted to be positive definite, where the SVD coincides with
/// the eigendecomposition; the shift is removed from the singular values.
pub fn eigh(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::Shape { context: "eigh", expected: (h.rows(), h.rows()), found: h.shape() });
    }
    let n = h.rows();
    let herm = (&h.adjoint() + h).scale_real(0.5);
    let shift = 1.0 + 2.0 * herm.frobenius_norm();
    let shifted = &herm + &ComplexMatrix::identity(n).scale_real(shift);
    let f = svd(&shifted)?;
    // Rayleigh quotients are more accurate than s - shift for small eigenvalues.
    let values = (0..n)
        .map(|j| {
            let v = ComplexMatrix::column(&f.u.col(j));
            (&(&v.adjoint() * &herm) * &v)[(0, 0)].re
        })
        .collect();
    Ok((values, f.u))
}

/// `f(h)` for Hermitian `h`, applying `f` to the spectrum.
pub fn hermitian_function(h: &ComplexMatrix, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    let (w, v) = eigh(h)?;
    let n = w.len();
    let fv = ComplexMatrix::from_fn(n, n, |r, c| v[(r, c)] * f(w[c]));
    Ok(&fv * &v.adjoint())
}

/// `exp(-i·t·h)` for Hermitian `h`.
pub fn unitary_exp(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    hermitian_function(h, |w| C64::from_polar(1.0, -t * w))
}

/// Partial trace over the second factor of an `a ⊗ b` operator.
pub fn partial_trace_second(x: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(da, da, |r, c| (0..db).map(|k| x[(r * db + k, c * db + k)]).sum())
}

/// Partial trace over the first factor of an `a ⊗ b` operator.
pub fn partial_trace_first(x: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(db, db, |r, c| (0..da).map(|k| x[(k * db + r, k * db + c)]).sum())
}
