//! Rank-truncated split of a joint node back into two node-shaped factors,
//! and their projection onto unitaries.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::{project_to_unitary, regroup, svd, ComplexMatrix, Regroup};
#[derive(Clone, Debug)]
pub struct SplitResult {
    /// Node-shaped factor for slot `i`: rows `(e₊, s)`, columns `(bond, s')`.
    pub upper: ComplexMatrix,
    /// Node-shaped factor for slot `i−1`: rows `(bond, u)`, columns `(e₋, u')`.
    pub lower: ComplexMatrix,
    pub singular_values: Vec<f64>,
    /// Sum of squared discarded singular values.
    pub discarded: f64,
}
/// SVD of the joint node keeping the `d_E` leading directions, with `√S`
/// absorbed into both sides.
pub fn split_truncate(joint: &ComplexMatrix, de: usize, ds: usize) -> Result<SplitResult> {
    let dim = de * ds * ds;
    if joint.shape() != (dim, dim) {
        return Err(Error::Shape { context: "split_truncate", expected: (dim, dim), found: joint.shape() });
    }
    if !joint.is_finite() {
        return Err(Error::NonFinite { context: "joint node" });
    }
    let f = svd(joint)?;
    if f.s.len() < de {
        return Err(Error::NumericalFailure { rows: dim, cols: dim });
    }
    let roots: Vec<f64> = f.s[..de].iter().map(|s| s.sqrt()).collect();
    let left = ComplexMatrix::from_fn(dim, de, |r, k| f.u[(r, k)] * roots[k]);
    let right = ComplexMatrix::from_fn(de, dim, |k, c| f.v[(c, k)].conj() * roots[k]);
    let discarded = f.s[de..].iter().map(|s| s * s).sum();
    let up = Regroup::new(&[de, ds, ds, de], 3, &[0, 1, 3, 2], 2)?;
    let down = Regroup::new(&[de, de, ds, ds], 1, &[0, 2, 1, 3], 2)?;
    Ok(SplitResult { upper: regroup(&left, &up)?, lower: regroup(&right, &down)?, singular_values: f.s, discarded })
}
/// `π(upper)·π(lower)`, with `π` the closest unitary.
pub fn project_pair(upper: &ComplexMatrix, lower: &ComplexMatrix) -> Result<ComplexMatrix> {
    if upper.shape() != lower.shape() || !upper.is_square() {
        return Err(Error::Shape { context: "project_pair", expected: upper.shape(), found: lower.shape() });
    }
    Ok(&project_to_unitary(upper)? * &project_to_unitary(lower)?)
}
