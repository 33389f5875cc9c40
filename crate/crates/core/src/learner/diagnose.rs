//! Markovianity test for a learned system-environment unitary.
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnosis {
    pub markovian: bool,
    /// Weight leaking out of the fiducial environment state.
    pub off_block_norm: f64,
    /// `⟨0|_E λ |0⟩_E`.
    pub system_block: ComplexMatrix,
}
/// Input unitarity accepted by [`diagnose_markovianity`].
pub const DIAGNOSIS_UNITARITY_TOL: f64 = 1e-9;
pub fn diagnose_markovianity(lambda: &ComplexMatrix, de: usize, ds: usize, tol: f64) -> Result<Diagnosis> {
    let n = de * ds;
    if lambda.shape() != (n, n) {
        return Err(Error::Shape { context: "diagnose_markovianity", expected: (n, n), found: lambda.shape() });
    }
    if !(tol >= 0.0) {
        return Err(Error::Domain { name: "diagnosis tolerance", value: tol });
    }
    let defect = lambda.unitarity_defect();
    if !(defect <= DIAGNOSIS_UNITARITY_TOL) {
        return Err(Error::Contract { what: "diagnosed node is not unitary", defect });
    }
    let mut leak = 0.0;
    for r in ds..n {
        for c in 0..ds {
            leak += lambda[(r, c)].norm_sqr();
        }
    }
    let off_block_norm = leak.sqrt();
    Ok(Diagnosis { markovian: off_block_norm <= tol, off_block_norm, system_block: lambda.block(0, 0, ds, ds) })
}
