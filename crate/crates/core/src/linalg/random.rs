//! Random matrices for tests, self-checks and symmetry breaking.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use super::ComplexMatrix;
use crate::C64;
/// Standard normal deviate (Box–Muller).
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}
/// Matrix with i.i.d. complex Gaussian entries (unit variance per component).
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(normal(rng), normal(rng)))
}
/// Haar-distributed unitary via Gram–Schmidt on a Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    let mut cols: alloc::vec::Vec<alloc::vec::Vec<C64>> = alloc::vec::Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.col(j);
        for _ in 0..2 {
            for q in &cols {
                let p: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.iter().map(|z| z / nrm).collect());
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}
/// Random density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    let rho = &g * &g.adjoint();
    let t = rho.trace().re;
    rho.scale_real(1.0 / t)
}
