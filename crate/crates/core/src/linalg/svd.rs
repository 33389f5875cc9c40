//! Complex singular value decomposition by one-sided Jacobi rotations.
//!
//! Columns of a working copy of the input are rotated pairwise until they are
//! mutually orthogonal; the column norms are then the singular values and the
//! accumulated rotations form `V`. Output is deterministic: singular values
//! are stable-sorted in non-increasing order and every left singular vector
//! has its largest-modulus component real positive (ties resolved by the
//! lowest index).
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::C64;
const MAX_SWEEPS: usize = 80;
/// `m = u · diag(s) · v†` with `k = min(rows, cols)` columns in `u` and `v`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}
impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.s.len();
        let us = ComplexMatrix::from_fn(self.u.rows(), k, |r, c| self.u[(r, c)] * self.s[c]);
        &us * &self.v.adjoint()
    }
}
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "svd input" });
    }
    if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        // m = u s v†  <=>  m† = v s u†
        let t = jacobi_tall(&m.adjoint())?;
        let mut out = SvdResult { u: t.v, s: t.s, v: t.u };
        fix_phases(&mut out);
        Ok(out)
    }
}
fn jacobi_tall(m: &ComplexMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    // work in column-major for cheap column access
    let mut a: Vec<Vec<C64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect())
        .collect();
    let eps = f64::EPSILON;
    let tol = eps * (rows as f64).max(4.0);
    // columns below this squared norm are numerically zero
    let frob2: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
    let negligible = (eps * eps) * frob2;
    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols - 1 {
            for q in p + 1..cols {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                // rotate a_q by the phase of gamma so the 2x2 Gram matrix is real
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NumericalFailure { rows, cols });
    }
    let norms: Vec<f64> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    // stable: ties keep the factorization's natural order
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(core::cmp::Ordering::Equal));
    let smax = norms[order[0]];
    let cutoff = smax * (rows.max(cols) as f64) * eps;
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut s = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    let mut deficient = Vec::new();
    for &j in &order {
        let n = norms[j];
        s.push(n);
        v_cols.push(v[j].clone());
        if n > cutoff && n > 0.0 {
            u_cols.push(a[j].iter().map(|z| z / n).collect());
        } else {
            deficient.push(u_cols.len());
            u_cols.push(alloc::vec![C64::new(0.0, 0.0); rows]);
        }
    }
    complete_orthonormal(&mut u_cols, &deficient, rows);
    let u = ComplexMatrix::from_fn(rows, cols, |r, c| u_cols[c][r]);
    let vm = ComplexMatrix::from_fn(cols, cols, |r, c| v_cols[c][r]);
    let mut out = SvdResult { u, s, v: vm };
    fix_phases(&mut out);
    Ok(out)
}
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (xp, xq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in xp.iter_mut().zip(xq.iter_mut()) {
        let y_rot = *y * phase;
        let new_x = *x * c - y_rot * s;
        let new_y = *x * s + y_rot * c;
        *x = new_x;
        *y = new_y;
    }
}
/// Fills the listed (zero) columns with unit vectors orthogonal to all others.
fn complete_orthonormal(cols: &mut [Vec<C64>], deficient: &[usize], n: usize) {
    for &d in deficient {
        for e in 0..n {
            let mut cand: Vec<C64> = (0..n).map(|i| if i == e { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
            for _ in 0..2 {
                for (j, col) in cols.iter().enumerate() {
                    if j == d || (deficient.contains(&j) && col.iter().all(|z| z.norm_sqr() == 0.0)) {
                        continue;
                    }
                    let proj: C64 = col.iter().zip(&cand).map(|(a, b)| a.conj() * b).sum();
                    for (c, a) in cand.iter_mut().zip(col) {
                        *c -= proj * a;
                    }
                }
            }
            let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 1e-8 {
                cols[d] = cand.iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
}
fn fix_phases(out: &mut SvdResult) {
    let k = out.s.len();
    for j in 0..k {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..out.u.rows() {
            let a = out.u[(i, j)].norm();
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = i;
            }
        }
        let z = out.u[(best, j)];
        if z.norm() == 0.0 {
            continue;
        }
        let ph = z.conj() / z.norm();
        for i in 0..out.u.rows() {
            out.u[(i, j)] *= ph;
        }
        for i in 0..out.v.rows() {
            out.v[(i, j)] *= ph;
        }
    }
}
