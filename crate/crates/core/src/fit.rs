//! Least-squares fit of `A·p^m + B` to a decay curve.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::{svd, ComplexMatrix};
use crate::rb::AsfCurve;
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub max_residual: f64,
    /// Set when the data cannot distinguish a decay from a constant.
    pub degenerate: bool,
}
impl ExpFit {
    pub fn eval(&self, m: usize) -> f64 {
        self.a * self.p.powi(m as i32) + self.b
    }
}
const GRID: usize = 2001;
const FLAT_TOL: f64 = 1e-12;
pub fn fit_curve(curve: &AsfCurve) -> Result<ExpFit> {
    fit_exponential(&curve.lengths, &curve.means)
}
/// Fits `A·p^m + B` with `p ∈ [−1, 1]`. `A` and `B` are solved exactly for
/// each `p`; `p` is located on a grid, refined by golden-section search and
/// polished with Gauss–Newton steps on all three parameters.
pub fn fit_exponential(lengths: &[usize], values: &[f64]) -> Result<ExpFit> {
    if lengths.len() != values.len() {
        return Err(Error::Config("lengths and values differ in count"));
    }
    if lengths.len() < 4 {
        return Err(Error::OutOfRange { name: "fit points", value: lengths.len(), min: 4, max: usize::MAX });
    }
    if lengths.contains(&0) {
        return Err(Error::Config("sequence lengths must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "fit input" });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= FLAT_TOL {
        return Ok(ExpFit { a: 0.0, p: 1.0, b: mean, max_residual: spread, degenerate: true });
    }
    let sse = |p: f64| profile(lengths, values, p).2;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    let grid: Vec<f64> = (0..GRID).map(|k| -1.0 + 2.0 * k as f64 / (GRID - 1) as f64).collect();
    for (k, &p) in grid.iter().enumerate() {
        let v = sse(p);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID - 1)];
    let p = golden_section(&sse, lo, hi);
    let (a, b, _) = profile(lengths, values, p);
    let (a, p, b) = gauss_newton(lengths, values, a, p, b);
    let max_residual = lengths
        .iter()
        .zip(values)
        .map(|(&m, &v)| (a * p.powi(m as i32) + b - v).abs())
        .fold(0.0, f64::max);
    let degenerate = (1.0 - p.abs()) < 1e-12 || a.abs() < FLAT_TOL;
    Ok(ExpFit { a, p, b, max_residual, degenerate })
}
/// Optimal `(A, B)` and the residual sum of squares for fixed `p`.
fn profile(lengths: &[usize], values: &[f64], p: f64) -> (f64, f64, f64) {
    let n = lengths.len() as f64;
    let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&m, &y) in lengths.iter().zip(values) {
        let x = p.powi(m as i32);
        sx += x;
        sxx += x * x;
        sy += y;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let (a, b) = if det.abs() <= 1e-14 * (n * sxx).max(1.0) {
        (0.0, sy / n)
    } else {
        ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
    };
    let r = lengths.iter().zip(values).map(|(&m, &y)| (a * p.powi(m as i32) + b - y).powi(2)).sum();
    (a, b, r)
}
fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}
fn gauss_newton(lengths: &[usize], values: &[f64], mut a: f64, mut p: f64, mut b: f64) -> (f64, f64, f64) {
    let cost = |a: f64, p: f64, b: f64| -> f64 {
        lengths.iter().zip(values).map(|(&m, &y)| (a * p.powi(m as i32) + b - y).powi(2)).sum()
    };
    let mut current = cost(a, p, b);
    for _ in 0..50 {
        let rows = lengths.len();
        let mut jac = Vec::with_capacity(rows * 3);
        let mut res = Vec::with_capacity(rows);
        for (&m, &y) in lengths.iter().zip(values) {
            let pm = p.powi(m as i32);
            let dp = if m == 0 { 0.0 } else { a * m as f64 * p.powi(m as i32 - 1) };
            jac.extend_from_slice(&[pm, dp, 1.0]);
            res.push(y - (a * pm + b));
        }
        let Some(step) = least_squares(rows, &jac, &res) else { break };
        let (na, np, nb) = (a + step[0], (p + step[1]).clamp(-1.0, 1.0), b + step[2]);
        let next = cost(na, np, nb);
        if !(next < current) {
            break;
        }
        let small = step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-15;
        (a, p, b, current) = (na, np, nb, next);
        if small {
            break;
        }
    }
    (a, p, b)
}
/// Minimum-norm solution of `J x = r` for a `rows × 3` real Jacobian.
fn least_squares(rows: usize, jac: &[f64], res: &[f64]) -> Option<[f64; 3]> {
    let j = ComplexMatrix::from_real(rows, 3, jac).ok()?;
    let f = svd(&j).ok()?;
    let smax = f.s[0];
    let mut x = [0.0; 3];
    for k in 0..3 {
        if f.s[k] <= smax * 1e-12 {
            continue;
        }
        let coef: f64 = (0..rows).map(|r| (f.u[(r, k)].conj() * res[r]).re).sum::<f64>() / f.s[k];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += (f.v[(i, k)] * coef).re;
        }
    }
    Some(x)
}
