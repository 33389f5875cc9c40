//! Adaptive first-order optimizers over complex tensors, treating real and
//! imaginary parts as independent real parameters.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::C64;
/// Added under the square root of the second-moment denominators.
pub const OPTIMIZER_EPSILON: f64 = 1e-8;
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerConfig {
    Adagrad { rate: f64 },
    Adam { rate: f64, beta1: f64, beta2: f64, epsilon: f64 },
}
impl OptimizerConfig {
    pub fn adam(rate: f64, beta1: f64, beta2: f64) -> Self {
        Self::Adam { rate, beta1, beta2, epsilon: OPTIMIZER_EPSILON }
    }
    pub fn validate(&self) -> Result<()> {
        let (rate, betas) = match *self {
            Self::Adagrad { rate } => (rate, None),
            Self::Adam { rate, beta1, beta2, epsilon } => {
                if !(epsilon > 0.0) {
                    return Err(Error::Domain { name: "Adam epsilon", value: epsilon });
                }
                (rate, Some((beta1, beta2)))
            }
        };
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain { name: "learning rate", value: rate });
        }
        if let Some((b1, b2)) = betas {
            for (name, b) in [("beta1", b1), ("beta2", b2)] {
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::Domain { name, value: b });
                }
            }
        }
        Ok(())
    }
}
/// Accumulators, two real entries per complex parameter (re, im interleaved).
#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerState {
    Adagrad { sum_sq: Vec<f64> },
    Adam { first: Vec<f64>, second: Vec<f64>, steps: u64 },
}
impl OptimizerState {
    pub fn new(cfg: &OptimizerConfig, complex_len: usize) -> Self {
        let n = 2 * complex_len;
        match cfg {
            OptimizerConfig::Adagrad { .. } => Self::Adagrad { sum_sq: alloc::vec![0.0; n] },
            OptimizerConfig::Adam { .. } => Self::Adam { first: alloc::vec![0.0; n], second: alloc::vec![0.0; n], steps: 0 },
        }
    }
    fn len(&self) -> usize {
        match self {
            Self::Adagrad { sum_sq } => sum_sq.len(),
            Self::Adam { first, .. } => first.len(),
        }
    }
}
/// Turns an ascent direction into a parameter update, advancing the accumulators.
pub fn optimizer_step(state: &mut OptimizerState, direction: &ComplexMatrix, cfg: &OptimizerConfig) -> Result<ComplexMatrix> {
    let n = 2 * direction.as_slice().len();
    if state.len() != n {
        return Err(Error::Shape { context: "optimizer accumulators", expected: (n, 1), found: (state.len(), 1) });
    }
    let g: Vec<f64> = direction.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
    let mut upd = alloc::vec![0.0; n];
    match (state, *cfg) {
        (OptimizerState::Adagrad { sum_sq }, OptimizerConfig::Adagrad { rate }) => {
            for k in 0..n {
                sum_sq[k] += g[k] * g[k];
                upd[k] = rate * g[k] / (sum_sq[k] + OPTIMIZER_EPSILON).sqrt();
            }
        }
        (OptimizerState::Adam { first, second, steps }, OptimizerConfig::Adam { rate, beta1, beta2, epsilon }) => {
            *steps += 1;
            let t = *steps as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for k in 0..n {
                first[k] = beta1 * first[k] + (1.0 - beta1) * g[k];
                second[k] = beta2 * second[k] + (1.0 - beta2) * g[k] * g[k];
                let mh = first[k] / c1;
                let vh = second[k] / c2;
                upd[k] = rate * mh / (vh.sqrt() + epsilon);
            }
        }
        _ => return Err(Error::Config("optimizer state does not match its configuration")),
    }
    let data = upd.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    ComplexMatrix::from_vec(direction.rows(), direction.cols(), data)
}
