//! The randomized benchmarking protocol: single-sequence survival
//! probabilities and Monte Carlo estimates of the average sequence fidelity.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace_first, ComplexMatrix};
use crate::noise::NoiseModel;
use crate::quantum::{compile_undo, sample_sequence, DensityMatrix, GateSet, KrausChannel, PovmElement, UnitaryGate};
/// Survival probabilities may leave [0, 1] by this much through rounding.
pub const PROBABILITY_SLACK: f64 = 1e-10;
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub m_max: usize,
    pub n_samples: usize,
    pub gate_set: GateSet,
    pub rho_s: DensityMatrix,
    pub povm: PovmElement,
    pub seed: u64,
    pub noise: NoiseModel,
}
impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(Error::OutOfRange { name: "m_max", value: 0, min: 1, max: usize::MAX });
        }
        if self.n_samples == 0 {
            return Err(Error::OutOfRange { name: "n_samples", value: 0, min: 1, max: usize::MAX });
        }
        check_dims(&self.noise, self.gate_set.dim(), &self.rho_s, &self.povm)
    }
    pub fn lengths(&self) -> Vec<usize> {
        (1..=self.m_max).collect()
    }
}
fn check_dims(noise: &NoiseModel, gate_dim: usize, rho: &DensityMatrix, povm: &PovmElement) -> Result<()> {
    let ds = noise.d_s();
    for (context, d) in [("gate dimension", gate_dim), ("system state", rho.dim()), ("measurement", povm.dim())] {
        if d != ds {
            return Err(Error::Shape { context, expected: (ds, ds), found: (d, d) });
        }
    }
    Ok(())
}
/// Estimated average sequence fidelity per sequence length.
#[derive(Clone, Debug, PartialEq)]
pub struct AsfCurve {
    pub lengths: Vec<usize>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n_samples: usize,
}
impl AsfCurve {
    /// Mean and standard error (sample deviation over `√n`) of each row.
    pub fn from_samples(lengths: Vec<usize>, samples: &[Vec<f64>]) -> Result<Self> {
        if lengths.len() != samples.len() || lengths.is_empty() {
            return Err(Error::Config("one sample row per sequence length is required"));
        }
        let n = samples[0].len();
        if n == 0 || samples.iter().any(|row| row.len() != n) {
            return Err(Error::Config("every sequence length needs the same positive sample count"));
        }
        let mut means = Vec::with_capacity(samples.len());
        let mut stderrs = Vec::with_capacity(samples.len());
        for row in samples {
            let mean = row.iter().sum::<f64>() / n as f64;
            let se = if n > 1 {
                let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            means.push(mean);
            stderrs.push(se);
        }
        Ok(Self { lengths, means, stderrs, n_samples: n })
    }
    pub fn len(&self) -> usize {
        self.lengths.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }
    pub fn validate(&self) -> Result<()> {
        let n = self.lengths.len();
        if self.means.len() != n || self.stderrs.len() != n || n == 0 {
            return Err(Error::Config("curve columns differ in length"));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("curve sample count must be positive"));
        }
        for (&m, (&f, &s)) in self.lengths.iter().zip(self.means.iter().zip(&self.stderrs)) {
            if m == 0 {
                return Err(Error::Config("sequence lengths must be positive"));
            }
            if !(-1e-12..=1.0 + 1e-12).contains(&f) {
                return Err(Error::Domain { name: "mean survival probability", value: f });
            }
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Domain { name: "standard error", value: s });
            }
        }
        Ok(())
    }
}
fn apply(ch: &KrausChannel, x: &ComplexMatrix) -> ComplexMatrix {
    ch.apply_operator(x)
}
/// Survival probability of one gate sequence; the undo gate is appended.
pub fn run_sequence(noise: &NoiseModel, gates: &[UnitaryGate], rho_s: &DensityMatrix, povm: &PovmElement) -> Result<f64> {
    let first = gates.first().ok_or(Error::Config("a sequence needs at least one gate"))?;
    check_dims(noise, first.dim(), rho_s, povm)?;
    let undo = compile_undo(gates)?;
    let step = noise.step_channel();
    let de = noise.d_e();
    let ds = noise.d_s();
    let id_e = ComplexMatrix::identity(de);
    let mut x = apply(&noise.prep_channel(), &kron(&noise.env_state(), rho_s.matrix()));
    for g in gates {
        x = kron(&id_e, g.matrix()).conjugate(&x)?;
        x = apply(&step, &x);
    }
    x = kron(&id_e, undo.matrix()).conjugate(&x)?;
    x = apply(&noise.final_channel(), &x);
    let sys = partial_trace_first(&x, de, ds);
    let f = (povm.matrix() * &sys).trace().re;
    if !f.is_finite() {
        return Err(Error::NonFinite { context: "survival probability" });
    }
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&f) {
        return Err(Error::Domain { name: "survival probability", value: f });
    }
    Ok(f)
}
/// The random stream for sample `idx` at sequence length `m`.
pub fn sample_rng(seed: u64, m: usize, idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) | idx as u64);
    rng
}
/// Survival probability of sample `idx` at length `m`, independent of any
/// other sample.
pub fn survival_sample(cfg: &ExperimentConfig, m: usize, idx: usize) -> Result<f64> {
    let mut rng = sample_rng(cfg.seed, m, idx);
    let gates = sample_sequence(&cfg.gate_set, m, &mut rng)?;
    run_sequence(&cfg.noise, &gates, &cfg.rho_s, &cfg.povm)
}
/// Sequential Monte Carlo estimate for lengths `1..=m_max`.
pub fn estimate_asf(cfg: &ExperimentConfig) -> Result<AsfCurve> {
    cfg.validate()?;
    let lengths = cfg.lengths();
    let mut rows = Vec::with_capacity(lengths.len());
    for &m in &lengths {
        let row = (0..cfg.n_samples).map(|i| survival_sample(cfg, m, i)).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    AsfCurve::from_samples(lengths, &rows)
}
