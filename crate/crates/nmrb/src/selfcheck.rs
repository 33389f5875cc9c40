//! Desk-scale release checks: each suite compares a fast path against an
//! independent slow one on seeded random instances.
use nmrb_core::average::{is_unitary_2_design, AveragedNoise};
use nmrb_core::learner::LearningProblem;
use nmrb_core::linalg::random::{gaussian_matrix, haar_unitary};
use nmrb_core::linalg::project_to_unitary;
use nmrb_core::noise::NoiseModel;
use nmrb_core::process::{contract_asf_dense, contract_asf_dense_with_joint, joint_node, ControlSpec, ControlTensor, NoiseMpoSpec};
use nmrb_core::quantum::{enumerate_clifford_1q, sample_sequence, DensityMatrix, PovmElement, UnitaryGate};
use nmrb_core::rb::{run_sequence, AsfCurve};
use nmrb_core::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Deliberate faults for checking that the suites can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Negates the full system-contraction environment map before averaging.
    DollarSign,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub suites: Vec<SuiteResult>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name).collect()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn zero() -> (DensityMatrix, PovmElement) {
    (DensityMatrix::basis(2, 0), PovmElement::projector(2, 0))
}

fn random_joint(r: &mut ChaCha8Rng) -> NoiseModel {
    let lam = UnitaryGate::new(haar_unitary(r, 4)).expect("Haar sample is unitary");
    NoiseModel::joint_unitary(lam, DensityMatrix::basis(2, 0)).expect("4x4 joint model")
}

fn suite(name: &'static str, tol: f64, worst: nmrb_core::Result<f64>) -> SuiteResult {
    match worst {
        Ok(w) => SuiteResult { name, passed: w <= tol, detail: format!("worst deviation {w:.3e} (tolerance {tol:.0e})") },
        Err(e) => SuiteResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn clifford_group() -> SuiteResult {
    let gs = enumerate_clifford_1q();
    let ok = gs.len() == 24 && is_unitary_2_design(&gs);
    SuiteResult { name: "clifford-group", passed: ok, detail: format!("{} elements, 2-design: {}", gs.len(), is_unitary_2_design(&gs)) }
}

/// Dense contraction of a fixed sequence against direct simulation.
fn oracle_equivalence() -> SuiteResult {
    let run = || -> nmrb_core::Result<f64> {
        let mut r = rng(101);
        let gs = enumerate_clifford_1q();
        let (rho, povm) = zero();
        let mut worst: f64 = 0.0;
        for case in 0..20 {
            let noise = random_joint(&mut r);
            let m = 1 + case % 4;
            let gates = sample_sequence(&gs, m, &mut r)?;
            let spec = NoiseMpoSpec::from_noise(&noise, m)?;
            let ctl = ControlTensor::Sequence(ControlSpec { gates: gates.clone(), rho_s: rho.clone(), povm: povm.clone() });
            let dense = contract_asf_dense(&spec, &ctl)?;
            worst = worst.max((dense - run_sequence(&noise, &gates, &rho, &povm)?).abs());
        }
        Ok(worst)
    };
    suite("oracle-equivalence", 1e-10, run())
}

/// Closed-form Clifford average against the mean over every sequence.
fn enumeration(fault: Fault) -> SuiteResult {
    let run = || -> nmrb_core::Result<f64> {
        let mut r = rng(202);
        let gs = enumerate_clifford_1q();
        let (rho, povm) = zero();
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let noise = random_joint(&mut r);
            let mut avg = AveragedNoise::from_noise(&noise)?;
            if fault == Fault::DollarSign {
                avg.dollar = avg.dollar.scale(-1.0);
            }
            let closed = avg.curve(&rho, &povm, 2)?;
            let mut one = 0.0;
            let mut two = 0.0;
            for a in gs.gates() {
                one += run_sequence(&noise, std::slice::from_ref(a), &rho, &povm)?;
                for b in gs.gates() {
                    two += run_sequence(&noise, &[a.clone(), b.clone()], &rho, &povm)?;
                }
            }
            worst = worst.max((closed[0] - one / 24.0).abs()).max((closed[1] - two / 576.0).abs());
        }
        Ok(worst)
    };
    suite("enumeration", 1e-10, run())
}

/// Learner gradient against central differences of the dense cost along
/// random directions.
fn gradient() -> SuiteResult {
    let run = || -> nmrb_core::Result<f64> {
        let mut r = rng(303);
        let (rho, povm) = zero();
        let env = DensityMatrix::basis(2, 0);
        let lam = UnitaryGate::new(haar_unitary(&mut r, 4))?;
        let m = 3;
        let data = AsfCurve { lengths: (1..=m).collect(), means: (0..m).map(|_| r.gen()).collect(), stderrs: vec![0.0; m], n_samples: 1 };
        let problem = LearningProblem::new(data.clone(), rho.clone(), povm.clone(), 2)?;
        let ctl = ControlTensor::CliffordAverage { rho_s: rho, povm };
        let cost = |slot: usize, l: &ComplexMatrix| -> nmrb_core::Result<f64> {
            let mut c = 0.0;
            for (&n, &e) in data.lengths.iter().zip(&data.means) {
                let spec = NoiseMpoSpec::shared(&lam, &env, 2, n)?;
                let joint = (slot <= n + 1).then_some((slot, l));
                let f = contract_asf_dense_with_joint(&spec, &ctl, joint)?;
                c += 0.5 * (f - e) * (f - e);
            }
            Ok(c)
        };
        let base = joint_node(lam.matrix(), lam.matrix(), 2, 2)?;
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for slot in 1..=m + 1 {
            let delta = problem.gradient_joint(lam.matrix(), slot)?;
            for _ in 0..6 {
                let dir = gaussian_matrix(&mut r, 8, 8);
                let fd = (cost(slot, &(&base + &dir.scale_real(h)))? - cost(slot, &(&base - &dir.scale_real(h)))?) / (2.0 * h);
                let analytic: f64 = -delta.as_slice().iter().zip(dir.as_slice()).map(|(g, v)| g.re * v.re + g.im * v.im).sum::<f64>();
                worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-3));
            }
        }
        Ok(worst)
    };
    suite("gradient", 1e-6, run())
}

/// Closest-unitary projection: unitarity, optimality against random
/// unitaries, and two-sided equivariance.
fn projection() -> SuiteResult {
    let run = || -> nmrb_core::Result<f64> {
        let mut r = rng(404);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let x = gaussian_matrix(&mut r, 4, 4);
            let p = project_to_unitary(&x)?;
            if p.unitarity_defect() > 1e-12 {
                return Ok(p.unitarity_defect().max(1.0));
            }
            let best = p.distance(&x);
            for _ in 0..200 {
                let w = haar_unitary(&mut r, 4);
                if w.distance(&x) < best {
                    return Ok(best - w.distance(&x) + 1.0);
                }
            }
            let (u, v) = (haar_unitary(&mut r, 4), haar_unitary(&mut r, 4));
            let lhs = project_to_unitary(&(&(&u * &x) * &v))?;
            worst = worst.max(lhs.distance(&(&(&u * &p) * &v)));
        }
        Ok(worst)
    };
    suite("projection", 1e-10, run())
}

pub fn run_selfcheck(fault: Fault) -> SelfCheckReport {
    SelfCheckReport { suites: vec![clifford_group(), oracle_equivalence(), enumeration(fault), gradient(), projection()] }
}

