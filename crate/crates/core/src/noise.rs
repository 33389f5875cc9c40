//! Noise models: Markovian single-system channels and joint system-environment
//! unitaries, with optional preparation and final noise slots.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::{kron, unitary_exp, ComplexMatrix};
use crate::quantum::{pauli_x, pauli_y, pauli_z, DensityMatrix, KrausChannel, UnitaryGate};
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    /// The same channel on the system after every gate.
    Markovian { channel: KrausChannel },
    /// A unitary on `E ⊗ S` after every gate, environment starting in `rho_e`.
    JointUnitary { lambda: UnitaryGate, rho_e: DensityMatrix },
}
/// A noise process. The preparation slot acts before the first gate (default:
/// identity); the final slot acts after the undo gate (default: the step noise).
/// Slot channels act on the full space, `E ⊗ S` for joint models.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub prep: Option<KrausChannel>,
    pub final_noise: Option<KrausChannel>,
}
fn probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain { name, value: p });
    }
    Ok(())
}
impl NoiseModel {
    pub fn markovian(channel: KrausChannel) -> Self {
        Self { kind: NoiseKind::Markovian { channel }, prep: None, final_noise: None }
    }
    pub fn joint_unitary(lambda: UnitaryGate, rho_e: DensityMatrix) -> Result<Self> {
        let de = rho_e.dim();
        if !lambda.dim().is_multiple_of(de) || lambda.dim() == de {
            return Err(Error::Shape { context: "joint unitary", expected: (de * 2, de * 2), found: (lambda.dim(), lambda.dim()) });
        }
        Ok(Self { kind: NoiseKind::JointUnitary { lambda, rho_e }, prep: None, final_noise: None })
    }
    pub fn identity(ds: usize) -> Self {
        Self::markovian(KrausChannel::identity(ds))
    }
    pub fn with_prep(mut self, ch: KrausChannel) -> Result<Self> {
        self.check_slot(&ch)?;
        self.prep = Some(ch);
        Ok(self)
    }
    pub fn with_final(mut self, ch: KrausChannel) -> Result<Self> {
        self.check_slot(&ch)?;
        self.final_noise = Some(ch);
        Ok(self)
    }
    fn check_slot(&self, ch: &KrausChannel) -> Result<()> {
        let d = self.d_e() * self.d_s();
        if ch.dim() != d {
            return Err(Error::Shape { context: "noise slot", expected: (d, d), found: (ch.dim(), ch.dim()) });
        }
        Ok(())
    }
    /// Environment dimension (1 for Markovian models).
    pub fn d_e(&self) -> usize {
        match &self.kind {
            NoiseKind::Markovian { .. } => 1,
            NoiseKind::JointUnitary { rho_e, .. } => rho_e.dim(),
        }
    }
    pub fn d_s(&self) -> usize {
        match &self.kind {
            NoiseKind::Markovian { channel } => channel.dim(),
            NoiseKind::JointUnitary { lambda, rho_e } => lambda.dim() / rho_e.dim(),
        }
    }
    pub fn env_state(&self) -> ComplexMatrix {
        match &self.kind {
            NoiseKind::Markovian { .. } => ComplexMatrix::identity(1),
            NoiseKind::JointUnitary { rho_e, .. } => rho_e.matrix().clone(),
        }
    }
    /// The step noise as a channel on the full space.
    pub fn step_channel(&self) -> KrausChannel {
        match &self.kind {
            NoiseKind::Markovian { channel } => channel.clone(),
            NoiseKind::JointUnitary { lambda, .. } => KrausChannel::unitary(lambda),
        }
    }
    pub fn prep_channel(&self) -> KrausChannel {
        self.prep.clone().unwrap_or_else(|| KrausChannel::identity(self.d_e() * self.d_s()))
    }
    pub fn final_channel(&self) -> KrausChannel {
        self.final_noise.clone().unwrap_or_else(|| self.step_channel())
    }
    /// The step unitary of a joint model.
    pub fn joint_unitary_matrix(&self) -> Option<&ComplexMatrix> {
        match &self.kind {
            NoiseKind::JointUnitary { lambda, .. } => Some(lambda.matrix()),
            NoiseKind::Markovian { .. } => None,
        }
    }
}
/// `ρ ↦ (1−p)ρ + p·ZρZ`.
pub fn phase_flip(p: f64) -> Result<NoiseModel> {
    probability("phase flip probability", p)?;
    let ch = KrausChannel::new(alloc::vec![
        ComplexMatrix::identity(2).scale_real((1.0 - p).sqrt()),
        pauli_z().scale_real(p.sqrt()),
    ])?;
    Ok(NoiseModel::markovian(ch))
}
pub fn amplitude_damping(gamma: f64) -> Result<NoiseModel> {
    probability("damping strength", gamma)?;
    let k0 = ComplexMatrix::diag_real(&[1.0, (1.0 - gamma).sqrt()]);
    let k1 = ComplexMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
    Ok(NoiseModel::markovian(KrausChannel::new(alloc::vec![k0, k1])?))
}
/// `ρ ↦ (1−p)ρ + p·I/2`.
pub fn depolarizing(p: f64) -> Result<NoiseModel> {
    probability("depolarizing probability", p)?;
    let a = (1.0 - 3.0 * p / 4.0).sqrt();
    let b = (p / 4.0).sqrt();
    let ops: Vec<ComplexMatrix> = alloc::vec![
        ComplexMatrix::identity(2).scale_real(a),
        pauli_x().scale_real(b),
        pauli_y().scale_real(b),
        pauli_z().scale_real(b),
    ];
    Ok(NoiseModel::markovian(KrausChannel::new(ops)?))
}
/// Two-spin Hamiltonian `J·X⊗X + hx(X⊗I + I⊗X) + hy(Y⊗I + I⊗Y)`; the first
/// factor is the environment.
pub fn spin_hamiltonian(j: f64, hx: f64, hy: f64) -> ComplexMatrix {
    let (x, y, id) = (pauli_x(), pauli_y(), ComplexMatrix::identity(2));
    let xx = kron(&x, &x).scale_real(j);
    let fx = (&kron(&x, &id) + &kron(&id, &x)).scale_real(hx);
    let fy = (&kron(&y, &id) + &kron(&id, &y)).scale_real(hy);
    &(&xx + &fx) + &fy
}
/// Joint unitary `exp(−i·delta·H)` of the two-spin model, environment in `|0⟩⟨0|`.
pub fn spin_unitary(j: f64, hx: f64, hy: f64, delta: f64) -> Result<NoiseModel> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain { name: "time step", value: delta });
    }
    let u = unitary_exp(&spin_hamiltonian(j, hx, hy), delta)?;
    let lambda = UnitaryGate::with_tolerance(u, 1e-12)?;
    NoiseModel::joint_unitary(lambda, DensityMatrix::basis(2, 0))
}
/// Embeds a system unitary as `I_E ⊗ u`, a joint model with no coupling.
pub fn uncoupled_joint(u: &UnitaryGate, de: usize) -> Result<NoiseModel> {
    let lambda = UnitaryGate::new(kron(&ComplexMatrix::identity(de), u.matrix()))?;
    NoiseModel::joint_unitary(lambda, DensityMatrix::basis(de, 0))
}
