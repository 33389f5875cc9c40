//! States, measurements, gates, Kraus channels and the single-qubit Clifford group.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix};
use crate::C64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
pub const KRAUS_TOL: f64 = 1e-10;

fn require_square(m: &ComplexMatrix, context: &'static str) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Shape { context, expected: (m.rows(), m.rows()), found: m.shape() });
    }
    Ok(m.rows())
}

/// Unit-trace positive semidefinite Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        require_square(&matrix, "density matrix")?;
        let herm = matrix.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::Contract { what: "density matrix is not Hermitian", defect: herm });
        }
        let tr = (matrix.trace() - C64::new(1.0, 0.0)).norm();
        if tr > TRACE_TOL {
            return Err(Error::Contract { what: "density matrix trace differs from 1", defect: tr });
        }
        let (w, _) = eigh(&matrix)?;
        let min = w.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::Contract { what: "density matrix has a negative eigenvalue", defect: -min });
        }
        Ok(Self(matrix))
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a normalized ket.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::Contract { what: "ket is not normalized", defect: (norm - 1.0).abs() });
        }
        let v = ComplexMatrix::column(ket);
        Ok(Self(&v * &v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// POVM element: Hermitian with spectrum in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement(ComplexMatrix);

impl PovmElement {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        require_square(&matrix, "POVM element")?;
        let herm = matrix.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::Contract { what: "POVM element is not Hermitian", defect: herm });
        }
        let (w, _) = eigh(&matrix)?;
        let (hi, lo) = (w[0], w[w.len() - 1]);
        if lo < -PSD_TOL || hi > 1.0 + PSD_TOL {
            return Err(Error::Contract { what: "POVM element spectrum leaves [0, 1]", defect: (-lo).max(hi - 1.0) });
        }
        Ok(Self(matrix))
    }

    pub fn projector(dim: usize, k: usize) -> Self {
        Self(DensityMatrix::basis(dim, k).0)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate(ComplexMatrix);

impl UnitaryGate {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        require_square(&matrix, "unitary gate")?;
        let defect = matrix.unitarity_defect();
        if !(defect <= tol) {
            return Err(Error::Contract { what: "gate is not unitary", defect });
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Same gate with the canonical global phase.
    pub fn canonical(&self) -> Self {
        Self(self.0.canonical_phase(1e-10))
    }
}

/// Trace-preserving channel `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators.first().ok_or(Error::Config("a Kraus channel needs at least one operator"))?;
        let dim = require_square(first, "Kraus operator")?;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for k in &operators {
            if k.shape() != (dim, dim) {
                return Err(Error::Shape { context: "Kraus operator", expected: (dim, dim), found: k.shape() });
            }
            sum = &sum + &(&k.adjoint() * k);
        }
        let defect = sum.distance(&ComplexMatrix::identity(dim));
        if defect > KRAUS_TOL {
            return Err(Error::Contract { what: "Kraus operators are not complete", defect });
        }
        Ok(Self { dim, operators })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, operators: alloc::vec![ComplexMatrix::identity(dim)] }
    }

    pub fn unitary(u: &UnitaryGate) -> Self {
        Self { dim: u.dim(), operators: alloc::vec![u.matrix().clone()] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// Applies the channel to an arbitrary operator (no state validation).
    pub fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.operators {
            out = &out + &(&(k * x) * &k.adjoint());
        }
        out
    }
}

pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.dim() != rho.dim() {
        return Err(Error::Shape { context: "apply_channel", expected: (ch.dim(), ch.dim()), found: (rho.dim(), rho.dim()) });
    }
    Ok(DensityMatrix(ch.apply_operator(rho.matrix())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    label: String,
    gates: Vec<UnitaryGate>,
}

impl GateSet {
    pub fn new(label: impl Into<String>, gates: Vec<UnitaryGate>) -> Result<Self> {
        let first = gates.first().ok_or(Error::Config("gate set is empty"))?;
        let dim = first.dim();
        if let Some(g) = gates.iter().find(|g| g.dim() != dim) {
            return Err(Error::Shape { context: "gate set", expected: (dim, dim), found: (g.dim(), g.dim()) });
        }
        Ok(Self { label: label.into(), gates })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gates(&self) -> &[UnitaryGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.gates[0].dim()
    }

    /// Whether the set is the enumerated single-qubit Clifford group.
    pub fn is_clifford_1q(&self) -> bool {
        self.label == CLIFFORD_1Q_LABEL && self.gates.len() == 24 && self.dim() == 2
    }
}

pub const CLIFFORD_1Q_LABEL: &str = "clifford-1q";

pub fn hadamard() -> ComplexMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).expect("static shape")
}

pub fn phase_s() -> ComplexMatrix {
    ComplexMatrix::from_vec(2, 2, alloc::vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)])
        .expect("static shape")
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("static shape")
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_vec(2, 2, alloc::vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)])
        .expect("static shape")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).expect("static shape")
}

/// The 24 single-qubit Cliffords, generated as the closure of {H, S} up to phase.
///
/// Gates are stored with canonical global phase and listed in discovery
/// order (breadth first, identity first).
pub fn enumerate_clifford_1q() -> GateSet {
    let generators = [hadamard(), phase_s()];
    let mut found: Vec<ComplexMatrix> = alloc::vec![ComplexMatrix::identity(2)];
    let mut frontier = 0;
    while frontier < found.len() {
        let g = found[frontier].clone();
        frontier += 1;
        for s in &generators {
            let next = (s * &g).canonical_phase(1e-10);
            if !found.iter().any(|f| f.eq_up_to_phase(&next, 1e-10)) {
                found.push(next);
            }
        }
    }
    let gates = found.into_iter().map(UnitaryGate).collect();
    GateSet { label: String::from(CLIFFORD_1Q_LABEL), gates }
}

/// Draws `m` gates independently and uniformly.
pub fn sample_sequence<R: Rng + ?Sized>(gs: &GateSet, m: usize, rng: &mut R) -> Result<Vec<UnitaryGate>> {
    if gs.is_empty() {
        return Err(Error::Config("gate set is empty"));
    }
    if m == 0 {
        return Err(Error::OutOfRange { name: "sequence length", value: 0, min: 1, max: usize::MAX });
    }
    Ok((0..m).map(|_| gs.gates[rng.gen_range(0..gs.len())].clone()).collect())
}

/// The undo gate `(G_m ⋯ G_1)†`.
pub fn compile_undo(gates: &[UnitaryGate]) -> Result<UnitaryGate> {
    let first = gates.first().ok_or(Error::Config("cannot compile the inverse of an empty sequence"))?;
    let dim = first.dim();
    let mut prod = ComplexMatrix::identity(dim);
    for g in gates {
        if g.dim() != dim {
            return Err(Error::Shape { context: "compile_undo", expected: (dim, dim), found: (g.dim(), g.dim()) });
        }
        prod = g.matrix() * &prod;
    }
    Ok(UnitaryGate(prod.adjoint()))
}
