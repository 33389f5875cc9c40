//! Supervised learning of a time-independent system-environment unitary from
//! averaged survival data, by sweeping gradient updates over neighbouring
//! node pairs of the noise MPO.
mod diagnose;
mod optimizer;
mod split;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
pub use diagnose::{diagnose_markovianity, Diagnosis, DIAGNOSIS_UNITARITY_TOL};
pub use optimizer::{optimizer_step, OptimizerConfig, OptimizerState, OPTIMIZER_EPSILON};
pub use split::{project_pair, split_truncate, SplitResult};
use crate::average::{dollar_map, pounds_map, twirl, AveragedNoise, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{kron, project_to_unitary, svd, random::gaussian_matrix, unitary_exp, ComplexMatrix};
use crate::process::{joint_node, measurement_functional, row_times, PairLinearization};
use crate::quantum::{DensityMatrix, PovmElement, UnitaryGate};
use crate::rb::AsfCurve;
use crate::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
/// Which slot pair the `k`-th iteration differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    /// `1, 2, …, m+1`, then wrap.
    Ascending,
    /// `m+1, m, …, 1`, then wrap.
    Descending,
    Fixed(usize),
}
impl SweepOrder {
    /// Slot for the 1-based iteration `k` when the longest sequence is `m`.
    pub fn slot(&self, k: usize, m: usize) -> usize {
        let period = m + 1;
        match *self {
            Self::Ascending => (k - 1) % period + 1,
            Self::Descending => period - (k - 1) % period,
            Self::Fixed(i) => i,
        }
    }
}
/// How the projected pair of factors replaces the shared node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeUpdate {
    /// `λ ← π(Ũ)·π(Ṽ†)`. The pair spans two time steps, so an unchanged
    /// joint node maps `λ` to `λ²`.
    PairProduct,
    /// `λ ← √(π(Ũ)·π(Ṽ†))`, the principal root, which leaves `λ` fixed when
    /// the joint node is unchanged.
    PairRoot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub d_e: usize,
    pub optimizer: OptimizerConfig,
    pub max_iterations: usize,
    /// `δ ≥ 1`: the fit is accepted once the ℓ₁ residual is at most `σ_T/δ`.
    pub convergence_divisor: f64,
    pub sweep: SweepOrder,
    pub node_update: NodeUpdate,
    /// Keep only the part of the descent direction that moves the two unitary factors.
    pub tangent_projection: bool,
    pub unitarity_tolerance: f64,
    pub seed: u64,
    /// Size of the seeded random rotation applied to the identity before the first sweep.
    pub init_jitter: f64,
}
pub const DEFAULT_UNITARITY_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_INIT_JITTER: f64 = 1e-6;
/// Per-point rounding allowance added to the convergence threshold, so data
/// with vanishing standard errors can still be matched.
pub const L1_ROUNDING_FLOOR: f64 = 1e-12;
impl LearnerConfig {
    pub fn new(optimizer: OptimizerConfig) -> Self {
        Self {
            d_e: 2,
            optimizer,
            max_iterations: 200,
            convergence_divisor: 1.0,
            sweep: SweepOrder::Ascending,
            node_update: NodeUpdate::PairRoot,
            tangent_projection: true,
            unitarity_tolerance: DEFAULT_UNITARITY_TOLERANCE,
            seed: 0,
            init_jitter: DEFAULT_INIT_JITTER,
        }
    }
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.d_e == 0 {
            return Err(Error::OutOfRange { name: "environment dimension", value: 0, min: 1, max: usize::MAX });
        }
        if !(self.convergence_divisor >= 1.0) || !self.convergence_divisor.is_finite() {
            return Err(Error::Domain { name: "convergence divisor", value: self.convergence_divisor });
        }
        if !(self.unitarity_tolerance > 0.0) {
            return Err(Error::Domain { name: "unitarity tolerance", value: self.unitarity_tolerance });
        }
        if !(self.init_jitter >= 0.0) || !self.init_jitter.is_finite() {
            return Err(Error::Domain { name: "initial jitter", value: self.init_jitter });
        }
        if let SweepOrder::Fixed(0) = self.sweep {
            return Err(Error::OutOfRange { name: "joint slot", value: 0, min: 1, max: usize::MAX });
        }
        Ok(())
    }
}
/// Experimental curve together with the preparation and measurement it was taken with.
#[derive(Clone, Debug, PartialEq)]
pub struct LearningProblem {
    pub data: AsfCurve,
    pub rho_s: DensityMatrix,
    pub povm: PovmElement,
    pub d_e: usize,
}
impl LearningProblem {
    pub fn new(data: AsfCurve, rho_s: DensityMatrix, povm: PovmElement, d_e: usize) -> Result<Self> {
        data.validate()?;
        if data.is_empty() {
            return Err(Error::Config("training data is empty"));
        }
        if data.lengths.windows(2).any(|w| w[0] >= w[1]) || data.lengths[0] == 0 {
            return Err(Error::Config("training lengths must be positive and strictly increasing"));
        }
        if rho_s.dim() != povm.dim() {
            return Err(Error::Shape { context: "learning problem", expected: (rho_s.dim(), rho_s.dim()), found: (povm.dim(), povm.dim()) });
        }
        if d_e == 0 {
            return Err(Error::OutOfRange { name: "environment dimension", value: 0, min: 1, max: usize::MAX });
        }
        Ok(Self { data, rho_s, povm, d_e })
    }
    pub fn d_s(&self) -> usize {
        self.rho_s.dim()
    }
    pub fn max_length(&self) -> usize {
        *self.data.lengths.last().unwrap_or(&0)
    }
    /// `Σ_n σ_n` of the data.
    pub fn total_stderr(&self) -> f64 {
        self.data.stderrs.iter().map(|s| s.abs()).sum()
    }
    fn fiducial_env(&self) -> ComplexMatrix {
        DensityMatrix::basis(self.d_e, 0).matrix().clone()
    }
    /// Model survival probabilities at every data length, with the shared
    /// node in every slot.
    pub fn predict(&self, lambda: &ComplexMatrix) -> Result<Vec<f64>> {
        let (de, ds) = (self.d_e, self.d_s());
        let step = Superoperator::sandwich(lambda, lambda);
        let avg = AveragedNoise {
            dollar: dollar_map(&step, de, ds)?,
            pounds: pounds_map(&step, de, ds)?,
            prep: step.clone(),
            final_map: step,
            rho_e: self.fiducial_env(),
            d_e: de,
            d_s: ds,
        };
        let curve = avg.curve(&self.rho_s, &self.povm, self.max_length())?;
        Ok(self.data.lengths.iter().map(|&m| curve[m - 1]).collect())
    }
    /// `½ Σ_n (F_n − F_n^exp)²`.
    pub fn cost(&self, lambda: &ComplexMatrix) -> Result<f64> {
        let pred = self.predict(lambda)?;
        Ok(0.5 * pred.iter().zip(&self.data.means).map(|(f, e)| (f - e).powi(2)).sum::<f64>())
    }
    /// `Σ_n |F_n − F_n^exp|`.
    pub fn l1_residual(&self, lambda: &ComplexMatrix) -> Result<f64> {
        let pred = self.predict(lambda)?;
        Ok(pred.iter().zip(&self.data.means).map(|(f, e)| (f - e).abs()).sum())
    }
    /// The descent direction `ΔL = Σ_n (F_n^exp − F_n)·T_n` for the joint
    /// ket node at slots `(i, i−1)`, where `F_n = Re(L * T_n)` with every
    /// other node fixed at `lambda`. The derivative of the cost with respect
    /// to the real and imaginary parts of `L` is `−(Re ΔL, Im ΔL)`.
    pub fn gradient_joint(&self, lambda: &ComplexMatrix, slot: usize) -> Result<ComplexMatrix> {
        let (de, ds) = (self.d_e, self.d_s());
        let m = self.max_length();
        if slot == 0 || slot > m + 1 {
            return Err(Error::OutOfRange { name: "joint slot", value: slot, min: 1, max: m + 1 });
        }
        let pred = self.predict(lambda)?;
        let plain = Superoperator::sandwich(lambda, lambda);
        let twirled = twirl(&plain, de, ds)?;
        let mut state = kron(&self.fiducial_env(), self.rho_s.matrix());
        for k in 0..slot - 1 {
            state = if k == 0 { plain.apply(&state) } else { twirled.apply(&state) };
        }
        let lin = PairLinearization::new(slot, &state, lambda, lambda, de, ds)?;
        let w = measurement_functional(self.povm.matrix(), de);
        let dim = de * ds * ds;
        let mut grad = ComplexMatrix::zeros(dim, dim);
        let mut add = |weight: f64, t: &ComplexMatrix| {
            for (g, x) in grad.as_mut_slice().iter_mut().zip(t.as_slice()) {
                *g += x * weight;
            }
        };
        // functional after slot i for the current length, advanced one twirl per unit length
        let mut r = row_times(&w, &plain);
        let mut r_len = slot;
        for ((&n, &exp), &f) in self.data.lengths.iter().zip(&self.data.means).zip(&pred) {
            if n + 1 < slot {
                continue;
            }
            let weight = exp - f;
            if n + 1 == slot {
                add(weight, &lin.assemble(&w, true));
                continue;
            }
            while r_len < n {
                r = row_times(&r, &twirled);
                r_len += 1;
            }
            add(weight, &lin.assemble(&r, false));
        }
        Ok(grad)
    }
}
/// Component of `direction` tangent to the set of joint nodes built from two
/// unitary factors at `(λ, λ)`: the least-squares fit by
/// `joint(λ·X, λ) + joint(λ, Y·λ)` over anti-Hermitian `X`, `Y`.
pub fn tangent_component(lambda: &ComplexMatrix, direction: &ComplexMatrix, de: usize, ds: usize) -> Result<ComplexMatrix> {
    let n = de * ds;
    let dim = n * ds;
    if lambda.shape() != (n, n) || direction.shape() != (dim, dim) {
        return Err(Error::Shape { context: "tangent_component", expected: (dim, dim), found: direction.shape() });
    }
    let mut columns: Vec<ComplexMatrix> = Vec::with_capacity(2 * n * n);
    for side in 0..2 {
        for k in 0..n * n {
            let gen = anti_hermitian_basis(n, k);
            let col = if side == 0 {
                joint_node(&(lambda * &gen), lambda, de, ds)?
            } else {
                joint_node(lambda, &(&gen * lambda), de, ds)?
            };
            columns.push(col);
        }
    }
    let rows = 2 * dim * dim;
    let mut basis = alloc::vec![0.0; rows * columns.len()];
    for (j, col) in columns.iter().enumerate() {
        for (k, z) in col.as_slice().iter().enumerate() {
            basis[(2 * k) * columns.len() + j] = z.re;
            basis[(2 * k + 1) * columns.len() + j] = z.im;
        }
    }
    let target: Vec<f64> = direction.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
    let a = ComplexMatrix::from_real(rows, columns.len(), &basis)?;
    let f = svd(&a)?;
    let cutoff = f.s.first().copied().unwrap_or(0.0) * 1e-10;
    let mut fitted = alloc::vec![0.0; rows];
    for k in 0..f.s.len() {
        if f.s[k] <= cutoff {
            continue;
        }
        let coef: f64 = (0..rows).map(|r| f.u[(r, k)].re * target[r]).sum();
        for (r, v) in fitted.iter_mut().enumerate() {
            *v += coef * f.u[(r, k)].re;
        }
    }
    let data = fitted.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
    ComplexMatrix::from_vec(dim, dim, data)
}

/// The `k`-th element of a real basis of `n × n` anti-Hermitian matrices.
fn anti_hermitian_basis(n: usize, k: usize) -> ComplexMatrix {
    let (r, c) = (k / n, k % n);
    let mut g = ComplexMatrix::zeros(n, n);
    match r.cmp(&c) {
        core::cmp::Ordering::Equal => g[(r, r)] = C64::new(0.0, 1.0),
        core::cmp::Ordering::Less => {
            g[(r, c)] = C64::new(1.0, 0.0);
            g[(c, r)] = C64::new(-1.0, 0.0);
        }
        core::cmp::Ordering::Greater => {
            g[(r, c)] = C64::new(0.0, 1.0);
            g[(c, r)] = C64::new(0.0, 1.0);
        }
    }
    g
}

/// Principal square root of a unitary with no eigenvalue at `−1`: the
/// unitary polar factor of `I + w`.
pub fn unitary_sqrt(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let shifted = &ComplexMatrix::identity(w.rows()) + w;
    project_to_unitary(&shifted)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestIterate {
    pub lambda: ComplexMatrix,
    pub cost: f64,
    pub iteration: usize,
}
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub lambda: UnitaryGate,
    pub optimizer: OptimizerState,
    pub iteration: usize,
    pub cost_trace: Vec<f64>,
    pub l1_trace: Vec<f64>,
    /// `‖λ†λ − I‖_F` at every recorded iteration.
    pub unitarity_trace: Vec<f64>,
    pub best: BestIterate,
}
impl LearnerState {
    /// State at `λ = I`.
    pub fn identity(problem: &LearningProblem, cfg: &LearnerConfig) -> Result<Self> {
        Self::from_lambda(problem, cfg, ComplexMatrix::identity(problem.d_e * problem.d_s()))
    }

    pub fn from_lambda(problem: &LearningProblem, cfg: &LearnerConfig, lambda: ComplexMatrix) -> Result<Self> {
        let defect = lambda.unitarity_defect();
        let gate = UnitaryGate::with_tolerance(lambda, cfg.unitarity_tolerance)?;
        let cost = problem.cost(gate.matrix())?;
        if !cost.is_finite() {
            return Err(Error::Divergence { iteration: 0 });
        }
        let l1 = problem.l1_residual(gate.matrix())?;
        let dim = problem.d_e * problem.d_s() * problem.d_s();
        Ok(Self {
            best: BestIterate { lambda: gate.matrix().clone(), cost, iteration: 0 },
            optimizer: OptimizerState::new(&cfg.optimizer, dim * dim),
            lambda: gate,
            iteration: 0,
            l1_trace: alloc::vec![l1],
            cost_trace: alloc::vec![cost],
            unitarity_trace: alloc::vec![defect],
        })
    }

    /// Multiplies the node by `exp(−i·size·H)` for a seeded random Hermitian
    /// `H` of unit Frobenius norm. The identity is a stationary point of every
    /// survival probability, so training needs this to get started.
    pub fn perturb(&mut self, size: f64, seed: u64, tol: f64) -> Result<()> {
        if size == 0.0 {
            return Ok(());
        }
        let n = self.lambda.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_matrix(&mut rng, n, n);
        let h = &g + &g.adjoint();
        let h = h.scale_real(1.0 / h.frobenius_norm());
        let kick = unitary_exp(&h, size)?;
        self.lambda = UnitaryGate::with_tolerance(&kick * self.lambda.matrix(), tol)?;
        Ok(())
    }
}

/// One joint-node update at the scheduled slot, followed by replacing the
/// shared node everywhere.
pub fn sweep_iteration(state: &mut LearnerState, problem: &LearningProblem, cfg: &LearnerConfig) -> Result<()> {
    let (de, ds) = (problem.d_e, problem.d_s());
    let k = state.iteration + 1;
    let slot = cfg.sweep.slot(k, problem.max_length());
    let lam = state.lambda.matrix();
    let joint = joint_node(lam, lam, de, ds)?;
    let mut direction = problem.gradient_joint(lam, slot)?;
    if cfg.tangent_projection {
        direction = tangent_component(lam, &direction, de, ds)?;
    }
    let update = optimizer_step(&mut state.optimizer, &direction, &cfg.optimizer)?;
    let moved = &joint + &update;
    if !moved.is_finite() {
        return Err(Error::Divergence { iteration: k });
    }
    let split = split_truncate(&moved, de, ds)?;
    let mut next = project_pair(&split.upper, &split.lower)?;
    if cfg.node_update == NodeUpdate::PairRoot {
        next = unitary_sqrt(&next)?;
    }
    let defect = next.unitarity_defect();
    if !(defect <= cfg.unitarity_tolerance) {
        return Err(Error::Contract { what: "updated node lost unitarity", defect });
    }
    let cost = problem.cost(&next)?;
    if !cost.is_finite() {
        return Err(Error::Divergence { iteration: k });
    }
    let l1 = problem.l1_residual(&next)?;
    state.lambda = UnitaryGate::with_tolerance(next, cfg.unitarity_tolerance)?;
    state.iteration = k;
    state.cost_trace.push(cost);
    state.l1_trace.push(l1);
    state.unitarity_trace.push(defect);
    if cost < state.best.cost {
        state.best = BestIterate { lambda: state.lambda.matrix().clone(), cost, iteration: k };
    }
    Ok(())
}
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingResult {
    pub lambda: ComplexMatrix,
    /// Model curve at the data lengths, from the returned node.
    pub predicted: AsfCurve,
    pub cost_trace: Vec<f64>,
    pub l1_trace: Vec<f64>,
    pub unitarity_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub best_iteration: usize,
    /// `σ_T / δ` plus the rounding allowance.
    pub threshold: f64,
}
/// Sweeps until the ℓ₁ residual reaches `σ_T/δ` or the iteration budget runs
/// out. Returns the first converged iterate, otherwise the lowest-cost one.
pub fn train(problem: &LearningProblem, cfg: &LearnerConfig) -> Result<TrainingResult> {
    cfg.validate()?;
    if cfg.d_e != problem.d_e {
        return Err(Error::Config("learner and problem disagree on the environment dimension"));
    }
    if let SweepOrder::Fixed(i) = cfg.sweep {
        if i > problem.max_length() + 1 {
            return Err(Error::OutOfRange { name: "joint slot", value: i, min: 1, max: problem.max_length() + 1 });
        }
    }
    let threshold = problem.total_stderr() / cfg.convergence_divisor + L1_ROUNDING_FLOOR * problem.data.len() as f64;
    let mut state = LearnerState::identity(problem, cfg)?;
    let mut converged = state.l1_trace[0] <= threshold;
    if !converged {
        state.perturb(cfg.init_jitter, cfg.seed, cfg.unitarity_tolerance)?;
    }
    while !converged && state.iteration < cfg.max_iterations {
        sweep_iteration(&mut state, problem, cfg)?;
        converged = *state.l1_trace.last().unwrap() <= threshold;
    }
    let (lambda, best_iteration) = if converged {
        (state.lambda.matrix().clone(), state.iteration)
    } else {
        (state.best.lambda.clone(), state.best.iteration)
    };
    let means = problem.predict(&lambda)?;
    let predicted = AsfCurve {
        lengths: problem.data.lengths.clone(),
        stderrs: alloc::vec![0.0; means.len()],
        means,
        n_samples: problem.data.n_samples,
    };
    Ok(TrainingResult {
        lambda,
        predicted,
        cost_trace: state.cost_trace,
        l1_trace: state.l1_trace,
        unitarity_trace: state.unitarity_trace,
        converged,
        iterations: state.iteration,
        best_iteration,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_exp;
    use crate::process::{contract_asf_dense_with_joint, ControlTensor, NoiseMpoSpec};
    use crate::testutil::*;

    fn curve(means: Vec<f64>, stderr: f64) -> AsfCurve {
        let n = means.len();
        AsfCurve { lengths: (1..=n).collect(), stderrs: alloc::vec![stderr; n], means, n_samples: 100 }
    }

    fn problem(means: Vec<f64>, stderr: f64) -> LearningProblem {
        LearningProblem::new(curve(means, stderr), DensityMatrix::basis(2, 0), PovmElement::projector(2, 0), 2).unwrap()
    }

    fn near_identity(seed: u64, size: f64) -> ComplexMatrix {
        let mut r = rng(seed);
        let g = random_matrix(&mut r, 4, 4);
        let h = &g + &g.adjoint();
        unitary_exp(&h, size).unwrap()
    }

    #[test]
    fn cost_examples() {
        let p = problem(alloc::vec![0.9; 10], 0.01);
        let id = ComplexMatrix::identity(4);
        assert!((p.cost(&id).unwrap() - 0.05).abs() < 1e-14);
        assert!((p.l1_residual(&id).unwrap() - 1.0).abs() < 1e-12);

        let lam = haar_unitary(&mut rng(1), 4);
        let exact = problem(alloc::vec![0.5; 6], 0.0);
        let pred = exact.predict(&lam).unwrap();
        let fitted = problem(pred.clone(), 0.0);
        assert!(fitted.cost(&lam).unwrap() < 1e-28);

        let mut r = rng(2);
        let data: Vec<f64> = (0..6).map(|_| rand::Rng::gen::<f64>(&mut r)).collect();
        let p = problem(data.clone(), 0.0);
        let mut want = 0.0;
        for k in 0..6 {
            want += (pred[k] - data[k]) * (pred[k] - data[k]);
        }
        assert!((p.cost(&lam).unwrap() - want / 2.0).abs() < 1e-14);
    }

    #[test]
    fn prediction_matches_dense_contraction() {
        let lam = UnitaryGate::new(haar_unitary(&mut rng(3), 4)).unwrap();
        let p = problem(alloc::vec![0.5; 3], 0.0);
        let pred = p.predict(lam.matrix()).unwrap();
        let ctl = ControlTensor::CliffordAverage { rho_s: p.rho_s.clone(), povm: p.povm.clone() };
        for n in 1..=3 {
            let spec = NoiseMpoSpec::shared(&lam, &DensityMatrix::basis(2, 0), 2, n).unwrap();
            let dense = contract_asf_dense_with_joint(&spec, &ctl, None).unwrap();
            assert!((dense - pred[n - 1]).abs() < 1e-12);
        }
    }

    /// `½ Σ (F_n(L) − F_n^exp)²` with the ket pair at `(i, i−1)` replaced by `L`,
    /// by dense contraction.
    fn dense_cost(p: &LearningProblem, lam: &UnitaryGate, slot: usize, l: &ComplexMatrix) -> f64 {
        let ctl = ControlTensor::CliffordAverage { rho_s: p.rho_s.clone(), povm: p.povm.clone() };
        let mut c = 0.0;
        for (&n, &e) in p.data.lengths.iter().zip(&p.data.means) {
            let spec = NoiseMpoSpec::shared(lam, &DensityMatrix::basis(2, 0), 2, n).unwrap();
            let joint = if slot <= n + 1 { Some((slot, l)) } else { None };
            let f = contract_asf_dense_with_joint(&spec, &ctl, joint).unwrap();
            c += 0.5 * (f - e) * (f - e);
        }
        c
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng(7);
        for m in 1..=3 {
            let lam = UnitaryGate::new(haar_unitary(&mut r, 4)).unwrap();
            let data: Vec<f64> = (0..m).map(|_| rand::Rng::gen::<f64>(&mut r)).collect();
            let p = problem(data, 0.01);
            for slot in 1..=m + 1 {
                let g = p.gradient_joint(lam.matrix(), slot).unwrap();
                let l0 = joint_node(lam.matrix(), lam.matrix(), 2, 2).unwrap();
                let h = 1e-5;
                let mut err = 0.0;
                let mut norm = 0.0;
                for k in 0..64 {
                    for (part, unit) in [(0, C64::new(1.0, 0.0)), (1, C64::new(0.0, 1.0))] {
                        let mut plus = l0.clone();
                        let mut minus = l0.clone();
                        plus.as_mut_slice()[k] += unit * h;
                        minus.as_mut_slice()[k] -= unit * h;
                        let fd = (dense_cost(&p, &lam, slot, &plus) - dense_cost(&p, &lam, slot, &minus)) / (2.0 * h);
                        let z = g.as_slice()[k];
                        let analytic = -if part == 0 { z.re } else { z.im };
                        err += (fd - analytic).powi(2);
                        norm += analytic * analytic;
                    }
                }
                assert!(err.sqrt() <= 1e-6 * norm.sqrt().max(1e-12), "m={m} slot={slot} err={}", err.sqrt());
            }
        }
    }

    #[test]
    fn gradient_vanishes_on_exact_data() {
        let lam = near_identity(4, 0.1);
        let pred = problem(alloc::vec![0.5; 5], 0.0).predict(&lam).unwrap();
        let p = problem(pred, 0.0);
        for slot in 1..=6 {
            assert!(p.gradient_joint(&lam, slot).unwrap().max_abs() < 1e-12);
        }
        assert!(matches!(p.gradient_joint(&lam, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(p.gradient_joint(&lam, 7), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn subset_lengths() {
        let lam = near_identity(5, 0.2);
        let full = problem(alloc::vec![0.5; 8], 0.0).predict(&lam).unwrap();
        let data = AsfCurve { lengths: alloc::vec![2, 5, 8], means: alloc::vec![0.7, 0.6, 0.55], stderrs: alloc::vec![0.0; 3], n_samples: 10 };
        let p = LearningProblem::new(data, DensityMatrix::basis(2, 0), PovmElement::projector(2, 0), 2).unwrap();
        let pred = p.predict(&lam).unwrap();
        assert_eq!(pred, alloc::vec![full[1], full[4], full[7]]);
        // lengths shorter than slot − 1 do not contribute
        let g = p.gradient_joint(&lam, 9).unwrap();
        let only_last = LearningProblem::new(
            AsfCurve { lengths: alloc::vec![8], means: alloc::vec![0.55], stderrs: alloc::vec![0.0], n_samples: 10 },
            DensityMatrix::basis(2, 0),
            PovmElement::projector(2, 0),
            2,
        )
        .unwrap();
        assert!(g.distance(&only_last.gradient_joint(&lam, 9).unwrap()) < 1e-12);
        let bad = AsfCurve { lengths: alloc::vec![3, 2], means: alloc::vec![0.5; 2], stderrs: alloc::vec![0.0; 2], n_samples: 1 };
        assert!(LearningProblem::new(bad, DensityMatrix::basis(2, 0), PovmElement::projector(2, 0), 2).is_err());
    }

    #[test]
    fn tangent_projection_properties() {
        let lam = haar_unitary(&mut rng(8), 4);
        let mut r = rng(9);
        let d = random_matrix(&mut r, 8, 8);
        let t = tangent_component(&lam, &d, 2, 2).unwrap();
        let tt = tangent_component(&lam, &t, 2, 2).unwrap();
        assert!(tt.distance(&t) < 1e-10);
        // residual is orthogonal to the tangent part
        let res = &d - &t;
        assert!(crate::process::star(&res, &t).re.abs() < 1e-10);
        // a genuine tangent vector is kept
        let x = &random_matrix(&mut r, 4, 4) - &random_matrix(&mut r, 4, 4).adjoint();
        let x = &x - &x.adjoint();
        let v = joint_node(&(&lam * &x), &lam, 2, 2).unwrap();
        assert!(tangent_component(&lam, &v, 2, 2).unwrap().distance(&v) < 1e-10);
        // scaling the joint node is normal
        let l = joint_node(&lam, &lam, 2, 2).unwrap();
        assert!(tangent_component(&lam, &l, 2, 2).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn identity_is_stationary() {
        let p = problem(alloc::vec![0.9; 5], 0.01);
        let id = ComplexMatrix::identity(4);
        for slot in 1..=6 {
            let g = p.gradient_joint(&id, slot).unwrap();
            assert!(g.frobenius_norm() > 0.05, "slot {slot}: {}", g.frobenius_norm());
            assert!(tangent_component(&id, &g, 2, 2).unwrap().frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn square_root() {
        let lam = near_identity(10, 0.2);
        let sq = &lam * &lam;
        assert!(unitary_sqrt(&sq).unwrap().distance(&lam) < 1e-12);
        let mut minus = ComplexMatrix::identity(2);
        minus[(1, 1)] = C64::new(-1.0, 0.0);
        assert!(matches!(unitary_sqrt(&minus), Err(Error::Singular { .. })));
    }

    #[test]
    fn sweep_on_exact_data_keeps_the_node() {
        let lam = near_identity(11, 0.1);
        let pred = problem(alloc::vec![0.5; 5], 0.0).predict(&lam).unwrap();
        let p = problem(pred, 0.0);
        for update in [NodeUpdate::PairRoot, NodeUpdate::PairProduct] {
            let mut cfg = LearnerConfig::new(OptimizerConfig::Adagrad { rate: 0.1 });
            cfg.node_update = update;
            let mut st = LearnerState::from_lambda(&p, &cfg, lam.clone()).unwrap();
            sweep_iteration(&mut st, &p, &cfg).unwrap();
            let want = if update == NodeUpdate::PairRoot { lam.clone() } else { &lam * &lam };
            assert!(st.lambda.matrix().distance(&want) < 1e-10, "{update:?}");
            assert_eq!(st.iteration, 1);
            assert_eq!(st.cost_trace.len(), 2);
        }
        let cfg = LearnerConfig::new(OptimizerConfig::Adagrad { rate: 0.1 });
        let mut st = LearnerState::from_lambda(&p, &cfg, lam.clone()).unwrap();
        for _ in 0..3 {
            sweep_iteration(&mut st, &p, &cfg).unwrap();
        }
        assert!(st.cost_trace.iter().all(|&c| c < 1e-16), "{:?}", st.cost_trace);
    }

    #[test]
    fn identity_data_converges_immediately() {
        let p = problem(alloc::vec![1.0; 6], 0.0);
        let r = train(&p, &LearnerConfig::new(OptimizerConfig::adam(1e-3, 0.9, 0.99))).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.lambda, ComplexMatrix::identity(4));
        assert_eq!(r.predicted.means, alloc::vec![1.0; 6]);
    }

    #[test]
    fn training_reduces_cost_and_stays_unitary() {
        let target = near_identity(12, 0.15);
        let pred = problem(alloc::vec![0.5; 8], 0.0).predict(&target).unwrap();
        let p = problem(pred, 1e-4);
        let mut cfg = LearnerConfig::new(OptimizerConfig::adam(1e-2, 0.9, 0.99));
        cfg.max_iterations = 60;
        let r = train(&p, &cfg).unwrap();
        let best = r.cost_trace.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(best < 0.1 * r.cost_trace[0], "{:?}", &r.cost_trace[..5]);
        assert!(r.unitarity_trace.iter().all(|&d| d <= 1e-9));
        assert!(r.lambda.unitarity_defect() <= 1e-9);
        if !r.converged {
            assert!((p.cost(&r.lambda).unwrap() - best).abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let p = problem(alloc::vec![0.6; 4], 0.0);
        let mut cfg = LearnerConfig::new(OptimizerConfig::Adagrad { rate: 1e300 });
        cfg.tangent_projection = false;
        cfg.max_iterations = 3;
        let e = train(&p, &cfg).unwrap_err();
        assert!(matches!(e, Error::Divergence { iteration: 1 } | Error::NonFinite { .. }), "{e:?}");
    }

    #[test]
    fn sweep_orders() {
        let m = 3;
        let asc: Vec<usize> = (1..=9).map(|k| SweepOrder::Ascending.slot(k, m)).collect();
        assert_eq!(asc, alloc::vec![1, 2, 3, 4, 1, 2, 3, 4, 1]);
        let desc: Vec<usize> = (1..=5).map(|k| SweepOrder::Descending.slot(k, m)).collect();
        assert_eq!(desc, alloc::vec![4, 3, 2, 1, 4]);
        assert_eq!(SweepOrder::Fixed(2).slot(7, m), 2);
    }

    #[test]
    fn config_validation() {
        let ok = LearnerConfig::new(OptimizerConfig::Adagrad { rate: 1e-5 });
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.convergence_divisor = 0.5;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.sweep = SweepOrder::Fixed(0);
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.init_jitter = f64::NAN;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.d_e = 3;
        assert!(train(&problem(alloc::vec![0.9; 4], 0.0), &c).is_err());
    }
}
