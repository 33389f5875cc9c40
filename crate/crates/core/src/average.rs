//! Exact Clifford-averaged survival probabilities through environment
//! superoperators.
//!
//! Averaging a sequence over a unitary 2-design on the system reduces every
//! noise step to a pair of maps on the environment alone: `$` (the full
//! system-index contraction) and `£` (the map seen by a maximally mixed
//! system). Their powers give the average sequence fidelity in time linear in
//! the sequence length.
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::linalg::{kron, partial_trace_first, partial_trace_second, ComplexMatrix};
use crate::noise::NoiseModel;
use crate::quantum::{DensityMatrix, GateSet, KrausChannel, PovmElement};
use crate::C64;
/// Linear map on `dim × dim` operators, stored as a `dim² × dim²` matrix acting
/// on row-major vectorizations: `vec(A X B†) = (A ⊗ B̄) vec(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}
/// A superoperator acting on the environment only.
pub type EnvSuperoperator = Superoperator;
impl Superoperator {
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.shape() != (n, n) {
            return Err(Error::Shape { context: "superoperator", expected: (n, n), found: matrix.shape() });
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite { context: "superoperator" });
        }
        Ok(Self { dim, matrix })
    }
    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: ComplexMatrix::identity(dim * dim) }
    }
    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: ComplexMatrix::zeros(dim * dim, dim * dim) }
    }
    /// `X ↦ A X B†`.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        Self { dim: a.rows(), matrix: kron(a, &b.conj()) }
    }
    pub fn from_kraus(ch: &KrausChannel) -> Self {
        let mut acc = Self::zero(ch.dim());
        for k in ch.operators() {
            acc.matrix = &acc.matrix + &kron(k, &k.conj());
        }
        acc
    }
    /// Builds the map column by column from its action on `|a⟩⟨b|`.
    pub fn from_action(dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let n = dim * dim;
        let mut matrix = ComplexMatrix::zeros(n, n);
        for a in 0..dim {
            for b in 0..dim {
                let mut basis = ComplexMatrix::zeros(dim, dim);
                basis[(a, b)] = C64::new(1.0, 0.0);
                let out = f(&basis);
                let col = a * dim + b;
                for (row, z) in out.as_slice().iter().enumerate() {
                    matrix[(row, col)] = *z;
                }
            }
        }
        Self { dim, matrix }
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim;
        let v = self.matrix.as_slice();
        let src = x.as_slice();
        let n = d * d;
        let mut out = alloc::vec![C64::new(0.0, 0.0); n];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &v[r * n..(r + 1) * n];
            *o = row.iter().zip(src).map(|(a, b)| a * b).sum();
        }
        ComplexMatrix::from_vec(d, d, out).expect("square operator")
    }
    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix * &inner.matrix }
    }
    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix + &other.matrix }
    }
    pub fn scale(&self, k: f64) -> Self {
        Self { dim: self.dim, matrix: self.matrix.scale_real(k) }
    }
    /// `(self ⊗ id)` on `dim·ds`-dimensional operators, the second factor untouched.
    pub fn extend_by_identity(&self, ds: usize) -> Self {
        let de = self.dim;
        Self::from_action(de * ds, |x| apply_on_env_blocks(self, x, de, ds))
    }
}
/// `(D ⊗ id_S)(X)` for `X` on `E ⊗ S`.
pub fn apply_on_env_blocks(d: &Superoperator, x: &ComplexMatrix, de: usize, ds: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(de * ds, de * ds);
    for s in 0..ds {
        for sp in 0..ds {
            let block = ComplexMatrix::from_fn(de, de, |e, ep| x[(e * ds + s, ep * ds + sp)]);
            let mapped = d.apply(&block);
            for e in 0..de {
                for ep in 0..de {
                    out[(e * ds + s, ep * ds + sp)] = mapped[(e, ep)];
                }
            }
        }
    }
    out
}
fn check_joint(l: &Superoperator, de: usize, ds: usize) -> Result<()> {
    if l.dim() != de * ds {
        return Err(Error::Shape { context: "map on E⊗S", expected: (de * ds, de * ds), found: (l.dim(), l.dim()) });
    }
    Ok(())
}
/// `$(ε) = Σ_{s,s'} ⟨s| L(ε ⊗ |s⟩⟨s'|) |s'⟩`.
pub fn dollar_map(l: &Superoperator, de: usize, ds: usize) -> Result<EnvSuperoperator> {
    check_joint(l, de, ds)?;
    Ok(Superoperator::from_action(de, |eps| {
        let mut out = ComplexMatrix::zeros(de, de);
        for s in 0..ds {
            for sp in 0..ds {
                let mut unit = ComplexMatrix::zeros(ds, ds);
                unit[(s, sp)] = C64::new(1.0, 0.0);
                let y = l.apply(&kron(eps, &unit));
                for e in 0..de {
                    for ep in 0..de {
                        out[(e, ep)] += y[(e * ds + s, ep * ds + sp)];
                    }
                }
            }
        }
        out
    }))
}
/// `£(ε) = tr_S L(ε ⊗ I/d_S)`.
pub fn pounds_map(l: &Superoperator, de: usize, ds: usize) -> Result<EnvSuperoperator> {
    check_joint(l, de, ds)?;
    let mixed = ComplexMatrix::identity(ds).scale_real(1.0 / ds as f64);
    Ok(Superoperator::from_action(de, |eps| partial_trace_second(&l.apply(&kron(eps, &mixed)), de, ds)))
}
/// One noise step averaged over a unitary 2-design on the system:
/// `X ↦ [D ⊗ id](X − X_E ⊗ I/d_S) + £(X_E) ⊗ I/d_S` with `D = ($ − £)/(d_S² − 1)`
/// and `X_E = tr_S X`. Any linear map is accepted.
pub fn twirl(l: &Superoperator, de: usize, ds: usize) -> Result<Superoperator> {
    let dollar = dollar_map(l, de, ds)?;
    let pounds = pounds_map(l, de, ds)?;
    Ok(twirl_from_maps(&dollar, &pounds, de, ds))
}
pub fn twirl_from_maps(dollar: &EnvSuperoperator, pounds: &EnvSuperoperator, de: usize, ds: usize) -> Superoperator {
    let d = decay_map(dollar, pounds, ds);
    let mixed = ComplexMatrix::identity(ds).scale_real(1.0 / ds as f64);
    Superoperator::from_action(de * ds, |x| {
        let xe = partial_trace_second(x, de, ds);
        let centered = x - &kron(&xe, &mixed);
        &apply_on_env_blocks(&d, &centered, de, ds) + &kron(&pounds.apply(&xe), &mixed)
    })
}
/// `($ − £)/(d_S² − 1)`.
pub fn decay_map(dollar: &EnvSuperoperator, pounds: &EnvSuperoperator, ds: usize) -> EnvSuperoperator {
    let k = 1.0 / ((ds * ds) as f64 - 1.0);
    dollar.add(&pounds.scale(-1.0)).scale(k)
}
/// The environment-level description of a noise model under 2-design averaging.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedNoise {
    pub dollar: EnvSuperoperator,
    pub pounds: EnvSuperoperator,
    pub prep: Superoperator,
    pub final_map: Superoperator,
    pub rho_e: ComplexMatrix,
    pub d_e: usize,
    pub d_s: usize,
}
impl AveragedNoise {
    pub fn from_noise(noise: &NoiseModel) -> Result<Self> {
        let (de, ds) = (noise.d_e(), noise.d_s());
        let step = Superoperator::from_kraus(&noise.step_channel());
        Ok(Self {
            dollar: dollar_map(&step, de, ds)?,
            pounds: pounds_map(&step, de, ds)?,
            prep: Superoperator::from_kraus(&noise.prep_channel()),
            final_map: Superoperator::from_kraus(&noise.final_channel()),
            rho_e: noise.env_state(),
            d_e: de,
            d_s: ds,
        })
    }
    /// Average survival probabilities for `m = 1..=m_max` in one pass.
    pub fn curve(&self, rho_s: &DensityMatrix, povm: &PovmElement, m_max: usize) -> Result<Vec<f64>> {
        let (de, ds) = (self.d_e, self.d_s);
        if rho_s.dim() != ds || povm.dim() != ds {
            return Err(Error::Shape { context: "averaged survival", expected: (ds, ds), found: (rho_s.dim(), povm.dim()) });
        }
        if self.dollar.dim() != de || self.pounds.dim() != de || self.prep.dim() != de * ds || self.final_map.dim() != de * ds {
            return Err(Error::Config("averaged noise maps have inconsistent dimensions"));
        }
        let mixed = ComplexMatrix::identity(ds).scale_real(1.0 / ds as f64);
        let rho = self.prep.apply(&kron(&self.rho_e, rho_s.matrix()));
        let rho_env = partial_trace_second(&rho, de, ds);
        let decay = decay_map(&self.dollar, &self.pounds, ds);
        let mut centered = &rho - &kron(&rho_env, &mixed);
        let mut env = rho_env;
        let mut out = Vec::with_capacity(m_max);
        for _ in 0..m_max {
            centered = apply_on_env_blocks(&decay, &centered, de, ds);
            env = self.pounds.apply(&env);
            let total = &centered + &kron(&env, &mixed);
            let sys = partial_trace_first(&self.final_map.apply(&total), de, ds);
            let f = (povm.matrix() * &sys).trace().re;
            if !f.is_finite() {
                return Err(Error::NonFinite { context: "averaged survival probability" });
            }
            out.push(f);
        }
        Ok(out)
    }
    pub fn asf(&self, rho_s: &DensityMatrix, povm: &PovmElement, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::OutOfRange { name: "sequence length", value: 0, min: 1, max: usize::MAX });
        }
        Ok(self.curve(rho_s, povm, m)?[m - 1])
    }
}
/// Exact average over a unitary 2-design of the survival probability at length `m`.
pub fn exact_asf(noise: &NoiseModel, rho_s: &DensityMatrix, povm: &PovmElement, m: usize) -> Result<f64> {
    AveragedNoise::from_noise(noise)?.asf(rho_s, povm, m)
}
pub fn exact_curve(noise: &NoiseModel, rho_s: &DensityMatrix, povm: &PovmElement, m_max: usize) -> Result<Vec<f64>> {
    AveragedNoise::from_noise(noise)?.curve(rho_s, povm, m_max)
}
/// Same as [`exact_asf`] but refuses gate sets that are not unitary 2-designs.
pub fn exact_asf_for_gate_set(
    gs: &GateSet,
    noise: &NoiseModel,
    rho_s: &DensityMatrix,
    povm: &PovmElement,
    m: usize,
) -> Result<f64> {
    if !is_unitary_2_design(gs) {
        return Err(Error::Unsupported("closed-form averaging needs a unitary 2-design gate set"));
    }
    exact_asf(noise, rho_s, povm, m)
}
/// Frame potential test: `|G|⁻² Σ |tr(U†V)|⁴ = 2` exactly for 2-designs.
pub fn is_unitary_2_design(gs: &GateSet) -> bool {
    let g = gs.gates();
    let n = g.len() as f64;
    let mut acc = 0.0;
    for u in g {
        let ud = u.matrix().adjoint();
        for v in g {
            acc += (&ud * v.matrix()).trace().norm_sqr().powi(2);
        }
    }
    (acc / (n * n) - 2.0).abs() < 1e-9 && gs.dim() >= 2
}
#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{amplitude_damping, phase_flip, spin_unitary};
    use crate::quantum::{enumerate_clifford_1q, UnitaryGate};
    use crate::rb::run_sequence;
    use crate::testutil::*;
    fn zero() -> (DensityMatrix, PovmElement) {
        (DensityMatrix::basis(2, 0), PovmElement::projector(2, 0))
    }
    #[test]
    fn superoperator_vectorization() {
        let mut r = rng(1);
        let a = random_matrix(&mut r, 3, 3);
        let b = random_matrix(&mut r, 3, 3);
        let x = random_matrix(&mut r, 3, 3);
        let s = Superoperator::sandwich(&a, &b);
        assert!(s.apply(&x).distance(&(&(&a * &x) * &b.adjoint())) < 1e-12);
        let t = Superoperator::from_action(3, |y| &(&a * y) * &b.adjoint());
        assert!(t.matrix().distance(s.matrix()) < 1e-12);
    }
    #[test]
    fn dollar_of_identity_and_env_unitary() {
        let mut r = rng(2);
        let d = dollar_map(&Superoperator::identity(4), 2, 2).unwrap();
        assert!(d.matrix().distance(&ComplexMatrix::identity(4).scale_real(4.0)) < 1e-14);
        let p = pounds_map(&Superoperator::identity(4), 2, 2).unwrap();
        assert!(p.matrix().distance(&ComplexMatrix::identity(4)) < 1e-14);
        let u = haar_unitary(&mut r, 2);
        let ue = kron(&u, &ComplexMatrix::identity(2));
        let d = dollar_map(&Superoperator::sandwich(&ue, &ue), 2, 2).unwrap();
        let want = Superoperator::sandwich(&u, &u).scale(4.0);
        assert!(d.matrix().distance(want.matrix()) < 1e-12);
    }
    #[test]
    fn maps_match_definition_loop() {
        let mut r = rng(3);
        let u = haar_unitary(&mut r, 4);
        let l = Superoperator::sandwich(&u, &u);
        let d = dollar_map(&l, 2, 2).unwrap();
        let p = pounds_map(&l, 2, 2).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let mut want_d = ComplexMatrix::zeros(2, 2);
                let mut want_p = ComplexMatrix::zeros(2, 2);
                for e in 0..2 {
                    for ep in 0..2 {
                        for s in 0..2 {
                            for sp in 0..2 {
                                // <e s| u (|a s><b s'|) u† |e' s'>
                                let z = u[(e * 2 + s, a * 2 + s)] * u[(ep * 2 + sp, b * 2 + sp)].conj();
                                want_d[(e, ep)] += z;
                                for t in 0..2 {
                                    if sp == 0 {
                                        let w = u[(e * 2 + t, a * 2 + s)] * u[(ep * 2 + t, b * 2 + s)].conj() * 0.5;
                                        want_p[(e, ep)] += w;
                                    }
                                }
                            }
                        }
                    }
                }
                let mut basis = ComplexMatrix::zeros(2, 2);
                basis[(a, b)] = C64::new(1.0, 0.0);
                assert!(d.apply(&basis).distance(&want_d) < 1e-12);
                assert!(p.apply(&basis).distance(&want_p) < 1e-12);
            }
        }
    }
    #[test]
    fn pounds_preserves_trace() {
        let mut r = rng(4);
        let spin = spin_unitary(1.2, 1.17, -1.15, 0.05).unwrap();
        let l = Superoperator::from_kraus(&spin.step_channel());
        let p = pounds_map(&l, 2, 2).unwrap();
        let u = haar_unitary(&mut r, 4);
        let p2 = pounds_map(&Superoperator::sandwich(&u, &u), 2, 2).unwrap();
        for _ in 0..5 {
            let eps = random_matrix(&mut r, 2, 2);
            assert!((p.apply(&eps).trace() - eps.trace()).norm() < 1e-12);
            assert!((p2.apply(&eps).trace() - eps.trace()).norm() < 1e-12);
        }
        // dephasing on S extended by identity on E looks like nothing to E
        let pf = phase_flip(0.3).unwrap().step_channel();
        let ops = pf.operators().iter().map(|k| kron(&ComplexMatrix::identity(2), k)).collect();
        let ext = KrausChannel::new(ops).unwrap();
        let p = pounds_map(&Superoperator::from_kraus(&ext), 2, 2).unwrap();
        assert!(p.matrix().distance(&ComplexMatrix::identity(4)) < 1e-14);
    }
    #[test]
    fn twirl_matches_group_average() {
        let mut r = rng(5);
        let gs = enumerate_clifford_1q();
        let a = random_matrix(&mut r, 4, 4);
        let b = random_matrix(&mut r, 4, 4);
        let l = Superoperator::sandwich(&a, &b);
        let tw = twirl(&l, 2, 2).unwrap();
        let x = random_matrix(&mut r, 4, 4);
        let mut want = ComplexMatrix::zeros(4, 4);
        for g in gs.gates() {
            let big = kron(&ComplexMatrix::identity(2), g.matrix());
            let inner = big.conjugate(&x).unwrap();
            let mid = l.apply(&inner);
            want = &want + &big.adjoint().conjugate(&mid).unwrap();
        }
        want = want.scale_real(1.0 / 24.0);
        assert!(tw.apply(&x).distance(&want) < 1e-12);
    }
    #[test]
    fn identity_noise_is_perfect() {
        let (rho, m) = zero();
        let c = exact_curve(&NoiseModel::identity(2), &rho, &m, 10).unwrap();
        assert!(c.iter().all(|f| (f - 1.0).abs() < 1e-12));
    }
    fn enumerate_average(noise: &NoiseModel, m: usize, rho: &DensityMatrix, povm: &PovmElement) -> f64 {
        let gs = enumerate_clifford_1q();
        let g = gs.gates();
        let mut idx = alloc::vec![0usize; m];
        let mut total = 0.0;
        let mut count = 0usize;
        loop {
            let seq: Vec<UnitaryGate> = idx.iter().map(|&i| g[i].clone()).collect();
            total += run_sequence(noise, &seq, rho, povm).unwrap();
            count += 1;
            let mut k = 0;
            loop {
                if k == m {
                    return total / count as f64;
                }
                idx[k] += 1;
                if idx[k] < g.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    #[test]
    fn matches_full_enumeration() {
        let mut r = rng(6);
        let (rho, povm) = zero();
        let u = UnitaryGate::new(haar_unitary(&mut r, 4)).unwrap();
        let joint = NoiseModel::joint_unitary(u, DensityMatrix::basis(2, 0)).unwrap();
        let random_rho = DensityMatrix::new(random_density(&mut r, 2)).unwrap();
        let prep = KrausChannel::unitary(&UnitaryGate::new(haar_unitary(&mut r, 4)).unwrap());
        let with_prep = joint.clone().with_prep(prep).unwrap();
        let models = [
            phase_flip(0.06).unwrap(),
            amplitude_damping(0.2).unwrap(),
            spin_unitary(1.2, 1.17, -1.15, 0.05).unwrap(),
            joint,
            with_prep,
        ];
        for noise in &models {
            for m in [1, 2] {
                let brute = enumerate_average(noise, m, &random_rho, &povm);
                let exact = exact_asf(noise, &random_rho, &povm, m).unwrap();
                assert!((brute - exact).abs() < 1e-10, "m={m}: {brute} vs {exact}");
            }
            let brute = enumerate_average(noise, 1, &rho, &povm);
            assert!((brute - exact_asf(noise, &rho, &povm, 1).unwrap()).abs() < 1e-10);
        }
    }
    #[test]
    fn markovian_decay_is_exponential() {
        let (rho, povm) = zero();
        let p = 0.06;
        let curve = exact_curve(&phase_flip(p).unwrap(), &rho, &povm, 20).unwrap();
        // unital single-qubit channel: F_m = 1/2 + 1/2 f_final·q^m with q = (Σ|tr K|² − 1)/3
        let q = (4.0 * (1.0 - p) - 1.0) / 3.0;
        for (k, f) in curve.iter().enumerate() {
            let m = k as i32 + 1;
            // final phase flip leaves the z-component alone
            let want = 0.5 + 0.5 * q.powi(m);
            assert!((f - want).abs() < 1e-12, "m={m}");
        }
    }
    #[test]
    fn two_design_detection() {
        let gs = enumerate_clifford_1q();
        assert!(is_unitary_2_design(&gs));
        let paulis = GateSet::new("paulis", gs.gates()[..1].to_vec()).unwrap();
        assert!(!is_unitary_2_design(&paulis));
        let (rho, m) = zero();
        let r = exact_asf_for_gate_set(&paulis, &NoiseModel::identity(2), &rho, &m, 1);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }
}
