//! Stage Hamiltonian and the master-equation superoperator.
//!
//! Density matrices are column-stacked: `vec(ρ)[i + d·j] = ρ[i, j]`, so that
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use ndarray::{linalg::kron, Array1, Array2};

use crate::error::{Error, Result};
use crate::quantum_core::{embed, fock_operators, FockOperators, Level, Operator, C64, I};
use crate::units::HBAR_MEV_PS;

/// Parameters of the single-stage system Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageHamiltonianSpec {
    /// Ground state coupled to the exciton by the laser.
    pub driven: Level,
    /// `ħΩ_μ` in meV. The drive enters as `(ħΩ_μ/2)(σ⁺_μ + σ⁻_μ)`.
    pub rabi_energy: f64,
    /// `ħΔ_μ` in meV, the exciton energy in the rotating frame.
    pub detuning_energy: f64,
    /// Exciton-mode coupling `D₁`, ps⁻¹.
    pub d1: f64,
    /// Effective-mode angular frequency, rad/ps.
    pub omega1: f64,
}

impl StageHamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        if self.driven == Level::Exciton {
            return Err(Error::param("driven", "the exciton cannot be a driven ground state"));
        }
        if !(self.rabi_energy >= 0.0) || !self.rabi_energy.is_finite() {
            return Err(Error::param(
                "rabi_energy",
                format!("must be nonnegative, got {}", self.rabi_energy),
            ));
        }
        if !self.detuning_energy.is_finite() || !self.d1.is_finite() {
            return Err(Error::param("detuning_energy", "must be finite"));
        }
        Ok(())
    }
}

/// Rates of the dissipative terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationSpec {
    /// Radiative decay rate into each ground state, ps⁻¹.
    pub gamma_r: f64,
    /// Friction coefficient, ps⁻¹.
    pub gamma_ph: f64,
    /// Thermal closure energy, meV.
    pub e_th: f64,
}

impl DissipationSpec {
    pub fn closed() -> Self {
        Self {
            gamma_r: 0.0,
            gamma_ph: 0.0,
            e_th: 0.0,
        }
    }

    /// Builds from `ħγ_R` and `ħγ_ph` given in meV.
    pub fn from_energies(hbar_gamma_r_mev: f64, hbar_gamma_ph_mev: f64, e_th: f64) -> Result<Self> {
        let d = Self {
            gamma_r: hbar_gamma_r_mev / HBAR_MEV_PS,
            gamma_ph: hbar_gamma_ph_mev / HBAR_MEV_PS,
            e_th,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_r", self.gamma_r), ("gamma_ph", self.gamma_ph), ("e_th", self.e_th)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Product-space operators shared by every stage at one truncation level.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    pub fock: FockOperators,
    /// `I₃ ⊗ Q₁`
    pub q: Operator,
    /// `I₃ ⊗ P₁`
    pub p: Operator,
    /// `I₃ ⊗ a†a`
    pub number: Operator,
    /// `I₃ ⊗ ½(P₁² + ω₁²Q₁²)`
    pub bath_h: Operator,
    /// `|x⟩⟨x| ⊗ I` for `x = ↑, ↓, X`.
    pub projectors: [Operator; 3],
    /// `|↑⟩⟨X| ⊗ I` and `|↓⟩⟨X| ⊗ I`.
    pub lowering: [Operator; 2],
}

impl SystemOperators {
    pub fn new(n_levels: usize, omega1: f64) -> Result<Self> {
        let fock = fock_operators(n_levels, omega1)?;
        let id3 = Operator::identity(3);
        let idb = Operator::identity(n_levels);
        let q = embed(&id3, &fock.q1)?;
        let p = embed(&id3, &fock.p1)?;
        let number = embed(&id3, &fock.number)?;
        let bath_h = embed(&id3, &fock.bath_hamiltonian())?;
        let projectors = [
            embed(&Level::Up.projector(), &idb)?,
            embed(&Level::Down.projector(), &idb)?,
            embed(&Level::Exciton.projector(), &idb)?,
        ];
        let x = Level::Exciton.index();
        let lowering = [
            embed(&Operator::ket_bra(3, Level::Up.index(), x), &idb)?,
            embed(&Operator::ket_bra(3, Level::Down.index(), x), &idb)?,
        ];
        Ok(Self {
            fock,
            q,
            p,
            number,
            bath_h,
            projectors,
            lowering,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.fock.n_levels()
    }

    pub fn dim(&self) -> usize {
        3 * self.n_levels()
    }

    pub fn omega1(&self) -> f64 {
        self.fock.omega1
    }

    pub fn projector(&self, level: Level) -> &Operator {
        &self.projectors[level.index()]
    }

    /// `σ⁻_μ = |μ⟩⟨X| ⊗ I`.
    pub fn sigma_minus(&self, level: Level) -> Result<&Operator> {
        match level {
            Level::Up => Ok(&self.lowering[0]),
            Level::Down => Ok(&self.lowering[1]),
            Level::Exciton => Err(Error::param("level", "no lowering operator onto the exciton")),
        }
    }
}

/// `(ħΩ/2)(σ⁺_μ + σ⁻_μ) + |X⟩⟨X|(ħΔ + ħD₁Q₁) + ½(P₁² + ω₁²Q₁²)` in meV.
pub fn build_hamiltonian(spec: &StageHamiltonianSpec, ops: &SystemOperators) -> Result<Operator> {
    spec.validate()?;
    if (spec.omega1 - ops.omega1()).abs() > 1e-12 * spec.omega1.abs().max(1.0) {
        return Err(Error::param(
            "omega1",
            format!("spec has {} rad/ps, operators were built at {}", spec.omega1, ops.omega1()),
        ));
    }
    let lower = ops.sigma_minus(spec.driven)?;
    let drive = (lower + &lower.dagger()).scale_re(0.5 * spec.rabi_energy);
    let proj_x = ops.projector(Level::Exciton);
    let dim = ops.dim();
    let shift = &Operator::identity(dim).scale_re(spec.detuning_energy)
        + &ops.q.scale_re(HBAR_MEV_PS * spec.d1);
    let exciton = proj_x.dot(&shift);
    Ok(&(&drive + &exciton) + &ops.bath_h)
}

/// A linear map on column-stacked `d × d` matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    hilbert_dim: usize,
    matrix: Array2<C64>,
}

impl Superoperator {
    pub fn new(hilbert_dim: usize, matrix: Array2<C64>) -> Result<Self> {
        let n = hilbert_dim * hilbert_dim;
        if matrix.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        Ok(Self { hilbert_dim, matrix })
    }

    pub fn zeros(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self {
            hilbert_dim,
            matrix: Array2::zeros((n, n)),
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Side length `d²` of the matrix.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// `−(i/ħ)(I ⊗ H − Hᵀ ⊗ I)`, the generator of `(1/iħ)[H, ρ]`.
    pub fn hamiltonian(h: &Operator) -> Self {
        let d = h.dim();
        let id = Array2::<C64>::eye(d);
        let mut m = kron(&id, h.matrix()) - kron(&h.matrix().t(), &id);
        m.mapv_inplace(|z| -I * z / HBAR_MEV_PS);
        Self {
            hilbert_dim: d,
            matrix: m,
        }
    }

    /// `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
    pub fn sandwich(a: &Operator, b: &Operator) -> Self {
        Self {
            hilbert_dim: a.dim(),
            matrix: kron(&b.matrix().t(), a.matrix()),
        }
    }

    pub fn scaled(mut self, s: C64) -> Self {
        self.matrix.mapv_inplace(|z| z * s);
        self
    }

    pub fn add_assign(&mut self, other: &Superoperator) -> Result<()> {
        if other.hilbert_dim != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                got: other.hilbert_dim,
            });
        }
        self.matrix += &other.matrix;
        Ok(())
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    /// `unvec(V · vec(ρ))`.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.dim() != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                got: rho.dim(),
            });
        }
        unvec(&self.apply_vec(&vec_of(rho)))
    }

    /// `max_j |Σ_i V[i(1 + d), j]|`, the residual of `vec(I)† V = 0`.
    pub fn trace_residual(&self) -> f64 {
        let d = self.hilbert_dim;
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..d {
                s += self.matrix[[i * (d + 1), j]];
            }
            worst = worst.max(s.norm());
        }
        worst
    }
}

pub fn vec_of(rho: &Operator) -> Array1<C64> {
    let d = rho.dim();
    let m = rho.matrix();
    Array1::from_shape_fn(d * d, |k| m[[k % d, k / d]])
}

pub fn unvec(v: &Array1<C64>) -> Result<Operator> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::InvalidDimension(format!(
            "vector length {} is not a perfect square",
            v.len()
        )));
    }
    Operator::new(Array2::from_shape_fn((d, d), |(i, j)| v[i + d * j]))
}

/// `L(O)ρ = 2OρO† − O†Oρ − ρO†O` with unit prefactor.
pub fn lindblad_dissipator(o: &Operator) -> Superoperator {
    let d = o.dim();
    let id = Operator::identity(d);
    let od = o.dagger();
    let odo = od.dot(o);
    let mut s = Superoperator::sandwich(o, &od).scaled(C64::new(2.0, 0.0));
    s.matrix -= Superoperator::sandwich(&odo, &id).matrix();
    s.matrix -= Superoperator::sandwich(&id, &odo).matrix();
    s
}

/// The full generator
/// `(1/iħ)[H, ρ] + (γ_R/2)Σ_μ L(σ⁻_μ) + (γ_ph/iħ)[Q₁, {P₁, ρ}] − (2γ_ph E_th/ħ²)[Q₁, [Q₁, ρ]]`.
pub fn build_superoperator(
    h: &Operator,
    d: &DissipationSpec,
    ops: &SystemOperators,
) -> Result<Superoperator> {
    d.validate()?;
    if h.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            got: h.dim(),
        });
    }
    let mut v = Superoperator::hamiltonian(h);
    if d.gamma_r > 0.0 {
        for lower in &ops.lowering {
            v.add_assign(&lindblad_dissipator(lower).scaled(C64::new(0.5 * d.gamma_r, 0.0)))?;
        }
    }
    if d.gamma_ph > 0.0 {
        v.add_assign(&friction(ops).scaled(-I * d.gamma_ph / HBAR_MEV_PS))?;
        let k = 2.0 * d.gamma_ph * d.e_th / (HBAR_MEV_PS * HBAR_MEV_PS);
        v.add_assign(&double_commutator(&ops.q).scaled(C64::new(-k, 0.0)))?;
    }
    Ok(v)
}

/// `ρ ↦ [Q, {P, ρ}] = QPρ + QρP − PρQ − ρPQ`.
fn friction(ops: &SystemOperators) -> Superoperator {
    let id = Operator::identity(ops.dim());
    let (q, p) = (&ops.q, &ops.p);
    let mut s = Superoperator::sandwich(&q.dot(p), &id);
    s.matrix += Superoperator::sandwich(q, p).matrix();
    s.matrix -= Superoperator::sandwich(p, q).matrix();
    s.matrix -= Superoperator::sandwich(&id, &p.dot(q)).matrix();
    s
}

/// `ρ ↦ [Q, [Q, ρ]] = Q²ρ − 2QρQ + ρQ²`.
fn double_commutator(q: &Operator) -> Superoperator {
    let id = Operator::identity(q.dim());
    let q2 = q.dot(q);
    let mut s = Superoperator::sandwich(&q2, &id);
    s.matrix -= &Superoperator::sandwich(q, q).matrix().mapv(|z| z * 2.0);
    s.matrix += Superoperator::sandwich(&id, &q2).matrix();
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_core::ZERO;
    use ndarray_linalg::Eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const OMEGA1: f64 = 3.397_166_7;

    fn random_density(d: usize, rng: &mut ChaCha8Rng) -> Operator {
        let a = Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let a = Operator::new(a).unwrap();
        let rho = a.dot(&a.dagger());
        let t = rho.trace().re;
        rho.scale_re(1.0 / t)
    }

    fn stage1(n: usize) -> (SystemOperators, Operator, DissipationSpec) {
        let ops = SystemOperators::new(n, OMEGA1).unwrap();
        let spec = StageHamiltonianSpec {
            driven: Level::Up,
            rabi_energy: 0.75,
            detuning_energy: 2.0,
            d1: 11.0,
            omega1: OMEGA1,
        };
        let h = build_hamiltonian(&spec, &ops).unwrap();
        let d = DissipationSpec::from_energies(6.6e-4, 0.1, 5.25).unwrap();
        (ops, h, d)
    }

    #[test]
    fn vec_roundtrip_and_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_density(4, &mut rng);
        let b = random_density(4, &mut rng);
        let r = random_density(4, &mut rng);
        let v = vec_of(&r);
        assert_eq!(v[1], r.matrix()[[1, 0]]);
        assert_eq!(unvec(&v).unwrap(), r);
        let lhs = Superoperator::sandwich(&a, &b).apply(&r).unwrap();
        assert!(lhs.max_abs_diff(&a.dot(&r).dot(&b)) < 1e-14);
    }

    #[test]
    fn decoupled_hamiltonian_spectrum() {
        let ops = SystemOperators::new(6, OMEGA1).unwrap();
        let spec = StageHamiltonianSpec {
            driven: Level::Up,
            rabi_energy: 0.0,
            detuning_energy: 0.0,
            d1: 0.0,
            omega1: OMEGA1,
        };
        let h = build_hamiltonian(&spec, &ops).unwrap();
        let expected = (&ops.fock.number + &Operator::identity(6).scale_re(0.5))
            .scale_re(HBAR_MEV_PS * OMEGA1);
        let expected = embed(&Operator::identity(3), &expected).unwrap();
        // only the corner of P² + ω²Q² deviates from the ladder
        for i in 0..15 {
            for j in 0..15 {
                assert!((h.matrix()[[i, j]] - expected.matrix()[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn drive_matrix_element_and_hermiticity() {
        let (ops, h, _) = stage1(5);
        assert!(h.is_hermitian(1e-12));
        let b = crate::quantum_core::ProductBasis::new(5);
        for n in 0..5 {
            let x = b.index(Level::Exciton, n);
            let u = b.index(Level::Up, n);
            let dn = b.index(Level::Down, n);
            assert!((h.matrix()[[x, u]].re - 0.375).abs() < 1e-14);
            assert_eq!(h.matrix()[[x, dn]], ZERO);
        }
        let _ = ops;
    }

    #[test]
    fn two_level_splitting() {
        // n = 0 {↑, X} block at D₁ = 0
        let delta: f64 = 2.0;
        let omega: f64 = 0.75;
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![C64::new(0.0, 0.0), C64::new(omega / 2.0, 0.0), C64::new(omega / 2.0, 0.0), C64::new(delta, 0.0)],
        )
        .unwrap();
        let ev = Operator::new(m).unwrap().hermitian_eigenvalues().unwrap();
        assert!(((ev[1] - ev[0]) - (delta * delta + omega * omega).sqrt()).abs() < 1e-12);

        let ops = SystemOperators::new(4, OMEGA1).unwrap();
        let spec = StageHamiltonianSpec {
            driven: Level::Up,
            rabi_energy: omega,
            detuning_energy: delta,
            d1: 0.0,
            omega1: OMEGA1,
        };
        let h = build_hamiltonian(&spec, &ops).unwrap();
        let b = crate::quantum_core::ProductBasis::new(4);
        let (u, x) = (b.index(Level::Up, 0), b.index(Level::Exciton, 0));
        let sub = Array2::from_shape_fn((2, 2), |(i, j)| {
            let idx = [u, x];
            h.matrix()[[idx[i], idx[j]]]
        });
        let ev = Operator::new(sub).unwrap().hermitian_eigenvalues().unwrap();
        assert!(((ev[1] - ev[0]) - 2.136_000_936).abs() < 1e-6);
    }

    #[test]
    fn dissipator_examples() {
        let id = Operator::identity(3);
        assert!(lindblad_dissipator(&id).matrix().iter().all(|z| z.norm() < 1e-15));

        let sm = Operator::ket_bra(2, 0, 1);
        let e = Operator::ket_bra(2, 1, 1);
        let out = lindblad_dissipator(&sm).apply(&e).unwrap();
        let expected = &Operator::ket_bra(2, 0, 0).scale_re(2.0) - &e.scale_re(2.0);
        assert!(out.max_abs_diff(&expected) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = random_density(4, &mut rng);
        let o = &o + &Operator::ket_bra(4, 0, 3);
        let r = random_density(4, &mut rng);
        assert!(lindblad_dissipator(&o).apply(&r).unwrap().trace().norm() < 1e-13);
    }

    #[test]
    fn term_by_term_oracle() {
        let (ops, h, d) = stage1(5);
        let v = build_superoperator(&h, &d, &ops).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hb = HBAR_MEV_PS;
        for _ in 0..20 {
            let rho = random_density(15, &mut rng);
            let m = |a: &Operator, b: &Operator| a.dot(b);
            let mut rhs = m(&h, &rho).matrix() - m(&rho, &h).matrix();
            rhs.mapv_inplace(|z| z / (I * hb));
            for o in &ops.lowering {
                let od = o.dagger();
                let odo = od.dot(o);
                let l = o.dot(&rho).dot(&od).matrix() * C64::new(2.0, 0.0)
                    - odo.dot(&rho).matrix()
                    - rho.dot(&odo).matrix();
                rhs = rhs + l * C64::new(d.gamma_r / 2.0, 0.0);
            }
            let (q, p) = (&ops.q, &ops.p);
            let anti = &p.dot(&rho) + &rho.dot(p);
            let fr = q.commutator(&anti);
            rhs = rhs + fr.matrix().mapv(|z| z * d.gamma_ph / (I * hb));
            let dc = q.commutator(&q.commutator(&rho));
            rhs = rhs - dc.matrix().mapv(|z| z * 2.0 * d.gamma_ph * d.e_th / (hb * hb));
            let got = v.apply(&rho).unwrap();
            let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let diff = (got.matrix() - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff <= 1e-12 * scale.max(1.0), "diff {diff}");
        }
    }

    #[test]
    fn trace_preservation_and_hermiticity() {
        let (ops, h, d) = stage1(10);
        let v = build_superoperator(&h, &d, &ops).unwrap();
        assert!(v.trace_residual() < 1e-10, "{}", v.trace_residual());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(30, &mut rng);
        let out = v.apply(&rho).unwrap();
        assert!(out.hermiticity_defect() < 1e-10);
    }

    #[test]
    fn closed_system_spectrum_is_imaginary() {
        let (ops, h, _) = stage1(4);
        let v = build_superoperator(&h, &DissipationSpec::closed(), &ops).unwrap();
        let ham = Superoperator::hamiltonian(&h);
        assert_eq!(v.matrix(), ham.matrix());
        let (ev, _) = v.matrix().eig().unwrap();
        assert!(ev.iter().all(|z| z.re.abs() < 1e-8));
    }

    #[test]
    fn dissipative_spectrum_in_left_half_plane() {
        let (ops, h, d) = stage1(4);
        let v = build_superoperator(&h, &d, &ops).unwrap();
        let (ev, _) = v.matrix().eig().unwrap();
        let max_re = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        assert!(max_re <= 1e-8, "{max_re}");
    }

    #[test]
    fn mismatched_inputs() {
        let (ops, _, d) = stage1(4);
        assert!(build_superoperator(&Operator::identity(5), &d, &ops).is_err());
        let spec = StageHamiltonianSpec {
            driven: Level::Exciton,
            rabi_energy: 1.0,
            detuning_energy: 0.0,
            d1: 0.0,
            omega1: OMEGA1,
        };
        assert!(build_hamiltonian(&spec, &ops).is_err());
        let spec = StageHamiltonianSpec {
            driven: Level::Up,
            rabi_energy: -1.0,
            ..spec
        };
        assert!(build_hamiltonian(&spec, &ops).is_err());
    }
}
