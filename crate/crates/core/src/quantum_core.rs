//! Truncated-oscillator and three-level operators on the product space.
//!
//! The product basis is oscillator-major: `index(x, n) = 3 * n + x` with
//! `(↑, ↓, X) -> (0, 1, 2)`. [`embed`] realizes this as `bath ⊗ system` in
//! Kronecker order, and every other module relies on that single convention.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use ndarray::{linalg::kron, Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::{HBAR_MEV_PS, KB_MEV_PER_K};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Electronic level of the quantum dot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Level {
    Up,
    Down,
    Exciton,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Up, Level::Down, Level::Exciton];

    pub fn index(self) -> usize {
        match self {
            Level::Up => 0,
            Level::Down => 1,
            Level::Exciton => 2,
        }
    }

    /// `|self⟩⟨self|` on the three-level space.
    pub fn projector(self) -> Operator {
        Operator::ket_bra(3, self.index(), self.index())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Up => "up",
            Level::Down => "down",
            Level::Exciton => "X",
        })
    }
}

/// Index bookkeeping for the `3 · N_c` product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductBasis {
    pub n_levels: usize,
}

impl ProductBasis {
    pub fn new(n_levels: usize) -> Self {
        Self { n_levels }
    }

    pub fn dim(&self) -> usize {
        3 * self.n_levels
    }

    pub fn index(&self, level: Level, n: usize) -> usize {
        debug_assert!(n < self.n_levels);
        3 * n + level.index()
    }

    pub fn label(&self, index: usize) -> (Level, usize) {
        (Level::ALL[index % 3], index / 3)
    }
}

/// A square complex matrix acting on a finite Hilbert space.
#[derive(Clone, PartialEq)]
pub struct Operator(Array2<C64>);

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dim={})", self.dim())
    }
}

impl Operator {
    pub fn new(m: Array2<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Array2::eye(dim))
    }

    /// `|row⟩⟨col|`.
    pub fn ket_bra(dim: usize, row: usize, col: usize) -> Self {
        let mut m = Array2::zeros((dim, dim));
        m[[row, col]] = ONE;
        Self(m)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Array2::zeros((n, n));
        for (i, &d) in diag.iter().enumerate() {
            m[[i, i]] = C64::new(d, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.t().mapv(|z| z.conj()))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.t().to_owned())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.mapv(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn dot(&self, other: &Operator) -> Self {
        Self(self.0.dot(&other.0))
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &self.dot(other) - &other.dot(self)
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        &self.dot(other) + &other.dot(self)
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[[i, j]] - self.0[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Result<Array1<f64>> {
        let h = (&self.0 + &self.0.t().mapv(|z| z.conj())) * C64::new(0.5, 0.0);
        Ok(h.eigvalsh(UPLO::Upper)?)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.dot(rhs)
    }
}

/// Ladder and mass-weighted quadrature operators of one truncated mode.
#[derive(Debug, Clone)]
pub struct FockOperators {
    pub omega1: f64,
    pub annihilate: Operator,
    pub q1: Operator,
    pub p1: Operator,
    pub number: Operator,
}

impl FockOperators {
    pub fn n_levels(&self) -> usize {
        self.annihilate.dim()
    }

    /// `½(P₁² + ω₁²Q₁²)`, diagonal `ħω₁(n + ½)` away from the truncation corner.
    pub fn bath_hamiltonian(&self) -> Operator {
        let w2 = self.omega1 * self.omega1;
        (&self.p1.dot(&self.p1) + &self.q1.dot(&self.q1).scale_re(w2)).scale_re(0.5)
    }
}

/// Builds `a`, `Q₁ = √(ħ/2ω₁)(a + a†)`, `P₁ = i√(ħω₁/2)(a† − a)` and `a†a` on
/// `n_levels` Fock states. `omega1` is in rad/ps.
pub fn fock_operators(n_levels: usize, omega1: f64) -> Result<FockOperators> {
    if n_levels < 2 {
        return Err(Error::InvalidDimension(format!(
            "need at least 2 oscillator levels, got {n_levels}"
        )));
    }
    if !(omega1 > 0.0) || !omega1.is_finite() {
        return Err(Error::param("omega1", format!("must be positive, got {omega1}")));
    }
    let mut a = Array2::<C64>::zeros((n_levels, n_levels));
    for n in 1..n_levels {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a = Operator(a);
    let ad = a.dagger();
    let q_scale = (HBAR_MEV_PS / (2.0 * omega1)).sqrt();
    let p_scale = (HBAR_MEV_PS * omega1 / 2.0).sqrt();
    let q1 = (&a + &ad).scale_re(q_scale);
    let p1 = (&ad - &a).scale(I * p_scale);
    let number = ad.dot(&a);
    Ok(FockOperators {
        omega1,
        annihilate: a,
        q1,
        p1,
        number,
    })
}

/// `system ⊗ bath` placed on the oscillator-major product basis.
pub fn embed(system_op: &Operator, bath_op: &Operator) -> Result<Operator> {
    if system_op.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: system_op.dim(),
        });
    }
    Ok(Operator(kron(bath_op.matrix(), system_op.matrix())))
}

/// A unit-trace Hermitian density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const HERMITIAN_TOL: f64 = 1e-10;

    /// Validates trace and Hermiticity.
    pub fn new(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::param("rho", format!("trace {tr} is not 1")));
        }
        let defect = op.hermiticity_defect();
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::param("rho", format!("not Hermitian (defect {defect:e})")));
        }
        Ok(Self(op))
    }

    /// Wraps a propagated state without re-validating it.
    pub fn from_unchecked(op: Operator) -> Self {
        Self(op)
    }

    /// `|index⟩⟨index|`.
    pub fn pure_basis(dim: usize, index: usize) -> Self {
        Self(Operator::ket_bra(dim, index, index))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &Array2<C64> {
        self.0.matrix()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.0.hermitian_eigenvalues()?[0])
    }

    /// `ρ_system ⊗ ρ_bath` for a three-level state and a bath state.
    pub fn product(system: &DensityMatrix, bath: &DensityMatrix) -> Result<Self> {
        Ok(Self(embed(system.operator(), bath.operator())?))
    }

    /// Reduced three-level state, tracing out the oscillator.
    pub fn electron_state(&self) -> Operator {
        let nc = self.dim() / 3;
        let m = self.matrix();
        let mut out = Array2::zeros((3, 3));
        for n in 0..nc {
            for x in 0..3 {
                for y in 0..3 {
                    out[[x, y]] += m[[3 * n + x, 3 * n + y]];
                }
            }
        }
        Operator(out)
    }

    /// Population of one electronic level.
    pub fn population(&self, level: Level) -> f64 {
        let nc = self.dim() / 3;
        let m = self.matrix();
        (0..nc).map(|n| m[[3 * n + level.index(), 3 * n + level.index()]].re).sum()
    }
}

/// Gibbs state `∝ exp(−ħω₁n/k_BT)` on the truncated ladder.
pub fn thermal_state(omega1: f64, temperature_k: f64, n_levels: usize) -> Result<DensityMatrix> {
    if temperature_k < 0.0 || !temperature_k.is_finite() {
        return Err(Error::param(
            "temperature",
            format!("must be nonnegative, got {temperature_k}"),
        ));
    }
    if n_levels < 1 {
        return Err(Error::InvalidDimension("empty oscillator space".into()));
    }
    let weights: Vec<f64> = if temperature_k == 0.0 {
        (0..n_levels).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        let x = HBAR_MEV_PS * omega1 / (KB_MEV_PER_K * temperature_k);
        (0..n_levels).map(|n| (-x * n as f64).exp()).collect()
    };
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    Ok(DensityMatrix(Operator::from_diag(&probs)))
}

/// `Tr(op · ρ)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: op.dim(),
        });
    }
    let a = op.matrix();
    let r = rho.matrix();
    let n = rho.dim();
    let mut acc = ZERO;
    for i in 0..n {
        let row = a.row(i);
        let col = r.column(i);
        acc += row.iter().zip(col.iter()).map(|(x, y)| x * y).sum::<C64>();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega_sqrt5() -> f64 {
        5f64.sqrt() / HBAR_MEV_PS
    }

    #[test]
    fn commutator_two_levels_is_the_corner_artifact() {
        let ops = fock_operators(2, 1.7).unwrap();
        let c = ops.q1.commutator(&ops.p1);
        let m = c.matrix();
        assert!((m[[0, 0]] - I * HBAR_MEV_PS).norm() < 1e-12);
        assert!((m[[1, 1]] + I * HBAR_MEV_PS).norm() < 1e-12);
        assert!(m[[0, 1]].norm() < 1e-12 && m[[1, 0]].norm() < 1e-12);
    }

    #[test]
    fn canonical_commutator_away_from_corner() {
        let n = 10;
        let ops = fock_operators(n, omega_sqrt5()).unwrap();
        let c = ops.q1.commutator(&ops.p1);
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j && i < n - 1 { I * HBAR_MEV_PS } else { ZERO };
                if i == n - 1 && j == n - 1 {
                    assert!((c.matrix()[[i, j]] + I * HBAR_MEV_PS * (n as f64 - 1.0)).norm() < 1e-12);
                } else {
                    assert!((c.matrix()[[i, j]] - expected).norm() < 1e-12, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn ground_state_position_variance() {
        let w = omega_sqrt5();
        let ops = fock_operators(10, w).unwrap();
        let q2 = ops.q1.dot(&ops.q1);
        // <0|Q²|0> = (ħ/2ω) <0|(a + a†)²|0> = ħ/2ω
        assert!((q2.matrix()[[0, 0]].re - HBAR_MEV_PS / (2.0 * w)).abs() < 1e-14);
        assert!(ops.q1.is_hermitian(1e-14) && ops.p1.is_hermitian(1e-14));
    }

    #[test]
    fn rejects_single_level() {
        assert!(matches!(fock_operators(1, 1.0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn bath_hamiltonian_is_harmonic_ladder() {
        let w = omega_sqrt5();
        let ops = fock_operators(8, w).unwrap();
        let hb = ops.bath_hamiltonian();
        for n in 0..7 {
            let e = hb.matrix()[[n, n]].re;
            assert!((e - HBAR_MEV_PS * w * (n as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_identity_and_block_elements() {
        let id = embed(&Operator::identity(3), &Operator::identity(5)).unwrap();
        assert_eq!(id, Operator::identity(15));

        let ops = fock_operators(5, 2.0).unwrap();
        let xq = embed(&Level::Exciton.projector(), &ops.q1).unwrap();
        let basis = ProductBasis::new(5);
        for n in 0..5 {
            for m in 0..5 {
                for x in Level::ALL {
                    for y in Level::ALL {
                        let v = xq.matrix()[[basis.index(x, n), basis.index(y, m)]];
                        let expected = if x == Level::Exciton && y == Level::Exciton {
                            ops.q1.matrix()[[n, m]]
                        } else {
                            ZERO
                        };
                        assert_eq!(v, expected);
                    }
                }
            }
        }
    }

    #[test]
    fn embed_rejects_wrong_system_dimension() {
        assert!(embed(&Operator::identity(2), &Operator::identity(3)).is_err());
    }

    #[test]
    fn thermal_limits() {
        let w = omega_sqrt5();
        let rho = thermal_state(w, 0.0, 6).unwrap();
        assert_eq!(rho.matrix()[[0, 0]], ONE);
        assert!(rho.matrix().iter().skip(1).all(|z| *z == ZERO));

        let hot = thermal_state(w, 1e9, 6).unwrap();
        for n in 0..6 {
            assert!((hot.matrix()[[n, n]].re - 1.0 / 6.0).abs() < 1e-6);
        }
        assert!(thermal_state(w, -5.0, 6).is_err());
    }

    #[test]
    fn thermal_mean_occupation_matches_truncated_series() {
        let w = omega_sqrt5();
        let nc = 15;
        let rho = thermal_state(w, 60.0, nc).unwrap();
        let ops = fock_operators(nc, w).unwrap();
        let nbar = expectation(&rho, &ops.number).unwrap().re;
        // independent: q = e^{-x}; <n> = Σ n qⁿ / Σ qⁿ via the closed-form truncated sums
        let q = (-(5f64.sqrt()) / (KB_MEV_PER_K * 60.0)).exp();
        let m = nc as f64;
        let z = (1.0 - q.powf(m)) / (1.0 - q);
        let s = q * (1.0 - m * q.powf(m - 1.0) + (m - 1.0) * q.powf(m)) / (1.0 - q).powi(2);
        assert!((nbar - s / z).abs() < 1e-10, "{nbar} vs {}", s / z);
        // commutes with the number operator
        let c = rho.operator().commutator(&ops.number);
        assert!(c.matrix().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn expectation_basics() {
        let basis = ProductBasis::new(4);
        let rho = DensityMatrix::pure_basis(12, basis.index(Level::Up, 0));
        let id = Operator::identity(12);
        assert!((expectation(&rho, &id).unwrap() - ONE).norm() < 1e-15);
        let pu = embed(&Level::Up.projector(), &Operator::identity(4)).unwrap();
        assert!((expectation(&rho, &pu).unwrap() - ONE).norm() < 1e-15);
        assert!(expectation(&rho, &Operator::identity(3)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(Operator::identity(2)).is_err());
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 0]] = C64::new(0.5, 0.0);
        m[[1, 1]] = C64::new(0.5, 0.0);
        m[[0, 1]] = C64::new(0.1, 0.1);
        assert!(DensityMatrix::new(Operator::new(m.clone()).unwrap()).is_err());
        m[[1, 0]] = C64::new(0.1, -0.1);
        assert!(DensityMatrix::new(Operator::new(m).unwrap()).is_ok());
    }
}
