//! Exact few-spin reference: the full `2^{N+1}`-dimensional electron-nuclear
//! space, evolved sector by sector.
//!
//! Bit 0 of a basis index is the electron (`0 = ↑`), bits `1..=N` are the
//! nuclei (`1 = ↓`).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use super::{CollectiveNuclearState, CouplingProfile, Spin};
use crate::error::{Error, Result};

pub const MAX_ORACLE_SPINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Hyperfine exchange for the given time, ps.
    Exchange(f64),
    /// Gradient pulse of the given duration, ps.
    Pulse(f64),
}

struct Sector {
    states: Vec<usize>,
    values: Array1<f64>,
    vectors: Array2<f64>,
}

/// Diagonalized exchange Hamiltonian on `N` spins.
pub struct FullSpace {
    pub n_spins: usize,
    couplings: Vec<f64>,
    rates: Vec<f64>,
    gamma: f64,
    sectors: Vec<Sector>,
}

impl FullSpace {
    pub fn new(profile: &CouplingProfile) -> Result<Self> {
        let n = profile.len();
        if n > MAX_ORACLE_SPINS {
            return Err(Error::OracleTooLarge(n));
        }
        let dim = 1usize << (n + 1);
        let mut sectors = Vec::new();
        for k in 0..=n + 1 {
            let states: Vec<usize> = (0..dim).filter(|s| s.count_ones() as usize == k).collect();
            let mut pos = vec![usize::MAX; dim];
            for (i, &s) in states.iter().enumerate() {
                pos[s] = i;
            }
            let m = states.len();
            let mut h = Array2::<f64>::zeros((m, m));
            for (i, &s) in states.iter().enumerate() {
                // electron ↓ and nucleus j ↑  <->  electron ↑ and nucleus j ↓
                if s & 1 == 1 {
                    for (j, &a) in profile.couplings.iter().enumerate() {
                        let bit = 1 << (j + 1);
                        if s & bit == 0 {
                            let i2 = pos[(s & !1) | bit];
                            h[[i2, i]] += a;
                            h[[i, i2]] += a;
                        }
                    }
                }
            }
            let (values, vectors) = h.eigh(UPLO::Upper)?;
            sectors.push(Sector { states, values, vectors });
        }
        Ok(Self {
            n_spins: n,
            couplings: profile.couplings.clone(),
            rates: profile.pulse_rates.clone(),
            gamma: profile.gamma(),
            sectors,
        })
    }

    pub fn dim(&self) -> usize {
        1 << (self.n_spins + 1)
    }

    pub fn basis_index(spin: Spin, down_nuclei: &[usize]) -> usize {
        let mut s = if spin == Spin::Down { 1 } else { 0 };
        for &j in down_nuclei {
            s |= 1 << (j + 1);
        }
        s
    }

    /// `exp(−iHt)ψ`, `t` in ps.
    pub fn exchange(&self, psi: &Array1<C64>, t: f64) -> Array1<C64> {
        let mut out = Array1::<C64>::zeros(psi.len());
        for sec in &self.sectors {
            let m = sec.states.len();
            let local: Vec<C64> = sec.states.iter().map(|&s| psi[s]).collect();
            if local.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let mut coef = vec![C64::new(0.0, 0.0); m];
            for (k, c) in coef.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..m {
                    acc += local[i] * sec.vectors[[i, k]];
                }
                *c = acc * C64::from_polar(1.0, -sec.values[k] * t);
            }
            for (i, &s) in sec.states.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..m {
                    acc += coef[k] * sec.vectors[[i, k]];
                }
                out[s] = acc;
            }
        }
        out
    }

    fn require_rates(&self) -> Result<()> {
        if self.rates.len() != self.n_spins {
            return Err(Error::param("pulse_rates", "profile has no pulse attached"));
        }
        Ok(())
    }

    /// `exp(−iτ Σ_j θ_j I_z⁽ʲ⁾)ψ`, `τ` in ps.
    pub fn pulse(&self, psi: &Array1<C64>, tau: f64) -> Result<Array1<C64>> {
        self.require_rates()?;
        Ok(Array1::from_shape_fn(psi.len(), |s| {
            let mz: f64 = self
                .rates
                .iter()
                .enumerate()
                .map(|(j, th)| if s & (1 << (j + 1)) == 0 { 0.5 * th } else { -0.5 * th })
                .sum();
            psi[s] * C64::from_polar(1.0, -mz * tau)
        }))
    }

    /// `𝕀₋ψ = γ^{−1/2} Σ_j a_j I₋⁽ʲ⁾ψ`.
    pub fn collective_lower(&self, psi: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::<C64>::zeros(psi.len());
        let norm = self.gamma.sqrt();
        for (s, &z) in psi.iter().enumerate() {
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &a) in self.couplings.iter().enumerate() {
                let bit = 1 << (j + 1);
                if s & bit == 0 {
                    out[s | bit] += z * (a / norm);
                }
            }
        }
        out
    }

    /// `𝕀₊ψ`, exact.
    pub fn collective_raise(&self, psi: &Array1<C64>) -> Array1<C64> {
        let mut out = Array1::<C64>::zeros(psi.len());
        let norm = self.gamma.sqrt();
        for (s, &z) in psi.iter().enumerate() {
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &a) in self.couplings.iter().enumerate() {
                let bit = 1 << (j + 1);
                if s & bit != 0 {
                    out[s & !bit] += z * (a / norm);
                }
            }
        }
        out
    }

    /// Probability that the electron is `↑`.
    pub fn up_population(psi: &Array1<C64>) -> f64 {
        psi.iter().enumerate().filter(|(s, _)| s & 1 == 0).map(|(_, z)| z.norm_sqr()).sum()
    }

    /// Mean number of flipped nuclei.
    pub fn mean_excitation(psi: &Array1<C64>) -> f64 {
        psi.iter().enumerate().map(|(s, z)| (s >> 1).count_ones() as f64 * z.norm_sqr()).sum()
    }
}

/// Runs `schedule` from `initial` exactly.
pub fn brute_force_oracle(space: &FullSpace, schedule: &[Segment], initial: &Array1<C64>) -> Result<Array1<C64>> {
    if initial.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: initial.len(),
        });
    }
    let mut psi = initial.clone();
    for seg in schedule {
        psi = match *seg {
            Segment::Exchange(t) => space.exchange(&psi, t),
            Segment::Pulse(tau) => space.pulse(&psi, tau)?,
        };
    }
    Ok(psi)
}

/// `|spin⟩ ⊗ |n⟩_t` in the full space, built as `Π_j[Û_pls(t_j)𝕀₋]|0⟩`.
pub fn expand_collective(space: &FullSpace, spin: Spin, t: &[f64]) -> Result<Array1<C64>> {
    let mut psi = Array1::<C64>::zeros(space.dim());
    psi[FullSpace::basis_index(spin, &[])] = C64::new(1.0, 0.0);
    for &tj in t {
        psi = space.collective_lower(&psi);
        if tj != 0.0 {
            psi = space.pulse(&psi, tj)?;
        }
    }
    Ok(psi)
}

/// Full-space vector of a collective superposition.
pub fn collective_ket(space: &FullSpace, state: &CollectiveNuclearState) -> Result<Array1<C64>> {
    let mut psi = Array1::<C64>::zeros(space.dim());
    for term in &state.terms {
        psi = psi + expand_collective(space, term.spin, &term.t)? * term.amp;
    }
    Ok(psi)
}

/// `|⟨a|b⟩|² / (‖a‖²‖b‖²)`.
pub fn fidelity(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    overlap.norm_sqr() / (na * nb)
}

pub fn norm(a: &Array1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
