//! Closed-form bookkeeping on kets `|s, n⟩_t`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{CouplingProfile, PulseSpec};
use crate::error::{Error, Result};

const PRUNE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Spin {
    Up,
    Down,
}

/// `amp · |spin⟩ ⊗ |n⟩_t` with `n = t.len()`; durations in ps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub spin: Spin,
    pub t: Vec<f64>,
    pub amp: C64,
}

impl Term {
    pub fn new(spin: Spin, t: Vec<f64>, amp: C64) -> Self {
        Self { spin, t, amp }
    }

    pub fn n(&self) -> usize {
        self.t.len()
    }
}

/// A superposition of collective kets. Kets with different histories are
/// not orthogonal, so `amplitude_norm` is only a bookkeeping quantity.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CollectiveNuclearState {
    pub terms: Vec<Term>,
}

impl CollectiveNuclearState {
    /// `|spin, 0⟩`.
    pub fn polarized(spin: Spin) -> Self {
        Self {
            terms: vec![Term::new(spin, Vec::new(), C64::new(1.0, 0.0))],
        }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut s = Self { terms: Vec::new() };
        for term in terms {
            s.push(term);
        }
        s
    }

    /// Adds a term, merging it into an existing ket with the same spin and
    /// bitwise-identical history.
    pub fn push(&mut self, term: Term) {
        if let Some(existing) = self.terms.iter_mut().find(|x| {
            x.spin == term.spin && x.t.len() == term.t.len() && x.t.iter().zip(&term.t).all(|(a, b)| a.to_bits() == b.to_bits())
        }) {
            existing.amp += term.amp;
        } else {
            self.terms.push(term);
        }
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|t| t.amp.norm() >= PRUNE);
        self
    }

    /// `Σ |amp|²`.
    pub fn amplitude_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.norm_sqr()).sum()
    }

    /// `Σ |amp|²` over terms with the given electron spin.
    pub fn spin_weight(&self, spin: Spin) -> f64 {
        self.terms.iter().filter(|t| t.spin == spin).map(|t| t.amp.norm_sqr()).sum()
    }

    pub fn max_excitation(&self) -> usize {
        self.terms.iter().map(Term::n).max().unwrap_or(0)
    }

    pub fn scaled(mut self, c: C64) -> Self {
        for t in &mut self.terms {
            t.amp *= c;
        }
        self
    }
}

/// Statistical mixture `Σ p_k |ψ_k⟩⟨ψ_k|`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Mixture {
    pub components: Vec<(f64, CollectiveNuclearState)>,
}

impl Mixture {
    /// `p_up |↑,0⟩⟨↑,0| + (1 − p_up) |↓,0⟩⟨↓,0|`.
    pub fn electron_mixture(p_up: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_up) {
            return Err(Error::param("p_up", format!("must lie in [0, 1], got {p_up}")));
        }
        let mut components = Vec::new();
        if p_up > 0.0 {
            components.push((p_up, CollectiveNuclearState::polarized(Spin::Up)));
        }
        if p_up < 1.0 {
            components.push((1.0 - p_up, CollectiveNuclearState::polarized(Spin::Down)));
        }
        Ok(Self { components })
    }

    /// Electron ↑ population from amplitude weights.
    pub fn up_population(&self) -> f64 {
        self.components.iter().map(|(p, s)| p * s.spin_weight(Spin::Up) / s.amplitude_norm()).sum()
    }

    /// Expected excitation count, weighting each ket by `|amp|²`.
    pub fn mean_excitation(&self) -> f64 {
        self.components
            .iter()
            .map(|(p, s)| p * s.terms.iter().map(|t| t.n() as f64 * t.amp.norm_sqr()).sum::<f64>() / s.amplitude_norm())
            .sum()
    }
}

/// `Û_en(t)` on the closed-form map: `↑` terms are fixed points, `↓` terms
/// rotate into `(↑, n+1, (t,0))`. `t` in ps.
pub fn evolve_collective(state: &CollectiveNuclearState, profile: &CouplingProfile, t: f64) -> CollectiveNuclearState {
    let n_max = state.max_excitation();
    if n_max as f64 > 0.05 * profile.len() as f64 {
        log::warn!("excitation count {n_max} exceeds 5% of the {} nuclei; the collective map degrades", profile.len());
    }
    let angle = profile.gamma().sqrt() * t;
    let (c, s) = (angle.cos(), angle.sin());
    let mut out = CollectiveNuclearState::default();
    for term in &state.terms {
        match term.spin {
            Spin::Up => out.push(term.clone()),
            Spin::Down => {
                out.push(Term::new(Spin::Down, term.t.clone(), term.amp * c));
                let mut t1 = term.t.clone();
                t1.push(0.0);
                out.push(Term::new(Spin::Up, t1, term.amp * C64::new(0.0, -s)));
            }
        }
    }
    out.pruned()
}

/// `Û_pls(τ)` with `τ` in ps: `|0⟩ → e^{−iΘτ}|0⟩`, otherwise the last
/// history entry grows by `τ`.
pub fn apply_pulse(state: &CollectiveNuclearState, profile: &CouplingProfile, tau: f64) -> Result<CollectiveNuclearState> {
    if profile.pulse_rates.len() != profile.len() {
        return Err(Error::param("pulse_rates", "profile has no pulse attached"));
    }
    if tau > 0.1 * profile.flip_time() {
        log::warn!(
            "pulse of {tau} ps is not short against the flip time {} ps",
            profile.flip_time()
        );
    }
    let phase0 = C64::from_polar(1.0, -profile.big_theta() * tau);
    let mut out = CollectiveNuclearState::default();
    for term in &state.terms {
        let mut term = term.clone();
        match term.t.last_mut() {
            Some(last) => *last += tau,
            None => term.amp *= phase0,
        }
        out.push(term);
    }
    Ok(out)
}

/// One erasure stage on every component: exchange for `π/(2√γ)`, then the
/// pulse.
pub fn erasure_step(mixture: &Mixture, profile: &CouplingProfile, pulse: &PulseSpec) -> Result<Mixture> {
    if pulse.gradient == 0.0 {
        return Err(Error::PulseIneffective);
    }
    let t_flip = profile.flip_time();
    let components = mixture
        .components
        .iter()
        .map(|(p, s)| Ok((*p, apply_pulse(&evolve_collective(s, profile, t_flip), profile, pulse.tau_ps())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mixture { components })
}

/// `𝕀₋|n⟩_t = |n+1⟩_{(t,0)}`, exact.
pub fn lower_collective(state: &CollectiveNuclearState) -> CollectiveNuclearState {
    CollectiveNuclearState {
        terms: state
            .terms
            .iter()
            .map(|x| {
                let mut t = x.t.clone();
                t.push(0.0);
                Term::new(x.spin, t, x.amp)
            })
            .collect(),
    }
}

/// `f(t, m)` for `1 ≤ m ≤ n`: drops entry `m` and, for `m ≥ 2`, folds it into
/// entry `m − 1`.
pub fn f_vector(t: &[f64], m: usize) -> Vec<f64> {
    assert!(m >= 1 && m <= t.len(), "m = {m} out of range for n = {}", t.len());
    let mut f: Vec<f64> = Vec::with_capacity(t.len() - 1);
    for (j, &tj) in t.iter().enumerate() {
        let idx = j + 1;
        if idx == m {
            if let Some(prev) = f.last_mut() {
                *prev += tj;
            }
        } else {
            f.push(tj);
        }
    }
    f
}

/// `g(t, m) = (f(t, m), 0)`.
pub fn g_vector(t: &[f64], m: usize) -> Vec<f64> {
    let mut g = f_vector(t, m);
    g.push(0.0);
    g
}

/// `𝕀₊|n⟩_t ≈ Σ_m e^{−iΘt₁δ_{m1}} (Σ_j a_j² e^{iθ_jT_m}/γ) |n−1⟩_{f(t,m)}`,
/// with the projector onto spin-up nuclei replaced by unity. Relative error
/// is of order `n/N`. `|0⟩` is annihilated.
pub fn raise_collective(state: &CollectiveNuclearState, profile: &CouplingProfile) -> Result<CollectiveNuclearState> {
    let gamma = profile.gamma();
    let theta = profile.big_theta();
    let mut out = CollectiveNuclearState::default();
    for term in &state.terms {
        let n = term.n();
        for m in 1..=n {
            let tm: f64 = term.t[m - 1..].iter().sum();
            let mut c = profile.overlap_sum(tm)? / gamma;
            if m == 1 {
                c *= C64::from_polar(1.0, -theta * term.t[0]);
            }
            out.push(Term::new(term.spin, f_vector(&term.t, m), term.amp * c));
        }
    }
    Ok(out)
}
