//! Repeated erasure cycles run on the collective map and on the exact
//! oracle side by side.
//!
//! Between erasures the optical stages move the electron from `↑` to `↓`
//! with probability `q`, modelled as the channel with Kraus operators
//! `K₀ = |↓⟩⟨↓| + √(1−q)|↑⟩⟨↑|` and `K₁ = √q|↓⟩⟨↑|`. Each Kraus branch is
//! kept as a separate unnormalized mixture component in both pictures.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{
    apply_pulse, collective_ket, evolve_collective, expand_collective, fidelity, gamma_tilde, CollectiveNuclearState,
    CouplingProfile, FullSpace, PulseSpec, Spin, Term,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErasureCycleReport {
    pub cycle: usize,
    /// `|γ̃(τ)|/γ`.
    pub gamma_ratio: f64,
    /// Weighted overlap `Σ w_k F(c_k, o_k) / Σ w_k` between collective and
    /// exact components.
    pub fidelity: f64,
    pub up_population_oracle: f64,
    pub up_population_collective: f64,
    pub mean_excitation_oracle: f64,
    pub mean_excitation_collective: f64,
    pub components: usize,
}

struct Component {
    weight: f64,
    collective: CollectiveNuclearState,
    exact: Array1<C64>,
}

fn kraus_collective(s: &CollectiveNuclearState, q: f64, flip: bool) -> CollectiveNuclearState {
    let mut out = CollectiveNuclearState::default();
    for t in &s.terms {
        match (t.spin, flip) {
            (Spin::Up, false) => out.push(Term::new(Spin::Up, t.t.clone(), t.amp * (1.0 - q).sqrt())),
            (Spin::Down, false) => out.push(t.clone()),
            (Spin::Up, true) => out.push(Term::new(Spin::Down, t.t.clone(), t.amp * q.sqrt())),
            (Spin::Down, true) => {}
        }
    }
    out
}

fn kraus_exact(psi: &Array1<C64>, q: f64, flip: bool) -> Array1<C64> {
    let mut out = Array1::<C64>::zeros(psi.len());
    for (s, &z) in psi.iter().enumerate() {
        match (s & 1 == 0, flip) {
            (true, false) => out[s] += z * (1.0 - q).sqrt(),
            (false, false) => out[s] += z,
            (true, true) => out[s | 1] += z * q.sqrt(),
            (false, true) => {}
        }
    }
    out
}

fn sq(psi: &Array1<C64>) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

/// Starts from `|↑, 0⟩` and runs `cycles` rounds of (optical transfer with
/// probability `q`, erasure). The profile must carry the pulse rates of
/// `pulse`.
pub fn erasure_study(
    profile: &CouplingProfile,
    pulse: &PulseSpec,
    q: f64,
    cycles: usize,
) -> Result<Vec<ErasureCycleReport>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("transfer_probability", format!("must lie in [0, 1], got {q}")));
    }
    if cycles > 10 {
        return Err(Error::param("cycles", "at most 10 cycles (components double each cycle)"));
    }
    if pulse.gradient == 0.0 {
        return Err(Error::PulseIneffective);
    }
    let space = FullSpace::new(profile)?;
    let tau = pulse.tau_ps();
    let t_flip = profile.flip_time();
    let gamma_ratio = gamma_tilde(profile, tau)?.ratio();
    let mut comps = vec![Component {
        weight: 1.0,
        collective: CollectiveNuclearState::polarized(Spin::Up),
        exact: expand_collective(&space, Spin::Up, &[])?,
    }];
    let mut reports = Vec::with_capacity(cycles);
    for cycle in 1..=cycles {
        let mut next = Vec::with_capacity(2 * comps.len());
        for c in &comps {
            for flip in [false, true] {
                let exact = kraus_exact(&c.exact, q, flip);
                let w = sq(&exact);
                if w * c.weight < 1e-24 {
                    continue;
                }
                let collective = kraus_collective(&c.collective, q, flip);
                let collective = apply_pulse(&evolve_collective(&collective, profile, t_flip), profile, tau)?;
                let exact = space.pulse(&space.exchange(&exact, t_flip), tau)?;
                next.push(Component {
                    weight: c.weight,
                    collective,
                    exact,
                });
            }
        }
        comps = next;

        let mut total = 0.0;
        let mut fid = 0.0;
        let mut up_o = 0.0;
        let mut up_c = 0.0;
        let mut n_o = 0.0;
        let mut n_c = 0.0;
        for c in &comps {
            let w = c.weight * sq(&c.exact);
            let cv = collective_ket(&space, &c.collective)?;
            let cn = sq(&cv);
            total += w;
            fid += w * fidelity(&cv, &c.exact);
            up_o += c.weight * FullSpace::up_population(&c.exact);
            n_o += c.weight * FullSpace::mean_excitation(&c.exact);
            up_c += w * FullSpace::up_population(&cv) / cn;
            n_c += w * FullSpace::mean_excitation(&cv) / cn;
        }
        reports.push(ErasureCycleReport {
            cycle,
            gamma_ratio,
            fidelity: fid / total,
            up_population_oracle: up_o / total,
            up_population_collective: up_c / total,
            mean_excitation_oracle: n_o / total,
            mean_excitation_collective: n_c / total,
            components: comps.len(),
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_cycle_is_exact() {
        let pulse = PulseSpec::with_phase_spread(8.0, 5.0, 1.0, 5.0, 0.0);
        let p = CouplingProfile::uniform(6, 1e-5, 2.0, 5.0).unwrap().with_pulse(&pulse);
        let r = erasure_study(&p, &pulse, 0.5, 2).unwrap();
        assert!((r[0].fidelity - 1.0).abs() < 1e-12);
        assert!((r[0].up_population_oracle - 1.0).abs() < 1e-12);
        assert!((r[0].mean_excitation_oracle - 0.5).abs() < 1e-12);
        assert!((r[0].mean_excitation_collective - 0.5).abs() < 1e-12);
        assert!(r[1].fidelity <= 1.0 + 1e-12);
    }

    #[test]
    fn no_transfer_is_a_fixed_point() {
        let pulse = PulseSpec::with_phase_spread(8.0, 5.0, 1.0, 5.0, 0.0);
        let p = CouplingProfile::uniform(4, 1e-5, 2.0, 5.0).unwrap().with_pulse(&pulse);
        let r = erasure_study(&p, &pulse, 0.0, 3).unwrap();
        for c in &r {
            assert!((c.fidelity - 1.0).abs() < 1e-12);
            assert_eq!(c.mean_excitation_oracle, 0.0);
        }
    }
}
