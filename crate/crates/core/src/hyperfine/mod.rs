//! Hyperfine erasure stage: electron-nuclear flip-flop exchange, magnetic
//! gradient pulses and the collective-state bookkeeping that tracks them.
//!
//! Couplings `a_j` and pulse rates `θ_j` are angular frequencies in rad/ps,
//! spin operators are dimensionless, and the exchange Hamiltonian is
//! `Σ_j a_j (I₋⁽ʲ⁾S₊ + I₊⁽ʲ⁾S₋)`. A pulse of length `τ` acts as
//! `exp(−i Σ_j θ_j τ I_z⁽ʲ⁾)`, so a flipped nucleus picks up `e^{+iθ_jτ}`
//! relative to the polarized background.

mod collective;
mod oracle;
mod study;

pub use collective::{
    apply_pulse, erasure_step, evolve_collective, f_vector, g_vector, lower_collective, raise_collective,
    CollectiveNuclearState, Mixture, Spin, Term,
};
pub use oracle::{
    brute_force_oracle, collective_ket, expand_collective, fidelity, norm, FullSpace, Segment, MAX_ORACLE_SPINS,
};
pub use study::{erasure_study, ErasureCycleReport};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{BOHR_MAGNETON_SI, HBAR_SI, MU0_SI, NUCLEAR_MAGNETON_SI};

/// Simple cubic lattice of nuclear sites centred on the dot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    /// Site spacing, nm.
    pub spacing: f64,
    /// Half-width of the box in units of σ.
    pub half_width_sigmas: f64,
    /// Random displacement of each site, as a fraction of the spacing. Zero
    /// disables it.
    pub jitter: f64,
    pub seed: u64,
}

impl LatticeSpec {
    pub fn new(spacing: f64) -> Self {
        Self {
            spacing,
            half_width_sigmas: 6.0,
            jitter: 0.0,
            seed: 0,
        }
    }
}

/// Gradient pulse `B(r) = b x + C` applied for `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSpec {
    /// Field gradient `b_pls`, T/nm.
    pub gradient: f64,
    /// Uniform offset `C`, T.
    pub offset: f64,
    /// Duration, ns.
    pub tau_ns: f64,
    /// Nuclear g-factor.
    pub g_n: f64,
}

impl PulseSpec {
    /// The gradient that gives `φτσ = phi_tau_sigma`.
    pub fn with_phase_spread(phi_tau_sigma: f64, sigma_nm: f64, tau_ns: f64, g_n: f64, offset: f64) -> Self {
        let phi = phi_tau_sigma / (tau_ns * 1e3 * sigma_nm);
        Self {
            gradient: phi * 1e12 * HBAR_SI / (g_n * NUCLEAR_MAGNETON_SI),
            offset,
            tau_ns,
            g_n,
        }
    }

    /// `φ = g_n μ_n b_pls / ħ`, rad/(ps·nm).
    pub fn phi(&self) -> f64 {
        self.g_n * NUCLEAR_MAGNETON_SI * self.gradient / HBAR_SI * 1e-12
    }

    /// Offset rate `g_n μ_n C / ħ`, rad/ps.
    pub fn offset_rate(&self) -> f64 {
        self.g_n * NUCLEAR_MAGNETON_SI * self.offset / HBAR_SI * 1e-12
    }

    pub fn tau_ps(&self) -> f64 {
        self.tau_ns * 1e3
    }

    /// `θ(x) = φ x + g_n μ_n C/ħ`, rad/ps, with `x` in nm.
    pub fn rate_at(&self, x: f64) -> f64 {
        self.phi() * x + self.offset_rate()
    }
}

/// Hyperfine couplings of a set of nuclei, optionally with pulse rates.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingProfile {
    /// Positions, nm.
    pub positions: Vec<[f64; 3]>,
    /// `a_j = ½ A v₀ |ψ(r_j)|²`, rad/ps.
    pub couplings: Vec<f64>,
    /// `θ_j`, rad/ps; empty until a pulse is attached.
    pub pulse_rates: Vec<f64>,
    /// Gaussian width σ, nm.
    pub sigma: f64,
    /// `φ` of the attached pulse, rad/(ps·nm).
    pub phi: Option<f64>,
}

/// `|ψ(r)|²` for `ψ = (2πσ²)^{−3/4} exp(−r²/4σ²)`, nm⁻³.
pub fn gaussian_density(r: [f64; 3], sigma: f64) -> f64 {
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-1.5) * (-r2 / (2.0 * sigma * sigma)).exp()
}

/// `A²v₀²/(32π^{3/2}σ³)`: the integral of `a(r)²` over all space.
pub fn continuum_gamma(av0: f64, sigma: f64) -> f64 {
    av0 * av0 / (32.0 * std::f64::consts::PI.powf(1.5) * sigma.powi(3))
}

impl CouplingProfile {
    /// Samples `a_j` on a cubic lattice. `av0` is `A·v₀` in rad/ps·nm³.
    pub fn lattice(sigma: f64, av0: f64, spec: &LatticeSpec) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !(av0 > 0.0) {
            return Err(Error::param("av0", format!("must be positive, got {av0}")));
        }
        if !(spec.spacing > 0.0) {
            return Err(Error::param("spacing", "must be positive"));
        }
        if spec.half_width_sigmas < 4.0 {
            return Err(Error::param(
                "half_width_sigmas",
                format!("the box must span at least 4 sigma, got {}", spec.half_width_sigmas),
            ));
        }
        if !(0.0..0.5).contains(&spec.jitter) {
            return Err(Error::param("jitter", "must lie in [0, 0.5)"));
        }
        let half = spec.half_width_sigmas * sigma;
        let k = (half / spec.spacing + 1e-9).floor() as i64;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut positions = Vec::new();
        let mut couplings = Vec::new();
        let mut boundary = 0.0f64;
        for ix in -k..=k {
            for iy in -k..=k {
                for iz in -k..=k {
                    let mut r = [ix as f64 * spec.spacing, iy as f64 * spec.spacing, iz as f64 * spec.spacing];
                    if spec.jitter > 0.0 {
                        for c in &mut r {
                            *c += spec.spacing * rng.random_range(-spec.jitter..spec.jitter);
                        }
                    }
                    let a = 0.5 * av0 * gaussian_density(r, sigma);
                    if ix.abs() == k || iy.abs() == k || iz.abs() == k {
                        boundary = boundary.max(a);
                    }
                    positions.push(r);
                    couplings.push(a);
                }
            }
        }
        let max_a = couplings.iter().cloned().fold(0.0, f64::max);
        let ratio = boundary / max_a;
        if k > 0 && ratio > 1e-6 {
            return Err(Error::LatticeTooSmall { ratio });
        }
        Ok(Self {
            positions,
            couplings,
            pulse_rates: Vec::new(),
            sigma,
            phi: None,
        })
    }

    /// Explicit couplings at explicit positions.
    pub fn from_parts(positions: Vec<[f64; 3]>, couplings: Vec<f64>, sigma: f64) -> Result<Self> {
        if positions.len() != couplings.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                got: couplings.len(),
            });
        }
        if couplings.is_empty() || couplings.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::param("couplings", "need at least one strictly positive coupling"));
        }
        Ok(Self {
            positions,
            couplings,
            pulse_rates: Vec::new(),
            sigma,
            phi: None,
        })
    }

    /// `n` nuclei with equal coupling `a`, spread along x at spacing `dx`.
    pub fn uniform(n: usize, a: f64, dx: f64, sigma: f64) -> Result<Self> {
        let c = 0.5 * (n as f64 - 1.0);
        let positions = (0..n).map(|j| [(j as f64 - c) * dx, 0.0, 0.0]).collect();
        Self::from_parts(positions, vec![a; n], sigma)
    }

    /// The `n` most strongly coupled nuclei (earlier sites win ties).
    pub fn truncate(&self, n: usize) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.couplings[j].partial_cmp(&self.couplings[i]).unwrap().then(i.cmp(&j)));
        order.truncate(n);
        let pick = |v: &Vec<f64>| if v.is_empty() { Vec::new() } else { order.iter().map(|&i| v[i]).collect() };
        Self {
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            couplings: pick(&self.couplings),
            pulse_rates: pick(&self.pulse_rates),
            sigma: self.sigma,
            phi: self.phi,
        }
    }

    /// Attaches `θ_j = g_n μ_n B(r_j)/ħ`.
    pub fn with_pulse(mut self, pulse: &PulseSpec) -> Self {
        self.pulse_rates = self.positions.iter().map(|r| pulse.rate_at(r[0])).collect();
        self.phi = Some(pulse.phi());
        self
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    /// `γ = Σ_j a_j²`, (rad/ps)².
    pub fn gamma(&self) -> f64 {
        self.couplings.iter().map(|a| a * a).sum()
    }

    /// `Θ = ½ Σ_j θ_j`, rad/ps.
    pub fn big_theta(&self) -> f64 {
        0.5 * self.pulse_rates.iter().sum::<f64>()
    }

    /// `π/(2√γ)`, ps: the exchange time that swaps `|↓,0⟩` into `|↑,1⟩₀`.
    pub fn flip_time(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.gamma().sqrt()
    }

    fn require_pulse(&self) -> Result<()> {
        if self.pulse_rates.len() != self.len() {
            return Err(Error::param("pulse_rates", "profile has no pulse attached"));
        }
        Ok(())
    }

    /// `Σ_j a_j² e^{+iθ_j t}`: the overlap sum produced by the exact pulse
    /// algebra, equal to `conj(γ̃(t))`.
    pub fn overlap_sum(&self, t: f64) -> Result<C64> {
        Ok(self.gamma_tilde_raw(t)?.conj())
    }

    fn gamma_tilde_raw(&self, t: f64) -> Result<C64> {
        self.require_pulse()?;
        Ok(self
            .couplings
            .iter()
            .zip(&self.pulse_rates)
            .map(|(a, th)| C64::from_polar(a * a, -th * t))
            .sum())
    }
}

/// `γ̃(τ) = Σ_j a_j² e^{−iθ_jτ}` with its Gaussian continuum reference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaTilde {
    pub discrete: C64,
    /// `γ e^{−φ²τ²σ²/4}` (phase of the offset field dropped).
    pub continuum: f64,
    pub gamma: f64,
}

impl GammaTilde {
    /// `|γ̃(τ)|/γ` from the discrete sum.
    pub fn ratio(&self) -> f64 {
        self.discrete.norm() / self.gamma
    }
}

/// `tau` in ps.
pub fn gamma_tilde(profile: &CouplingProfile, tau: f64) -> Result<GammaTilde> {
    let discrete = profile.gamma_tilde_raw(tau)?;
    let phi = profile.phi.unwrap_or(0.0);
    let x = phi * tau * profile.sigma;
    let gamma = profile.gamma();
    Ok(GammaTilde {
        discrete,
        continuum: gamma * (-x * x / 4.0).exp(),
        gamma,
    })
}

/// `B₀ = Σ_j a_j⟨I_z⁽ʲ⁾⟩ / (g*μ_B − g_nμ_n)` in tesla, with `⟨I_z⁽ʲ⁾⟩` in
/// units of ħ and `a_j` converted to energy through ħ.
pub fn matching_field(profile: &CouplingProfile, iz_means: &[f64], g_star: f64, g_n: f64) -> Result<f64> {
    if iz_means.len() != profile.len() {
        return Err(Error::DimensionMismatch {
            expected: profile.len(),
            got: iz_means.len(),
        });
    }
    let denom = g_star * BOHR_MAGNETON_SI - g_n * NUCLEAR_MAGNETON_SI;
    if denom.abs() <= 1e-12 * (g_star * BOHR_MAGNETON_SI).abs().max(f64::MIN_POSITIVE) {
        return Err(Error::SingularMatching);
    }
    let overhauser: f64 = profile.couplings.iter().zip(iz_means).map(|(a, iz)| a * 1e12 * HBAR_SI * iz).sum();
    Ok(overhauser / denom)
}

/// Wire-current estimate for a gradient pulse.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeasibilityReport {
    /// `ħ/(2 g_n μ_n σ)`, T·s/m.
    pub b_tau_threshold: f64,
    /// `ħ 2π(R+r)² / (2 g_n μ₀ μ_n σ)`, A·s.
    pub i_tau_threshold: f64,
    /// `i_tau_threshold / τ`, A.
    pub current_threshold: f64,
    /// `b_pls τ` of the pulse, T·s/m.
    pub b_tau: f64,
    /// `b_tau / b_tau_threshold`, which is `2φτσ`.
    pub margin: f64,
    /// Current producing the pulse gradient, `2π(R+r)² b_pls / μ₀`, A.
    pub current: f64,
}

/// `sigma`, `wire_radius` and `standoff` in nm.
pub fn pulse_feasibility(pulse: &PulseSpec, sigma: f64, wire_radius: f64, standoff: f64) -> Result<FeasibilityReport> {
    for (name, v) in [("sigma", sigma), ("wire_radius", wire_radius), ("tau_ns", pulse.tau_ns), ("g_n", pulse.g_n)] {
        if !(v > 0.0) {
            return Err(Error::param(name, format!("must be positive, got {v}")));
        }
    }
    if !(standoff >= 0.0) {
        return Err(Error::param("standoff", "must be nonnegative"));
    }
    let sigma_m = sigma * 1e-9;
    let d = (wire_radius + standoff) * 1e-9;
    let tau = pulse.tau_ns * 1e-9;
    let b_tau_threshold = HBAR_SI / (2.0 * pulse.g_n * NUCLEAR_MAGNETON_SI * sigma_m);
    let i_tau_threshold =
        HBAR_SI * 2.0 * std::f64::consts::PI * d * d / (2.0 * pulse.g_n * MU0_SI * NUCLEAR_MAGNETON_SI * sigma_m);
    let gradient_si = pulse.gradient * 1e9;
    let b_tau = gradient_si.abs() * tau;
    Ok(FeasibilityReport {
        b_tau_threshold,
        i_tau_threshold,
        current_threshold: i_tau_threshold / tau,
        b_tau,
        margin: b_tau / b_tau_threshold,
        current: 2.0 * std::f64::consts::PI * d * d * gradient_si.abs() / MU0_SI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const AV0: f64 = 1.0;

    #[test]
    fn single_site_coupling() {
        let spec = LatticeSpec::new(100.0);
        let p = CouplingProfile::lattice(5.0, AV0, &spec).unwrap();
        assert_eq!(p.len(), 1);
        let expected = 0.5 * AV0 / (2.0 * std::f64::consts::PI * 25.0f64).powf(1.5);
        assert!((p.couplings[0] - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn lattice_sum_converges_to_continuum() {
        let sigma = 2.0;
        let s = 0.25;
        let p = CouplingProfile::lattice(sigma, AV0, &LatticeSpec::new(s)).unwrap();
        let sum = p.gamma() * s.powi(3);
        let cont = continuum_gamma(AV0, sigma);
        assert!(((sum - cont) / cont).abs() < 0.01, "{sum} vs {cont}");
        assert!((continuum_gamma(AV0, 2.0 * sigma) / cont - 0.125).abs() < 1e-15);
    }

    #[test]
    fn box_checks() {
        let mut spec = LatticeSpec::new(0.5);
        spec.half_width_sigmas = 4.0;
        assert!(matches!(
            CouplingProfile::lattice(1.0, AV0, &spec),
            Err(Error::LatticeTooSmall { .. })
        ));
        spec.half_width_sigmas = 3.0;
        assert!(CouplingProfile::lattice(1.0, AV0, &spec).is_err());
    }

    #[test]
    fn gamma_tilde_limits() {
        let sigma = 2.0;
        let pulse = PulseSpec::with_phase_spread(4.0, sigma, 1.0, 5.0, 0.0);
        let p = CouplingProfile::lattice(sigma, AV0, &LatticeSpec::new(0.25)).unwrap().with_pulse(&pulse);
        let g0 = gamma_tilde(&p, 0.0).unwrap();
        assert_eq!(g0.discrete, C64::new(p.gamma(), 0.0));
        let g = gamma_tilde(&p, pulse.tau_ps()).unwrap();
        assert!((g.continuum / g.gamma - (-4f64).exp()).abs() < 1e-12);
        let rel = (g.discrete.norm() - g.continuum).abs() / g.continuum;
        assert!(rel < 0.05, "{rel}");

        let shifted = PulseSpec { offset: 0.3, ..pulse };
        let q = p.clone().with_pulse(&shifted);
        let gq = gamma_tilde(&q, pulse.tau_ps()).unwrap();
        assert!((gq.discrete.norm() - g.discrete.norm()).abs() < 1e-12 * g.gamma);
    }

    #[test]
    fn phase_spread_round_trip() {
        let pulse = PulseSpec::with_phase_spread(8.0, 5.0, 1.0, 5.0, 0.0);
        assert!((pulse.phi() * pulse.tau_ps() * 5.0 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn matching_field_cases() {
        let p = CouplingProfile::uniform(4, 1e-4, 1.0, 5.0).unwrap();
        assert_eq!(matching_field(&p, &[0.0; 4], -0.44, 5.0).unwrap(), 0.0);
        let b = matching_field(&p, &[0.5; 4], -0.44, 5.0).unwrap();
        let denom = -0.44 * BOHR_MAGNETON_SI - 5.0 * NUCLEAR_MAGNETON_SI;
        let expected = 0.5 * 4e-4 * 1e12 * HBAR_SI / denom;
        assert!((b - expected).abs() < 1e-12 * expected.abs());
        assert_eq!(matching_field(&p, &[-0.5; 4], -0.44, 5.0).unwrap(), -b);
        let g_star = NUCLEAR_MAGNETON_SI * 5.0 / BOHR_MAGNETON_SI;
        assert!(matches!(matching_field(&p, &[0.5; 4], g_star, 5.0), Err(Error::SingularMatching)));
    }

    #[test]
    fn feasibility_scaling() {
        let pulse = PulseSpec {
            gradient: 1e-3,
            offset: 0.0,
            tau_ns: 1.0,
            g_n: 5.0,
        };
        let r = pulse_feasibility(&pulse, 5.0, 5.0, 5.0).unwrap();
        let r2 = pulse_feasibility(&pulse, 10.0, 5.0, 5.0).unwrap();
        assert!((r2.b_tau_threshold / r.b_tau_threshold - 0.5).abs() < 1e-15);
        assert!((r.current_threshold - r.i_tau_threshold / 1e-9).abs() < 1e-20);
        // margin is 2φτσ
        let phi_tau_sigma = pulse.phi() * pulse.tau_ps() * 5.0;
        assert!((r.margin - 2.0 * phi_tau_sigma).abs() < 1e-12 * r.margin);
        // the gradient a wire current produces at the nominal current
        let b = MU0_SI * r.current / (2.0 * std::f64::consts::PI * 1e-16);
        assert!((b - 1e6).abs() < 1e-6);
    }

    #[test]
    fn truncation_keeps_strongest() {
        let p = CouplingProfile::lattice(2.0, AV0, &LatticeSpec::new(1.0)).unwrap();
        let t = p.truncate(7);
        assert_eq!(t.len(), 7);
        assert_eq!(t.positions[0], [0.0, 0.0, 0.0]);
        let min_kept = t.couplings.iter().cloned().fold(f64::INFINITY, f64::min);
        let dropped_max = p.couplings.iter().filter(|a| **a < min_kept).cloned().fold(0.0, f64::max);
        assert!(dropped_max <= min_kept);
    }
}
