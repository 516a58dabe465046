//! Acoustic-phonon spectral density and the effective-mode parameters
//! derived from it.

use crate::error::{Error, Result};
use crate::units::{mev_to_rad_per_ps, HBAR_MEV_PS, KB_MEV_PER_K};

/// Parameters of `J(ω) = α_p ω³ exp(−ω²/2ω_b²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    /// Coupling parameter α_p, ps².
    pub alpha_p: f64,
    /// Cutoff angular frequency ω_b, rad/ps.
    pub omega_b: f64,
}

impl SpectralParams {
    pub fn new(alpha_p: f64, omega_b: f64) -> Result<Self> {
        if !(alpha_p >= 0.0) || !alpha_p.is_finite() {
            return Err(Error::param("alpha_p", format!("must be nonnegative, got {alpha_p}")));
        }
        if !(omega_b > 0.0) || !omega_b.is_finite() {
            return Err(Error::param("omega_b", format!("must be positive, got {omega_b}")));
        }
        Ok(Self { alpha_p, omega_b })
    }

    /// Builds from the quoted `α_p/(2π)²` (ps²) and `ħω_b` (meV).
    pub fn from_quoted(alpha_p_over_4pi2_ps2: f64, hbar_omega_b_mev: f64) -> Result<Self> {
        let four_pi2 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        Self::new(alpha_p_over_4pi2_ps2 * four_pi2, mev_to_rad_per_ps(hbar_omega_b_mev))
    }
}

pub fn spectral_density(omega: f64, p: &SpectralParams) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::param("omega", format!("must be nonnegative, got {omega}")));
    }
    Ok(density(omega, p))
}

fn density(omega: f64, p: &SpectralParams) -> f64 {
    let x = omega / p.omega_b;
    p.alpha_p * omega.powi(3) * (-0.5 * x * x).exp()
}

/// Closed form `D₁² = ∫₀^∞ J = 2α_pω_b⁴`.
pub fn coupling_d1_squared(p: &SpectralParams) -> f64 {
    2.0 * p.alpha_p * p.omega_b.powi(4)
}

/// Closed form `∫₀^∞ ω²J = 8α_pω_b⁶`.
pub fn effective_omega1_squared(p: &SpectralParams) -> f64 {
    8.0 * p.alpha_p * p.omega_b.powi(6)
}

/// The `D₁²`-normalized second moment, `∫ω²J / ∫J = 4ω_b²`.
pub fn effective_omega1_squared_normalized(p: &SpectralParams) -> f64 {
    4.0 * p.omega_b * p.omega_b
}

/// A quadrature estimate with its error budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// Kronrod-vs-Gauss error estimate on the finite interval.
    pub abs_error: f64,
    /// Analytic bound on the neglected `[upper, ∞)` tail.
    pub tail_bound: f64,
}

/// Quadrature of `∫₀^∞ ωᵏ J(ω) dω` over `[0, 10ω_b]` plus a tail bound.
pub fn moment_quadrature(p: &SpectralParams, k: i32) -> QuadratureEstimate {
    let upper = 10.0 * p.omega_b;
    let f = |w: f64| w.powi(k) * density(w, p);
    let (value, abs_error) = adaptive_gauss_kronrod(&f, 0.0, upper, 1e-14, 60);
    // ∫_L^∞ ω^m e^{−ω²/2b²} ≤ b² L^{m−1} e^{−L²/2b²} / (1 − (m−1) b²/L²), m = k + 3
    let m = (k + 3) as f64;
    let b2 = p.omega_b * p.omega_b;
    let ratio = (m - 1.0) * b2 / (upper * upper);
    let tail_bound = p.alpha_p * b2 * upper.powf(m - 1.0) * (-0.5 * upper * upper / b2).exp()
        / (1.0 - ratio);
    QuadratureEstimate {
        value,
        abs_error,
        tail_bound,
    }
}

pub fn coupling_d1_squared_quadrature(p: &SpectralParams) -> QuadratureEstimate {
    moment_quadrature(p, 0)
}

pub fn effective_omega1_squared_quadrature(p: &SpectralParams) -> QuadratureEstimate {
    moment_quadrature(p, 2)
}

/// Mean equilibrium energy of the effective mode,
/// `E_th = (ħω₁/2) coth(ħω₁ / 2k_BT)`, in meV.
pub fn thermal_energy(temperature_k: f64, omega1: f64) -> Result<f64> {
    if temperature_k < 0.0 || !temperature_k.is_finite() {
        return Err(Error::param(
            "temperature",
            format!("must be nonnegative, got {temperature_k}"),
        ));
    }
    let half = 0.5 * HBAR_MEV_PS * omega1;
    if temperature_k == 0.0 {
        return Ok(half);
    }
    let x = half / (KB_MEV_PER_K * temperature_k);
    Ok(half / x.tanh())
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Recursive bisection with a 7/15-point Gauss–Kronrod pair.
pub fn adaptive_gauss_kronrod(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: usize,
) -> (f64, f64) {
    let (whole, err) = gk15(f, a, b);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    refine(f, a, b, whole, err, rel_tol * scale, max_depth)
}

fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    abs_tol: f64,
    depth: usize,
) -> (f64, f64) {
    if err <= abs_tol || depth == 0 {
        return (whole, err);
    }
    let m = 0.5 * (a + b);
    let (left, el) = gk15(f, a, m);
    let (right, er) = gk15(f, m, b);
    let (l, el) = refine(f, a, m, left, el, 0.5 * abs_tol, depth - 1);
    let (r, er) = refine(f, m, b, right, er, 0.5 * abs_tol, depth - 1);
    (l + r, el + er)
}
