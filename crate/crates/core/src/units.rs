//! Physical constants and unit conventions.
//!
//! Phonon-stage quantities use meV for energies and ps for times. Angular
//! frequencies are obtained from energies by dividing by [`HBAR_MEV_PS`].
//! The hyperfine stage uses the same ps clock; pulse-feasibility estimates
//! are done in SI.

/// Reduced Planck constant, meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

/// Boltzmann constant, meV/K.
pub const KB_MEV_PER_K: f64 = 0.086_173_33;

/// Reduced Planck constant, J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Nuclear magneton, J/T.
pub const NUCLEAR_MAGNETON_SI: f64 = 5.050_783_746_1e-27;

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON_SI: f64 = 9.274_010_078_3e-24;

/// Vacuum permeability, T·m/A.
pub const MU0_SI: f64 = 1.256_637_062_12e-6;

/// Converts an energy in meV to an angular frequency in rad/ps.
pub fn mev_to_rad_per_ps(energy_mev: f64) -> f64 {
    energy_mev / HBAR_MEV_PS
}

/// Converts an angular frequency in rad/ps to an energy in meV.
pub fn rad_per_ps_to_mev(omega: f64) -> f64 {
    omega * HBAR_MEV_PS
}
