//! Effective-mode parameters from the phonon spectral density, closed form
//! against quadrature, and the thermal energy of the mode.

use qdshe::spectral::{
    coupling_d1_squared, coupling_d1_squared_quadrature, effective_omega1_squared,
    effective_omega1_squared_quadrature, thermal_energy, SpectralParams,
};
use qdshe::units::HBAR_MEV_PS;

fn main() -> qdshe::Result<()> {
    let p = SpectralParams::from_quoted(0.06, 1.48)?;
    let d1 = coupling_d1_squared(&p);
    let q0 = coupling_d1_squared_quadrature(&p);
    let m2 = effective_omega1_squared(&p);
    let q2 = effective_omega1_squared_quadrature(&p);
    println!("alpha_p = {:.6} ps^2, omega_b = {:.6} rad/ps", p.alpha_p, p.omega_b);
    println!("D1^2      closed {d1:.12e}  quadrature {:.12e} (+- {:.1e})", q0.value, q0.abs_error + q0.tail_bound);
    println!("int w^2 J closed {m2:.12e}  quadrature {:.12e} (+- {:.1e})", q2.value, q2.abs_error + q2.tail_bound);
    println!("hbar D1 = {:.6} meV", HBAR_MEV_PS * d1.sqrt());
    let omega1 = 5f64.sqrt();
    for t in [0.0, 30.0, 60.0, 150.0, 300.0] {
        println!("E_th({t:>5} K) = {:.6} meV", thermal_energy(t, omega1)?);
    }
    Ok(())
}
