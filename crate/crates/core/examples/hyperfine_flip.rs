//! Exact collective flip of a fully polarized nuclear ensemble and the
//! near-fixed-point left behind by a gradient pulse, checked against
//! brute-force evolution in the full 2^(N+1) space.

use num_complex::Complex64 as C64;
use qdshe::hyperfine::{
    brute_force_oracle, expand_collective, gamma_tilde, norm, CouplingProfile, FullSpace, PulseSpec, Segment, Spin,
};

fn main() -> qdshe::Result<()> {
    let profile = CouplingProfile::uniform(8, 1e-5, 1.5, 5.0)?;
    let space = FullSpace::new(&profile)?;
    let t_flip = profile.flip_time();
    let psi = brute_force_oracle(&space, &[Segment::Exchange(t_flip)], &expand_collective(&space, Spin::Down, &[])?)?;
    let target = expand_collective(&space, Spin::Up, &[0.0])? * C64::new(0.0, -1.0);
    println!("flip time {t_flip:.4e} ps, |U|dn,0> + i|up,1>| = {:.2e}", norm(&(&psi - &target)));

    for pts in [1.0, 2.0, 4.0, 8.0] {
        let pulse = PulseSpec::with_phase_spread(pts, 5.0, 1.0, 5.0, 0.0);
        let p = profile.clone().with_pulse(&pulse);
        let space = FullSpace::new(&p)?;
        let r = gamma_tilde(&p, pulse.tau_ps())?.ratio();
        let psi = expand_collective(&space, Spin::Up, &[pulse.tau_ps()])?;
        let worst = (0..=128)
            .map(|k| norm(&(&space.exchange(&psi, k as f64 / 32.0 * t_flip) - &psi)))
            .fold(0.0, f64::max);
        println!("phi*tau*sigma = {pts}: |gt|/g = {r:.4e}, max residual {worst:.4e}");
    }
    Ok(())
}
