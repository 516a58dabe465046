//! Eigen-decomposition propagation against adaptive Runge-Kutta on a small
//! bath, plus the effect of dropping fast-decaying modes.

use std::time::Instant;

use qdshe::engine::{ModelParams, StageConfig};
use qdshe::propagator::{
    diagonalize, integrate_direct, output_grid, propagate_many, truncation_error_estimate, DirectOptions, KeepPolicy,
};

fn main() -> qdshe::Result<()> {
    let model = ModelParams { n_levels: 8, ..ModelParams::reference_defaults() };
    let stage = StageConfig::heat_extraction(0.75, 2.0, 20.0);
    let v = model.superoperator(&stage, &model.operators()?)?;
    let rho0 = model.initial_state()?;
    let grid = output_grid(20.0, 0.05);

    let start = Instant::now();
    let ep = diagonalize(&v, KeepPolicy::All)?;
    let spectral = propagate_many(&rho0, &ep, &grid)?;
    let t_spec = start.elapsed().as_secs_f64();
    println!("{} modes in blocks {:?}", ep.total_count(), ep.block_sizes());
    println!("biorthonormality residual {:.2e}", ep.biorthonormality_residual());

    let start = Instant::now();
    let direct = integrate_direct(&rho0, &v, 20.0, &DirectOptions { tol: 1e-10, ..Default::default() })?;
    let t_direct = start.elapsed().as_secs_f64();
    let worst = spectral
        .iter()
        .zip(&direct.states)
        .map(|(a, b)| a.matrix().iter().zip(b.matrix()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    println!("max |drho| = {worst:.2e}; spectral {t_spec:.2} s, direct {t_direct:.2} s ({} steps)", direct.accepted_steps);

    for k in [ep.total_count() / 2, ep.total_count() / 4] {
        let cut = ep.with_policy(KeepPolicy::Count(k));
        println!("keep {k:>4} modes: estimated error {:.2e}", truncation_error_estimate(&cut, &rho0, (0.0, 20.0))?);
    }
    Ok(())
}
