//! Stage 1 at the default parameters: red-detuned drive of the up-exciton
//! transition, printing the exciton peak and the phonon number change.

use std::time::Instant;

use qdshe::engine::{find_switch_time, run_stage, ModelParams, RunOptions, StageConfig};

fn main() -> qdshe::Result<()> {
    let temperature = std::env::args().nth(1).map_or(Ok(60.0), |s| s.parse()).expect("temperature in K");
    let gamma_ph = std::env::args().nth(2).map_or(Ok(0.001), |s| s.parse()).expect("hbar*gamma_ph in meV");
    let model = ModelParams {
        temperature,
        hbar_gamma_ph: gamma_ph,
        ..ModelParams::reference_defaults()
    };
    let stage = StageConfig::heat_extraction(0.75, 2.0, 20.0);
    let start = Instant::now();
    let run = run_stage(&model.initial_state()?, &stage, &model, &RunOptions::default())?;
    let tr = &run.trajectory;
    let peak = tr.argmax_rho_xx().expect("nonempty");
    let switch = find_switch_time(tr)?;
    println!("T = {temperature} K, hbar*gamma_ph = {gamma_ph} meV, N_c = {}", model.n_levels);
    println!("max rho_XX = {:.4} at t = {:.2} ps, dN = {:+.4}", tr.rho_xx[peak], tr.times[peak], tr.dn1[peak]);
    println!("switch time {:.2} ps (rho_XX {:.4}, dN {:+.4})", switch.t, tr.rho_xx[switch.index], tr.dn1[switch.index]);
    println!("min dN over window {:+.4}", tr.dn1.iter().cloned().fold(f64::INFINITY, f64::min));
    println!("Q1 peak-to-peak on [5, 15] ps: {:.4}", tr.peak_to_peak(&tr.q1bar, 5.0, 15.0));
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
