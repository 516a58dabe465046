//! Repeated erasure of an eight-nucleus dot: collective bookkeeping against
//! the brute-force oracle, cycle by cycle. The chain spreads the nuclei along
//! the pulse gradient, the lattice keeps the eight strongest sites of a cubic
//! grid around the dot centre.

use qdshe::hyperfine::{erasure_study, CouplingProfile, LatticeSpec, PulseSpec};

fn main() -> qdshe::Result<()> {
    let cycles: usize = std::env::args().nth(1).map_or(3, |s| s.parse().expect("cycle count"));
    let pulse = PulseSpec::with_phase_spread(8.0, 5.0, 1.0, 5.0, 0.0);
    let profiles = [
        ("chain", CouplingProfile::uniform(8, 1e-5, 1.5, 5.0)?),
        ("lattice", CouplingProfile::lattice(5.0, 0.05, &LatticeSpec::new(0.565))?.truncate(8)),
    ];
    for (name, profile) in profiles {
        let profile = profile.with_pulse(&pulse);
        println!("{name}: gamma = {:.4e} rad^2/ps^2, flip time {:.3} ps", profile.gamma(), profile.flip_time());
        println!("cycle  |gt|/g    fidelity   P_up(oracle)  P_up(coll)  <n>(oracle)  <n>(coll)  terms");
        for r in erasure_study(&profile, &pulse, 0.5, cycles)? {
            println!(
                "{:>5}  {:.4}  {:.8}  {:.8}    {:.8}  {:.6}     {:.6}   {}",
                r.cycle,
                r.gamma_ratio,
                r.fidelity,
                r.up_population_oracle,
                r.up_population_collective,
                r.mean_excitation_oracle,
                r.mean_excitation_collective,
                r.components
            );
        }
    }
    Ok(())
}
