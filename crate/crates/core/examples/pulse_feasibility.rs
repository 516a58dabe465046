//! Wire current needed for the dephasing pulse and the matching field that
//! balances Zeeman and Overhauser splittings.

use qdshe::hyperfine::{matching_field, pulse_feasibility, CouplingProfile, LatticeSpec, PulseSpec};

fn main() -> qdshe::Result<()> {
    for tau_ns in [0.1, 1.0, 10.0] {
        let pulse = PulseSpec::with_phase_spread(8.0, 5.0, tau_ns, 5.0, 0.0);
        let f = pulse_feasibility(&pulse, 5.0, 10.0, 0.0)?;
        println!(
            "tau = {tau_ns:>4} ns: b*tau threshold {:.3e} T s/m, I*tau threshold {:.3e} A s, I >= {:.3} A; pulse needs {:.3} A (margin {:.1})",
            f.b_tau_threshold, f.i_tau_threshold, f.current_threshold, f.current, f.margin
        );
    }
    let profile = CouplingProfile::lattice(5.0, 0.05, &LatticeSpec::new(0.565))?;
    let iz = vec![0.5; profile.len()];
    println!("{} nuclei, matching field {:.4} T at g* = -0.44", profile.len(), matching_field(&profile, &iz, -0.44, 5.0)?);
    Ok(())
}
