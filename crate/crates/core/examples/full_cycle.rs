//! One engine cycle: heat extraction up to the switch time, then the
//! resonant work-output pulse. Pass N_c as the first argument (default 15).

use qdshe::engine::{run_cycle, EngineConfig};

fn main() -> qdshe::Result<()> {
    let mut cfg = EngineConfig::reference_defaults();
    if let Some(n) = std::env::args().nth(1) {
        cfg.model.n_levels = n.parse().expect("N_c");
    }
    let c = run_cycle(&cfg)?;
    let last = c.trajectory.len() - 1;
    println!("switch at {:.2} ps (local maximum: {})", c.switch.t, c.switch.local_maximum);
    println!("pi pulse {:.4} ps nominal, {:.4} ps used", c.t_pi, c.work_duration);
    println!(
        "final rho_up {:.4}  rho_dn {:.4}  rho_XX {:.4}  dN {:+.4}",
        c.trajectory.rho_up[last], c.trajectory.rho_dn[last], c.trajectory.rho_xx[last], c.trajectory.dn1[last]
    );
    let l = c.ledger;
    println!("Q = {:.4} meV, W = {:.4} meV, spinlabor = {:+.4} hbar, spintherm = {:+.4} hbar", l.q_heat, l.w_work, l.spinlabor, l.spintherm);
    println!("identities hold: {}", l.identities_hold());
    if c.fell_back {
        println!("direct integration was used for at least one stage");
    }
    Ok(())
}
