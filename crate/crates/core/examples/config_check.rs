//! Builds a run configuration from key=value overrides and runs the
//! invariant suite at a reduced bath size.

use qdshe::cli::{check_suite, RunConfig};

fn main() -> qdshe::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let mut set = vec!["n_levels=6".to_string()];
    set.extend(overrides);
    let cfg = RunConfig::load(None, &set)?;
    for line in cfg.header_lines() {
        println!("# {line}");
    }
    for l in check_suite(&cfg)? {
        println!("{:<48} {:>12.3e} <= {:<9.1e} {}", l.name, l.value, l.threshold, if l.pass { "PASS" } else { "FAIL" });
    }
    Ok(())
}
