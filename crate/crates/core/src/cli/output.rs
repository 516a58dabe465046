use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::engine::Trajectory;
use crate::error::Result;

pub const TRAJECTORY_COLUMNS: &[&str] = &["t_ps", "rho_up", "rho_dn", "rho_XX", "dN1", "Q1bar", "min_eig"];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(cfg: &RunConfig, kind: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# qdshe {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# kind = {kind}");
    for line in cfg.header_lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

pub fn write_table(path: &Path, head: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = String::from(head);
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_trajectory(path: &Path, head: &str, tr: &Trajectory) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..tr.len())
        .map(|i| {
            [tr.times[i], tr.rho_up[i], tr.rho_dn[i], tr.rho_xx[i], tr.dn1[i], tr.q1bar[i], tr.min_eigenvalue[i]]
                .iter()
                .map(|x| fmt_f64(*x))
                .collect()
        })
        .collect();
    write_table(path, head, TRAJECTORY_COLUMNS, &rows)
}

/// Comment header followed by a pretty-printed JSON record.
pub fn write_summary<T: Serialize>(path: &Path, head: &str, record: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(record).map_err(|e| crate::Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, format!("{head}{body}\n"))?;
    Ok(())
}

/// Strips `#` lines so the remainder parses as JSON.
pub fn read_summary(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    serde_json::from_str(&body).map_err(|e| crate::Error::Io(std::io::Error::other(e)))
}
