//! Command-line front end: configuration, run orchestration and file output.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::engine::{find_switch_time, run_cycle, run_stage, spinlabor_bound, CycleLedger, StageConfig, Trajectory};
use crate::error::{Error, Result};
use crate::hyperfine::{
    brute_force_oracle, erasure_study, expand_collective, gamma_tilde, matching_field, norm, pulse_feasibility,
    CouplingProfile, FullSpace, PulseSpec, Segment, Spin,
};
use crate::propagator::{diagonalize, KeepPolicy};
pub use config::{RunConfig, Source};
use output::{fmt_f64, header, write_summary, write_table, write_trajectory};

#[derive(Debug, Parser)]
#[command(name = "qdshe", version, about = "Quantum-dot spin-heat engine simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heat-extraction stage alone.
    Stage1(Common),
    /// Heat extraction, switch, work output and ledger.
    Cycle(Common),
    /// Hyperfine erasure study against the exact oracle.
    Erasure(Common),
    /// Grid of stage1 or cycle runs over `sweep.<key>` axes.
    Sweep(Common),
    /// Superoperator, ledger and hyperfine invariants.
    Check(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// 2 for configuration problems, 4 for positivity aborts, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::LatticeTooSmall { .. }
        | Error::PulseIneffective
        | Error::OracleTooLarge(_)
        | Error::SingularMatching => 2,
        Error::Positivity { .. } => 4,
        _ => 3,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<i32> {
    let (common, kind) = match cmd {
        Command::Stage1(c) => (c, "stage1"),
        Command::Cycle(c) => (c, "cycle"),
        Command::Erasure(c) => (c, "erasure"),
        Command::Sweep(c) => (c, "sweep"),
        Command::Check(c) => (c, "check"),
    };
    let cfg = RunConfig::load(common.config.as_deref(), &common.set)?;
    std::fs::create_dir_all(&common.out)?;
    match kind {
        "stage1" => run_stage1(&cfg, &common.out).map(|_| 0),
        "cycle" => run_cycle_cmd(&cfg, &common.out).map(|_| 0),
        "erasure" => run_erasure(&cfg, &common.out).map(|_| 0),
        "sweep" => run_sweep(&cfg, &common.out, common.jobs),
        _ => run_check(&cfg, &common.out),
    }
}

fn stage1_summary(tr: &Trajectory, fell_back: bool) -> Result<serde_json::Value> {
    let peak = tr.argmax_rho_xx().ok_or_else(|| Error::param("trajectory", "empty"))?;
    let sw = find_switch_time(tr)?;
    Ok(json!({
        "peak_rho_xx": tr.rho_xx[peak],
        "t_peak_ps": tr.times[peak],
        "dn1_at_peak": tr.dn1[peak],
        "switch_time_ps": sw.t,
        "switch_is_local_maximum": sw.local_maximum,
        "q1_peak_to_peak_5_15": tr.peak_to_peak(&tr.q1bar, 5.0, 15.0),
        "min_eigenvalue": tr.min_eigenvalue.iter().cloned().fold(f64::INFINITY, f64::min),
        "population_defect": tr.population_defect(),
        "fell_back_to_direct": fell_back,
        "rows": tr.len(),
    }))
}

/// Writes `stage1.csv` and `summary.json` under `out`.
pub fn run_stage1(cfg: &RunConfig, out: &Path) -> Result<(serde_json::Value, Trajectory)> {
    let model = cfg.model()?;
    let run = run_stage(&model.initial_state()?, &cfg.heat_stage()?, &model, &cfg.options()?)?;
    let head = header(cfg, "stage1");
    write_trajectory(&out.join("stage1.csv"), &head, &run.trajectory)?;
    let summary = stage1_summary(&run.trajectory, run.fell_back)?;
    write_summary(&out.join("summary.json"), &head, &summary)?;
    Ok((summary, run.trajectory))
}

/// Writes `cycle.csv` and `summary.json` under `out`.
pub fn run_cycle_cmd(cfg: &RunConfig, out: &Path) -> Result<(serde_json::Value, Trajectory)> {
    let res = run_cycle(&cfg.engine()?)?;
    let head = header(cfg, "cycle");
    write_trajectory(&out.join("cycle.csv"), &head, &res.trajectory)?;
    let last = res.trajectory.len() - 1;
    let summary = json!({
        "switch_time_ps": res.switch.t,
        "switch_is_local_maximum": res.switch.local_maximum,
        "t_pi_ps": res.t_pi,
        "work_duration_ps": res.work_duration,
        "final_rho_up": res.trajectory.rho_up[last],
        "final_rho_dn": res.trajectory.rho_dn[last],
        "final_rho_xx": res.trajectory.rho_xx[last],
        "ledger": res.ledger,
        "ledger_identities_hold": res.ledger.identities_hold(),
        "fell_back_to_direct": res.fell_back,
    });
    write_summary(&out.join("summary.json"), &head, &summary)?;
    Ok((summary, res.trajectory))
}

/// Writes `erasure.csv` (one row per cycle) and `summary.json`.
pub fn run_erasure(cfg: &RunConfig, out: &Path) -> Result<serde_json::Value> {
    let profile = cfg.profile()?;
    let pulse = cfg.pulse()?;
    let sigma = cfg.f64("sigma_nm")?;
    let tau = pulse.tau_ps();
    let gt = gamma_tilde(&profile, tau)?;
    let reports = erasure_study(&profile, &pulse, cfg.f64("transfer_probability")?, cfg.usize("erasure_cycles")?)?;
    let feas = pulse_feasibility(&pulse, sigma, cfg.f64("wire_distance_nm")?, 0.0)?;
    let b0 = match cfg.g_star()? {
        Some(g) => Some(matching_field(&profile, &vec![0.5; profile.len()], g, pulse.g_n)?),
        None => None,
    };
    let head = header(cfg, "erasure");
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut v = vec![r.cycle.to_string()];
            v.extend(
                [
                    r.gamma_ratio,
                    r.fidelity,
                    r.up_population_oracle,
                    r.up_population_collective,
                    r.mean_excitation_oracle,
                    r.mean_excitation_collective,
                ]
                .iter()
                .map(|x| fmt_f64(*x)),
            );
            v
        })
        .collect();
    write_table(
        &out.join("erasure.csv"),
        &head,
        &[
            "cycle",
            "gamma_ratio",
            "fidelity",
            "up_population_oracle",
            "up_population_collective",
            "mean_excitation_oracle",
            "mean_excitation_collective",
        ],
        &rows,
    )?;
    let summary = json!({
        "n_spins": profile.len(),
        "gamma_rad2_per_ps2": profile.gamma(),
        "flip_time_ps": profile.flip_time(),
        "gamma_tilde_ratio": gt.ratio(),
        "gamma_tilde_continuum_ratio": gt.continuum / gt.gamma,
        "phi_tau_sigma": pulse.phi() * tau * sigma,
        "cycles": reports,
        "feasibility": feas,
        "matching_field_T": b0,
    });
    write_summary(&out.join("summary.json"), &head, &summary)?;
    Ok(summary)
}

struct PointResult {
    code: i32,
    message: String,
    summary: Option<serde_json::Value>,
    rho_xx: Vec<f64>,
}

/// Runs every grid point (up to `jobs` at once) into `point_NNN/`, then
/// writes `index.csv` and, when `n_levels` is swept, `convergence.csv`.
pub fn run_sweep(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<i32> {
    let grid = cfg.grid();
    let kind = cfg.raw("sweep_kind").unwrap_or("stage1").to_string();
    let results: Mutex<Vec<Option<PointResult>>> = Mutex::new((0..grid.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(grid.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= grid.len() {
                    break;
                }
                let dir = out.join(format!("point_{i:03}"));
                let res = (|| {
                    let point_cfg = cfg.with_point(&grid[i])?;
                    std::fs::create_dir_all(&dir)?;
                    if kind == "cycle" {
                        run_cycle_cmd(&point_cfg, &dir)
                    } else {
                        run_stage1(&point_cfg, &dir)
                    }
                })();
                let r = match res {
                    Ok((summary, tr)) => PointResult {
                        code: 0,
                        message: "ok".into(),
                        summary: Some(summary),
                        rho_xx: tr.rho_xx,
                    },
                    Err(e) => {
                        log::warn!("sweep point {i} failed: {e}");
                        PointResult {
                            code: exit_code(&e),
                            message: e.to_string().replace(',', ";"),
                            summary: None,
                            rho_xx: Vec::new(),
                        }
                    }
                };
                results.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    let results: Vec<PointResult> = results.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every point ran")).collect();

    let head = header(cfg, &format!("sweep/{kind}"));
    let axes: Vec<&str> = cfg.axes.iter().map(|(a, _)| *a).collect();
    let mut columns: Vec<&str> = vec!["point"];
    columns.extend(&axes);
    columns.extend(["status", "dir", "peak_rho_xx_or_final_rho_dn", "switch_time_ps"]);
    let rows: Vec<Vec<String>> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(grid[i].iter().map(|(_, v)| v.clone()));
            row.push(r.message.clone());
            row.push(format!("point_{i:03}"));
            let (a, b) = match &r.summary {
                Some(s) => (
                    s.get("peak_rho_xx").or_else(|| s.get("final_rho_dn")).and_then(|v| v.as_f64()),
                    s.get("switch_time_ps").and_then(|v| v.as_f64()),
                ),
                None => (None, None),
            };
            row.push(a.map_or("nan".into(), fmt_f64));
            row.push(b.map_or("nan".into(), fmt_f64));
            row
        })
        .collect();
    write_table(&out.join("index.csv"), &head, &columns, &rows)?;

    if let Some(pos) = axes.iter().position(|a| *a == "n_levels") {
        let mut conv = Vec::new();
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let same_rest = (0..axes.len()).all(|k| k == pos || grid[i][k].1 == grid[j][k].1);
                let consecutive = cfg.axes[pos].1.windows(2).any(|w| w[0] == grid[i][pos].1 && w[1] == grid[j][pos].1);
                if same_rest && consecutive && !results[i].rho_xx.is_empty() && results[i].rho_xx.len() == results[j].rho_xx.len() {
                    let drift = results[i]
                        .rho_xx
                        .iter()
                        .zip(&results[j].rho_xx)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    conv.push(vec![i.to_string(), j.to_string(), grid[i][pos].1.clone(), grid[j][pos].1.clone(), fmt_f64(drift)]);
                }
            }
        }
        write_table(
            &out.join("convergence.csv"),
            &head,
            &["point_a", "point_b", "n_levels_a", "n_levels_b", "max_abs_drho_xx"],
            &conv,
        )?;
    }
    for r in &results {
        println!("{}", r.message);
    }
    Ok(results.iter().map(|r| r.code).find(|c| *c != 0).unwrap_or(0))
}

/// One line of the invariant suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckLine {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// Superoperator invariants on the four (T, γ_ph) corners for both stages,
/// ledger identities and the exact first hyperfine flip.
pub fn check_suite(cfg: &RunConfig) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for t in [60.0, 150.0] {
        for g in [0.001, 0.1] {
            let c = cfg.with_point(&[("temperature_K", t.to_string()), ("gamma_ph_meV", g.to_string())])?;
            let model = c.model()?;
            let ops = model.operators()?;
            for stage in [c.heat_stage()?, StageConfig::work_output(c.f64("hbar_omega2_meV")?, 0.0)] {
                let tag = format!("T={t} gph={g} {}", stage.stage);
                let v = model.superoperator(&stage, &ops)?;
                lines.push(CheckLine::at_most(format!("{tag}: trace residual"), v.trace_residual(), 1e-10));
                let ep = diagonalize(&v, KeepPolicy::All)?;
                let max_re = ep.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                lines.push(CheckLine::at_most(format!("{tag}: max Re eigenvalue"), max_re, 1e-8));
                lines.push(CheckLine::at_most(format!("{tag}: biorthonormality"), ep.biorthonormality_residual(), 1e-8));
            }
        }
    }
    let ledger = CycleLedger::from_transfer(cfg.f64("delta_e_meV")?, 0.4321);
    lines.push(CheckLine {
        name: "ledger identities".into(),
        value: (ledger.w_work - ledger.q_heat).abs() + (ledger.spinlabor + ledger.spintherm).abs(),
        threshold: 0.0,
        pass: ledger.identities_hold(),
    });
    lines.push(CheckLine::at_most(
        "spinlabor bound at ln2",
        (spinlabor_bound(std::f64::consts::LN_2)? - 1.0).abs(),
        1e-15,
    ));
    let pulse = PulseSpec::with_phase_spread(8.0, 5.0, 1.0, 5.0, 0.0);
    let profile = CouplingProfile::uniform(8, 1e-5, 1.5, 5.0)?.with_pulse(&pulse);
    let space = FullSpace::new(&profile)?;
    let out = brute_force_oracle(
        &space,
        &[Segment::Exchange(profile.flip_time())],
        &expand_collective(&space, Spin::Down, &[])?,
    )?;
    let target = expand_collective(&space, Spin::Up, &[0.0])? * num_complex::Complex64::new(0.0, -1.0);
    lines.push(CheckLine::at_most("hyperfine exact flip N=8", norm(&(&out - &target)), 1e-10));
    Ok(lines)
}

fn run_check(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let lines = check_suite(cfg)?;
    let head = header(cfg, "check");
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| vec![l.name.clone(), fmt_f64(l.value), fmt_f64(l.threshold), if l.pass { "PASS" } else { "FAIL" }.into()])
        .collect();
    write_table(&out.join("check.csv"), &head, &["name", "value", "threshold", "status"], &rows)?;
    for l in &lines {
        println!("{} {}: {:.3e} (limit {:.1e})", if l.pass { "PASS" } else { "FAIL" }, l.name, l.value, l.threshold);
    }
    Ok(if lines.iter().all(|l| l.pass) { 0 } else { 3 })
}
