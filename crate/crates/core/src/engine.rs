//! The two optical stages of the engine cycle, their observables and the
//! thermodynamic ledger.
//!
//! Each stage is written in the rotating frame of its own laser. The frame
//! change between stages only rotates coherences involving the undriven
//! ground state, which never feed back into the populations, so states are
//! handed from stage to stage unchanged.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouvillian::{
    build_hamiltonian, build_superoperator, DissipationSpec, StageHamiltonianSpec, Superoperator, SystemOperators,
};
use crate::propagator::{diagonalize, integrate_direct, output_grid, propagate_many, DirectOptions, KeepPolicy};
use crate::quantum_core::{expectation, thermal_state, DensityMatrix, Level};
use crate::spectral::{coupling_d1_squared, thermal_energy, SpectralParams};
use crate::units::{mev_to_rad_per_ps, HBAR_MEV_PS};

/// Smallest density-matrix eigenvalue tolerated before a run is aborted.
pub const POSITIVITY_ABORT: f64 = -1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    HeatExtraction,
    WorkOutput,
}

impl std::fmt::Display for StageId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StageId::HeatExtraction => "heat extraction",
            StageId::WorkOutput => "work output",
        })
    }
}

/// One constant-amplitude laser stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageConfig {
    pub stage: StageId,
    pub driven: Level,
    /// `ħΩ` in meV.
    pub rabi_energy: f64,
    /// Laser detuning from the zero phonon line, meV (negative is red).
    pub detuning_energy: f64,
    /// Simulated window, ps.
    pub duration: f64,
}

impl StageConfig {
    /// Drives `↑ ↔ X` red-detuned by `delta_e`.
    pub fn heat_extraction(rabi_energy: f64, delta_e: f64, duration: f64) -> Self {
        Self {
            stage: StageId::HeatExtraction,
            driven: Level::Up,
            rabi_energy,
            detuning_energy: -delta_e,
            duration,
        }
    }

    /// Drives `↓ ↔ X` on resonance.
    pub fn work_output(rabi_energy: f64, duration: f64) -> Self {
        Self {
            stage: StageId::WorkOutput,
            driven: Level::Down,
            rabi_energy,
            detuning_energy: 0.0,
            duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.stage {
            StageId::HeatExtraction => {
                if self.driven != Level::Up {
                    return Err(Error::param("driven", "heat extraction drives the up-exciton transition"));
                }
                if !(self.detuning_energy < 0.0) {
                    return Err(Error::param(
                        "detuning_energy",
                        format!("heat extraction needs a red detuning, got {}", self.detuning_energy),
                    ));
                }
            }
            StageId::WorkOutput => {
                if self.driven != Level::Down {
                    return Err(Error::param("driven", "work output drives the down-exciton transition"));
                }
                if self.detuning_energy != 0.0 {
                    return Err(Error::param("detuning_energy", "work output is resonant"));
                }
            }
        }
        if !(self.rabi_energy >= 0.0) || !self.rabi_energy.is_finite() {
            return Err(Error::param("rabi_energy", format!("must be nonnegative, got {}", self.rabi_energy)));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::param("duration", format!("must be nonnegative, got {}", self.duration)));
        }
        Ok(())
    }

    /// Hamiltonian parameters: the exciton sits at `−detuning` in the laser frame.
    pub fn hamiltonian_spec(&self, model: &ModelParams) -> StageHamiltonianSpec {
        StageHamiltonianSpec {
            driven: self.driven,
            rabi_energy: self.rabi_energy,
            detuning_energy: -self.detuning_energy,
            d1: model.d1,
            omega1: model.omega1,
        }
    }
}

/// Physical parameters shared by both stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub n_levels: usize,
    /// Effective-mode angular frequency, rad/ps.
    pub omega1: f64,
    /// Exciton-mode coupling, ps⁻¹.
    pub d1: f64,
    pub temperature: f64,
    /// `ħγ_ph`, meV.
    pub hbar_gamma_ph: f64,
    /// `ħγ_R`, meV.
    pub hbar_gamma_r: f64,
}

impl ModelParams {
    /// 60 K, `ħγ_ph = 0.001` meV, `ħω₁ = √5` meV, `D₁` from the closed-form
    /// integral of the spectral density with `α_p/(2π)² = 0.06` ps² and
    /// `ħω_b = 1.48` meV, `ħγ_R = 6.6e-4` meV, 15 oscillator levels.
    pub fn reference_defaults() -> Self {
        let sp = SpectralParams::from_quoted(0.06, 1.48).expect("valid constants");
        Self {
            n_levels: 15,
            omega1: mev_to_rad_per_ps(5f64.sqrt()),
            d1: coupling_d1_squared(&sp).sqrt(),
            temperature: 60.0,
            hbar_gamma_ph: 0.001,
            hbar_gamma_r: 6.6e-4,
        }
    }

    pub fn dissipation(&self) -> Result<DissipationSpec> {
        let e_th = thermal_energy(self.temperature, self.omega1)?;
        DissipationSpec::from_energies(self.hbar_gamma_r, self.hbar_gamma_ph, e_th)
    }

    pub fn operators(&self) -> Result<SystemOperators> {
        SystemOperators::new(self.n_levels, self.omega1)
    }

    /// `|↑⟩⟨↑| ⊗ ρ_thermal`.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let bath = thermal_state(self.omega1, self.temperature, self.n_levels)?;
        DensityMatrix::product(&DensityMatrix::pure_basis(3, Level::Up.index()), &bath)
    }

    pub fn superoperator(&self, cfg: &StageConfig, ops: &SystemOperators) -> Result<Superoperator> {
        let h = build_hamiltonian(&cfg.hamiltonian_spec(self), ops)?;
        build_superoperator(&h, &self.dissipation()?, ops)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Eigendecomposition of the superoperator, falling back to direct
    /// integration when the eigenbasis is defective.
    Spectral,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub method: Method,
    pub keep: KeepPolicy,
    pub output_step: f64,
    pub tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            method: Method::Spectral,
            keep: KeepPolicy::All,
            output_step: 0.05,
            tol: 1e-9,
        }
    }
}

/// Observables sampled on the output grid.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rho_up: Vec<f64>,
    pub rho_dn: Vec<f64>,
    pub rho_xx: Vec<f64>,
    /// `N̄(t) − N̄₀` with `N̂ = a†a`.
    pub dn1: Vec<f64>,
    /// `Tr(Q̂₁ ρ)`.
    pub q1bar: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, obs: [f64; 6]) {
        self.times.push(t);
        self.rho_up.push(obs[0]);
        self.rho_dn.push(obs[1]);
        self.rho_xx.push(obs[2]);
        self.dn1.push(obs[3]);
        self.q1bar.push(obs[4]);
        self.min_eigenvalue.push(obs[5]);
    }

    /// Appends `other`, shifting its times by `t_offset` and its `ΔN̄` by
    /// `dn_offset`. A leading sample at the junction is dropped.
    pub fn extend_shifted(&mut self, other: &Trajectory, t_offset: f64, dn_offset: f64) {
        for i in 0..other.len() {
            let t = other.times[i] + t_offset;
            if let Some(&last) = self.times.last() {
                if t <= last + 1e-12 {
                    continue;
                }
            }
            self.push(
                t,
                [
                    other.rho_up[i],
                    other.rho_dn[i],
                    other.rho_xx[i],
                    other.dn1[i] + dn_offset,
                    other.q1bar[i],
                    other.min_eigenvalue[i],
                ],
            );
        }
    }

    /// `max |ρ_↑↑ + ρ_↓↓ + ρ_XX − 1|`.
    pub fn population_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.rho_up[i] + self.rho_dn[i] + self.rho_xx[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Peak-to-peak spread of `series` over `[t0, t1]`.
    pub fn peak_to_peak(&self, series: &[f64], t0: f64, t1: f64) -> f64 {
        let vals = self
            .times
            .iter()
            .zip(series)
            .filter(|(t, _)| **t >= t0 - 1e-12 && **t <= t1 + 1e-12)
            .map(|(_, v)| *v);
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }

    /// Index of the largest `ρ_XX`, earliest on ties.
    pub fn argmax_rho_xx(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.rho_xx.iter().enumerate() {
            if best.is_none_or(|b| *v > self.rho_xx[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Result of one stage: the sampled observables and the final state.
#[derive(Debug, Clone)]
pub struct StageRun {
    pub trajectory: Trajectory,
    pub final_state: DensityMatrix,
    /// Set when the spectral method had to fall back to direct integration.
    pub fell_back: bool,
}

struct Observables<'a> {
    ops: &'a SystemOperators,
    n0: f64,
}

impl Observables<'_> {
    fn sample(&self, rho: &DensityMatrix, t: f64) -> Result<[f64; 6]> {
        let pops = [Level::Up, Level::Down, Level::Exciton].map(|l| rho.population(l));
        let n = expectation(rho, &self.ops.number)?.re;
        let q = expectation(rho, &self.ops.q)?.re;
        let min_eig = rho.min_eigenvalue()?;
        if min_eig < POSITIVITY_ABORT {
            return Err(Error::Positivity { t, min_eig });
        }
        Ok([pops[0], pops[1], pops[2], n - self.n0, q, min_eig])
    }
}

/// Evolves `rho0` under `cfg` on the grid `0, h, …, duration` and at any
/// `extra_times` (which are not recorded in the trajectory).
fn evolve(
    rho0: &DensityMatrix,
    v: &Superoperator,
    times: &[f64],
    opts: &RunOptions,
) -> Result<(Vec<DensityMatrix>, bool)> {
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    if opts.method == Method::Spectral {
        let ep = diagonalize(v, opts.keep)?;
        if !ep.is_defective() {
            return Ok((propagate_many(rho0, &ep, times)?, false));
        }
        log::warn!("falling back to direct integration");
    }
    // the direct integrator emits on a regular grid, so merge the requested times into it
    let direct = DirectOptions {
        tol: opts.tol,
        output_step: opts.output_step,
        ..Default::default()
    };
    let grid = output_grid(t_end, opts.output_step);
    let on_grid = times.iter().all(|t| grid.iter().any(|g| (g - t).abs() < 1e-12));
    let states = if on_grid {
        let tr = integrate_direct(rho0, v, t_end, &direct)?;
        times
            .iter()
            .map(|t| {
                let k = tr.times.iter().position(|g| (g - t).abs() < 1e-12).expect("on grid");
                tr.states[k].clone()
            })
            .collect()
    } else {
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let tr = integrate_direct(rho0, v, t, &DirectOptions { output_step: t.max(1e-12), ..direct })?;
            out.push(tr.states.last().expect("nonempty").clone());
        }
        out
    };
    Ok((states, opts.method == Method::Spectral))
}

/// Runs one stage from `rho0` and samples the observables every
/// `opts.output_step`.
pub fn run_stage(rho0: &DensityMatrix, cfg: &StageConfig, model: &ModelParams, opts: &RunOptions) -> Result<StageRun> {
    let ctx = |e: Error| Error::Stage {
        stage: cfg.stage.to_string(),
        source: Box::new(e),
    };
    cfg.validate().map_err(ctx)?;
    let ops = model.operators().map_err(ctx)?;
    let v = model.superoperator(cfg, &ops).map_err(ctx)?;
    let times = output_grid(cfg.duration, opts.output_step);
    let (states, fell_back) = evolve(rho0, &v, &times, opts).map_err(ctx)?;
    let n0 = expectation(rho0, &ops.number).map_err(ctx)?.re;
    let obs = Observables { ops: &ops, n0 };
    let mut trajectory = Trajectory::default();
    for (t, rho) in times.iter().zip(&states) {
        trajectory.push(*t, obs.sample(rho, *t).map_err(ctx)?);
    }
    Ok(StageRun {
        trajectory,
        final_state: states.last().expect("grid is nonempty").clone(),
        fell_back,
    })
}

/// Chosen end of the heat-extraction stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchTime {
    pub t: f64,
    pub index: usize,
    /// False when the trajectory had no interior maximum and the global
    /// argmax was used.
    pub local_maximum: bool,
}

/// Among the local maxima of `ρ_XX`, the one with the smallest `ΔN̄`
/// (earliest on ties).
pub fn find_switch_time(traj: &Trajectory) -> Result<SwitchTime> {
    let n = traj.len();
    if n == 0 {
        return Err(Error::param("trajectory", "empty"));
    }
    let x = &traj.rho_xx;
    let mut best: Option<usize> = None;
    for i in 1..n.saturating_sub(1) {
        if x[i] > x[i - 1] && x[i] >= x[i + 1] {
            if best.is_none_or(|b| traj.dn1[i] < traj.dn1[b]) {
                best = Some(i);
            }
        }
    }
    Ok(match best {
        Some(i) => SwitchTime {
            t: traj.times[i],
            index: i,
            local_maximum: true,
        },
        None => {
            let i = traj.argmax_rho_xx().expect("nonempty");
            SwitchTime {
                t: traj.times[i],
                index: i,
                local_maximum: false,
            }
        }
    })
}

/// Energy and angular-momentum bookkeeping of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleLedger {
    /// Pump–probe energy difference `ΔE`, meV.
    pub delta_e: f64,
    pub transfer_probability: f64,
    /// Heat drawn from the phonons, meV.
    pub q_heat: f64,
    /// Energy added to the coherent light, meV.
    pub w_work: f64,
    /// Units of ħ.
    pub spinlabor: f64,
    /// Units of ħ.
    pub spintherm: f64,
}

impl CycleLedger {
    pub fn from_transfer(delta_e: f64, transfer_probability: f64) -> Self {
        let energy = delta_e * transfer_probability;
        Self {
            delta_e,
            transfer_probability,
            q_heat: energy,
            w_work: energy,
            spinlabor: -transfer_probability,
            spintherm: transfer_probability,
        }
    }

    /// `W = Q` and `spinlabor = −spintherm`, compared exactly.
    pub fn identities_hold(&self) -> bool {
        self.w_work == self.q_heat && self.spinlabor == -self.spintherm
    }
}

/// Both stages of one cycle.
#[derive(Debug, Clone, Serialize)]
pub struct EngineConfig {
    pub model: ModelParams,
    /// Stage 1; its duration is the window searched for the switch time.
    pub heat: StageConfig,
    /// Stage 2; its duration is ignored when `work_duration` is `None`.
    pub work: StageConfig,
    /// Fixed stage-2 length, or `None` for a refined π pulse.
    pub work_duration: Option<f64>,
    #[serde(skip)]
    pub options: RunOptions,
}

impl EngineConfig {
    /// `ħΩ₁ = 0.75` meV, `ΔE = 2` meV over 20 ps, then `ħΩ₂ = 4.316` meV.
    pub fn reference_defaults() -> Self {
        Self {
            model: ModelParams::reference_defaults(),
            heat: StageConfig::heat_extraction(0.75, 2.0, 20.0),
            work: StageConfig::work_output(4.316, 0.0),
            work_duration: None,
            options: RunOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleResult {
    /// Stage 1 up to the switch, followed by stage 2.
    pub trajectory: Trajectory,
    /// The full stage-1 window.
    pub stage1: Trajectory,
    pub switch: SwitchTime,
    /// Nominal `πħ/ħΩ₂`, ps.
    pub t_pi: f64,
    /// Stage-2 length actually used, ps.
    pub work_duration: f64,
    pub ledger: CycleLedger,
    #[serde(skip)]
    pub final_state: DensityMatrix,
    pub fell_back: bool,
}

/// `πħ/ħΩ`, the resonant π-pulse length in ps.
pub fn pi_pulse_duration(rabi_energy: f64) -> Result<f64> {
    if !(rabi_energy > 0.0) {
        return Err(Error::param("rabi_energy", "a π pulse needs a positive Rabi energy"));
    }
    Ok(std::f64::consts::PI * HBAR_MEV_PS / rabi_energy)
}

pub fn run_cycle(cfg: &EngineConfig) -> Result<CycleResult> {
    let model = &cfg.model;
    let opts = &cfg.options;
    let rho0 = model.initial_state()?;
    let s1 = run_stage(&rho0, &cfg.heat, model, opts)?;
    let switch = find_switch_time(&s1.trajectory)?;

    let ctx1 = |e: Error| Error::Stage {
        stage: cfg.heat.stage.to_string(),
        source: Box::new(e),
    };
    let ops = model.operators().map_err(ctx1)?;
    let v1 = model.superoperator(&cfg.heat, &ops).map_err(ctx1)?;
    let (rho_switch, fb1) = evolve(&rho0, &v1, &[switch.t], opts).map_err(ctx1)?;
    let rho_switch = rho_switch.into_iter().next().expect("one state");

    let t_pi = pi_pulse_duration(cfg.work.rabi_energy)?;
    let work_duration = match cfg.work_duration {
        Some(d) => d,
        None => refine_pi_pulse(&rho_switch, &cfg.work, model, opts, t_pi)?,
    };
    let work = StageConfig {
        duration: work_duration,
        ..cfg.work
    };
    let s2 = run_stage(&rho_switch, &work, model, opts)?;

    let n0 = expectation(&rho0, &ops.number)?.re;
    let n_switch = expectation(&rho_switch, &ops.number)?.re;
    let mut trajectory = Trajectory::default();
    let head = Trajectory {
        times: s1.trajectory.times[..=switch.index].to_vec(),
        rho_up: s1.trajectory.rho_up[..=switch.index].to_vec(),
        rho_dn: s1.trajectory.rho_dn[..=switch.index].to_vec(),
        rho_xx: s1.trajectory.rho_xx[..=switch.index].to_vec(),
        dn1: s1.trajectory.dn1[..=switch.index].to_vec(),
        q1bar: s1.trajectory.q1bar[..=switch.index].to_vec(),
        min_eigenvalue: s1.trajectory.min_eigenvalue[..=switch.index].to_vec(),
    };
    trajectory.extend_shifted(&head, 0.0, 0.0);
    trajectory.extend_shifted(&s2.trajectory, switch.t, n_switch - n0);

    let transfer = s2.final_state.population(Level::Down) - rho0.population(Level::Down);
    let ledger = CycleLedger::from_transfer(-cfg.heat.detuning_energy, transfer);
    debug_assert!(ledger.identities_hold());
    Ok(CycleResult {
        trajectory,
        stage1: s1.trajectory,
        switch,
        t_pi,
        work_duration,
        ledger,
        final_state: s2.final_state,
        fell_back: s1.fell_back || s2.fell_back || fb1,
    })
}

/// Stage-2 length in `[0.8, 1.2]·t_π` that maximizes `ρ_↓↓` at its end.
fn refine_pi_pulse(
    rho: &DensityMatrix,
    work: &StageConfig,
    model: &ModelParams,
    opts: &RunOptions,
    t_pi: f64,
) -> Result<f64> {
    let ctx = |e: Error| Error::Stage {
        stage: work.stage.to_string(),
        source: Box::new(e),
    };
    work.validate().map_err(ctx)?;
    let ops = model.operators().map_err(ctx)?;
    let v = model.superoperator(work, &ops).map_err(ctx)?;
    let samples = 200;
    let times: Vec<f64> = (0..=samples)
        .map(|k| t_pi * (0.8 + 0.4 * k as f64 / samples as f64))
        .collect();
    let fine = RunOptions {
        output_step: 0.4 * t_pi / samples as f64,
        ..*opts
    };
    let states = if opts.method == Method::Spectral {
        evolve(rho, &v, &times, &fine).map_err(ctx)?.0
    } else {
        let tr = integrate_direct(
            rho,
            &v,
            1.2 * t_pi,
            &DirectOptions {
                tol: opts.tol,
                output_step: fine.output_step,
                ..Default::default()
            },
        )
        .map_err(ctx)?;
        tr.times
            .iter()
            .zip(tr.states)
            .filter(|(t, _)| **t >= 0.8 * t_pi - 1e-12)
            .map(|(_, s)| s)
            .collect()
    };
    let mut best = 0;
    for (k, s) in states.iter().enumerate() {
        if s.population(Level::Down) > states[best].population(Level::Down) {
            best = k;
        }
    }
    Ok(0.8 * t_pi + best as f64 * fine.output_step)
}

/// `γ = ln[(N − 2⟨J_z⟩)/(N + 2⟨J_z⟩)]` in units of 1/ħ with `⟨J_z⟩` in ħ.
pub fn inverse_spin_temperature(jz_mean: f64, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::param("n", format!("spin count must be positive, got {n}")));
    }
    let two_jz = 2.0 * jz_mean;
    if two_jz.abs() >= n || !two_jz.is_finite() {
        return Err(Error::SpinTemperatureSaturation { two_jz, n });
    }
    Ok(((n - two_jz) / (n + two_jz)).ln())
}

/// `ln 2 / γ` in units of ħ.
pub fn spinlabor_bound(gamma_spin: f64) -> Result<f64> {
    if gamma_spin == 0.0 {
        return Err(Error::UnboundedSpinlabor);
    }
    Ok(std::f64::consts::LN_2 / gamma_spin)
}
