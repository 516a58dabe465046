//! Flat `key = value` run configuration with unit-suffixed keys.

use std::collections::BTreeMap;
use std::path::Path;

use crate::engine::{EngineConfig, Method, ModelParams, RunOptions, StageConfig};
use crate::error::{Error, Result};
use crate::hyperfine::{CouplingProfile, LatticeSpec, PulseSpec};
use crate::propagator::KeepPolicy;
use crate::spectral::{coupling_d1_squared, SpectralParams};
use crate::units::mev_to_rad_per_ps;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Override,
}

impl Source {
    fn label(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Override => "set",
        }
    }
}

struct KeySpec {
    key: &'static str,
    default: Option<&'static str>,
}

const fn k(key: &'static str, default: Option<&'static str>) -> KeySpec {
    KeySpec { key, default }
}

/// Every accepted key in header order. `None` marks keys with no default.
const KEYS: &[KeySpec] = &[
    k("temperature_K", Some("60")),
    k("gamma_ph_meV", Some("0.001")),
    k("gamma_r_meV", Some("6.6e-4")),
    k("hbar_omega1_meV", Some("0.75")),
    k("delta_e_meV", Some("2")),
    k("hbar_omega2_meV", Some("4.316")),
    k("omega_b_meV", Some("1.48")),
    k("alpha_p_over_4pi2_ps2", Some("0.06")),
    k("hbar_omega_tilde1_meV", Some("2.2360679774997898")),
    k("n_levels", Some("15")),
    k("stage1_duration_ps", Some("20")),
    k("work_duration_ps", Some("auto")),
    k("output_step_ps", Some("0.05")),
    k("method", Some("spectral")),
    k("tol", Some("1e-9")),
    k("n_spins", Some("8")),
    k("sigma_nm", Some("5")),
    k("g_n", Some("5")),
    k("tau_ns", Some("1")),
    k("phi_tau_sigma", Some("8")),
    k("pulse_offset_T", Some("0")),
    k("av0_rad_per_ps_nm3", None),
    k("lattice_spacing_nm", None),
    k("lattice_half_width_sigma", Some("6")),
    k("lattice_jitter", Some("0")),
    k("seed", Some("0")),
    k("couplings", Some("lattice")),
    k("wire_distance_nm", Some("10")),
    k("transfer_probability", Some("0.5")),
    k("erasure_cycles", Some("2")),
    k("g_star", Some("none")),
    k("sweep_kind", Some("stage1")),
];

/// Keys that can be swept with `sweep.<key> = v1,v2,...`.
pub const SWEEP_AXES: &[&str] = &["temperature_K", "gamma_ph_meV", "hbar_omega1_meV", "delta_e_meV", "n_levels"];

fn stem(key: &str) -> &str {
    key.rsplit_once('_').map_or(key, |(s, _)| s)
}

fn spec_of(key: &str) -> Result<&'static KeySpec> {
    if let Some(s) = KEYS.iter().find(|s| s.key == key) {
        return Ok(s);
    }
    if let Some(s) = KEYS.iter().find(|s| stem(s.key) == stem(key) && s.key.contains('_') && key.contains('_')) {
        return Err(Error::config(key, format!("unit suffix mismatch, expected `{}`", s.key)));
    }
    Err(Error::config(key, "unknown key"))
}

/// Fully resolved configuration with the origin of every value.
#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<&'static str, (String, Source)>,
    /// Swept axes in declaration order.
    pub axes: Vec<(&'static str, Vec<String>)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .filter_map(|s| s.default.map(|d| (s.key, (d.to_string(), Source::Default))))
            .collect();
        Self { values, axes: Vec::new() }
    }
}

impl RunConfig {
    /// Reads `path` (if given), then applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::config("--config", format!("{}: {e}", p.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected key = value"))?;
                cfg.set(key.trim(), value.trim(), Source::File)?;
            }
        }
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::config(o.clone(), "expected key=value"))?;
            cfg.set(key.trim(), value.trim(), Source::Override)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rebuilds a configuration from the `#` header of an output file.
    pub fn from_header(text: &str) -> Result<Self> {
        let mut overrides = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            let Some((key, rest)) = body.split_once(" = ") else { continue };
            if key == "kind" {
                continue;
            }
            let value = rest.split("  [").next().unwrap_or(rest).trim();
            if value != "<unset>" {
                overrides.push(format!("{key}={value}"));
            }
        }
        Self::load(None, &overrides)
    }

    pub fn set(&mut self, key: &str, value: &str, source: Source) -> Result<()> {
        if let Some(axis) = key.strip_prefix("sweep.") {
            let name = SWEEP_AXES
                .iter()
                .find(|a| **a == axis)
                .ok_or_else(|| match spec_of(axis) {
                    Err(e) => e,
                    Ok(_) => Error::config(key, format!("not a sweep axis; choose from {SWEEP_AXES:?}")),
                })?;
            let vals: Vec<String> = value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            for v in &vals {
                parse_f64(name, v)?;
            }
            self.axes.retain(|(a, _)| a != name);
            if !vals.is_empty() {
                self.axes.push((name, vals));
            }
            self.axes.sort_by_key(|(a, _)| SWEEP_AXES.iter().position(|x| x == a));
            return Ok(());
        }
        let spec = spec_of(key)?;
        self.values.insert(spec.key, (value.to_string(), source));
        Ok(())
    }

    /// Copy with the given swept values applied as overrides.
    pub fn with_point(&self, point: &[(&'static str, String)]) -> Result<Self> {
        let mut c = self.clone();
        c.axes.clear();
        for (k, v) in point {
            c.set(k, v, Source::Override)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn required(&self, key: &'static str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::config(key, "required, no default exists"))
    }

    pub fn f64(&self, key: &'static str) -> Result<f64> {
        parse_f64(key, self.required(key)?)
    }

    pub fn usize(&self, key: &'static str) -> Result<usize> {
        let v = self.required(key)?;
        v.parse::<usize>()
            .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`")))
    }

    fn optional_f64(&self, key: &'static str) -> Result<Option<f64>> {
        match self.required(key)? {
            "none" | "auto" => Ok(None),
            v => parse_f64(key, v).map(Some),
        }
    }

    fn check(&self, key: &'static str, ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
        if let Some(v) = self.raw(key) {
            if v == "auto" || v == "none" {
                return Ok(());
            }
            let x = parse_f64(key, v)?;
            if !ok(x) {
                return Err(Error::config(key, format!("{what}, got {x}")));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        for key in [
            "temperature_K",
            "hbar_omega1_meV",
            "delta_e_meV",
            "hbar_omega2_meV",
            "omega_b_meV",
            "alpha_p_over_4pi2_ps2",
            "hbar_omega_tilde1_meV",
            "output_step_ps",
            "tol",
            "sigma_nm",
            "g_n",
            "tau_ns",
            "phi_tau_sigma",
            "av0_rad_per_ps_nm3",
            "lattice_spacing_nm",
            "wire_distance_nm",
        ] {
            self.check(key, pos, "must be positive")?;
        }
        for key in ["gamma_ph_meV", "gamma_r_meV", "stage1_duration_ps", "work_duration_ps"] {
            self.check(key, nonneg, "must be nonnegative")?;
        }
        self.check("transfer_probability", |x| (0.0..=1.0).contains(&x), "must lie in [0, 1]")?;
        self.check("lattice_half_width_sigma", |x| x >= 4.0, "must be at least 4")?;
        self.check("lattice_jitter", |x| (0.0..0.5).contains(&x), "must lie in [0, 0.5)")?;
        self.check("pulse_offset_T", f64::is_finite, "must be finite")?;
        let n = self.usize("n_levels")?;
        if n < 2 {
            return Err(Error::config("n_levels", "need at least 2 oscillator levels"));
        }
        let s = self.usize("n_spins")?;
        if s == 0 || s > crate::hyperfine::MAX_ORACLE_SPINS {
            return Err(Error::config("n_spins", format!("must lie in 1..={}", crate::hyperfine::MAX_ORACLE_SPINS)));
        }
        let c = self.usize("erasure_cycles")?;
        if c == 0 || c > 10 {
            return Err(Error::config("erasure_cycles", "must lie in 1..=10"));
        }
        self.usize("seed")?;
        self.optional_f64("g_star")?;
        match self.required("method")? {
            "spectral" | "direct" => {}
            m => return Err(Error::config("method", format!("expected spectral or direct, got `{m}`"))),
        }
        match self.required("couplings")? {
            "lattice" | "uniform" => {}
            m => return Err(Error::config("couplings", format!("expected lattice or uniform, got `{m}`"))),
        }
        match self.required("sweep_kind")? {
            "stage1" | "cycle" => {}
            m => return Err(Error::config("sweep_kind", format!("expected stage1 or cycle, got `{m}`"))),
        }
        Ok(())
    }

    /// `# key = value  [source]` lines in fixed key order.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in KEYS {
            match self.values.get(s.key) {
                Some((v, src)) => out.push(format!("{} = {}  [{}]", s.key, v, src.label())),
                None => out.push(format!("{} = <unset>", s.key)),
            }
        }
        for (a, vals) in &self.axes {
            out.push(format!("sweep.{} = {}", a, vals.join(",")));
        }
        out
    }

    pub fn model(&self) -> Result<ModelParams> {
        let sp = SpectralParams::from_quoted(self.f64("alpha_p_over_4pi2_ps2")?, self.f64("omega_b_meV")?)?;
        Ok(ModelParams {
            n_levels: self.usize("n_levels")?,
            omega1: mev_to_rad_per_ps(self.f64("hbar_omega_tilde1_meV")?),
            d1: coupling_d1_squared(&sp).sqrt(),
            temperature: self.f64("temperature_K")?,
            hbar_gamma_ph: self.f64("gamma_ph_meV")?,
            hbar_gamma_r: self.f64("gamma_r_meV")?,
        })
    }

    pub fn options(&self) -> Result<RunOptions> {
        Ok(RunOptions {
            method: match self.required("method")? {
                "direct" => Method::Direct,
                _ => Method::Spectral,
            },
            keep: KeepPolicy::All,
            output_step: self.f64("output_step_ps")?,
            tol: self.f64("tol")?,
        })
    }

    pub fn heat_stage(&self) -> Result<StageConfig> {
        Ok(StageConfig::heat_extraction(
            self.f64("hbar_omega1_meV")?,
            self.f64("delta_e_meV")?,
            self.f64("stage1_duration_ps")?,
        ))
    }

    pub fn engine(&self) -> Result<EngineConfig> {
        Ok(EngineConfig {
            model: self.model()?,
            heat: self.heat_stage()?,
            work: StageConfig::work_output(self.f64("hbar_omega2_meV")?, 0.0),
            work_duration: self.optional_f64("work_duration_ps")?,
            options: self.options()?,
        })
    }

    pub fn pulse(&self) -> Result<PulseSpec> {
        Ok(PulseSpec::with_phase_spread(
            self.f64("phi_tau_sigma")?,
            self.f64("sigma_nm")?,
            self.f64("tau_ns")?,
            self.f64("g_n")?,
            self.f64("pulse_offset_T")?,
        ))
    }

    /// Coupling profile truncated to `n_spins`, with the pulse attached.
    pub fn profile(&self) -> Result<CouplingProfile> {
        let sigma = self.f64("sigma_nm")?;
        let av0 = self.f64("av0_rad_per_ps_nm3")?;
        let spacing = self.f64("lattice_spacing_nm")?;
        let n = self.usize("n_spins")?;
        let base = match self.required("couplings")? {
            "uniform" => {
                let a0 = 0.5 * av0 * crate::hyperfine::gaussian_density([0.0; 3], sigma);
                CouplingProfile::uniform(n, a0, spacing, sigma)?
            }
            _ => {
                let spec = LatticeSpec {
                    spacing,
                    half_width_sigmas: self.f64("lattice_half_width_sigma")?,
                    jitter: self.f64("lattice_jitter")?,
                    seed: self.usize("seed")? as u64,
                };
                CouplingProfile::lattice(sigma, av0, &spec)?.truncate(n)
            }
        };
        Ok(base.with_pulse(&self.pulse()?))
    }

    pub fn g_star(&self) -> Result<Option<f64>> {
        self.optional_f64("g_star")
    }

    /// Cartesian product of the swept axes (last axis fastest).
    pub fn grid(&self) -> Vec<Vec<(&'static str, String)>> {
        let mut grid: Vec<Vec<(&'static str, String)>> = vec![Vec::new()];
        for (axis, vals) in &self.axes {
            grid = grid
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((*axis, v.clone()));
                        q
                    })
                })
                .collect();
        }
        grid
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::config(key, format!("expected a number, got `{v}`")))
}
