//! Run configuration: documented defaults, flat `key = value` config files,
//! flag precedence, and the 2 pi frequency-convention switch.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use sechsim::experiments::{GridSpec, ScanConfig, SweepConfig};
use sechsim::SechPulseParams;

use crate::CliError;

/// Fully resolved run configuration. Every key has a documented default
/// matching the standard parameter set; frequency-typed values are stored as
/// given and scaled by 2 pi at the physics boundary when `apply_2pi` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // pulse
    pub omega0: f64,
    pub mu: f64,
    pub beta: f64,
    pub duration: f64,
    // single-ion scans
    pub detuning: f64,
    pub hf_shift: f64,
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub detuning_steps: usize,
    // two-ion gates
    pub detuning_c: f64,
    pub detuning_t: f64,
    pub delta_dd: f64,
    pub hf_c_min: f64,
    pub hf_c_max: f64,
    pub hf_c_steps: usize,
    pub hf_t_min: f64,
    pub hf_t_max: f64,
    pub hf_t_steps: usize,
    // decay
    pub decay: bool,
    pub te_us: f64,
    pub te_list: Vec<f64>,
    pub b0: f64,
    pub b1: f64,
    // sequence options
    pub refocus: bool,
    pub gap_us: f64,
    pub theta: f64,
    pub alpha: f64,
    pub theta_steps: usize,
    pub program: String,
    pub frame: String,
    // numerics and output
    pub apply_2pi: bool,
    pub tol: f64,
    pub tol_master: f64,
    pub points: usize,
    pub jobs: usize,
    pub format: String,
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega0: 4.0,
            mu: 3.0,
            beta: 1.28,
            duration: 1.5,
            detuning: 0.1,
            hf_shift: 0.03,
            detuning_min: -0.1,
            detuning_max: 0.1,
            detuning_steps: 5,
            detuning_c: 0.1,
            detuning_t: 0.08,
            delta_dd: 20.0,
            hf_c_min: -0.03,
            hf_c_max: 0.03,
            hf_c_steps: 21,
            hf_t_min: -0.03,
            hf_t_max: 0.03,
            hf_t_steps: 21,
            decay: false,
            te_us: 100.0,
            te_list: vec![100.0, 500.0, 1000.0, 1_000_000.0],
            b0: 0.5,
            b1: 0.5,
            refocus: true,
            gap_us: 0.0,
            theta: std::f64::consts::PI,
            alpha: 0.0,
            theta_steps: 5,
            program: "robust-cphase".into(),
            frame: "accelerated".into(),
            apply_2pi: false,
            tol: 1e-9,
            tol_master: 1e-8,
            points: 256,
            jobs: 0,
            format: "csv".into(),
            output: String::new(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.parse().map_err(|_| CliError::usage(format!("malformed number for '{key}': '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| CliError::usage(format!("malformed integer for '{key}': '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::usage(format!("malformed boolean for '{key}': '{v}'"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|xs| {
            if xs.is_empty() {
                Err(CliError::usage(format!("empty list for '{key}'")))
            } else {
                Ok(xs)
            }
        })
}

fn format_list(xs: &[f64]) -> String {
    let mut s = String::new();
    for (k, x) in xs.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{x}");
    }
    s
}

impl RunConfig {
    /// Apply one `key = value` pair; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "omega0" => self.omega0 = parse_f64(key, value)?,
            "mu" => self.mu = parse_f64(key, value)?,
            "beta" => self.beta = parse_f64(key, value)?,
            "duration" => self.duration = parse_f64(key, value)?,
            "detuning" => self.detuning = parse_f64(key, value)?,
            "hf_shift" => self.hf_shift = parse_f64(key, value)?,
            "detuning_min" => self.detuning_min = parse_f64(key, value)?,
            "detuning_max" => self.detuning_max = parse_f64(key, value)?,
            "detuning_steps" => self.detuning_steps = parse_usize(key, value)?,
            "detuning_c" => self.detuning_c = parse_f64(key, value)?,
            "detuning_t" => self.detuning_t = parse_f64(key, value)?,
            "delta_dd" => self.delta_dd = parse_f64(key, value)?,
            "hf_c_min" => self.hf_c_min = parse_f64(key, value)?,
            "hf_c_max" => self.hf_c_max = parse_f64(key, value)?,
            "hf_c_steps" => self.hf_c_steps = parse_usize(key, value)?,
            "hf_t_min" => self.hf_t_min = parse_f64(key, value)?,
            "hf_t_max" => self.hf_t_max = parse_f64(key, value)?,
            "hf_t_steps" => self.hf_t_steps = parse_usize(key, value)?,
            "decay" => self.decay = parse_bool(key, value)?,
            "te_us" => self.te_us = parse_f64(key, value)?,
            "te_list" => self.te_list = parse_list(key, value)?,
            "b0" => self.b0 = parse_f64(key, value)?,
            "b1" => self.b1 = parse_f64(key, value)?,
            "refocus" => self.refocus = parse_bool(key, value)?,
            "gap_us" => self.gap_us = parse_f64(key, value)?,
            "theta" => self.theta = parse_f64(key, value)?,
            "alpha" => self.alpha = parse_f64(key, value)?,
            "theta_steps" => self.theta_steps = parse_usize(key, value)?,
            "program" => self.program = value.to_string(),
            "frame" => self.frame = value.to_string(),
            "apply_2pi" => self.apply_2pi = parse_bool(key, value)?,
            "tol" => self.tol = parse_f64(key, value)?,
            "tol_master" => self.tol_master = parse_f64(key, value)?,
            "points" => self.points = parse_usize(key, value)?,
            "jobs" => self.jobs = parse_usize(key, value)?,
            "format" => self.format = value.to_string(),
            "output" => self.output = value.to_string(),
            other => return Err(CliError::usage(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a flat `key = value` config file body (`#` comments allowed).
    pub fn apply_file(&mut self, body: &str) -> Result<(), CliError> {
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.output.is_empty() {
            return Err(CliError::usage("missing output path (set --output)"));
        }
        if self.format != "csv" && self.format != "json" {
            return Err(CliError::usage(format!("unknown format '{}'", self.format)));
        }
        if self.frame != "accelerated" && self.frame != "channel" && self.frame != "ion" {
            return Err(CliError::usage(format!("unknown frame '{}'", self.frame)));
        }
        if self.points < 2 {
            return Err(CliError::usage("points must be at least 2"));
        }
        Ok(())
    }

    /// The frequency scale factor implied by `apply_2pi`.
    pub fn frequency_factor(&self) -> f64 {
        if self.apply_2pi {
            TAU
        } else {
            1.0
        }
    }

    /// Canonical key/value rendering; re-parsing this map reproduces the
    /// config exactly. This is what lands in the metadata sidecar.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("omega0", format!("{}", self.omega0));
        put("mu", format!("{}", self.mu));
        put("beta", format!("{}", self.beta));
        put("duration", format!("{}", self.duration));
        put("detuning", format!("{}", self.detuning));
        put("hf_shift", format!("{}", self.hf_shift));
        put("detuning_min", format!("{}", self.detuning_min));
        put("detuning_max", format!("{}", self.detuning_max));
        put("detuning_steps", format!("{}", self.detuning_steps));
        put("detuning_c", format!("{}", self.detuning_c));
        put("detuning_t", format!("{}", self.detuning_t));
        put("delta_dd", format!("{}", self.delta_dd));
        put("hf_c_min", format!("{}", self.hf_c_min));
        put("hf_c_max", format!("{}", self.hf_c_max));
        put("hf_c_steps", format!("{}", self.hf_c_steps));
        put("hf_t_min", format!("{}", self.hf_t_min));
        put("hf_t_max", format!("{}", self.hf_t_max));
        put("hf_t_steps", format!("{}", self.hf_t_steps));
        put("decay", format!("{}", self.decay));
        put("te_us", format!("{}", self.te_us));
        put("te_list", format_list(&self.te_list));
        put("b0", format!("{}", self.b0));
        put("b1", format!("{}", self.b1));
        put("refocus", format!("{}", self.refocus));
        put("gap_us", format!("{}", self.gap_us));
        put("theta", format!("{}", self.theta));
        put("alpha", format!("{}", self.alpha));
        put("theta_steps", format!("{}", self.theta_steps));
        put("program", self.program.clone());
        put("frame", self.frame.clone());
        put("apply_2pi", format!("{}", self.apply_2pi));
        put("tol", format!("{}", self.tol));
        put("tol_master", format!("{}", self.tol_master));
        put("points", format!("{}", self.points));
        put("jobs", format!("{}", self.jobs));
        put("format", self.format.clone());
        put("output", self.output.clone());
        m
    }

    /// Rebuild a config from the canonical key/value map.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        for (k, v) in kv {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Post-2pi frequency-typed values, echoed into the metadata so the
    /// scaling is externally verifiable.
    pub fn resolved_frequencies(&self) -> BTreeMap<String, f64> {
        let s = self.frequency_factor();
        let mut m = BTreeMap::new();
        m.insert("omega0".into(), self.omega0 * s);
        m.insert("beta".into(), self.beta * s);
        m.insert("detuning".into(), self.detuning * s);
        m.insert("hf_shift".into(), self.hf_shift * s);
        m.insert("detuning_c".into(), self.detuning_c * s);
        m.insert("detuning_t".into(), self.detuning_t * s);
        m.insert("delta_dd".into(), self.delta_dd * s);
        m.insert("hf_c_min".into(), self.hf_c_min * s);
        m.insert("hf_c_max".into(), self.hf_c_max * s);
        m.insert("hf_t_min".into(), self.hf_t_min * s);
        m.insert("hf_t_max".into(), self.hf_t_max * s);
        m
    }

    /// Pulse parameters with the frequency convention applied.
    pub fn pulse(&self) -> Result<SechPulseParams, CliError> {
        let s = self.frequency_factor();
        SechPulseParams::new(self.omega0 * s, self.mu, self.beta * s, self.duration)
            .map_err(CliError::from)
    }

    /// Single-ion scan configuration with the frequency convention applied.
    pub fn scan_config(&self) -> Result<ScanConfig<f64>, CliError> {
        Ok(ScanConfig {
            pulse: self.pulse()?,
            detuning: self.detuning * self.frequency_factor(),
            hf_shift: self.hf_shift * self.frequency_factor(),
            points: self.points,
            tol: self.tol,
        })
    }

    /// Two-ion sweep configuration with the frequency convention applied.
    pub fn sweep_config(&self) -> Result<SweepConfig<f64>, CliError> {
        let s = self.frequency_factor();
        let half = num_complex::Complex::new(0.5, 0.0);
        Ok(SweepConfig {
            pulse: self.pulse()?,
            detuning_c: self.detuning_c * s,
            detuning_t: self.detuning_t * s,
            blockade: sechsim::BlockadeParams::new(self.delta_dd * s).map_err(CliError::from)?,
            hf_c: GridSpec::new(self.hf_c_min * s, self.hf_c_max * s, self.hf_c_steps)
                .map_err(CliError::from)?,
            hf_t: GridSpec::new(self.hf_t_min * s, self.hf_t_max * s, self.hf_t_steps)
                .map_err(CliError::from)?,
            te_list: if self.decay && !self.te_list.starts_with(&[self.te_us]) {
                let mut list = vec![self.te_us];
                list.extend(self.te_list.iter().copied().filter(|&t| t != self.te_us));
                list
            } else {
                self.te_list.clone()
            },
            decay: self.decay,
            branching: (self.b0, self.b1),
            refocus: self.refocus,
            psi_in: [half; 4],
            tol_state: self.tol,
            tol_master: self.tol_master,
        })
    }
}
