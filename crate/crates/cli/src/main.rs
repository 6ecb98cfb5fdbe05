//! Command-line front end: configuration parsing, experiment dispatch, and
//! CSV/JSON emission for plotting.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 integration
//! failure, 4 completed with per-point failures (listed in the sidecar).

mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use sechsim::adiabatic::BlochFrame;
use sechsim::compiler::{
    arbitrary_rotation_program, compile_single, naive_cphase_program, not_gate_program,
    robust_cphase_program, rotation_target_unitary, unrefocused_cphase_program, IonId,
};
use sechsim::dynamics::OdeOptions;
use sechsim::experiments::{
    bloch_trajectory, leakage_scan, sweep_hyperfine, sweep_lifetime,
};
use sechsim::ion::HYPERFINE_BOUND;
use sechsim::linalg::{phase_aligned_distance, CMat};
use sechsim::{IonParams, SimError};

pub use config::RunConfig;
use output::{write_sidecar, DataTable, MetaExtras};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Integration(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Integration(m) => write!(f, "{m}"),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::IntegrationFailure { .. }
            | SimError::QuadratureFailure { .. }
            | SimError::PositivityViolation { .. }
            | SimError::EigenFailure { .. } => CliError::Integration(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 2;
const EXIT_INTEGRATION: i32 = 3;
const EXIT_POINT_FAILURES: i32 = 4;

#[derive(Parser)]
#[command(
    name = "sechsim",
    version,
    about = "Sech-pulse gate simulator for rare-earth-ion qubits",
    after_help = "Quoted frequency-like values (omega0, beta, detunings, hyperfine shifts, \
                  delta_dd) are plain rad/us numbers by default; pass --apply-2pi to read \
                  them as cyclic frequencies (values scaled by 2 pi once). The published \
                  parameter sets reproduce their quantitative targets under --apply-2pi."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` config file (# comments); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output data file (required). The metadata sidecar lands next to it.
    #[arg(long, global = true)]
    output: Option<String>,
    /// Data format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Cap on worker threads for grid sweeps (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// State-propagation tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Density-matrix propagation tolerance.
    #[arg(long, global = true)]
    tol_master: Option<f64>,
    /// Read frequency-typed inputs as cyclic frequencies (scale by 2 pi).
    #[arg(long = "apply-2pi", global = true)]
    apply_2pi: bool,
    /// Drop the refocusing NOT blocks from the controlled-phase sequence.
    #[arg(long, global = true)]
    no_refocus: bool,
    /// Enable spontaneous decay (master-equation propagation).
    #[arg(long, global = true)]
    decay: bool,
    /// Excited-state lifetime in us (with --decay).
    #[arg(long, global = true)]
    te: Option<f64>,

    /// Peak Rabi frequency.
    #[arg(long, global = true)]
    omega0: Option<f64>,
    /// Chirp strength.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Envelope rate.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Pulse window length in us.
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// Optical detuning for single-ion scans.
    #[arg(long, global = true)]
    detuning: Option<f64>,
    /// Hyperfine shift for single-ion scans.
    #[arg(long, global = true)]
    hf_shift: Option<f64>,
    #[arg(long, global = true)]
    detuning_min: Option<f64>,
    #[arg(long, global = true)]
    detuning_max: Option<f64>,
    #[arg(long, global = true)]
    detuning_steps: Option<usize>,
    /// Control-ion optical detuning.
    #[arg(long, global = true)]
    detuning_c: Option<f64>,
    /// Target-ion optical detuning.
    #[arg(long, global = true)]
    detuning_t: Option<f64>,
    /// Excited-excited blockade shift.
    #[arg(long, global = true)]
    delta_dd: Option<f64>,
    #[arg(long, global = true)]
    hf_c_min: Option<f64>,
    #[arg(long, global = true)]
    hf_c_max: Option<f64>,
    #[arg(long, global = true)]
    hf_c_steps: Option<usize>,
    #[arg(long, global = true)]
    hf_t_min: Option<f64>,
    #[arg(long, global = true)]
    hf_t_max: Option<f64>,
    #[arg(long, global = true)]
    hf_t_steps: Option<usize>,
    /// Comma-separated lifetime list for lifetime-sweep.
    #[arg(long, global = true)]
    te_list: Option<String>,
    #[arg(long, global = true)]
    b0: Option<f64>,
    #[arg(long, global = true)]
    b1: Option<f64>,
    /// Inter-pulse gap in us.
    #[arg(long, global = true)]
    gap_us: Option<f64>,
    /// Rotation angle for rotation-check / program-dump.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Bar-basis angle.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    theta_steps: Option<usize>,
    /// Program name for program-dump (rotation, not-control, not-target,
    /// naive-cphase, robust-cphase, robust-cphase-unrefocused).
    #[arg(long, global = true)]
    program: Option<String>,
    /// Bloch display frame: accelerated, channel, or ion.
    #[arg(long, global = true)]
    frame: Option<String>,
    /// Time-series sample count.
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Bloch trajectories during one sech pulse: ODE vs perturbation theory.
    BlochTraj,
    /// Hyperfine leakage during a bar-transition pulse: ODE vs perturbative.
    Leakage,
    /// Four-pulse rotation programs against the closed-form target.
    RotationCheck,
    /// NOT-gate flip fidelity across the optical-detuning range.
    NotCheck,
    /// Controlled-phase fidelity surface over the hyperfine grid.
    CphaseSurface,
    /// Fidelity-vs-shift curves for a list of excited-state lifetimes.
    LifetimeSweep,
    /// Serialize a pulse program in the line-oriented text format.
    ProgramDump,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::BlochTraj => "bloch-traj",
            Command::Leakage => "leakage",
            Command::RotationCheck => "rotation-check",
            Command::NotCheck => "not-check",
            Command::CphaseSurface => "cphase-surface",
            Command::LifetimeSweep => "lifetime-sweep",
            Command::ProgramDump => "program-dump",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Integration(msg)) => {
            eprintln!("integration error: {msg}");
            EXIT_INTEGRATION
        }
    });
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_file(&body)?;
    }
    macro_rules! flag {
        ($field:ident) => {
            if let Some(v) = &cli.$field {
                cfg.$field = v.clone().into();
            }
        };
    }
    flag!(omega0);
    flag!(mu);
    flag!(beta);
    flag!(duration);
    flag!(detuning);
    flag!(hf_shift);
    flag!(detuning_min);
    flag!(detuning_max);
    flag!(detuning_steps);
    flag!(detuning_c);
    flag!(detuning_t);
    flag!(delta_dd);
    flag!(hf_c_min);
    flag!(hf_c_max);
    flag!(hf_c_steps);
    flag!(hf_t_min);
    flag!(hf_t_max);
    flag!(hf_t_steps);
    flag!(b0);
    flag!(b1);
    flag!(gap_us);
    flag!(theta);
    flag!(alpha);
    flag!(theta_steps);
    flag!(program);
    flag!(frame);
    flag!(points);
    flag!(tol);
    flag!(tol_master);
    flag!(jobs);
    flag!(format);
    flag!(output);
    if let Some(v) = &cli.te_list {
        cfg.set("te_list", v)?;
    }
    if let Some(te) = cli.te {
        cfg.te_us = te;
    }
    if cli.apply_2pi {
        cfg.apply_2pi = true;
    }
    if cli.no_refocus {
        cfg.refocus = false;
    }
    if cli.decay {
        cfg.decay = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = resolve_config(cli)?;
    for (label, hf) in [("hf_shift", cfg.hf_shift), ("hf_c_max", cfg.hf_c_max), ("hf_t_max", cfg.hf_t_max)]
    {
        if hf.abs() > HYPERFINE_BOUND {
            eprintln!(
                "warning: {label} = {hf} exceeds the hyperfine half-width bound {HYPERFINE_BOUND}"
            );
        }
    }
    if cfg.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| CliError::usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| dispatch(cli.command, &cfg))
    } else {
        dispatch(cli.command, &cfg)
    }
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let out_path = PathBuf::from(&cfg.output);
    let (table, extras, text_body) = match command {
        Command::BlochTraj => {
            let (t, e) = cmd_bloch(cfg)?;
            (Some(t), e, None)
        }
        Command::Leakage => {
            let (t, e) = cmd_leakage(cfg)?;
            (Some(t), e, None)
        }
        Command::RotationCheck => {
            let (t, e) = cmd_rotation_check(cfg)?;
            (Some(t), e, None)
        }
        Command::NotCheck => {
            let (t, e) = cmd_not_check(cfg)?;
            (Some(t), e, None)
        }
        Command::CphaseSurface => {
            let (t, e) = cmd_surface(cfg)?;
            (Some(t), e, None)
        }
        Command::LifetimeSweep => {
            let (t, e) = cmd_lifetime(cfg)?;
            (Some(t), e, None)
        }
        Command::ProgramDump => {
            let (body, e) = cmd_program_dump(cfg)?;
            (None, e, Some(body))
        }
    };

    if let Some(t) = &table {
        t.write(&out_path, &cfg.format)?;
    }
    if let Some(body) = text_body {
        std::fs::write(&out_path, body)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", out_path.display())))?;
    }
    let wall = started.elapsed().as_secs_f64();
    write_sidecar(&out_path, command.name(), cfg, &extras, wall)?;
    if extras.failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("completed with {} point failure(s); see the metadata sidecar", extras.failures.len());
        Ok(EXIT_POINT_FAILURES)
    }
}

fn parse_frame(name: &str) -> Result<BlochFrame, CliError> {
    match name {
        "accelerated" => Ok(BlochFrame::Accelerated),
        "channel" => Ok(BlochFrame::ChannelRotating),
        "ion" => Ok(BlochFrame::IonRotating),
        other => Err(CliError::usage(format!("unknown frame '{other}'"))),
    }
}

fn cmd_bloch(cfg: &RunConfig) -> Result<(DataTable, MetaExtras), CliError> {
    let scan = cfg.scan_config()?;
    let frame = parse_frame(&cfg.frame)?;
    let traj = bloch_trajectory(&scan, frame)?;
    let mut rows = Vec::with_capacity(traj.times.len());
    for k in 0..traj.times.len() {
        rows.push(vec![
            traj.times[k],
            traj.ode[k][0],
            traj.ode[k][1],
            traj.ode[k][2],
            traj.zeroth[k][0],
            traj.zeroth[k][1],
            traj.zeroth[k][2],
            traj.first[k][0],
            traj.first[k][1],
            traj.first[k][2],
        ]);
    }
    let mut extras = MetaExtras::default();
    extras
        .notes
        .insert("first_order_defect".into(), format!("{}", traj.first_order_defect));
    Ok((
        DataTable {
            columns: vec![
                "t_us", "x_num", "y_num", "z_num", "x_zeroth", "y_zeroth", "z_zeroth", "x_first",
                "y_first", "z_first",
            ],
            rows,
        },
        extras,
    ))
}

fn cmd_leakage(cfg: &RunConfig) -> Result<(DataTable, MetaExtras), CliError> {
    let scan = cfg.scan_config()?;
    let series = leakage_scan(&scan)?;
    let rows = (0..series.times.len())
        .map(|k| vec![series.times[k], series.numeric[k], series.perturbative[k]])
        .collect();
    Ok((
        DataTable { columns: vec!["t_us", "p_leak_numeric", "p_leak_perturbative"], rows },
        MetaExtras::default(),
    ))
}

fn cmd_rotation_check(cfg: &RunConfig) -> Result<(DataTable, MetaExtras), CliError> {
    let s = cfg.frequency_factor();
    let pulse = cfg.pulse()?;
    let ion = IonParams::new(cfg.detuning * s, cfg.hf_shift * s);
    let opts = OdeOptions::state().with_tol(cfg.tol);
    let n = cfg.theta_steps.max(1);
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let theta = if n == 1 {
            cfg.theta
        } else {
            std::f64::consts::PI * k as f64 / (n - 1) as f64
        };
        let prog = arbitrary_rotation_program(theta, cfg.alpha, &pulse).with_gap(cfg.gap_us);
        let compiled = compile_single(&prog, &ion)?;
        let u = compiled.propagate_unitary(&opts)?;
        let uq = CMat::from_shape_fn((2, 2), |(i, j)| u[(i, j)]);
        let target = rotation_target_unitary(theta, cfg.alpha);
        let d = phase_aligned_distance(&uq, &target);
        rows.push(vec![theta, cfg.alpha, d]);
    }
    Ok((
        DataTable { columns: vec!["theta_rad", "alpha_rad", "operator_distance"], rows },
        MetaExtras::default(),
    ))
}

fn cmd_not_check(cfg: &RunConfig) -> Result<(DataTable, MetaExtras), CliError> {
    let s = cfg.frequency_factor();
    let pulse = cfg.pulse()?;
    let opts = OdeOptions::state().with_tol(cfg.tol);
    let n = cfg.detuning_steps.max(1);
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let frac = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
        let delta = (cfg.detuning_min + (cfg.detuning_max - cfg.detuning_min) * frac) * s;
        let ion = IonParams::new(delta, cfg.hf_shift * s);
        let prog = not_gate_program(IonId::Target, &pulse).with_gap(cfg.gap_us);
        let compiled = compile_single(&prog, &ion)?;
        let psi0 = sechsim::QuantumState::basis_state(sechsim::dynamics::BasisTag::IonLogical, 0);
        let psi = compiled.propagate_state(&psi0, &opts)?;
        rows.push(vec![delta, psi.population(1), psi.population(2)]);
    }
    Ok((
        DataTable { columns: vec!["delta_opt", "p_flip", "p_excited"], rows },
        MetaExtras::default(),
    ))
}

fn cmd_surface(cfg: &RunConfig) -> Result<(DataTable, MetaExtras), CliError> {
    let sweep = cfg.sweep_config()?;
    let surface = sweep_hyperfine(&sweep)?;
    let nt = surface.axis_t.values.len();
    let mut rows = Vec::with_capacity(surface.values.len());
    for (i, &c) in surface.axis_c.values.iter().enumerate() {
        for (j, &t) in surface.axis_t.values.iter().enumerate() {
            rows.push(vec![c, t, surface.values[i * nt + j]]);
        }
    }
    let extras = MetaExtras {
        u0_checksum: Some(surface.u0_checksum.clone()),
        failures: surface.failures.clone(),
        notes: BTreeMapExt::pairs(&[
            ("decay_te", surface.decay_te.map(|t| t.to_string()).unwrap_or_default()),
        ]),
    };
    Ok((DataTable { columns: vec!["delta_c", "delta_t", "fidelity"], rows }, extras))
}

fn cmd_lifetime(cfg: &RunConfig) -> Result<(DataTable, MetaExtras), CliError> {
    let sweep = cfg.sweep_config()?;
    let family = sweep_lifetime(&sweep)?;
    let mut rows = Vec::with_capacity(family.te.len() * family.delta_t.len());
    for (k, &te) in family.te.iter().enumerate() {
        for (j, &dt) in family.delta_t.iter().enumerate() {
            rows.push(vec![te, dt, family.values[k][j]]);
        }
    }
    let extras =
        MetaExtras { u0_checksum: Some(family.u0_checksum.clone()), ..MetaExtras::default() };
    Ok((DataTable { columns: vec!["te_us", "delta_t", "fidelity"], rows }, extras))
}

fn cmd_program_dump(cfg: &RunConfig) -> Result<(String, MetaExtras), CliError> {
    let pulse = cfg.pulse()?;
    let s = cfg.frequency_factor();
    let _ = s;
    let program = match cfg.program.as_str() {
        "rotation" => arbitrary_rotation_program(cfg.theta, cfg.alpha, &pulse),
        "not-control" => not_gate_program(IonId::Control, &pulse),
        "not-target" => not_gate_program(IonId::Target, &pulse),
        "naive-cphase" => naive_cphase_program(&pulse),
        "robust-cphase" => robust_cphase_program(&pulse),
        "robust-cphase-unrefocused" => unrefocused_cphase_program(&pulse),
        other => return Err(CliError::usage(format!("unknown program '{other}'"))),
    };
    let program = program.with_gap(cfg.gap_us);
    program.validate()?;
    Ok((program.serialize(), MetaExtras::default()))
}

// small helper for building note maps inline
struct BTreeMapExt;

impl BTreeMapExt {
    fn pairs(items: &[(&str, String)]) -> std::collections::BTreeMap<String, String> {
        items
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }
}
