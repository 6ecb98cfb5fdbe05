//! Simulator for quantum gate operations on rare-earth-ion qubits driven by
//! complex hyperbolic secant pulses.
//!
//! The crate models one or two three-level ions ((|0>, |1>, |e>), qubit
//! states split by a random hyperfine shift) addressed in frequency space,
//! and provides:
//!
//! * the chirped sech pulse and its dressed-state/perturbative analysis,
//!   including the hyperfine leakage amplitude and its AC-Stark suppression;
//! * high-accuracy Schrodinger and Lindblad propagation;
//! * pulse-table programs for arbitrary qubit rotations, NOT gates, and a
//!   24-pulse robust controlled-phase gate with refocusing;
//! * fidelity surfaces over hyperfine shifts and excited-state lifetimes.
//!
//! All physics is generic over the real scalar type through [`num::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which every tolerance in
//! the test suite assumes.
//!
//! Frequency units: quantities are plain numbers in rad/us. Quoted
//! MHz-scale parameter sets may also be read as cyclic frequencies by
//! scaling all frequency-typed inputs by 2 pi (see
//! `SweepConfig::scale_frequencies`); the CLI exposes this as `--apply-2pi`.

pub mod adiabatic;
pub mod compiler;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod ion;
pub mod linalg;
pub mod num;
pub mod pulse;
pub mod quad;

pub use error::{Result, SimError};

/// Complex double-precision scalar.
pub type C64 = num_complex::Complex<f64>;

/// `f64` instantiations of the core parameter types.
pub type SechPulseParams = pulse::SechPulseParams<f64>;
pub type IonParams = ion::IonParams<f64>;
pub type BarBasis = ion::BarBasis<f64>;
pub type BlockadeParams = ion::BlockadeParams<f64>;
pub type DecayChannel = dynamics::DecayChannel<f64>;
pub type QuantumState = dynamics::QuantumState<f64>;
pub type DensityMatrix = dynamics::DensityMatrix<f64>;
pub type OdeOptions = dynamics::OdeOptions<f64>;
pub type PulseProgram = compiler::PulseProgram<f64>;
pub type PulseEvent = compiler::PulseEvent<f64>;
pub type CompiledHamiltonian = compiler::CompiledHamiltonian<f64>;
pub type SweepConfig = experiments::SweepConfig<f64>;
pub type ScanConfig = experiments::ScanConfig<f64>;
pub type GridSpec = experiments::GridSpec<f64>;
pub type FidelitySurface = experiments::FidelitySurface<f64>;
pub type LeakageSeries = experiments::LeakageSeries<f64>;
pub type LifetimeFamily = experiments::LifetimeFamily<f64>;
