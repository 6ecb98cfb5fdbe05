//! Fidelity metric and parameter sweeps: leakage scans, Bloch-trajectory
//! comparisons, hyperfine fidelity surfaces, and lifetime scans.
//!
//! Grid points are independent and evaluated in parallel; results are
//! gathered in index order, so outputs are deterministic for a fixed
//! configuration.

use num_complex::Complex;
use rayon::prelude::*;

use crate::adiabatic::{
    dressed_states, first_order_propagator, leakage_amplitude, sweep_offset, zeroth_order,
    BlochFrame,
};
use crate::compiler::{
    compile, robust_cphase_program, unrefocused_cphase_program, CompiledHamiltonian, PulseProgram,
};
use crate::dynamics::{
    propagate_vector_sampled, two_ion_collapse_operators, BasisTag, DecayChannel, DensityMatrix,
    OdeOptions, QuantumState,
};
use crate::error::{Result, SimError};
use crate::ion::{
    bar_basis_hamiltonian, embed_qubit_state, qubit_block, BarBasis, BlockadeParams, Drive,
    IonParams, Transition, QUBIT_INDICES,
};
use crate::linalg::{CMat, CVec};
use crate::num::{re, Real};
use crate::pulse::SechPulseParams;

/// Uniform grid specification (inclusive endpoints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<R> {
    pub min: R,
    pub max: R,
    pub count: usize,
}

impl<R: Real> GridSpec<R> {
    pub fn new(min: R, max: R, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(SimError::config("grid count must be positive"));
        }
        if max < min {
            return Err(SimError::config("grid max must be >= min"));
        }
        Ok(GridSpec { min, max, count })
    }

    pub fn values(&self) -> Vec<R> {
        if self.count == 1 {
            return vec![(self.min + self.max) * R::half()];
        }
        let step = (self.max - self.min) / R::of((self.count - 1) as f64);
        (0..self.count).map(|k| self.min + step * R::of(k as f64)).collect()
    }
}

/// Sweep configuration; defaults follow the standard operating point
/// (W0 = 4, mu = 3, b = 1.28, T = 1.5, Delta_c = 0.1, Delta_t = 0.08,
/// hyperfine grids +-0.03 at 21 points, Delta_dd = 20, b0 = b1 = 1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<R> {
    pub pulse: SechPulseParams<R>,
    pub detuning_c: R,
    pub detuning_t: R,
    pub blockade: BlockadeParams<R>,
    pub hf_c: GridSpec<R>,
    pub hf_t: GridSpec<R>,
    /// Excited-state lifetimes (us) for lifetime scans; the first entry is
    /// also the lifetime used when `decay` is on in a surface sweep.
    pub te_list: Vec<R>,
    pub decay: bool,
    pub branching: (R, R),
    pub refocus: bool,
    /// Qubit-subspace input amplitudes over (|00>, |01>, |10>, |11>).
    pub psi_in: [Complex<R>; 4],
    pub tol_state: R,
    pub tol_master: R,
}

impl<R: Real> Default for SweepConfig<R> {
    fn default() -> Self {
        let half = Complex::new(R::half(), R::zero());
        SweepConfig {
            pulse: SechPulseParams::default(),
            detuning_c: R::of(0.1),
            detuning_t: R::of(0.08),
            blockade: BlockadeParams::default(),
            hf_c: GridSpec { min: R::of(-0.03), max: R::of(0.03), count: 21 },
            hf_t: GridSpec { min: R::of(-0.03), max: R::of(0.03), count: 21 },
            te_list: vec![R::of(100.0), R::of(500.0), R::of(1000.0), R::of(1e6)],
            decay: false,
            branching: (R::half(), R::half()),
            refocus: true,
            psi_in: [half; 4],
            tol_state: R::of(1e-9),
            tol_master: R::of(1e-8),
        }
    }
}

impl<R: Real> SweepConfig<R> {
    /// Rescale every frequency-typed field by `factor` (used for the
    /// quoted-values-are-cyclic-frequencies convention, factor = 2 pi).
    /// Times, lifetimes, and tolerances are untouched.
    pub fn scale_frequencies(mut self, factor: R) -> Self {
        self.pulse.omega0 = self.pulse.omega0 * factor;
        self.pulse.beta = self.pulse.beta * factor;
        self.detuning_c = self.detuning_c * factor;
        self.detuning_t = self.detuning_t * factor;
        self.blockade.delta_dd = self.blockade.delta_dd * factor;
        for g in [&mut self.hf_c, &mut self.hf_t] {
            g.min = g.min * factor;
            g.max = g.max * factor;
        }
        self
    }

    /// The program this configuration compiles (robust or unrefocused).
    pub fn program(&self) -> PulseProgram<R> {
        if self.refocus {
            robust_cphase_program(&self.pulse)
        } else {
            unrefocused_cphase_program(&self.pulse)
        }
    }

    pub fn input_state(&self) -> Result<QuantumState<R>> {
        qubit_input_state(&self.psi_in)
    }

    fn decay_channel(&self, te: R) -> Result<DecayChannel<R>> {
        if te <= R::zero() {
            return Err(SimError::config("lifetime must be positive"));
        }
        DecayChannel::new(R::one() / te, self.branching.0, self.branching.1)
    }
}

/// Normalize 4 qubit-subspace amplitudes into a 9-dim two-ion state.
pub fn qubit_input_state<R: Real>(coeffs: &[Complex<R>; 4]) -> Result<QuantumState<R>> {
    let q = CVec::from_iter(coeffs.iter().cloned());
    let embedded = embed_qubit_state(&q)?;
    QuantumState::from_unnormalized(embedded, BasisTag::TwoIonLogical)
}

/// Gate output to score: the projected propagator or a density matrix.
#[derive(Debug, Clone)]
pub enum GateResult<R> {
    /// 4x4 qubit-subspace block of the two-ion propagator.
    Unitary(CMat<R>),
    /// Final 9-dim density matrix of a master-equation run.
    Density(DensityMatrix<R>),
}

fn qubit_components<R: Real>(psi_in: &QuantumState<R>) -> Result<CVec<R>> {
    if psi_in.basis() != BasisTag::TwoIonLogical {
        return Err(SimError::config("fidelity input must be a two-ion state"));
    }
    let a = psi_in.amplitudes();
    let mut excited = R::zero();
    for k in 0..9 {
        if !QUBIT_INDICES.contains(&k) {
            excited = excited + a[k].norm_sqr();
        }
    }
    if excited > R::of(1e-12) {
        return Err(SimError::config("fidelity input has excited-state support"));
    }
    Ok(CVec::from_iter(QUBIT_INDICES.iter().map(|&k| a[k])))
}

fn clip_unit<R: Real>(f: R) -> Result<R> {
    let slack = R::of(1e-9);
    if f < -slack || f > R::one() + slack {
        return Err(SimError::config(format!("fidelity {f} outside [0, 1] beyond slack")));
    }
    Ok(f.max(R::zero()).min(R::one()))
}

/// Fidelity `F = |<psi_in| U0^dag U |psi_in>|^2`, extended to density
/// matrices as `F = <psi_in| U0^dag rho U0 |psi_in>` (the unique linear
/// extension consistent with pure outputs).
pub fn gate_fidelity<R: Real>(
    result: &GateResult<R>,
    u0: &CMat<R>,
    psi_in: &QuantumState<R>,
) -> Result<R> {
    if u0.dim() != (4, 4) {
        return Err(SimError::DimensionMismatch { expected: 4, actual: u0.nrows() });
    }
    let q = qubit_components(psi_in)?;
    match result {
        GateResult::Unitary(u) => {
            if u.dim() != (4, 4) {
                return Err(SimError::DimensionMismatch { expected: 4, actual: u.nrows() });
            }
            let overlap = ideal_overlap(&q, u0, &u.dot(&q));
            clip_unit(overlap.norm_sqr())
        }
        GateResult::Density(rho) => {
            if rho.basis() != BasisTag::TwoIonLogical {
                return Err(SimError::config("density result must be a two-ion matrix"));
            }
            let rho_q = qubit_block(rho.matrix())?;
            let w = u0.dot(&q); // ideal output
            let mut f = Complex::new(R::zero(), R::zero());
            for i in 0..4 {
                for j in 0..4 {
                    f = f + w[i].conj() * rho_q[(i, j)] * w[j];
                }
            }
            clip_unit(f.re)
        }
    }
}

fn ideal_overlap<R: Real>(q: &CVec<R>, u0: &CMat<R>, out: &CVec<R>) -> Complex<R> {
    let w = u0.dot(q);
    let mut acc = Complex::new(R::zero(), R::zero());
    for k in 0..4 {
        acc = acc + w[k].conj() * out[k];
    }
    acc
}

/// FNV-1a hash of the canonical 12-significant-digit rendering of a matrix;
/// identifies which reference unitary a surface was scored against.
pub fn matrix_checksum<R: Real>(m: &CMat<R>) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |s: &str| {
        for b in s.as_bytes() {
            hash ^= *b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for v in m.iter() {
        feed(&format!(
            "{:.12e},{:.12e};",
            v.re.to_f64().unwrap_or(f64::NAN),
            v.im.to_f64().unwrap_or(f64::NAN)
        ));
    }
    format!("{hash:016x}")
}

/// Reference operator for the fidelity metric: the same program compiled and
/// propagated at reference parameters (hyperfine shifts zero, nominal
/// detunings, no decay), projected onto the qubit subspace.
#[derive(Debug, Clone)]
pub struct ReferenceUnitary<R> {
    pub matrix: CMat<R>,
    pub checksum: String,
    /// Controlled-phase invariant arg<11> - arg<10> - arg<01> + arg<00>,
    /// wrapped to (-pi, pi].
    pub invariant: R,
}

/// Wrapped controlled-phase invariant of a 4x4 qubit operator.
pub fn cphase_invariant<R: Real>(u: &CMat<R>) -> R {
    let a = u[(3, 3)].arg() - u[(2, 2)].arg() - u[(1, 1)].arg() + u[(0, 0)].arg();
    wrap_angle(a)
}

fn wrap_angle<R: Real>(a: R) -> R {
    let tau = R::PI() * R::two();
    let mut x = a;
    while x > R::PI() {
        x = x - tau;
    }
    while x <= -R::PI() {
        x = x + tau;
    }
    x
}

fn projected_unitary<R: Real>(h: &CompiledHamiltonian<R>, tol: R) -> Result<CMat<R>> {
    let opts = OdeOptions::state().with_tol(tol);
    let mut u = CMat::from_elem((4, 4), Complex::new(R::zero(), R::zero()));
    for (col, &idx) in QUBIT_INDICES.iter().enumerate() {
        let mut y0 = CVec::from_elem(9, Complex::new(R::zero(), R::zero()));
        y0[idx] = Complex::new(R::one(), R::zero());
        let y = h.propagate_vector(&y0, h.t_begin(), h.t_end(), &opts)?;
        for (row, &ridx) in QUBIT_INDICES.iter().enumerate() {
            u[(row, col)] = y[ridx];
        }
    }
    Ok(u)
}

/// Compile and propagate the configured program at reference parameters.
pub fn reference_unitary<R: Real>(config: &SweepConfig<R>) -> Result<ReferenceUnitary<R>> {
    let program = config.program();
    let control = IonParams::new(config.detuning_c, R::zero());
    let target = IonParams::new(config.detuning_t, R::zero());
    let h = compile(&program, &control, &target, &config.blockade)?;
    let matrix = projected_unitary(&h, config.tol_state)?;
    let checksum = matrix_checksum(&matrix);
    let invariant = cphase_invariant(&matrix);
    Ok(ReferenceUnitary { matrix, checksum, invariant })
}

/// One axis of a gridded result.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisDef<R> {
    pub name: String,
    pub unit: String,
    pub values: Vec<R>,
}

/// Gridded fidelity values over (delta_c, delta_t), row-major with the
/// control axis slow.
#[derive(Debug, Clone)]
pub struct FidelitySurface<R> {
    pub axis_c: AxisDef<R>,
    pub axis_t: AxisDef<R>,
    pub values: Vec<R>,
    pub u0_checksum: String,
    /// Lifetime used if decay was enabled.
    pub decay_te: Option<R>,
    /// (flat index, message) for points whose propagation failed.
    pub failures: Vec<(usize, String)>,
}

impl<R: Real> FidelitySurface<R> {
    pub fn value(&self, i_c: usize, i_t: usize) -> R {
        self.values[i_c * self.axis_t.values.len() + i_t]
    }

    pub fn min(&self) -> R {
        self.values.iter().copied().filter(|v| !v.is_nan()).fold(R::infinity(), R::min)
    }

    pub fn max(&self) -> R {
        self.values.iter().copied().filter(|v| !v.is_nan()).fold(R::neg_infinity(), R::max)
    }

    /// Largest spread of F along the control axis at any fixed target shift.
    pub fn variation_along_c(&self) -> R {
        let (nc, nt) = (self.axis_c.values.len(), self.axis_t.values.len());
        let mut worst = R::zero();
        for j in 0..nt {
            let col: Vec<R> = (0..nc).map(|i| self.value(i, j)).collect();
            worst = worst.max(spread(&col));
        }
        worst
    }

    /// Largest spread of F along the target axis at any fixed control shift.
    pub fn variation_along_t(&self) -> R {
        let (nc, nt) = (self.axis_c.values.len(), self.axis_t.values.len());
        let mut worst = R::zero();
        for i in 0..nc {
            let row: Vec<R> = (0..nt).map(|j| self.value(i, j)).collect();
            worst = worst.max(spread(&row));
        }
        worst
    }

    /// Pointwise difference `self - other`; the two surfaces must share the
    /// same reference unitary and axes.
    pub fn pointwise_delta(&self, other: &FidelitySurface<R>) -> Result<Vec<R>> {
        if self.u0_checksum != other.u0_checksum {
            return Err(SimError::ChecksumMismatch {
                left: self.u0_checksum.clone(),
                right: other.u0_checksum.clone(),
            });
        }
        if self.axis_c != other.axis_c || self.axis_t != other.axis_t {
            return Err(SimError::config("surfaces have different axes"));
        }
        Ok(self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect())
    }
}

fn spread<R: Real>(xs: &[R]) -> R {
    let mut lo = R::infinity();
    let mut hi = R::neg_infinity();
    for &x in xs {
        if x.is_nan() {
            continue;
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if hi >= lo {
        hi - lo
    } else {
        R::zero()
    }
}

fn fidelity_at_point<R: Real>(
    config: &SweepConfig<R>,
    program: &PulseProgram<R>,
    u0: &CMat<R>,
    hf_c: R,
    hf_t: R,
    te: Option<R>,
) -> Result<R> {
    let control = IonParams::new(config.detuning_c, hf_c);
    let target = IonParams::new(config.detuning_t, hf_t);
    let h = compile(program, &control, &target, &config.blockade)?;
    let psi_in = config.input_state()?;
    match te {
        None => {
            let opts = OdeOptions::state().with_tol(config.tol_state);
            let out = h.propagate_vector(
                psi_in.amplitudes(),
                h.t_begin(),
                h.t_end(),
                &opts,
            )?;
            let q_in = qubit_components(&psi_in)?;
            let q_out = CVec::from_iter(QUBIT_INDICES.iter().map(|&k| out[k]));
            let overlap = ideal_overlap(&q_in, u0, &q_out);
            clip_unit(overlap.norm_sqr())
        }
        Some(te) => {
            let ch = config.decay_channel(te)?;
            let channels = two_ion_collapse_operators(Some(&ch), Some(&ch))?;
            let rho0 = DensityMatrix::from_pure(&psi_in);
            let opts = OdeOptions::master().with_tol(config.tol_master);
            let out = h.propagate_master(&rho0, &channels, &opts)?;
            gate_fidelity(&GateResult::Density(out.state), u0, &psi_in)
        }
    }
}

/// Fidelity surface over the hyperfine-shift grid; the master equation is
/// used when decay is enabled, scored against the closed-system reference.
pub fn sweep_hyperfine<R: Real>(config: &SweepConfig<R>) -> Result<FidelitySurface<R>> {
    let program = config.program();
    let reference = reference_unitary(config)?;
    let cs = config.hf_c.values();
    let ts = config.hf_t.values();
    let te = if config.decay {
        Some(*config.te_list.first().ok_or_else(|| SimError::config("empty te list"))?)
    } else {
        None
    };

    let mut points: Vec<(usize, R, R)> = Vec::with_capacity(cs.len() * ts.len());
    for (i, &c) in cs.iter().enumerate() {
        for (j, &t) in ts.iter().enumerate() {
            points.push((i * ts.len() + j, c, t));
        }
    }
    let results: Vec<(usize, std::result::Result<R, String>)> = points
        .par_iter()
        .map(|&(idx, c, t)| {
            let r = fidelity_at_point(config, &program, &reference.matrix, c, t, te)
                .map_err(|e| e.to_string());
            (idx, r)
        })
        .collect();

    let mut values = vec![R::nan(); points.len()];
    let mut failures = Vec::new();
    for (idx, r) in results {
        match r {
            Ok(v) => values[idx] = v,
            Err(msg) => failures.push((idx, msg)),
        }
    }
    Ok(FidelitySurface {
        axis_c: AxisDef { name: "delta_c".into(), unit: "rad_per_us".into(), values: cs },
        axis_t: AxisDef { name: "delta_t".into(), unit: "rad_per_us".into(), values: ts },
        values,
        u0_checksum: reference.checksum,
        decay_te: te,
        failures,
    })
}

/// One fidelity curve per excited-state lifetime, over the target-shift
/// grid at `delta_c = 0` (justified by the control-shift insensitivity of
/// the refocused sequence).
#[derive(Debug, Clone)]
pub struct LifetimeFamily<R> {
    pub te: Vec<R>,
    pub delta_t: Vec<R>,
    /// `values[k][j]` — lifetime `te[k]`, shift `delta_t[j]`.
    pub values: Vec<Vec<R>>,
    pub u0_checksum: String,
}

pub fn sweep_lifetime<R: Real>(config: &SweepConfig<R>) -> Result<LifetimeFamily<R>> {
    if config.te_list.is_empty() {
        return Err(SimError::config("empty te list"));
    }
    let program = config.program();
    let reference = reference_unitary(config)?;
    let ts = config.hf_t.values();
    let mut jobs: Vec<(usize, usize, R, R)> =
        Vec::with_capacity(config.te_list.len() * ts.len());
    for (k, &te) in config.te_list.iter().enumerate() {
        for (j, &t) in ts.iter().enumerate() {
            jobs.push((k, j, te, t));
        }
    }
    let results: Vec<(usize, usize, std::result::Result<R, String>)> = jobs
        .par_iter()
        .map(|&(k, j, te, t)| {
            let r = fidelity_at_point(config, &program, &reference.matrix, R::zero(), t, Some(te))
                .map_err(|e| e.to_string());
            (k, j, r)
        })
        .collect();
    let mut values = vec![vec![R::nan(); ts.len()]; config.te_list.len()];
    for (k, j, r) in results {
        match r {
            Ok(v) => values[k][j] = v,
            Err(msg) => {
                return Err(SimError::config(format!(
                    "lifetime sweep point (te index {k}, shift index {j}) failed: {msg}"
                )))
            }
        }
    }
    Ok(LifetimeFamily {
        te: config.te_list.clone(),
        delta_t: ts,
        values,
        u0_checksum: reference.checksum,
    })
}

/// The refocused and unrefocused surfaces (in that order), each scored
/// against its own reference unitary. Decay must be off.
pub fn unrefocused_comparison<R: Real>(
    config: &SweepConfig<R>,
) -> Result<(FidelitySurface<R>, FidelitySurface<R>)> {
    if config.decay {
        return Err(SimError::config("the refocusing comparison is a closed-system experiment"));
    }
    let mut refocused_cfg = config.clone();
    refocused_cfg.refocus = true;
    let mut unref_cfg = config.clone();
    unref_cfg.refocus = false;
    let refocused = sweep_hyperfine(&refocused_cfg)?;
    let unrefocused = sweep_hyperfine(&unref_cfg)?;
    Ok((refocused, unrefocused))
}

/// Arithmetic mean of the gate fidelity over explicit per-ion parameter
/// samples (deterministic for a fixed sample list).
pub fn ensemble_average_fidelity<R: Real>(
    config: &SweepConfig<R>,
    samples: &[(IonParams<R>, IonParams<R>)],
) -> Result<R> {
    if samples.is_empty() {
        return Err(SimError::config("empty ensemble sample set"));
    }
    let program = config.program();
    let reference = reference_unitary(config)?;
    let te = if config.decay { Some(config.te_list[0]) } else { None };
    let results: Vec<std::result::Result<R, String>> = samples
        .par_iter()
        .map(|(c, t)| {
            let mut cfg = config.clone();
            cfg.detuning_c = c.delta_opt;
            cfg.detuning_t = t.delta_opt;
            fidelity_at_point(&cfg, &program, &reference.matrix, c.delta_hf, t.delta_hf, te)
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut acc = R::zero();
    for r in results {
        acc = acc + r.map_err(SimError::Config)?;
    }
    Ok(acc / R::of(samples.len() as f64))
}

/// Paired leakage curves: full three-level integration vs the perturbative
/// amplitude, on a shared grid.
#[derive(Debug, Clone)]
pub struct LeakageSeries<R> {
    pub times: Vec<R>,
    pub numeric: Vec<R>,
    pub perturbative: Vec<R>,
}

/// Configuration for single-ion scans (leakage and Bloch trajectories).
#[derive(Debug, Clone, Copy)]
pub struct ScanConfig<R> {
    pub pulse: SechPulseParams<R>,
    /// Optical detuning Delta.
    pub detuning: R,
    /// Hyperfine shift delta.
    pub hf_shift: R,
    pub points: usize,
    pub tol: R,
}

impl<R: Real> Default for ScanConfig<R> {
    fn default() -> Self {
        ScanConfig {
            pulse: SechPulseParams::default(),
            detuning: R::of(0.1),
            hf_shift: R::of(0.03),
            points: 256,
            tol: R::of(1e-9),
        }
    }
}

impl<R: Real> ScanConfig<R> {
    pub fn scale_frequencies(mut self, factor: R) -> Self {
        self.pulse.omega0 = self.pulse.omega0 * factor;
        self.pulse.beta = self.pulse.beta * factor;
        self.detuning = self.detuning * factor;
        self.hf_shift = self.hf_shift * factor;
        self
    }

    fn grid(&self) -> Vec<R> {
        let n = self.points.max(2);
        let (a, b) = (self.pulse.t_start, self.pulse.t_end());
        (0..n)
            .map(|k| a + (b - a) * R::of(k as f64) / R::of((n - 1) as f64))
            .collect()
    }
}

/// Bar-state leakage during a single two-color pulse addressing the
/// 0bar <-> e transition: numeric three-level integration next to the
/// perturbative amplitude.
pub fn leakage_scan<R: Real>(config: &ScanConfig<R>) -> Result<LeakageSeries<R>> {
    if config.points < 2 {
        return Err(SimError::config("leakage scan needs at least 2 points"));
    }
    let grid = config.grid();
    let ion = IonParams::new(config.detuning, config.hf_shift);
    let bar = BarBasis::new(R::zero());

    // numeric: bar-basis three-level system with the 0bar-selective
    // two-color drive whose effective envelope is the configured pulse
    let scale = re(R::half().sqrt());
    let zero_sel = bar.select_zero_bar();
    let h = |t: R| {
        let amp = config.pulse.complex_rabi(t) * scale;
        let drives = [
            Drive { transition: Transition::ZeroToE, amplitude: amp },
            Drive {
                transition: Transition::OneToE,
                amplitude: amp * crate::num::cis(zero_sel),
            },
        ];
        bar_basis_hamiltonian(&ion, &bar, &drives).expect("distinct transitions")
    };
    let mut y0 = CVec::from_elem(3, Complex::new(R::zero(), R::zero()));
    y0[0] = Complex::new(R::one(), R::zero());
    let opts = OdeOptions::state().with_tol(config.tol);
    let states = propagate_vector_sampled(&h, &y0, &grid, &opts)?;
    let numeric: Vec<R> = states.iter().map(|y| y[1].norm_sqr()).collect();

    let amp = leakage_amplitude(&config.pulse, &ion, &grid)?;
    let perturbative: Vec<R> = amp.iter().map(|u| u.norm_sqr()).collect();
    Ok(LeakageSeries { times: grid, numeric, perturbative })
}

/// Bloch trajectories during one sech pulse: full ODE solution next to the
/// zeroth-order (adiabatic) and first-order perturbative reconstructions,
/// starting from |i> at the window edge.
#[derive(Debug, Clone)]
pub struct BlochTrajectories<R> {
    pub times: Vec<R>,
    pub ode: Vec<[R; 3]>,
    pub zeroth: Vec<[R; 3]>,
    pub first: Vec<[R; 3]>,
    /// Non-unitarity diagnostic of the first-order propagator.
    pub first_order_defect: R,
}

pub fn bloch_trajectory<R: Real>(
    config: &ScanConfig<R>,
    frame: BlochFrame,
) -> Result<BlochTrajectories<R>> {
    let grid = config.grid();
    let pulse = config.pulse;
    let ion = IonParams::new(config.detuning, R::zero());

    // accelerated-frame two-level ODE over (|e>, |i>)
    let h = |t: R| {
        let x = sweep_offset(&pulse, &ion, t);
        let w = pulse.rabi_envelope(t) * R::half();
        let mut m = CMat::from_elem((2, 2), Complex::new(R::zero(), R::zero()));
        m[(0, 0)] = re(x);
        m[(0, 1)] = re(w);
        m[(1, 0)] = re(w);
        m
    };
    let mut y0 = CVec::from_elem(2, Complex::new(R::zero(), R::zero()));
    y0[1] = Complex::new(R::one(), R::zero());
    let opts = OdeOptions::state().with_tol(config.tol);
    let states = propagate_vector_sampled(&h, &y0, &grid, &opts)?;

    let to_frame = |c_e: Complex<R>, c_i: Complex<R>, t: R| -> Result<[R; 3]> {
        crate::adiabatic::bloch_in_frame(c_e, c_i, frame, &pulse, &ion, t)
    };

    let mut ode = Vec::with_capacity(grid.len());
    for (k, y) in states.iter().enumerate() {
        ode.push(to_frame(y[0], y[1], grid[k])?);
    }

    // dressed expansion of the initial state
    let d0 = dressed_states(sweep_offset(&pulse, &ion, grid[0]), pulse.rabi_envelope(grid[0]))?;
    let c0 = [re(d0.minus[1]), re(d0.plus[1])]; // <-|i>, <+|i>

    let traj = zeroth_order(&pulse, &ion, &grid)?;
    let z0 = traj.zeroth[0];
    let mut zeroth = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let zm = traj.zeroth[k][0] * z0[0].conj() * c0[0];
        let zp = traj.zeroth[k][1] * z0[1].conj() * c0[1];
        let d = dressed_states(sweep_offset(&pulse, &ion, t), pulse.rabi_envelope(t))?;
        let c_e = zm * re(d.minus[0]) + zp * re(d.plus[0]);
        let c_i = zm * re(d.minus[1]) + zp * re(d.plus[1]);
        zeroth.push(to_frame(c_e, c_i, t)?);
    }

    let fo = first_order_propagator(&pulse, &ion, &grid)?;
    let mut first = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let u = &fo.propagators[k];
        let cm = u[0][0] * c0[0] + u[0][1] * c0[1];
        let cp = u[1][0] * c0[0] + u[1][1] * c0[1];
        let d = dressed_states(sweep_offset(&pulse, &ion, t), pulse.rabi_envelope(t))?;
        let c_e = cm * re(d.minus[0]) + cp * re(d.plus[0]);
        let c_i = cm * re(d.minus[1]) + cp * re(d.plus[1]);
        // the first-order propagator is not re-unitarized; renormalize only
        // for the coordinate map, which requires a unit state
        let n = (c_e.norm_sqr() + c_i.norm_sqr()).sqrt();
        first.push(to_frame(c_e / re(n), c_i / re(n), t)?);
    }

    Ok(BlochTrajectories {
        times: grid,
        ode,
        zeroth,
        first,
        first_order_defect: fo.max_unitarity_defect,
    })
}

/// Euclidean distance between two Bloch points.
pub fn bloch_distance<R: Real>(a: &[R; 3], b: &[R; 3]) -> R {
    let mut acc = R::zero();
    for k in 0..3 {
        let d = a[k] - b[k];
        acc = acc + d * d;
    }
    acc.sqrt()
}
