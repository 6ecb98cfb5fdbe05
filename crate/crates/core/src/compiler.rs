//! Pulse-table data, program builders, scheduling, and compilation of
//! programs into time-dependent Hamiltonians.
//!
//! The two-qubit gate sequences are shipped as machine-readable tables; the
//! program builders consume those tables, schedule the pulses strictly
//! sequentially (configurable inter-pulse gap, zero by default), and the
//! compiler renders a program into a callable `H(t)`.
//!
//! Two-color events drive both optical transitions with equal envelopes
//! scaled by `1/sqrt(2)`, so the addressed bar transition sees exactly the
//! nominal envelope. The relative phase selecting |1bar> is `pi - alpha`
//! under this crate's drive convention (see [`crate::ion::BarBasis`]); the
//! rotation-table phases are expressed in that convention and validated
//! against the closed-form rotation unitary rather than assumed.

use num_complex::Complex;

use crate::dynamics::{
    propagate_vector, DensityMatrix, MasterOutcome, OdeOptions, QuantumState,
};
use crate::error::{Result, SimError};
use crate::ion::{
    single_ion_hamiltonian, two_ion_hamiltonian, BarBasis, BlockadeParams, Drive, IonParams,
    Transition, DIM, DIM_TWO,
};
use crate::linalg::{dagger, zeros, CMat, CVec};
use crate::num::{cis, re, Real};
use crate::pulse::SechPulseParams;

/// Which ion an event addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IonId {
    Control,
    Target,
}

impl IonId {
    pub fn token(self) -> &'static str {
        match self {
            IonId::Control => "control",
            IonId::Target => "target",
        }
    }

    pub fn from_token(s: &str) -> Result<Self> {
        match s {
            "control" => Ok(IonId::Control),
            "target" => Ok(IonId::Target),
            other => Err(SimError::config(format!("unknown ion token '{other}'"))),
        }
    }
}

/// One color of an event: a transition and its carrier phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseColor<R> {
    pub transition: Transition,
    pub phase: R,
}

/// One scheduled pulse: one or two colors sharing a single sech envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEvent<R> {
    pub ion: IonId,
    pub colors: Vec<PulseColor<R>>,
    /// Envelope with `t_start` set to this event's start; its `phase` field
    /// is unused (carrier phases live on the colors).
    pub envelope: SechPulseParams<R>,
}

impl<R: Real> PulseEvent<R> {
    pub fn t_start(&self) -> R {
        self.envelope.t_start
    }

    pub fn t_end(&self) -> R {
        self.envelope.t_end()
    }

    /// Active on the half-open window so adjacent events never overlap at
    /// the shared boundary instant.
    pub fn active_at(&self, t: R) -> bool {
        t >= self.t_start() && t < self.t_end()
    }

    /// Per-color amplitude scale: two-color events split the envelope so the
    /// addressed bar transition sees the nominal peak Rabi frequency.
    pub fn amplitude_scale(&self) -> R {
        if self.colors.len() == 2 {
            R::half().sqrt()
        } else {
            R::one()
        }
    }

    /// Resolved drives at time `t`.
    pub fn drives(&self, t: R) -> Vec<Drive<R>> {
        let scale = re(self.amplitude_scale());
        self.colors
            .iter()
            .map(|c| Drive {
                transition: c.transition,
                amplitude: self.envelope.with_phase(c.phase).complex_rabi(t) * scale,
            })
            .collect()
    }
}

/// Program metadata: the table it came from and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramMeta<R> {
    pub name: String,
    pub theta: Option<R>,
    pub alpha: Option<R>,
}

/// Time-ordered pulse program.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram<R> {
    pub events: Vec<PulseEvent<R>>,
    pub meta: ProgramMeta<R>,
}

/// Table column: the (ion, transition, phase) content of one pulse, before
/// scheduling. Two-color pulses carry two entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TableColumn<R> {
    pub ion: IonId,
    pub colors: Vec<(Transition, R)>,
}

/// The shipped pulse tables.
pub mod tables {
    use super::*;

    fn col<R: Real>(ion: IonId, entries: &[(Transition, R)]) -> TableColumn<R> {
        TableColumn { ion, colors: entries.to_vec() }
    }

    /// Four-pulse two-color table applying `diag(1, e^{i theta})` in the bar
    /// basis of angle `alpha`. Pulses 1-2 address |1bar> (the second shifted
    /// by `pi - theta` overall), pulses 3-4 address |0bar> with opposite
    /// phases to cancel the detuning-dependent phase.
    pub fn rotation<R: Real>(theta: R, alpha: R) -> Vec<TableColumn<R>> {
        let pi = R::PI();
        let sel1 = pi - alpha; // relative phase addressing |1bar>
        let sel0 = -alpha; // relative phase addressing |0bar>
        let shift = pi - theta; // overall phase of the second |1bar> pulse
        vec![
            col(IonId::Target, &[(Transition::ZeroToE, R::zero()), (Transition::OneToE, sel1)]),
            col(IonId::Target, &[(Transition::ZeroToE, shift), (Transition::OneToE, shift + sel1)]),
            col(IonId::Target, &[(Transition::ZeroToE, R::zero()), (Transition::OneToE, sel0)]),
            col(IonId::Target, &[(Transition::ZeroToE, pi), (Transition::OneToE, pi + sel0)]),
        ]
    }

    /// Three-pulse single-color NOT gate on one ion.
    pub fn not_gate<R: Real>(ion: IonId) -> Vec<TableColumn<R>> {
        vec![
            col(ion, &[(Transition::ZeroToE, R::zero())]),
            col(ion, &[(Transition::OneToE, R::zero())]),
            col(ion, &[(Transition::ZeroToE, R::zero())]),
        ]
    }

    /// Naive four-pulse controlled phase: excite the control, run an
    /// effective 2 pi rotation on the target 1 <-> e, return the control.
    pub fn naive_cphase<R: Real>() -> Vec<TableColumn<R>> {
        let pi = R::PI();
        vec![
            col(IonId::Control, &[(Transition::ZeroToE, R::zero())]),
            col(IonId::Target, &[(Transition::OneToE, R::zero())]),
            col(IonId::Target, &[(Transition::OneToE, R::zero())]),
            col(IonId::Control, &[(Transition::ZeroToE, pi)]),
        ]
    }

    /// 24-pulse robust controlled phase: a phase-compensated controlled
    /// phase (1-6), NOT gates on both qubits (7-12), the compensating
    /// controlled identity (13-18), and the closing NOT gates (19-24).
    /// Pulse 17 carries phase pi where pulse 5 carries 0; the asymmetry is
    /// what removes the conditional phase from the second half.
    pub fn robust_cphase<R: Real>() -> Vec<TableColumn<R>> {
        let pi = R::PI();
        let z = R::zero();
        let c0 = |p: R| col(IonId::Control, &[(Transition::ZeroToE, p)]);
        let c1 = |p: R| col(IonId::Control, &[(Transition::OneToE, p)]);
        let t0 = |p: R| col(IonId::Target, &[(Transition::ZeroToE, p)]);
        let t1 = |p: R| col(IonId::Target, &[(Transition::OneToE, p)]);
        vec![
            // 1-6: controlled phase with detuning compensation
            c0(z),
            t0(z),
            t0(pi),
            t1(z),
            t1(z),
            c0(pi),
            // 7-12: NOT on control, then NOT on target (staggered)
            c0(z),
            c1(z),
            c0(z),
            t0(z),
            t1(z),
            t0(z),
            // 13-18: controlled identity
            c0(z),
            t0(z),
            t0(pi),
            t1(z),
            t1(pi),
            c0(pi),
            // 19-24: closing NOT gates
            c0(z),
            c1(z),
            c0(z),
            t0(z),
            t1(z),
            t0(z),
        ]
    }
}

/// Schedule table columns strictly sequentially with the given inter-pulse
/// gap.
pub fn schedule<R: Real>(
    columns: &[TableColumn<R>],
    envelope: &SechPulseParams<R>,
    gap: R,
    meta: ProgramMeta<R>,
) -> PulseProgram<R> {
    let mut events = Vec::with_capacity(columns.len());
    let mut t = envelope.t_start;
    for c in columns {
        events.push(PulseEvent {
            ion: c.ion,
            colors: c
                .colors
                .iter()
                .map(|&(transition, phase)| PulseColor { transition, phase })
                .collect(),
            envelope: envelope.with_start(t),
        });
        t = t + envelope.duration + gap;
    }
    PulseProgram { events, meta }
}

impl<R: Real> PulseProgram<R> {
    pub fn total_duration(&self) -> R {
        self.events
            .iter()
            .map(|e| e.t_end())
            .fold(self.events.first().map(|e| e.t_start()).unwrap_or(R::zero()), R::max)
            - self.t_begin()
    }

    pub fn t_begin(&self) -> R {
        self.events.iter().map(|e| e.t_start()).fold(R::infinity(), R::min)
    }

    pub fn t_end(&self) -> R {
        self.events.iter().map(|e| e.t_end()).fold(R::neg_infinity(), R::max)
    }

    /// Rebuild with a different inter-pulse gap, keeping the event order.
    pub fn with_gap(&self, gap: R) -> PulseProgram<R> {
        let columns = self.as_table();
        let envelope = self.events[0].envelope;
        schedule(&columns, &envelope.with_start(envelope.t_start), gap, self.meta.clone())
    }

    /// Render back into table form (the diff target for the shipped data).
    pub fn as_table(&self) -> Vec<TableColumn<R>> {
        self.events
            .iter()
            .map(|e| TableColumn {
                ion: e.ion,
                colors: e.colors.iter().map(|c| (c.transition, c.phase)).collect(),
            })
            .collect()
    }

    /// Same-ion events must never overlap, and no two events on different
    /// ions may drive excitation simultaneously (the staggering constraint;
    /// strictly sequential schedules satisfy both).
    pub fn validate(&self) -> Result<()> {
        if self.events.is_empty() {
            return Ok(());
        }
        for e in &self.events {
            e.envelope.validate()?;
            if e.colors.is_empty() || e.colors.len() > 2 {
                return Err(SimError::config("events carry one or two colors"));
            }
            if e.colors.len() == 2 && e.colors[0].transition == e.colors[1].transition {
                return Err(SimError::config("two-color events must address both transitions"));
            }
        }
        let mut spans: Vec<(R, R, IonId)> =
            self.events.iter().map(|e| (e.t_start(), e.t_end(), e.ion)).collect();
        spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in spans.windows(2) {
            let tol = self.events[0].envelope.duration * R::of(1e-12);
            if w[1].0 < w[0].1 - tol {
                if w[0].2 == w[1].2 {
                    return Err(SimError::config("overlapping events on one ion"));
                }
                return Err(SimError::config(
                    "simultaneous excitation drives on both ions violate the staggering constraint",
                ));
            }
        }
        Ok(())
    }

    /// Line-oriented text serialization:
    ///
    /// ```text
    /// index ion transition phase_rad t_start_us duration_us
    /// ```
    ///
    /// with two-color events carrying two transition/phase pairs before the
    /// timing fields. Lines beginning with `#` are comments.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# program: {}\n", self.meta.name));
        for (k, e) in self.events.iter().enumerate() {
            let mut line = format!("{k} {}", e.ion.token());
            for c in &e.colors {
                line.push_str(&format!(" {} {}", c.transition.token(), c.phase));
            }
            line.push_str(&format!(" {} {}", e.t_start(), e.envelope.duration));
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Parse the text form produced by [`Self::serialize`]; envelope shape
    /// parameters come from `base`, timing and phases from the lines.
    pub fn parse(text: &str, base: &SechPulseParams<R>, name: &str) -> Result<PulseProgram<R>> {
        let mut events = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| {
                SimError::config(format!("line {}: {}", lineno + 1, what))
            };
            if fields.len() != 6 && fields.len() != 8 {
                return Err(bad("expected 6 or 8 fields"));
            }
            fields[0].parse::<usize>().map_err(|_| bad("bad index"))?;
            let ion = IonId::from_token(fields[1])?;
            let ncolors = (fields.len() - 4) / 2;
            let mut colors = Vec::with_capacity(ncolors);
            for c in 0..ncolors {
                let transition = Transition::from_token(fields[2 + 2 * c])?;
                let phase: f64 =
                    fields[3 + 2 * c].parse().map_err(|_| bad("bad phase"))?;
                colors.push(PulseColor { transition, phase: R::of(phase) });
            }
            let t_start: f64 = fields[fields.len() - 2].parse().map_err(|_| bad("bad t_start"))?;
            let duration: f64 =
                fields[fields.len() - 1].parse().map_err(|_| bad("bad duration"))?;
            let envelope = SechPulseParams {
                duration: R::of(duration),
                t_start: R::of(t_start),
                phase: R::zero(),
                ..*base
            };
            events.push(PulseEvent { ion, colors, envelope });
        }
        let prog = PulseProgram {
            events,
            meta: ProgramMeta { name: name.to_string(), theta: None, alpha: None },
        };
        prog.validate()?;
        Ok(prog)
    }
}

/// Four two-color pulses applying an arbitrary qubit rotation (phase
/// `e^{i theta}` on the |1bar> state of the `alpha` bar basis).
pub fn arbitrary_rotation_program<R: Real>(
    theta: R,
    alpha: R,
    p: &SechPulseParams<R>,
) -> PulseProgram<R> {
    schedule(
        &tables::rotation(theta, alpha),
        p,
        R::zero(),
        ProgramMeta { name: "rotation".into(), theta: Some(theta), alpha: Some(alpha) },
    )
}

/// Three single-color pulses implementing a NOT gate on one ion.
pub fn not_gate_program<R: Real>(ion: IonId, p: &SechPulseParams<R>) -> PulseProgram<R> {
    schedule(
        &tables::not_gate(ion),
        p,
        R::zero(),
        ProgramMeta { name: format!("not-{}", ion.token()), theta: None, alpha: None },
    )
}

/// Naive four-pulse controlled phase gate.
pub fn naive_cphase_program<R: Real>(p: &SechPulseParams<R>) -> PulseProgram<R> {
    schedule(
        &tables::naive_cphase(),
        p,
        R::zero(),
        ProgramMeta { name: "naive-cphase".into(), theta: None, alpha: None },
    )
}

/// 24-pulse robust controlled phase gate.
pub fn robust_cphase_program<R: Real>(p: &SechPulseParams<R>) -> PulseProgram<R> {
    schedule(
        &tables::robust_cphase(),
        p,
        R::zero(),
        ProgramMeta { name: "robust-cphase".into(), theta: None, alpha: None },
    )
}

/// The robust program with the refocusing NOT blocks (pulses 7-12 and 19-24)
/// removed and the remainder rescheduled sequentially.
pub fn unrefocused_cphase_program<R: Real>(p: &SechPulseParams<R>) -> PulseProgram<R> {
    let full = tables::robust_cphase::<R>();
    let keep: Vec<TableColumn<R>> = full
        .iter()
        .enumerate()
        .filter(|(k, _)| !(6..12).contains(k) && !(18..24).contains(k))
        .map(|(_, c)| c.clone())
        .collect();
    schedule(
        &keep,
        p,
        R::zero(),
        ProgramMeta { name: "robust-cphase-unrefocused".into(), theta: None, alpha: None },
    )
}

/// A program rendered against concrete ion parameters: a callable `H(t)`.
#[derive(Debug, Clone)]
pub struct CompiledHamiltonian<R> {
    events: Vec<PulseEvent<R>>,
    kind: CompiledKind<R>,
    /// Drive-free part, built once; drives add a handful of entries per call.
    static_part: CMat<R>,
    t_begin: R,
    t_end: R,
}

#[derive(Debug, Clone)]
enum CompiledKind<R> {
    Single { ion: IonParams<R> },
    Two { control: IonParams<R>, target: IonParams<R>, blockade: BlockadeParams<R> },
}

/// Compile a two-ion program.
pub fn compile<R: Real>(
    program: &PulseProgram<R>,
    control: &IonParams<R>,
    target: &IonParams<R>,
    blockade: &BlockadeParams<R>,
) -> Result<CompiledHamiltonian<R>> {
    program.validate()?;
    let (t_begin, t_end) = if program.events.is_empty() {
        (R::zero(), R::zero())
    } else {
        (program.t_begin(), program.t_end())
    };
    Ok(CompiledHamiltonian {
        events: program.events.clone(),
        kind: CompiledKind::Two { control: *control, target: *target, blockade: *blockade },
        static_part: two_ion_hamiltonian(control, target, blockade, &[], &[])?,
        t_begin,
        t_end,
    })
}

/// Compile a program whose events all address one ion into a 3x3
/// Hamiltonian.
pub fn compile_single<R: Real>(
    program: &PulseProgram<R>,
    ion: &IonParams<R>,
) -> Result<CompiledHamiltonian<R>> {
    program.validate()?;
    let first = program.events.first().map(|e| e.ion);
    if let Some(id) = first {
        if program.events.iter().any(|e| e.ion != id) {
            return Err(SimError::config("single-ion compilation requires a one-ion program"));
        }
    }
    let (t_begin, t_end) = if program.events.is_empty() {
        (R::zero(), R::zero())
    } else {
        (program.t_begin(), program.t_end())
    };
    Ok(CompiledHamiltonian {
        events: program.events.clone(),
        kind: CompiledKind::Single { ion: *ion },
        static_part: single_ion_hamiltonian(ion, &[])?,
        t_begin,
        t_end,
    })
}

impl<R: Real> CompiledHamiltonian<R> {
    pub fn dim(&self) -> usize {
        match self.kind {
            CompiledKind::Single { .. } => DIM,
            CompiledKind::Two { .. } => DIM_TWO,
        }
    }

    pub fn t_begin(&self) -> R {
        self.t_begin
    }

    pub fn t_end(&self) -> R {
        self.t_end
    }

    /// Hamiltonian matrix at time `t`: the cached static part plus the
    /// handful of entries contributed by the currently active drives.
    pub fn matrix(&self, t: R) -> CMat<R> {
        let mut h = self.static_part.clone();
        let half = re(R::half());
        for e in &self.events {
            if !e.active_at(t) {
                continue;
            }
            let scale = re(e.amplitude_scale());
            for color in &e.colors {
                let amp = e.envelope.with_phase(color.phase).complex_rabi(t) * scale * half;
                let lo = color.transition.lower_index();
                match (&self.kind, e.ion) {
                    (CompiledKind::Single { .. }, _) => {
                        h[(2, lo)] = h[(2, lo)] + amp;
                        h[(lo, 2)] = h[(lo, 2)] + amp.conj();
                    }
                    (CompiledKind::Two { .. }, IonId::Control) => {
                        // |e><lo| (x) identity
                        for k in 0..DIM {
                            h[(2 * DIM + k, lo * DIM + k)] =
                                h[(2 * DIM + k, lo * DIM + k)] + amp;
                            h[(lo * DIM + k, 2 * DIM + k)] =
                                h[(lo * DIM + k, 2 * DIM + k)] + amp.conj();
                        }
                    }
                    (CompiledKind::Two { .. }, IonId::Target) => {
                        // identity (x) |e><lo|
                        for k in 0..DIM {
                            h[(k * DIM + 2, k * DIM + lo)] =
                                h[(k * DIM + 2, k * DIM + lo)] + amp;
                            h[(k * DIM + lo, k * DIM + 2)] =
                                h[(k * DIM + lo, k * DIM + 2)] + amp.conj();
                        }
                    }
                }
            }
        }
        h
    }

    /// Segment boundaries (event starts/ends) for piecewise integration.
    pub fn breakpoints(&self) -> Vec<R> {
        let mut pts: Vec<R> = Vec::with_capacity(2 * self.events.len() + 2);
        pts.push(self.t_begin);
        for e in &self.events {
            pts.push(e.t_start());
            pts.push(e.t_end());
        }
        pts.push(self.t_end);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= (self.t_end - self.t_begin) * R::of(1e-13));
        pts
    }

    fn segments(&self, t0: R, t1: R) -> Vec<(R, R)> {
        let mut cuts: Vec<R> =
            self.breakpoints().into_iter().filter(|&t| t > t0 && t < t1).collect();
        cuts.insert(0, t0);
        cuts.push(t1);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Propagate a raw state vector across the program, splitting the
    /// integration at event boundaries.
    pub fn propagate_vector(
        &self,
        y0: &CVec<R>,
        t0: R,
        t1: R,
        opts: &OdeOptions<R>,
    ) -> Result<CVec<R>> {
        let mut y = y0.clone();
        for (a, b) in self.segments(t0, t1) {
            y = propagate_vector(&|t| self.matrix(t), &y, a, b, opts)?;
        }
        Ok(y)
    }

    /// Full-program propagator matrix.
    pub fn propagate_unitary(&self, opts: &OdeOptions<R>) -> Result<CMat<R>> {
        let n = self.dim();
        let mut u = zeros::<R>(n);
        for col in 0..n {
            let mut y0 = CVec::from_elem(n, Complex::new(R::zero(), R::zero()));
            y0[col] = Complex::new(R::one(), R::zero());
            let y = self.propagate_vector(&y0, self.t_begin, self.t_end, opts)?;
            for row in 0..n {
                u[(row, col)] = y[row];
            }
        }
        Ok(u)
    }

    /// Propagate a density matrix across the program under the given
    /// collapse operators.
    pub fn propagate_master(
        &self,
        rho0: &DensityMatrix<R>,
        channels: &[CMat<R>],
        opts: &OdeOptions<R>,
    ) -> Result<MasterOutcome<R>> {
        let mut state = rho0.clone();
        let mut trace_defect = R::zero();
        let mut min_eig = R::one();
        let segs = self.segments(self.t_begin, self.t_end);
        for (k, (a, b)) in segs.iter().enumerate() {
            let out = crate::dynamics::propagate_master(
                &|t| self.matrix(t),
                &state,
                channels,
                *a,
                *b,
                opts,
            )?;
            state = out.state;
            trace_defect = trace_defect.max(out.trace_defect);
            if k == segs.len() - 1 {
                min_eig = out.min_eigenvalue;
            }
        }
        Ok(MasterOutcome { state, trace_defect, min_eigenvalue: min_eig })
    }

    /// Propagate a tagged pure state across the whole program.
    pub fn propagate_state(
        &self,
        psi0: &QuantumState<R>,
        opts: &OdeOptions<R>,
    ) -> Result<QuantumState<R>> {
        let y = self.propagate_vector(psi0.amplitudes(), self.t_begin, self.t_end, opts)?;
        QuantumState::new(y, psi0.basis())
    }
}

/// Closed-form target for the four-pulse rotation program in the logical
/// qubit basis: `B diag(1, e^{i theta}) B^dagger` with `B` the bar
/// transform, an arbitrary rotation through `theta` about an equatorial
/// axis set by `alpha`.
pub fn rotation_target_unitary<R: Real>(theta: R, alpha: R) -> CMat<R> {
    let bar = BarBasis::new(alpha);
    let b = bar.qubit_transform();
    let mut d = zeros::<R>(2);
    d[(0, 0)] = re(R::one());
    d[(1, 1)] = cis(theta);
    b.dot(&d).dot(&dagger(&b))
}
