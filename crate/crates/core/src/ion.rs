//! Hamiltonians for one three-level ion (logical and bar bases) and for two
//! dipole-coupled ions with an excited-excited blockade shift.
//!
//! Basis ordering is fixed as (|0>, |1>, |e>) per ion; in the bar basis the
//! ordering is (|0bar>, |1bar>, |e>). Two-ion states put the control factor
//! first: flat index `3*i_c + i_t`.

use num_complex::Complex;

use crate::dynamics::DecayChannel;
use crate::error::{Result, SimError};
use crate::linalg::{dagger, identity, kron, zeros, CMat, CVec};
use crate::num::{cis, re, Real};

pub const DIM: usize = 3;
pub const DIM_TWO: usize = 9;
pub const IDX_ZERO: usize = 0;
pub const IDX_ONE: usize = 1;
pub const IDX_EXCITED: usize = 2;

/// Flat two-ion indices of |00>, |01>, |10>, |11>.
pub const QUBIT_INDICES: [usize; 4] = [0, 1, 3, 4];

/// Default half-width bound on the hyperfine shift (rad/us, no-2pi units):
/// shifts beyond the ~30 kHz class of inhomogeneity deserve a warning.
pub const HYPERFINE_BOUND: f64 = 0.06;

/// Optical transition addressed by a drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transition {
    ZeroToE,
    OneToE,
}

impl Transition {
    /// Index of the lower level the drive couples to |e>.
    pub fn lower_index(self) -> usize {
        match self {
            Transition::ZeroToE => IDX_ZERO,
            Transition::OneToE => IDX_ONE,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Transition::ZeroToE => "0e",
            Transition::OneToE => "1e",
        }
    }

    pub fn from_token(s: &str) -> Result<Self> {
        match s {
            "0e" => Ok(Transition::ZeroToE),
            "1e" => Ok(Transition::OneToE),
            other => Err(SimError::config(format!("unknown transition token '{other}'"))),
        }
    }
}

/// One resolved drive term: the complex Rabi amplitude currently applied to a
/// transition (time dependence lives in the caller).
#[derive(Debug, Clone, Copy)]
pub struct Drive<R> {
    pub transition: Transition,
    pub amplitude: Complex<R>,
}

/// Per-ion parameters: optical detuning from the channel center, hyperfine
/// shift of |1>, and an optional spontaneous-decay channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParams<R> {
    /// Optical detuning Delta (rad/us).
    pub delta_opt: R,
    /// Hyperfine shift delta of |1> (rad/us); may be negative.
    pub delta_hf: R,
    pub decay: Option<DecayChannel<R>>,
}

impl<R: Real> IonParams<R> {
    pub fn new(delta_opt: R, delta_hf: R) -> Self {
        IonParams { delta_opt, delta_hf, decay: None }
    }

    pub fn with_decay(mut self, decay: DecayChannel<R>) -> Self {
        self.decay = Some(decay);
        self
    }

    /// Hyperfine shifts outside the configured channel half-width are legal
    /// but suspicious; callers surface this as a warning, not an error.
    pub fn hyperfine_warning(&self, bound: R) -> Option<String> {
        if self.delta_hf.abs() > bound {
            Some(format!(
                "hyperfine shift {} exceeds the channel half-width bound {}",
                self.delta_hf, bound
            ))
        } else {
            None
        }
    }
}

/// Rotated qubit basis |0bar>, |1bar> = (|0> +- e^{i alpha} |1>)/sqrt(2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarBasis<R> {
    pub alpha: R,
}

impl<R: Real> BarBasis<R> {
    pub fn new(alpha: R) -> Self {
        BarBasis { alpha }
    }

    /// 3x3 change-of-basis matrix with bar vectors as columns (logical
    /// coordinates); |e> is untouched.
    pub fn transform(&self) -> CMat<R> {
        let mut b = zeros::<R>(DIM);
        let s = R::half().sqrt();
        let ea = cis(self.alpha) * re(s);
        b[(IDX_ZERO, 0)] = re(s);
        b[(IDX_ONE, 0)] = ea;
        b[(IDX_ZERO, 1)] = re(s);
        b[(IDX_ONE, 1)] = -ea;
        b[(IDX_EXCITED, 2)] = re(R::one());
        b
    }

    /// Qubit-subspace 2x2 block of [`Self::transform`].
    pub fn qubit_transform(&self) -> CMat<R> {
        let b = self.transform();
        CMat::from_shape_fn((2, 2), |(i, j)| b[(i, j)])
    }

    /// Relative two-color phase `phi_1 - phi_0` that makes the drive couple
    /// only to |1bar> (the |0bar> coupling cancels identically), under this
    /// crate's drive convention `(1/2) Omega_i |e><i| + h.c.`.
    pub fn select_one_bar(&self) -> R {
        R::PI() - self.alpha
    }

    /// Relative two-color phase addressing |0bar> only.
    pub fn select_zero_bar(&self) -> R {
        -self.alpha
    }
}

/// Excited-excited dipole-dipole shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockadeParams<R> {
    /// Energy shift of |ee> (rad/us).
    pub delta_dd: R,
}

impl<R: Real> BlockadeParams<R> {
    pub fn new(delta_dd: R) -> Result<Self> {
        if delta_dd < R::zero() {
            return Err(SimError::config("delta_dd must be non-negative"));
        }
        Ok(BlockadeParams { delta_dd })
    }
}

impl<R: Real> Default for BlockadeParams<R> {
    /// 20 rad/us: well above the default peak Rabi frequency, so resonant
    /// driving of a blockaded ion is strongly suppressed.
    fn default() -> Self {
        BlockadeParams { delta_dd: R::of(20.0) }
    }
}

fn check_drives<R: Real>(drives: &[Drive<R>]) -> Result<()> {
    let mut seen = [false; 2];
    for d in drives {
        let k = match d.transition {
            Transition::ZeroToE => 0,
            Transition::OneToE => 1,
        };
        if seen[k] {
            return Err(SimError::config(format!(
                "duplicate drive on transition {}",
                d.transition.token()
            )));
        }
        seen[k] = true;
    }
    Ok(())
}

/// `H = Delta |e><e| - delta |1><1| + (1/2) sum_i Omega_i |e><i| + h.c.`
/// in the fixed rotating frame of the channel center, with the full complex
/// chirped amplitudes carried by the drive terms.
pub fn single_ion_hamiltonian<R: Real>(ion: &IonParams<R>, drives: &[Drive<R>]) -> Result<CMat<R>> {
    check_drives(drives)?;
    let mut h = zeros::<R>(DIM);
    h[(IDX_EXCITED, IDX_EXCITED)] = re(ion.delta_opt);
    h[(IDX_ONE, IDX_ONE)] = re(-ion.delta_hf);
    for d in drives {
        let lo = d.transition.lower_index();
        let half = d.amplitude * re(R::half());
        h[(IDX_EXCITED, lo)] = h[(IDX_EXCITED, lo)] + half;
        h[(lo, IDX_EXCITED)] = h[(lo, IDX_EXCITED)] + half.conj();
    }
    Ok(h)
}

/// The same Hamiltonian expressed in the basis (|0bar>, |1bar>, |e>), in the
/// closed form
///
/// ```text
/// H = Delta |e><e|
///   + (O0 + e^{i a} O1)/(2 sqrt 2) |e><0bar| + h.c.
///   + (O0 - e^{i a} O1)/(2 sqrt 2) |e><1bar| + h.c.
///   - delta/2 (|0bar><0bar| + |1bar><1bar|)
///   + delta/2 (|0bar><1bar| + |1bar><0bar|)
/// ```
pub fn bar_basis_hamiltonian<R: Real>(
    ion: &IonParams<R>,
    bar: &BarBasis<R>,
    drives: &[Drive<R>],
) -> Result<CMat<R>> {
    check_drives(drives)?;
    let mut omega0 = Complex::new(R::zero(), R::zero());
    let mut omega1 = Complex::new(R::zero(), R::zero());
    for d in drives {
        match d.transition {
            Transition::ZeroToE => omega0 = d.amplitude,
            Transition::OneToE => omega1 = d.amplitude,
        }
    }
    let (h0, v) = split_h0_v_parts(ion, bar, omega0, omega1);
    Ok(h0 + &v)
}

fn split_h0_v_parts<R: Real>(
    ion: &IonParams<R>,
    bar: &BarBasis<R>,
    omega0: Complex<R>,
    omega1: Complex<R>,
) -> (CMat<R>, CMat<R>) {
    let mut h0 = zeros::<R>(DIM);
    let norm = re(R::one() / (R::two() * R::two().sqrt()));
    let ea = cis(bar.alpha);
    let plus = (omega0 + ea * omega1) * norm;
    let minus = (omega0 - ea * omega1) * norm;
    h0[(2, 2)] = re(ion.delta_opt);
    h0[(2, 0)] = plus;
    h0[(0, 2)] = plus.conj();
    h0[(2, 1)] = minus;
    h0[(1, 2)] = minus.conj();

    let mut v = zeros::<R>(DIM);
    let hd = re(ion.delta_hf * R::half());
    v[(0, 0)] = -hd;
    v[(1, 1)] = -hd;
    v[(0, 1)] = hd;
    v[(1, 0)] = hd;
    (h0, v)
}

/// Split the bar-basis Hamiltonian into the drive part `H0` and the
/// hyperfine coupling `V` (which leaks population between the bar states);
/// `H0 + V` reconstructs [`bar_basis_hamiltonian`] exactly.
pub fn split_h0_v<R: Real>(
    ion: &IonParams<R>,
    bar: &BarBasis<R>,
    drives: &[Drive<R>],
) -> Result<(CMat<R>, CMat<R>)> {
    check_drives(drives)?;
    let mut omega0 = Complex::new(R::zero(), R::zero());
    let mut omega1 = Complex::new(R::zero(), R::zero());
    for d in drives {
        match d.transition {
            Transition::ZeroToE => omega0 = d.amplitude,
            Transition::OneToE => omega1 = d.amplitude,
        }
    }
    Ok(split_h0_v_parts(ion, bar, omega0, omega1))
}

/// Two-ion Hamiltonian `H_c (x) I + I (x) H_t + Delta_dd |ee><ee|`.
pub fn two_ion_hamiltonian<R: Real>(
    control: &IonParams<R>,
    target: &IonParams<R>,
    blockade: &BlockadeParams<R>,
    drives_control: &[Drive<R>],
    drives_target: &[Drive<R>],
) -> Result<CMat<R>> {
    let hc = single_ion_hamiltonian(control, drives_control)?;
    let ht = single_ion_hamiltonian(target, drives_target)?;
    let eye = identity::<R>(DIM);
    let mut h = kron(&hc, &eye) + kron(&eye, &ht);
    let ee = IDX_EXCITED * DIM + IDX_EXCITED;
    h[(ee, ee)] = h[(ee, ee)] + re(blockade.delta_dd);
    Ok(h)
}

/// Embed a 4-component qubit-subspace vector into the 9-dim two-ion space.
pub fn embed_qubit_state<R: Real>(q: &CVec<R>) -> Result<CVec<R>> {
    if q.len() != 4 {
        return Err(SimError::DimensionMismatch { expected: 4, actual: q.len() });
    }
    let mut out = CVec::from_elem(DIM_TWO, Complex::new(R::zero(), R::zero()));
    for (k, &idx) in QUBIT_INDICES.iter().enumerate() {
        out[idx] = q[k];
    }
    Ok(out)
}

/// 4x4 qubit-subspace block of a 9x9 two-ion operator.
pub fn qubit_block<R: Real>(m: &CMat<R>) -> Result<CMat<R>> {
    if m.dim() != (DIM_TWO, DIM_TWO) {
        return Err(SimError::DimensionMismatch { expected: DIM_TWO, actual: m.nrows() });
    }
    Ok(CMat::from_shape_fn((4, 4), |(i, j)| m[(QUBIT_INDICES[i], QUBIT_INDICES[j])]))
}

/// Conjugation oracle used by the tests: the bar-basis Hamiltonian must equal
/// `B^dagger H B` with `B` the bar transform.
pub fn bar_by_conjugation<R: Real>(
    ion: &IonParams<R>,
    bar: &BarBasis<R>,
    drives: &[Drive<R>],
) -> Result<CMat<R>> {
    let h = single_ion_hamiltonian(ion, drives)?;
    let b = bar.transform();
    Ok(dagger(&b).dot(&h).dot(&b))
}
