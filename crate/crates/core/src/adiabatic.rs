//! Dressed-state analysis of the driven two-level block and the first-order
//! perturbative machinery: zeroth-order adiabatic phases, the diabatic
//! coupling, the first-order propagator, and the hyperfine leakage amplitude.
//!
//! Everything here lives in the accelerated frame, where the driven block of
//! the Hamiltonian is `[[x(t), W_R/2], [W_R/2, 0]]` with `x = Delta +
//! phi-dot` over the ordered basis (|e>, |i>). Phase integrals are taken
//! from the pulse center, matching the symmetric-envelope convention.

use num_complex::Complex;

use crate::error::{Result, SimError};
use crate::ion::IonParams;
use crate::num::{cis, i as imag, re, Real};
use crate::pulse::SechPulseParams;
use crate::quad;

/// 2x2 complex matrix in row-major form.
pub type Mat2<R> = [[Complex<R>; 2]; 2];

pub fn mat2_mul<R: Real>(a: &Mat2<R>, b: &Mat2<R>) -> Mat2<R> {
    let mut out = [[Complex::new(R::zero(), R::zero()); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn mat2_dagger<R: Real>(a: &Mat2<R>) -> Mat2<R> {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn mat2_identity<R: Real>() -> Mat2<R> {
    let one = Complex::new(R::one(), R::zero());
    let zero = Complex::new(R::zero(), R::zero());
    [[one, zero], [zero, one]]
}

/// Instantaneous eigenenergies of the driven block:
/// `E_pm = (x +- sqrt(x^2 + W_R^2)) / 2`.
pub fn dressed_energies<R: Real>(x: R, omega_r: R) -> (R, R) {
    let root = x.hypot(omega_r);
    ((x - root) * R::half(), (x + root) * R::half())
}

/// Instantaneous eigenstates and energies at one (x, W_R) point.
///
/// The eigenvector components over (|e>, |i>) are real in this gauge:
/// `|pm> = (2 E_pm |e> + W_R |i>) / sqrt(W_R^2 + 4 E_pm^2)`.
#[derive(Debug, Clone, Copy)]
pub struct DressedPoint<R> {
    pub e_minus: R,
    pub e_plus: R,
    /// (e, i) components of |->.
    pub minus: [R; 2],
    /// (e, i) components of |+>.
    pub plus: [R; 2],
}

pub fn dressed_states<R: Real>(x: R, omega_r: R) -> Result<DressedPoint<R>> {
    if x == R::zero() && omega_r == R::zero() {
        return Err(SimError::DegenerateInput);
    }
    let (em, ep) = dressed_energies(x, omega_r);
    let comp = |e: R| -> [R; 2] {
        let n = (omega_r * omega_r + R::of(4.0) * e * e).sqrt();
        if n == R::zero() {
            // bare-state limit W_R = 0 with E = 0: the eigenvector is |i>
            [R::zero(), R::one()]
        } else {
            [R::two() * e / n, omega_r / n]
        }
    };
    Ok(DressedPoint { e_minus: em, e_plus: ep, minus: comp(em), plus: comp(ep) })
}

/// `x(t) = Delta + phi-dot(t)` for the given pulse and ion.
pub fn sweep_offset<R: Real>(pulse: &SechPulseParams<R>, ion: &IonParams<R>, t: R) -> R {
    ion.delta_opt + pulse.instantaneous_detuning(t)
}

/// Upper dressed energy at time t.
pub fn excited_energy<R: Real>(pulse: &SechPulseParams<R>, ion: &IonParams<R>, t: R) -> R {
    dressed_energies(sweep_offset(pulse, ion, t), pulse.rabi_envelope(t)).1
}

const QUAD_REL: f64 = 1e-11;
const QUAD_ABS: f64 = 1e-13;

/// Adiabatic phases `Lambda_pm(t) = int_{tc}^{t} E_pm dt'` (zero at the
/// pulse center), by adaptive quadrature.
pub fn dressed_phases<R: Real>(
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    t: R,
) -> Result<(R, R)> {
    let tc = pulse.t_center();
    let lm = quad::integrate_real(
        |s| dressed_energies(sweep_offset(pulse, ion, s), pulse.rabi_envelope(s)).0,
        tc,
        t,
        R::of(QUAD_REL),
        R::of(QUAD_ABS),
    )?;
    let lp = quad::integrate_real(
        |s| dressed_energies(sweep_offset(pulse, ion, s), pulse.rabi_envelope(s)).1,
        tc,
        t,
        R::of(QUAD_REL),
        R::of(QUAD_ABS),
    )?;
    Ok((lm, lp))
}

/// Diabatic coupling `xi = (W_R-dot x - phi-ddot W_R) / (2 (x^2 + W_R^2))`,
/// from the analytic sech/tanh derivatives (never finite differences).
pub fn diabatic_coupling_xi<R: Real>(
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    t: R,
) -> R {
    let x = sweep_offset(pulse, ion, t);
    let w = pulse.rabi_envelope(t);
    let wdot = pulse.rabi_envelope_rate(t);
    let pdd = pulse.chirp_curvature(t);
    let denom = R::two() * (x * x + w * w);
    if denom == R::zero() {
        return R::zero();
    }
    (wdot * x - pdd * w) / denom
}

/// Trajectory data from the perturbative treatment over a time grid.
#[derive(Debug, Clone)]
pub struct PerturbativeTrajectory<R> {
    pub times: Vec<R>,
    /// Zeroth-order amplitudes `(c_-, c_+)(t) = e^{-i Lambda_pm(t)}`;
    /// unit modulus at all times.
    pub zeroth: Vec<[Complex<R>; 2]>,
    /// First-order dressed-frame propagators `U(t, t_grid[0])`, when computed.
    pub first: Option<Vec<Mat2<R>>>,
    /// Bar-state leakage amplitude `U_{1bar,0bar}(t)`, when computed.
    pub leakage: Option<Vec<Complex<R>>>,
}

fn check_grid<R: Real>(pulse: &SechPulseParams<R>, grid: &[R]) -> Result<()> {
    if grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    let eps = pulse.duration * R::of(1e-12);
    for w in grid.windows(2) {
        if w[1] < w[0] {
            return Err(SimError::config("time grid must be monotone non-decreasing"));
        }
    }
    if grid[0] < pulse.t_start - eps || *grid.last().unwrap() > pulse.t_end() + eps {
        return Err(SimError::config("time grid must lie inside the pulse window"));
    }
    Ok(())
}

/// Zeroth-order (adiabatic) amplitudes on a grid inside the pulse window.
pub fn zeroth_order<R: Real>(
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    grid: &[R],
) -> Result<PerturbativeTrajectory<R>> {
    check_grid(pulse, grid)?;
    let mut zeroth = Vec::with_capacity(grid.len());
    for &t in grid {
        let (lm, lp) = dressed_phases(pulse, ion, t)?;
        zeroth.push([cis(-lm), cis(-lp)]);
    }
    Ok(PerturbativeTrajectory { times: grid.to_vec(), zeroth, first: None, leakage: None })
}

/// First-order propagators and the accompanying non-unitarity diagnostic.
#[derive(Debug, Clone)]
pub struct FirstOrderResult<R> {
    /// Dressed-basis propagators `U(t_k, t_0)` over `{|->, |+>}`.
    pub propagators: Vec<Mat2<R>>,
    /// Largest `max |U^dag U - 1|` over the grid. Second-order small in the
    /// perturbation; not repaired, only reported.
    pub max_unitarity_defect: R,
}

/// First-order propagator `U(t) = D(t) [1 - i int V_I dt'] D(t_0)^dag` with
/// the interaction-picture coupling of the diabatic correction.
pub fn first_order_propagator<R: Real>(
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    grid: &[R],
) -> Result<FirstOrderResult<R>> {
    check_grid(pulse, grid)?;
    // phase difference Lambda_- - Lambda_+ accumulates the gap integral
    let gap_phase = |t: R| -> Result<R> {
        quad::integrate_real(
            |s| {
                let x = sweep_offset(pulse, ion, s);
                -x.hypot(pulse.rabi_envelope(s))
            },
            pulse.t_center(),
            t,
            R::of(QUAD_REL),
            R::of(QUAD_ABS),
        )
    };
    // cumulative int of the (-,+) element of V_I
    let mut cumulative = Complex::new(R::zero(), R::zero());
    let mut integrals = Vec::with_capacity(grid.len());
    integrals.push(cumulative);
    for w in grid.windows(2) {
        let seg = quad::integrate(
            |s| {
                let xi = diabatic_coupling_xi(pulse, ion, s);
                let dphase = gap_phase(s).unwrap_or(R::zero());
                -imag::<R>() * re(xi) * cis(dphase)
            },
            w[0],
            w[1],
            R::of(1e-10),
            R::of(1e-12),
        )?;
        cumulative = cumulative + seg;
        integrals.push(cumulative);
    }

    let (lm0, lp0) = dressed_phases(pulse, ion, grid[0])?;
    let d0_dag: Mat2<R> = [
        [cis(lm0), Complex::new(R::zero(), R::zero())],
        [Complex::new(R::zero(), R::zero()), cis(lp0)],
    ];
    let mut propagators = Vec::with_capacity(grid.len());
    let mut max_defect = R::zero();
    for (k, &t) in grid.iter().enumerate() {
        let (lm, lp) = dressed_phases(pulse, ion, t)?;
        let d: Mat2<R> = [
            [cis(-lm), Complex::new(R::zero(), R::zero())],
            [Complex::new(R::zero(), R::zero()), cis(-lp)],
        ];
        let v = integrals[k];
        let mut ui = mat2_identity::<R>();
        ui[0][1] = -imag::<R>() * v;
        ui[1][0] = -imag::<R>() * v.conj();
        let u = mat2_mul(&d, &mat2_mul(&ui, &d0_dag));
        // unitarity defect of U^dag U
        let udu = mat2_mul(&mat2_dagger(&u), &u);
        let mut defect = R::zero();
        for r in 0..2 {
            for c in 0..2 {
                let target = if r == c { R::one() } else { R::zero() };
                defect = defect.max((udu[r][c] - re(target)).norm());
            }
        }
        max_defect = max_defect.max(defect);
        propagators.push(u);
    }
    Ok(FirstOrderResult { propagators, max_unitarity_defect: max_defect })
}

/// Bar-state leakage amplitude
/// `U_{1bar,0bar}(t) = -(i delta / 2) int_{t_start}^{t} W_R /
/// sqrt(W_R^2 + 4 E_+^2) e^{-i Lambda_+(t')} dt'`
/// for a drive addressing the 0bar <-> e transition whose effective envelope
/// is `pulse` (the mirrored transition gives the same magnitude).
pub fn leakage_amplitude<R: Real>(
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    grid: &[R],
) -> Result<Vec<Complex<R>>> {
    check_grid(pulse, grid)?;
    let delta = ion.delta_hf;
    if delta == R::zero() {
        return Ok(vec![Complex::new(R::zero(), R::zero()); grid.len()]);
    }
    let prefactor = -imag::<R>() * re(delta * R::half());
    let integrand = |s: R| -> Complex<R> {
        let w = pulse.rabi_envelope(s);
        let ep = excited_energy(pulse, ion, s);
        let frac = w / (w * w + R::of(4.0) * ep * ep).sqrt();
        let lp = quad::integrate_real(
            |u| excited_energy(pulse, ion, u),
            pulse.t_center(),
            s,
            R::of(QUAD_REL),
            R::of(QUAD_ABS),
        )
        .unwrap_or(R::zero());
        re(frac) * cis(-lp)
    };

    let mut out = Vec::with_capacity(grid.len());
    // integral starts at the window edge
    let mut acc = quad::integrate(&integrand, pulse.t_start, grid[0], R::of(1e-10), R::of(1e-12))?;
    out.push(prefactor * acc);
    for w in grid.windows(2) {
        acc = acc + quad::integrate(&integrand, w[0], w[1], R::of(1e-10), R::of(1e-12))?;
        out.push(prefactor * acc);
    }
    Ok(out)
}

/// Display frame for Bloch-sphere coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochFrame {
    /// The accelerated frame the trajectories are computed in.
    Accelerated,
    /// Frame rotating at the constant channel-center frequency.
    ChannelRotating,
    /// Frame rotating at the shifted frequency of this ion.
    IonRotating,
}

/// Map two-level amplitudes (c_e, c_i) to Bloch coordinates; the north pole
/// is |e>. Errors if the state is not normalized within 1e-6.
pub fn bloch_coordinates<R: Real>(c_e: Complex<R>, c_i: Complex<R>) -> Result<[R; 3]> {
    let norm = (c_e.norm_sqr() + c_i.norm_sqr()).sqrt();
    if (norm - R::one()).abs() > R::of(1e-6) {
        return Err(SimError::NotNormalized {
            defect: (norm - R::one()).abs().to_f64().unwrap_or(f64::NAN),
        });
    }
    let coh = c_i * c_e.conj();
    Ok([R::two() * coh.re, R::two() * coh.im, c_e.norm_sqr() - c_i.norm_sqr()])
}

/// As [`bloch_coordinates`], after rotating accelerated-frame amplitudes
/// into the requested display frame.
pub fn bloch_in_frame<R: Real>(
    c_e: Complex<R>,
    c_i: Complex<R>,
    frame: BlochFrame,
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    t: R,
) -> Result<[R; 3]> {
    let c_e = match frame {
        BlochFrame::Accelerated => c_e,
        BlochFrame::ChannelRotating => c_e * cis(pulse.chirp_phase(t)),
        BlochFrame::IonRotating => {
            c_e * cis(pulse.chirp_phase(t) + ion.delta_opt * (t - pulse.t_center()))
        }
    };
    bloch_coordinates(c_e, c_i)
}

/// Times inside the window where `E_+` crosses `ratio * |delta_hf|`,
/// located by scan-and-bisect. Documents where the AC-Stark suppression
/// regimes begin under the chosen conventions.
pub fn stark_crossing_times<R: Real>(
    pulse: &SechPulseParams<R>,
    ion: &IonParams<R>,
    ratio: R,
) -> Vec<R> {
    let target = ratio * ion.delta_hf.abs();
    let n = 512;
    let mut out = Vec::new();
    let step = pulse.duration / R::of(n as f64);
    let f = |t: R| excited_energy(pulse, ion, t) - target;
    let mut t_prev = pulse.t_start;
    let mut f_prev = f(t_prev);
    for k in 1..=n {
        let t = pulse.t_start + step * R::of(k as f64);
        let ft = f(t);
        if f_prev == R::zero() || (f_prev < R::zero()) != (ft < R::zero()) {
            let (mut a, mut b) = (t_prev, t);
            for _ in 0..80 {
                let m = (a + b) * R::half();
                if (f(a) < R::zero()) != (f(m) < R::zero()) {
                    b = m;
                } else {
                    a = m;
                }
            }
            out.push((a + b) * R::half());
        }
        t_prev = t;
        f_prev = ft;
    }
    out
}
