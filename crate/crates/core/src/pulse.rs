//! Complex hyperbolic secant pulse: real envelope `W0 sech(b(t - tc))`,
//! chirped phase `mu ln cosh(b(t - tc))`, and the analytic derivatives the
//! perturbative treatment needs.
//!
//! Quoted frequency-like parameters are plain numbers in rad/us under the
//! crate's default convention; callers that want quoted-MHz values read as
//! cyclic frequencies scale inputs by 2 pi before constructing parameters.

use num_complex::Complex;

use crate::error::{Result, SimError};
use crate::num::{cis, Real};
use crate::quad;

/// Amplitude, chirp and timing of one sech pulse.
///
/// The envelope is centered at `t_start + duration/2` and hard-truncated to
/// zero outside `[t_start, t_start + duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SechPulseParams<R> {
    /// Peak Rabi frequency W0 (rad/us).
    pub omega0: R,
    /// Dimensionless chirp strength mu.
    pub mu: R,
    /// Envelope rate b (1/us); the instantaneous detuning sweeps +-mu*b.
    pub beta: R,
    /// Window length T (us).
    pub duration: R,
    /// Constant carrier phase (rad).
    pub phase: R,
    /// Program-frame start of the window (us).
    pub t_start: R,
}

impl<R: Real> Default for SechPulseParams<R> {
    /// The operating point used throughout the tests and CLI defaults:
    /// W0 = 4, mu = 3, b = 1.28, T = 1.5, centered window starting at 0.
    fn default() -> Self {
        SechPulseParams {
            omega0: R::of(4.0),
            mu: R::of(3.0),
            beta: R::of(1.28),
            duration: R::of(1.5),
            phase: R::zero(),
            t_start: R::zero(),
        }
    }
}

impl<R: Real> SechPulseParams<R> {
    pub fn new(omega0: R, mu: R, beta: R, duration: R) -> Result<Self> {
        let p = SechPulseParams {
            omega0,
            mu,
            beta,
            duration,
            phase: R::zero(),
            t_start: R::zero(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > R::zero()) {
            return Err(SimError::config("omega0 must be positive"));
        }
        if !(self.beta > R::zero()) {
            return Err(SimError::config("beta must be positive"));
        }
        if !(self.duration > R::zero()) {
            return Err(SimError::config("duration must be positive"));
        }
        if !(self.mu >= R::zero()) {
            return Err(SimError::config("mu must be non-negative"));
        }
        Ok(())
    }

    pub fn with_phase(mut self, phase: R) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_start(mut self, t_start: R) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn with_omega0(mut self, omega0: R) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn t_center(&self) -> R {
        self.t_start + self.duration * R::half()
    }

    pub fn t_end(&self) -> R {
        self.t_start + self.duration
    }

    pub fn contains(&self, t: R) -> bool {
        t >= self.t_start && t <= self.t_end()
    }

    /// Real envelope W_R(t); zero outside the window.
    pub fn rabi_envelope(&self, t: R) -> R {
        if !self.contains(t) {
            return R::zero();
        }
        let s = self.beta * (t - self.t_center());
        self.omega0 / s.cosh()
    }

    /// d/dt of the envelope, analytic (zero outside the window).
    pub fn rabi_envelope_rate(&self, t: R) -> R {
        if !self.contains(t) {
            return R::zero();
        }
        let s = self.beta * (t - self.t_center());
        -self.omega0 * self.beta * s.tanh() / s.cosh()
    }

    /// Instantaneous chirp frequency mu*b*tanh(b(t - tc)), evaluated as a
    /// total function of t (not windowed).
    pub fn instantaneous_detuning(&self, t: R) -> R {
        let s = self.beta * (t - self.t_center());
        self.mu * self.beta * s.tanh()
    }

    /// d/dt of the chirp frequency: mu*b^2 sech^2.
    pub fn chirp_curvature(&self, t: R) -> R {
        let s = self.beta * (t - self.t_center());
        let sech = R::one() / s.cosh();
        self.mu * self.beta * self.beta * sech * sech
    }

    /// Accumulated chirp phase mu ln cosh(b(t - tc)); zero at the center.
    pub fn chirp_phase(&self, t: R) -> R {
        let s = self.beta * (t - self.t_center());
        self.mu * s.cosh().ln()
    }

    /// Full complex amplitude W_R(t) e^{i(phase + chirp phase)}; zero outside
    /// the window.
    pub fn complex_rabi(&self, t: R) -> Complex<R> {
        let env = self.rabi_envelope(t);
        if env == R::zero() {
            return Complex::new(R::zero(), R::zero());
        }
        Complex::new(env, R::zero()) * cis(self.phase + self.chirp_phase(t))
    }

    /// Pulse energy `int W_R^2 dt` over the window, closed form.
    pub fn energy(&self) -> R {
        let half = self.beta * self.duration * R::half();
        R::two() * self.omega0 * self.omega0 * half.tanh() / self.beta
    }
}

/// Energy cross-check by quadrature; the closed form is tested against this.
pub fn energy_by_quadrature<R: Real>(p: &SechPulseParams<R>) -> Result<R> {
    quad::integrate_real(
        |t| {
            let w = p.rabi_envelope(t);
            w * w
        },
        p.t_start,
        p.t_end(),
        R::of(1e-12),
        R::of(1e-14),
    )
}
