//! Adaptive Gauss-Kronrod quadrature (7-15 pair) for real and complex
//! integrands on finite intervals.

use num_complex::Complex;

use crate::error::{Result, SimError};
use crate::num::Real;

// Kronrod-15 abscissae on [0, 1] side of the symmetric rule; even entries are
// the embedded Gauss-7 nodes.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

struct Panel<R: Real> {
    value: Complex<R>,
    error: R,
}

fn gk15<R, F>(f: &F, a: R, b: R) -> Panel<R>
where
    R: Real,
    F: Fn(R) -> Complex<R>,
{
    let zero = Complex::new(R::zero(), R::zero());
    let center = (a + b) * R::half();
    let halflen = (b - a) * R::half();

    let fc = f(center);
    let mut kron = fc * Complex::new(R::of(WGK[7]), R::zero());
    let mut gauss = fc * Complex::new(R::of(WG[3]), R::zero());
    for j in 0..7 {
        let x = R::of(XGK[j]) * halflen;
        let fsum = f(center - x) + f(center + x);
        kron = kron + fsum * Complex::new(R::of(WGK[j]), R::zero());
        if j % 2 == 1 {
            gauss = gauss + fsum * Complex::new(R::of(WG[j / 2]), R::zero());
        }
    }
    kron = kron * Complex::new(halflen, R::zero());
    gauss = gauss * Complex::new(halflen, R::zero());
    let diff = kron - gauss;
    Panel { value: kron, error: diff.norm().max(R::of(1e-300)) }
    .or_zero_len(halflen, zero)
}

impl<R: Real> Panel<R> {
    fn or_zero_len(self, halflen: R, zero: Complex<R>) -> Self {
        if halflen == R::zero() {
            Panel { value: zero, error: R::zero() }
        } else {
            self
        }
    }
}

/// Integrate a complex-valued function over `[a, b]` by adaptive bisection.
///
/// Converges when the summed panel error drops below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<R, F>(f: F, a: R, b: R, rel_tol: R, abs_tol: R) -> Result<Complex<R>>
where
    R: Real,
    F: Fn(R) -> Complex<R>,
{
    if a == b {
        return Ok(Complex::new(R::zero(), R::zero()));
    }
    let (lo, hi, sign) = if a < b { (a, b, R::one()) } else { (b, a, -R::one()) };

    // (a, b, value, error), kept as a worst-first work list
    let mut panels: Vec<(R, R, Complex<R>, R)> = Vec::with_capacity(64);
    let p0 = gk15(&f, lo, hi);
    panels.push((lo, hi, p0.value, p0.error));

    let max_panels = 4096;
    loop {
        let mut total = Complex::new(R::zero(), R::zero());
        let mut err = R::zero();
        for p in &panels {
            total = total + p.2;
            err = err + p.3;
        }
        let target = abs_tol.max(rel_tol * total.norm());
        if err <= target {
            return Ok(total * Complex::new(sign, R::zero()));
        }
        if panels.len() >= max_panels {
            return Err(SimError::QuadratureFailure {
                a: lo.to_f64().unwrap_or(f64::NAN),
                b: hi.to_f64().unwrap_or(f64::NAN),
                estimate: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        // split the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0usize, -R::one()), |acc, (k, p)| if p.3 > acc.1 { (k, p.3) } else { acc });
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = (pa + pb) * R::half();
        if mid <= pa || mid >= pb {
            // interval exhausted at floating-point resolution
            return Err(SimError::QuadratureFailure {
                a: pa.to_f64().unwrap_or(f64::NAN),
                b: pb.to_f64().unwrap_or(f64::NAN),
                estimate: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let l = gk15(&f, pa, mid);
        let r = gk15(&f, mid, pb);
        panels.push((pa, mid, l.value, l.error));
        panels.push((mid, pb, r.value, r.error));
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<R, F>(f: F, a: R, b: R, rel_tol: R, abs_tol: R) -> Result<R>
where
    R: Real,
    F: Fn(R) -> R,
{
    integrate(|t| Complex::new(f(t), R::zero()), a, b, rel_tol, abs_tol).map(|v| v.re)
}
