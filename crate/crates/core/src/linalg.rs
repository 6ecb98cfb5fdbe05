//! Dense complex linear algebra for small (dimension <= 9) matrices:
//! products, tensor products, Hermitian checks, and a Jacobi eigensolver.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Result, SimError};
use crate::num::{cis, Real};

pub type CVec<R> = Array1<Complex<R>>;
pub type CMat<R> = Array2<Complex<R>>;

pub fn identity<R: Real>(n: usize) -> CMat<R> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex::new(R::one(), R::zero())
        } else {
            Complex::new(R::zero(), R::zero())
        }
    })
}

pub fn zeros<R: Real>(n: usize) -> CMat<R> {
    Array2::from_elem((n, n), Complex::new(R::zero(), R::zero()))
}

/// Conjugate transpose.
pub fn dagger<R: Real>(m: &CMat<R>) -> CMat<R> {
    let mut out = m.t().to_owned();
    out.mapv_inplace(|v| v.conj());
    out
}

/// Tensor product with the first factor slow-varying (control first).
pub fn kron<R: Real>(a: &CMat<R>, b: &CMat<R>) -> CMat<R> {
    let (na, ma) = a.dim();
    let (nb, mb) = b.dim();
    let mut out = Array2::from_elem((na * nb, ma * mb), Complex::new(R::zero(), R::zero()));
    for i1 in 0..na {
        for j1 in 0..ma {
            let aij = a[(i1, j1)];
            for i2 in 0..nb {
                for j2 in 0..mb {
                    out[(i1 * nb + i2, j1 * mb + j2)] = aij * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// `[a, b] = ab - ba`
pub fn commutator<R: Real>(a: &CMat<R>, b: &CMat<R>) -> CMat<R> {
    a.dot(b) - b.dot(a)
}

/// `{a, b} = ab + ba`
pub fn anti_commutator<R: Real>(a: &CMat<R>, b: &CMat<R>) -> CMat<R> {
    a.dot(b) + b.dot(a)
}

pub fn max_abs<R: Real>(m: &CMat<R>) -> R {
    m.iter().map(|v| v.norm()).fold(R::zero(), R::max)
}

pub fn frobenius<R: Real>(m: &CMat<R>) -> R {
    m.iter().map(|v| v.norm_sqr()).fold(R::zero(), |a, b| a + b).sqrt()
}

/// Largest elementwise deviation from `m = m^dagger`.
pub fn hermiticity_defect<R: Real>(m: &CMat<R>) -> R {
    let d = m - &dagger(m);
    max_abs(&d)
}

/// Hermitian part `(m + m^dagger)/2`.
pub fn hermitize<R: Real>(m: &CMat<R>) -> CMat<R> {
    let mut out = m + &dagger(m);
    out.mapv_inplace(|v| v * Complex::new(R::half(), R::zero()));
    out
}

pub fn trace<R: Real>(m: &CMat<R>) -> Complex<R> {
    m.diag().iter().fold(Complex::new(R::zero(), R::zero()), |a, &b| a + b)
}

/// Frobenius distance between `u` and `v` minimized over a global phase of `v`.
pub fn phase_aligned_distance<R: Real>(u: &CMat<R>, v: &CMat<R>) -> R {
    let overlap = trace(&dagger(v).dot(u));
    let gamma = overlap.arg();
    let mut shifted = v.clone();
    shifted.mapv_inplace(|x| x * cis(gamma));
    frobenius(&(u - &shifted))
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Returns eigenvalues in ascending order with the matching eigenvector
/// columns. Intended for the small matrices used here; convergence is
/// quadratic once the off-diagonal mass is small.
pub fn eigh<R: Real>(m: &CMat<R>) -> Result<(Array1<R>, CMat<R>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(SimError::DimensionMismatch { expected: n, actual: m.ncols() });
    }
    let mut a = m.clone();
    let mut v = identity::<R>(n);
    let scale = frobenius(&a) + R::of(1e-300);
    let tol = R::of(1e-15) * scale;
    let max_sweeps = 60;

    for sweep in 0..max_sweeps {
        let mut off = R::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        let off = off.sqrt();
        if off < tol {
            return Ok(sort_eigenpairs(a, v));
        }
        let _ = sweep;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= tol * R::of(1e-2) {
                    continue;
                }
                let phase = apq / Complex::new(r, R::zero());
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // zero the (p,q) entry: t solves t^2 - 2 tau t - 1 = 0,
                // smaller-magnitude root
                let tau = (aqq - app) / (R::two() * r);
                let t = if tau >= R::zero() {
                    -R::one() / (tau + (R::one() + tau * tau).sqrt())
                } else {
                    R::one() / (-tau + (R::one() + tau * tau).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = t * c;
                let cc = Complex::new(c, R::zero());
                let sp = Complex::new(s, R::zero()) * phase; // s e^{i phi}
                let sm = sp.conj(); // s e^{-i phi}

                // A <- U^dagger A U with U[p,p]=c, U[p,q]=-s e^{i phi},
                // U[q,p]=s e^{-i phi}, U[q,q]=c.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cc + akq * sm;
                    a[(k, q)] = akq * cc - akp * sp;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cc + aqk * sp;
                    a[(q, k)] = aqk * cc - apk * sm;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cc + vkq * sm;
                    v[(k, q)] = vkq * cc - vkp * sp;
                }
            }
        }
    }

    let mut off = R::zero();
    for p in 0..n {
        for q in (p + 1)..n {
            off = off + a[(p, q)].norm_sqr();
        }
    }
    Err(SimError::EigenFailure {
        sweeps: max_sweeps,
        offdiag: off.sqrt().to_f64().unwrap_or(f64::NAN),
    })
}

fn sort_eigenpairs<R: Real>(a: CMat<R>, v: CMat<R>) -> (Array1<R>, CMat<R>) {
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<R> = (0..n).map(|k| a[(k, k)].re).collect();
    idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let w = Array1::from_iter(idx.iter().map(|&k| diag[k]));
    let mut vs = zeros::<R>(n);
    for (col, &k) in idx.iter().enumerate() {
        for row in 0..n {
            vs[(row, col)] = v[(row, k)];
        }
    }
    (w, vs)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<R: Real>(m: &CMat<R>) -> Result<R> {
    let (w, _) = eigh(m)?;
    Ok(w[0])
}
