//! Dense complex eigendecomposition for small matrices.
//!
//! Householder reduction to Hessenberg form followed by a single-shift QR
//! iteration with Givens rotations gives a complex Schur form `A = Q T Q†`.
//! Eigenvectors are recovered by back-substitution on `T`.

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::matrix::{ComplexMatrix, Matrix};
use crate::scalar::{Entry, Scalar};

/// Eigenvalues with column-aligned unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T = f64> {
    pub values: Vec<Complex<T>>,
    pub vectors: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> EigenSystem<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest real part; `-inf` for an empty system.
    pub fn max_real_part(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, v| m.max(v.re))
    }

    /// Largest relative residual `‖A v − λ v‖ / (‖A‖ ‖v‖)` over all pairs.
    pub fn max_relative_residual<E: Entry<Real = T>>(&self, a: &Matrix<E>) -> T {
        let ac = a.map(Entry::to_complex);
        let na = ac.frobenius_norm().max(T::min_positive_value());
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&l, v)| {
                let av = ac.mat_vec(v);
                let r: T = av.iter().zip(v).map(|(x, y)| (*x - *y * l).norm_sqr()).sum::<T>().sqrt();
                let nv: T = v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
                r / (na * nv)
            })
            .fold(T::zero(), T::max)
    }
}

/// Full eigensystem of a square matrix.
///
/// Values are sorted by descending real part. Values whose real parts agree
/// to a relative `1e-10` are ordered by descending imaginary part. Each
/// eigenvector has unit Euclidean norm with its first non-negligible
/// component real and positive.
pub fn eig<E: Entry>(a: &Matrix<E>) -> Result<EigenSystem<E::Real>> {
    let (t, q) = schur(a)?;
    let n = t.rows();
    let scale = t.frobenius_norm();
    let mut pairs: Vec<(Complex<E::Real>, Vec<Complex<E::Real>>)> = (0..n)
        .map(|k| {
            let y = triangular_eigenvector(&t, k, scale);
            let v = q.mat_vec(&y);
            (t[(k, k)], normalize_phase(v))
        })
        .collect();
    sort_pairs(&mut pairs, scale);
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(EigenSystem { values, vectors })
}

/// Eigenvalues only, sorted as in [`eig`].
pub fn eigenvalues<E: Entry>(a: &Matrix<E>) -> Result<Vec<Complex<E::Real>>> {
    let (t, _) = schur(a)?;
    let scale = t.frobenius_norm();
    let mut pairs: Vec<(Complex<E::Real>, ())> = t.diagonal().into_iter().map(|v| (v, ())).collect();
    sort_pairs(&mut pairs, scale);
    Ok(pairs.into_iter().map(|p| p.0).collect())
}

fn sort_pairs<T: Scalar, X>(pairs: &mut [(Complex<T>, X)], scale: T) {
    pairs.sort_by(|a, b| b.0.re.partial_cmp(&a.0.re).unwrap_or(Ordering::Equal));
    let tie = T::lit(1e-10) * scale.max(T::one());
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[start].0.re - pairs[end].0.re).abs() <= tie {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| b.0.im.partial_cmp(&a.0.im).unwrap_or(Ordering::Equal));
        start = end;
    }
}

fn normalize_phase<T: Scalar>(mut v: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let norm: T = v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
    if norm == T::zero() {
        return v;
    }
    let thresh = T::lit(1e-8).max(T::epsilon().sqrt());
    let pivot = v.iter().map(|x| x.norm() / norm).position(|m| m > thresh).unwrap_or(0);
    let p = v[pivot];
    let phase = if p.norm() > T::zero() { p.conj() / p.norm() } else { Complex::<T>::one() };
    for x in v.iter_mut() {
        *x = *x * phase / norm;
    }
    v[pivot] = Complex::new(v[pivot].re, T::zero());
    v
}

/// Eigenvector of the upper-triangular `t` for the diagonal entry `k`.
fn triangular_eigenvector<T: Scalar>(t: &ComplexMatrix<T>, k: usize, scale: T) -> Vec<Complex<T>> {
    let n = t.rows();
    let small = (T::epsilon() * scale).max(T::min_positive_value());
    let lambda = t[(k, k)];
    let mut y = vec![Complex::<T>::zero(); n];
    y[k] = Complex::<T>::one();
    for i in (0..k).rev() {
        let mut s = Complex::<T>::zero();
        for j in i + 1..=k {
            s = s + t[(i, j)] * y[j];
        }
        let mut d = t[(i, i)] - lambda;
        if d.norm() < small {
            d = Complex::new(small, T::zero());
        }
        y[i] = -s / d;
    }
    y
}

/// Complex Schur decomposition `a = q t q†` with `t` upper triangular.
pub fn schur<E: Entry>(a: &Matrix<E>) -> Result<(ComplexMatrix<E::Real>, ComplexMatrix<E::Real>)> {
    if !a.is_square() {
        return Err(Error::Dimension {
            expected: "square matrix".into(),
            found: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    if !a.is_finite() {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let mut h = a.map(Entry::to_complex);
    let n = h.rows();
    let mut q = ComplexMatrix::identity(n);
    if n == 0 {
        return Ok((h, q));
    }
    hessenberg(&mut h, &mut q);
    qr_iterate(&mut h, &mut q)?;
    Ok((h, q))
}

fn hessenberg<T: Scalar>(h: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm: T = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > T::zero() { x0 / x0.norm() } else { Complex::<T>::one() };
        let mut v = x;
        v[0] = v[0] + phase * xnorm;
        let vnorm: T = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let two = Complex::new(T::lit(2.0), T::zero());
        // H <- P H with P = I - 2 v v†, acting on rows k+1..n.
        for j in 0..n {
            let mut s = Complex::<T>::zero();
            for (idx, vi) in v.iter().enumerate() {
                s = s + vi.conj() * h[(k + 1 + idx, j)];
            }
            s = s * two;
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, j)] = h[(k + 1 + idx, j)] - *vi * s;
            }
        }
        // H <- H P and Q <- Q P, acting on columns k+1..n.
        for m in [&mut *h, &mut *q] {
            for i in 0..n {
                let mut s = Complex::<T>::zero();
                for (idx, vi) in v.iter().enumerate() {
                    s = s + m[(i, k + 1 + idx)] * *vi;
                }
                s = s * two;
                for (idx, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + idx)] = m[(i, k + 1 + idx)] - s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex::<T>::zero();
        }
    }
}

#[derive(Clone, Copy)]
struct Givens<T> {
    c: T,
    s: Complex<T>,
}

impl<T: Scalar> Givens<T> {
    /// Rotation `G` with `G (a, b)ᵀ = (r, 0)ᵀ`.
    fn zeroing(a: Complex<T>, b: Complex<T>) -> Self {
        let na = a.norm();
        let r = na.hypot(b.norm());
        if r == T::zero() {
            return Self { c: T::one(), s: Complex::<T>::zero() };
        }
        if na == T::zero() {
            return Self { c: T::zero(), s: Complex::<T>::one() };
        }
        Self { c: na / r, s: (a / na) * b.conj() / r }
    }

    fn apply_left(&self, m: &mut ComplexMatrix<T>, k: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let x = m[(k, j)];
            let y = m[(k + 1, j)];
            m[(k, j)] = x * self.c + self.s * y;
            m[(k + 1, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    fn apply_right_adjoint(&self, m: &mut ComplexMatrix<T>, k: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let x = m[(i, k)];
            let y = m[(i, k + 1)];
            m[(i, k)] = x * self.c + y * self.s.conj();
            m[(i, k + 1)] = -x * self.s + y * self.c;
        }
    }
}

fn wilkinson_shift<T: Scalar>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    // Eigenvalue of [[a, b], [c, d]] closer to d.
    let half = T::lit(0.5);
    let tr = (a + d) * half;
    let disc = ((a - d) * half * ((a - d) * half) + b * c).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_iterate<T: Scalar>(h: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) -> Result<()> {
    let n = h.rows();
    let eps = T::epsilon();
    let hnorm = h.frobenius_norm().max(T::min_positive_value());
    let max_iter = 60 * n.max(1);
    let mut hi = n - 1;
    let mut iter_here = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // Find the start of the unreduced trailing block.
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if diag == T::zero() {
                diag = hnorm;
            }
            if sub <= eps * diag {
                h[(l, l - 1)] = Complex::<T>::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter_here = 0;
            continue;
        }
        if total >= max_iter {
            let partial = (hi + 1..n).map(|i| (h[(i, i)].re.as_f64(), h[(i, i)].im.as_f64())).collect();
            return Err(Error::NoConvergence { iterations: total, converged: n - hi - 1, total: n, partial });
        }
        iter_here += 1;
        total += 1;
        let mu = if iter_here % 10 == 0 {
            let ex = h[(hi, hi - 1)].re.abs() + if hi >= 2 { h[(hi - 1, hi - 2)].re.abs() } else { T::zero() };
            h[(hi, hi)] + Complex::new(ex * T::lit(0.75), ex * T::lit(0.4375))
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in l..=hi {
            h[(i, i)] = h[(i, i)] - mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let g = Givens::zeroing(h[(k, k)], h[(k + 1, k)]);
            g.apply_left(h, k, k..n);
            h[(k + 1, k)] = Complex::<T>::zero();
            rots.push(g);
        }
        for (off, g) in rots.iter().enumerate() {
            let k = l + off;
            g.apply_right_adjoint(h, k, 0..(k + 2).min(hi + 1));
            g.apply_right_adjoint(q, k, 0..n);
        }
        for i in l..=hi {
            h[(i, i)] = h[(i, i)] + mu;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = Complex::<T>::zero();
        }
    }
    Ok(())
}
