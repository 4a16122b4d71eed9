//! Bosonic Bogoliubov diagonalization of quadratic excitation Hamiltonians.
//!
//! A [`QuadraticForm`] stores the `2N × 2N` Hermitian matrix `H` in the field
//! ordering `(a₁ … a_N, a₁† … a_N†)`. Excitation frequencies are the
//! eigenvalues of the dynamical matrix `I₋ H` with `I₋ = diag(1_N, −1_N)`,
//! and the sign of the symplectic norm `v† I₋ v` separates particle-like
//! from hole-like modes.

use std::cmp::Ordering;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numerics::{eig, ComplexMatrix};
use crate::scalar::Scalar;

/// Default bound on `|Im ω|` for a frequency to count as physical.
pub const TOL_IM: f64 = 1e-9;
/// Symplectic norms below this magnitude flag a critical mode.
pub const TOL_NORM_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T = f64> {
    h: ComplexMatrix<T>,
    constant_offset: T,
}

impl<T: Scalar> QuadraticForm<T> {
    /// Validates shape (square, even, finite) and Hermiticity of `h`.
    pub fn new(h: ComplexMatrix<T>, constant_offset: T) -> Result<Self> {
        if !h.is_square() || h.rows() % 2 != 0 || h.rows() == 0 {
            return Err(Error::Dimension {
                expected: "non-empty 2N x 2N matrix".into(),
                found: format!("{}x{}", h.rows(), h.cols()),
            });
        }
        if !h.is_finite() {
            return Err(Error::Validation("quadratic form has non-finite entries".into()));
        }
        check_hermitian(&h)?;
        Ok(Self { h, constant_offset })
    }

    /// Form from an `N × N` normal block `A` and anomalous block `B`:
    /// `H = [[A, B], [B*, A*]]`.
    pub fn from_blocks(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, constant_offset: T) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || b.cols() != n {
            return Err(Error::Dimension {
                expected: format!("two {n}x{n} blocks"),
                found: format!("{}x{} and {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
            });
        }
        let h = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - n)],
            (false, true) => b[(i - n, j)].conj(),
            (false, false) => a[(i - n, j - n)].conj(),
        });
        Self::new(h, constant_offset)
    }

    pub fn h(&self) -> &ComplexMatrix<T> {
        &self.h
    }

    pub fn constant_offset(&self) -> T {
        self.constant_offset
    }

    /// Number of bosonic modes `N`.
    pub fn modes(&self) -> usize {
        self.h.rows() / 2
    }
}

fn check_hermitian<T: Scalar>(h: &ComplexMatrix<T>) -> Result<()> {
    let defect = h.hermiticity_defect();
    if defect > T::tol(1e-12) * h.max_abs().max(T::one()) {
        return Err(Error::Validation(format!("quadratic form is not Hermitian (defect {:e})", defect.as_f64())));
    }
    Ok(())
}

/// Signature vector of `I₋` for `n` modes.
pub fn minus_identity_diag<T: Scalar>(n: usize) -> Vec<T> {
    (0..2 * n).map(|i| if i < n { T::one() } else { -T::one() }).collect()
}

/// The dynamical matrix `I₋ H`.
pub fn dynamical_matrix<T: Scalar>(form: &QuadraticForm<T>) -> Result<ComplexMatrix<T>> {
    check_hermitian(&form.h)?;
    let n = form.modes();
    Ok(ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| if i < n { form.h[(i, j)] } else { -form.h[(i, j)] }))
}

/// `v† I₋ v` for a vector of even length.
pub fn symplectic_norm<T: Scalar>(v: &[Complex<T>]) -> Result<T> {
    if v.is_empty() || v.len() % 2 != 0 {
        return Err(Error::Dimension { expected: "even-length vector".into(), found: format!("length {}", v.len()) });
    }
    if v.iter().all(|x| x.is_zero()) {
        return Err(Error::Degenerate("symplectic norm of the zero vector".into()));
    }
    Ok(symplectic_inner(v, v).re)
}

/// `u† I₋ v`.
pub fn symplectic_inner<T: Scalar>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    let n = u.len() / 2;
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (a, b))| if i < n { a.conj() * b } else { -(a.conj() * b) })
        .fold(Complex::zero(), |acc, x| acc + x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationMode<T = f64> {
    pub frequency: Complex<T>,
    /// Unit Euclidean norm, first non-negligible component real positive.
    pub eigenvector: Vec<Complex<T>>,
    pub symplectic_norm: T,
    /// `|Im ω| ≤ tol_im`.
    pub physical: bool,
    /// `|v† I₋ v| < 1e-9`: a diabolical or critical mode.
    pub zero_norm: bool,
}

impl<T: Scalar> ExcitationMode<T> {
    pub fn is_particle_like(&self) -> bool {
        !self.zero_norm && self.symplectic_norm > T::zero()
    }

    pub fn is_hole_like(&self) -> bool {
        !self.zero_norm && self.symplectic_norm < T::zero()
    }
}

/// Columns are eigenvectors scaled to `|v† I₋ v| = 1`: positive-norm modes
/// first (descending frequency), then negative-norm modes (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovTransform<T = f64> {
    pub v: ComplexMatrix<T>,
}

impl<T: Scalar> BogoliubovTransform<T> {
    /// `max |V† I₋ V − I₋|`.
    pub fn para_unitarity_defect(&self) -> T {
        let n2 = self.v.rows();
        let sig = minus_identity_diag::<T>(n2 / 2);
        let mut worst = T::zero();
        for i in 0..n2 {
            for j in 0..n2 {
                let ci = self.v.column(i);
                let cj = self.v.column(j);
                let g = symplectic_inner(&ci, &cj);
                let want = if i == j { sig[i] } else { T::zero() };
                worst = worst.max((g - Complex::new(want, T::zero())).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSpectrum<T = f64> {
    /// `2N` modes, descending real frequency.
    pub modes: Vec<ExcitationMode<T>>,
    /// Present only when every mode is physical with nonzero norm.
    pub transform: Option<BogoliubovTransform<T>>,
    /// Some mode has a vanishing symplectic norm.
    pub critical: bool,
}

impl<T: Scalar> ExcitationSpectrum<T> {
    pub fn all_physical(&self) -> bool {
        self.modes.iter().all(|m| m.physical)
    }

    pub fn frequencies(&self) -> Vec<Complex<T>> {
        self.modes.iter().map(|m| m.frequency).collect()
    }
}

/// Excitation modes of `form` with the default `|Im ω|` tolerance.
pub fn diagonalize_excitations<T: Scalar>(form: &QuadraticForm<T>) -> Result<ExcitationSpectrum<T>> {
    diagonalize_excitations_with(form, T::lit(TOL_IM))
}

pub fn diagonalize_excitations_with<T: Scalar>(form: &QuadraticForm<T>, tol_im: T) -> Result<ExcitationSpectrum<T>> {
    let d = dynamical_matrix(form)?;
    let es = eig(&d)?;
    let scale = d.frobenius_norm().max(T::one());
    let tie = T::lit(1e-9) * scale;
    let mut vals = es.values;
    let mut vecs = es.vectors;

    // Orthogonalise degenerate clusters with respect to v† I₋ v.
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && (vals[end] - vals[start]).norm() <= tie {
            end += 1;
        }
        if end - start > 1 {
            symplectic_orthogonalize(&mut vecs[start..end])?;
        }
        start = end;
    }

    let norm_zero = T::lit(TOL_NORM_ZERO);
    let mut modes: Vec<ExcitationMode<T>> = vals
        .drain(..)
        .zip(vecs.drain(..))
        .map(|(w, v)| {
            let s = symplectic_inner(&v, &v).re;
            ExcitationMode {
                frequency: w,
                eigenvector: v,
                symplectic_norm: s,
                physical: w.im.abs() <= tol_im,
                zero_norm: s.abs() < norm_zero,
            }
        })
        .collect();
    modes.sort_by(|a, b| mode_order(a, b, tie));
    let critical = modes.iter().any(|m| m.zero_norm);
    let transform = if critical || !modes.iter().all(|m| m.physical) {
        None
    } else {
        assemble_transform(&modes)
    };
    Ok(ExcitationSpectrum { modes, transform, critical })
}

fn mode_order<T: Scalar>(a: &ExcitationMode<T>, b: &ExcitationMode<T>, tie: T) -> Ordering {
    if (a.frequency.re - b.frequency.re).abs() > tie {
        return b.frequency.re.partial_cmp(&a.frequency.re).unwrap_or(Ordering::Equal);
    }
    if (a.frequency.im - b.frequency.im).abs() > tie {
        return b.frequency.im.partial_cmp(&a.frequency.im).unwrap_or(Ordering::Equal);
    }
    let sa = a.symplectic_norm > T::zero();
    let sb = b.symplectic_norm > T::zero();
    if sa != sb {
        return if sa { Ordering::Less } else { Ordering::Greater };
    }
    for (x, y) in a.eigenvector.iter().zip(&b.eigenvector) {
        let o = y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal).then(y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Diagonalises the symplectic Gram matrix of a degenerate eigenspace so the
/// returned basis is `I₋`-orthogonal with definite norm signs.
fn symplectic_orthogonalize<T: Scalar>(vecs: &mut [Vec<Complex<T>>]) -> Result<()> {
    let k = vecs.len();
    let gram = ComplexMatrix::from_fn(k, k, |i, j| symplectic_inner(&vecs[i], &vecs[j]));
    let ges = eig(&gram)?;
    let dim = vecs[0].len();
    let mut out = Vec::with_capacity(k);
    for u in &ges.vectors {
        let mut v = vec![Complex::<T>::zero(); dim];
        for (c, src) in u.iter().zip(vecs.iter()) {
            for (vi, si) in v.iter_mut().zip(src) {
                *vi = *vi + si * c;
            }
        }
        out.push(normalize_unit_phase(v));
    }
    for (dst, src) in vecs.iter_mut().zip(out) {
        *dst = src;
    }
    Ok(())
}

fn normalize_unit_phase<T: Scalar>(mut v: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let n: T = v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
    if n == T::zero() {
        return v;
    }
    let pivot = v.iter().position(|x| x.norm() / n > T::lit(1e-8)).unwrap_or(0);
    let p = v[pivot];
    let phase = p.conj() / p.norm();
    for x in v.iter_mut() {
        *x = *x * phase / n;
    }
    v[pivot] = Complex::new(v[pivot].re, T::zero());
    v
}

fn assemble_transform<T: Scalar>(modes: &[ExcitationMode<T>]) -> Option<BogoliubovTransform<T>> {
    let n2 = modes.len();
    let mut pos: Vec<&ExcitationMode<T>> = modes.iter().filter(|m| m.symplectic_norm > T::zero()).collect();
    let mut neg: Vec<&ExcitationMode<T>> = modes.iter().filter(|m| m.symplectic_norm < T::zero()).collect();
    if pos.len() * 2 != n2 || neg.len() * 2 != n2 {
        return None;
    }
    pos.sort_by(|a, b| b.frequency.re.partial_cmp(&a.frequency.re).unwrap_or(Ordering::Equal));
    neg.sort_by(|a, b| a.frequency.re.partial_cmp(&b.frequency.re).unwrap_or(Ordering::Equal));
    let cols: Vec<Vec<Complex<T>>> = pos
        .iter()
        .chain(neg.iter())
        .map(|m| {
            let s = m.symplectic_norm.abs().sqrt();
            m.eigenvector.iter().map(|x| *x / s).collect()
        })
        .collect();
    Some(BogoliubovTransform { v: ComplexMatrix::from_fn(n2, n2, |i, j| cols[j][i]) })
}
