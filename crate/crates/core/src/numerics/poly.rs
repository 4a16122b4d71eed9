//! Polynomial roots via the companion matrix.

use num_complex::Complex;
use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::numerics::eig::eigenvalues;
use crate::numerics::matrix::ComplexMatrix;
use crate::scalar::{Entry, Scalar};

/// Evaluates `c[0] + c[1] z + ... + c[n] z^n` by Horner's rule.
pub fn eval_polynomial<E: Entry>(coeffs: &[E], z: Complex<E::Real>) -> Complex<E::Real> {
    coeffs.iter().rev().fold(Complex::zero(), |acc, c| acc * z + c.to_complex())
}

fn eval_with_derivative<T: Scalar>(coeffs: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::zero();
    let mut dp = Complex::zero();
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + *c;
    }
    (p, dp)
}

/// All complex roots of the polynomial with ascending coefficients
/// `coeffs = [c0, c1, ..., cn]`, repeated according to multiplicity.
///
/// Trailing zero coefficients are dropped. Exact zero roots are deflated
/// before the companion eigenproblem, and the remaining roots receive a
/// few Newton polishing steps that are kept only when they reduce `|p|`.
pub fn roots_polynomial<E: Entry>(coeffs: &[E]) -> Result<Vec<Complex<E::Real>>> {
    let mut c: Vec<Complex<E::Real>> = coeffs.iter().map(|x| x.to_complex()).collect();
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    if c.is_empty() {
        return Err(Error::Degenerate("zero polynomial".into()));
    }
    if c.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Validation("non-finite polynomial coefficient".into()));
    }
    let mut roots = Vec::new();
    let lead_zeros = c.iter().take_while(|x| x.is_zero()).count();
    roots.extend(std::iter::repeat_n(Complex::zero(), lead_zeros));
    let c = c.split_off(lead_zeros);
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(roots);
    }
    let lead = c[deg];
    let mut comp = ComplexMatrix::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex::new(E::Real::one(), E::Real::zero());
    }
    for z in eigenvalues(&comp)? {
        let mut best = z;
        let mut best_abs = eval_with_derivative(&c, z).0.norm();
        let mut cur = z;
        for _ in 0..4 {
            let (p, dp) = eval_with_derivative(&c, cur);
            if dp.norm() == E::Real::zero() {
                break;
            }
            cur = cur - p / dp;
            let a = eval_with_derivative(&c, cur).0.norm();
            if a < best_abs {
                best = cur;
                best_abs = a;
            } else {
                break;
            }
        }
        roots.push(best);
    }
    Ok(roots)
}
