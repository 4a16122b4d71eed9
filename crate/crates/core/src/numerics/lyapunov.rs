//! Continuous Lyapunov equation `M K + K Mᵀ + D = 0`.

use num_traits::{Float, One};

use crate::error::{Error, Result};
use crate::numerics::eig::eigenvalues;
use crate::numerics::matrix::Matrix;
use crate::scalar::{Entry, Scalar};

/// Stationary covariance `K` of the linear flow `dx = M x dt + noise` with
/// diffusion `D`.
///
/// Solved through the vectorised Kronecker system, so intended for `n ≤ 8`.
/// Fails with [`Error::Unstable`] unless every eigenvalue of `M` has a
/// strictly negative real part.
pub fn solve_lyapunov<E: Entry>(m: &Matrix<E>, d: &Matrix<E>) -> Result<Matrix<E>> {
    if !m.is_square() || d.rows() != m.rows() || d.cols() != m.cols() {
        return Err(Error::Dimension {
            expected: format!("two {}x{} matrices", m.rows(), m.rows()),
            found: format!("{}x{} and {}x{}", m.rows(), m.cols(), d.rows(), d.cols()),
        });
    }
    let n = m.rows();
    let max_re = eigenvalues(m)?.iter().fold(E::Real::neg_infinity(), |a, v| a.max(v.re));
    let stab_tol = E::Real::tol(1e-12) * m.max_abs().max(E::Real::one());
    if !(max_re < -stab_tol) {
        return Err(Error::Unstable { max_real_part: max_re.as_f64() });
    }

    // Column-major vec: vec(M K) = (I ⊗ M) vec K, vec(K Mᵀ) = (M ⊗ I) vec K.
    let nn = n * n;
    let mut big = Matrix::<E>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for k in 0..n {
                let c1 = k + j * n;
                big[(row, c1)] = big[(row, c1)] + m[(i, k)];
                let c2 = i + k * n;
                big[(row, c2)] = big[(row, c2)] + m[(j, k)];
            }
        }
    }
    let rhs = Matrix::from_fn(nn, 1, |r, _| -d[(r % n, r / n)]);
    let x = big.solve(&rhs)?;
    let half = E::from_real(E::Real::lit(0.5));
    let k = Matrix::from_fn(n, n, |i, j| (x[(i + j * n, 0)] + x[(j + i * n, 0)]) * half);

    let res = lyapunov_residual(m, &k, d);
    let scale = d.frobenius_norm() + m.frobenius_norm() * k.frobenius_norm();
    if !(res <= E::Real::tol(1e-9) * scale.max(E::Real::min_positive_value())) {
        return Err(Error::Singular);
    }
    Ok(k)
}

/// Frobenius norm of `M K + K Mᵀ + D`.
pub fn lyapunov_residual<E: Entry>(m: &Matrix<E>, k: &Matrix<E>, d: &Matrix<E>) -> E::Real {
    let mk = m * k;
    let kmt = k * &m.transpose();
    (&(&mk + &kmt) + d).frobenius_norm()
}
