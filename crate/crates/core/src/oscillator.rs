//! Damped and overdamped harmonic oscillator reference model.

use num_complex::Complex;

use crate::bogoliubov::QuadraticForm;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RealMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscParams<T = f64> {
    pub omega0: T,
    pub kappa: T,
    /// White-noise strength of the classical force.
    pub sigma: T,
}

impl<T: Scalar> OscParams<T> {
    pub fn new(omega0: T, kappa: T, sigma: T) -> Result<Self> {
        let p = Self { omega0, kappa, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega0", self.omega0), ("kappa", self.kappa), ("sigma", self.sigma)] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Validation(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscEigenvalues<T = f64> {
    pub plus: Complex<T>,
    pub minus: Complex<T>,
    /// `κ² > 4ω₀²`.
    pub overdamped: bool,
}

/// `ε± = ½(−κ ± √(κ² − 4ω₀²))`.
pub fn overdamped_eigenvalues<T: Scalar>(p: &OscParams<T>) -> OscEigenvalues<T> {
    let half = T::lit(0.5);
    let disc = p.kappa * p.kappa - T::lit(4.0) * p.omega0 * p.omega0;
    let root = Complex::new(disc, T::zero()).sqrt();
    let base = Complex::new(-p.kappa, T::zero());
    OscEigenvalues { plus: (base + root) * half, minus: (base - root) * half, overdamped: disc > T::zero() }
}

/// Drift matrix of `(x, p)`: `[[0, 1], [−ω₀², −κ]]`.
pub fn companion_matrix<T: Scalar>(p: &OscParams<T>) -> RealMatrix<T> {
    RealMatrix::from_row_slice(2, 2, &[T::zero(), T::one(), -p.omega0 * p.omega0, -p.kappa])
}

/// Noise matrix `diag(0, σ²)` matching [`companion_matrix`].
pub fn noise_matrix<T: Scalar>(p: &OscParams<T>) -> RealMatrix<T> {
    RealMatrix::from_row_slice(2, 2, &[T::zero(), T::zero(), T::zero(), p.sigma * p.sigma])
}

/// `(σ²/(2κω₀²), σ²/(2κ))`.
pub fn overdamped_variance<T: Scalar>(p: &OscParams<T>) -> Result<(T, T)> {
    if p.kappa <= T::zero() || p.omega0 <= T::zero() {
        return Err(Error::Degenerate("no stationary distribution without damping and restoring force".into()));
    }
    let s2 = p.sigma * p.sigma;
    let two_k = T::lit(2.0) * p.kappa;
    Ok((s2 / (two_k * p.omega0 * p.omega0), s2 / two_k))
}

/// Rotating-frame Lorentzian `2κ / ((ω + Δ)² + κ²)`.
pub fn rotating_spectral_function<T: Scalar>(detuning: T, kappa: T, omega: T) -> T {
    let x = omega + detuning;
    T::lit(2.0) * kappa / (x * x + kappa * kappa)
}

/// Single-mode form `diag(ω₀, ω₀)` of `ω₀ a†a`.
pub fn harmonic_form<T: Scalar>(omega0: T) -> QuadraticForm<T> {
    let w = Complex::new(omega0, T::zero());
    QuadraticForm::new(ComplexMatrix::from_diagonal(&[w, w]), T::zero()).expect("diagonal real form is Hermitian")
}
