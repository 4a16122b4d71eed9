//! Linear-stability verdicts shared by the model layers.

use num_complex::Complex;

use crate::numerics::RealMatrix;
use crate::scalar::Scalar;

/// A state counts as stable when every non-constraint eigenvalue has
/// `Re ε < −STABILITY_TOL`; `|max Re ε| ≤ STABILITY_TOL` is marginal.
pub const STABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T = f64> {
    /// Fluctuation-matrix eigenvalues, descending real part.
    pub eigenvalues: Vec<Complex<T>>,
    /// Aligned with `eigenvalues`; `true` marks a structural zero mode that
    /// is excluded from the verdict.
    pub constraint: Vec<bool>,
    /// Largest real part over non-constraint eigenvalues.
    pub max_real_part: T,
    pub stable: bool,
    pub marginal: bool,
    /// All non-constraint eigenvalues real and distinct with nonzero loss.
    pub overdamped: bool,
    /// Stationary covariance, present only for stable states.
    pub covariance: Option<RealMatrix<T>>,
}

impl<T: Scalar> StabilityReport<T> {
    /// Builds the verdict from eigenvalues and their constraint tags.
    pub fn from_eigenvalues(eigenvalues: Vec<Complex<T>>, constraint: Vec<bool>, overdamped: bool) -> Self {
        let max_real_part = eigenvalues
            .iter()
            .zip(&constraint)
            .filter(|(_, c)| !**c)
            .fold(T::neg_infinity(), |m, (e, _)| m.max(e.re));
        let tol = T::lit(STABILITY_TOL);
        Self {
            eigenvalues,
            constraint,
            max_real_part,
            stable: max_real_part < -tol,
            marginal: max_real_part.abs() <= tol,
            overdamped,
            covariance: None,
        }
    }
}
