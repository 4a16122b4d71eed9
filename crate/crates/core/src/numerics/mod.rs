//! Dense linear algebra and root finding used by the model layers.

pub mod eig;
pub mod lyapunov;
pub mod matrix;
pub mod newton;
pub mod poly;

pub use eig::{eig, eigenvalues, schur, EigenSystem};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use matrix::{ComplexMatrix, Matrix, RealMatrix};
pub use newton::{newton_multistart, ring_seeds, MultistartDiagnostics, MultistartResult, SeedFailure};
pub use poly::{eval_polynomial, roots_polynomial};
