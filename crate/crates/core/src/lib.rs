//! Mean-field, Bogoliubov and Gaussian Keldysh analysis of driven-dissipative
//! bosonic models: the Kerr parametric oscillator and the interpolating
//! Dicke–Tavis–Cummings model.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision for the common cases.

pub mod bogoliubov;
pub mod error;
pub mod idtc;
pub mod kpo;
pub mod numerics;
pub mod oscillator;
pub mod phasediag;
pub mod response;
pub mod scalar;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::{Entry, Scalar};

pub type ComplexMatrixF64 = numerics::ComplexMatrix<f64>;
pub type ComplexMatrixF32 = numerics::ComplexMatrix<f32>;
pub type RealMatrixF64 = numerics::RealMatrix<f64>;
pub type RealMatrixF32 = numerics::RealMatrix<f32>;

pub type QuadraticFormF64 = bogoliubov::QuadraticForm<f64>;
pub type QuadraticFormF32 = bogoliubov::QuadraticForm<f32>;

pub type KpoParamsF64 = kpo::KpoParams<f64>;
pub type KpoParamsF32 = kpo::KpoParams<f32>;
pub type KpoStateF64 = kpo::KpoState<f64>;
pub type KpoStateF32 = kpo::KpoState<f32>;

pub type IdtcParamsF64 = idtc::IdtcParams<f64>;
pub type IdtcParamsF32 = idtc::IdtcParams<f32>;
pub type IdtcStateF64 = idtc::IdtcState<f64>;
pub type IdtcStateF32 = idtc::IdtcState<f32>;

pub type OscParamsF64 = oscillator::OscParams<f64>;
pub type OscParamsF32 = oscillator::OscParams<f32>;

pub type GreensSetF64 = response::GreensSet<f64>;
pub type GreensSetF32 = response::GreensSet<f32>;
pub type SpectraTableF64 = response::SpectraTable<f64>;
pub type SpectraTableF32 = response::SpectraTable<f32>;
