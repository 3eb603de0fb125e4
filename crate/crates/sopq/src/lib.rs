pub mod chain;
mod error;
pub mod grading;
pub mod hitchin;
pub mod linalg;
pub mod matrix;
pub mod minima;
pub mod oracles;
pub mod poly;
pub mod selftest;
pub mod stability;
pub mod topology;

pub use error::Error;
pub use linalg::Scalar;
pub use matrix::SymMatrix;
pub use poly::{MPoly, Ring};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;
pub type QPoly = MPoly<Rational>;
pub type F64Poly = MPoly<f64>;
pub type QMatrix = SymMatrix<Rational>;
