//! Exact arithmetic kernel.

pub mod eval;
pub mod gcd;
pub mod jet;
pub mod linalg;
pub mod matrix;
pub mod parse;
pub mod poly;
pub mod rational;

pub use jet::{JetExpression, JetSpace};
pub use matrix::Matrix;
pub use poly::{Monomial, Polynomial};
pub use rational::RationalFunction;

/// Exact rational number with unbounded numerator and denominator.
pub type Scalar = num_rational::BigRational;

/// `n/d` as a [`Scalar`].
pub fn ratio(n: i64, d: i64) -> Scalar {
    Scalar::new(n.into(), d.into())
}

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(n.into())
}
