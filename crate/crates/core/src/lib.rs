//! Exact computation and asymptotic verification of hyperbolic sums
//! `sum_{n1...nk <= x} f(gcd(n1..nk))` and `sum_{n1...nk <= x} f(lcm(n1..nk))`.

pub mod arith;
pub mod cli;
pub mod constants;
pub mod convolution;
pub mod error;
pub mod fit;
pub mod summation;

pub use error::{Error, Result};
