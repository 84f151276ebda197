//! Sieve-backed arithmetic primitives: prime tables, factorization, the
//! one-variable arithmetic functions and exact scalar arithmetic.

mod function;
mod scalar;
mod sieve;

pub use function::{
    binomial, eval_f, eval_factored, eval_prime_power, mobius_transform_point, tau_k_point,
    ArClass, FunctionId, Structure,
};
pub(crate) use function::{mobius_transform_factored, tau_k_factored};
pub use scalar::{Accumulator, KahanSum, ScalarValue};
pub use sieve::{
    build_prime_table, factorize, is_prime_u64, Factorization, MemoryCap, PrimeTable, MEM_CAP_ENV,
};

/// Floor of the square root.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Largest `d` with `d^k <= n`, for `k >= 1`.
pub fn iroot(n: u64, k: u32) -> u64 {
    if k == 1 || n <= 1 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64) as u64;
    while r > 0 && r.checked_pow(k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
