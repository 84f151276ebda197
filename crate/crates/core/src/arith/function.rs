use std::fmt;

use serde::Serialize;

use super::scalar::ScalarValue;
use super::sieve::{factorize, Factorization, PrimeTable};
use crate::error::{Error, Result};

/// The one-variable arithmetic functions `f` used as `f(gcd)` or `f(lcm)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FunctionId {
    One,
    /// Natural logarithm.
    Log,
    /// Number of distinct prime divisors.
    SmallOmega,
    /// Number of prime divisors counted with multiplicity.
    BigOmega,
    /// Divisor count.
    Tau,
    /// Piltz divisor function with the given number of factors.
    TauK(u32),
    Mobius,
    /// von Mangoldt function.
    Lambda,
    /// `n^r`.
    IdPow(f64),
    /// `sigma(n)^r`.
    SigmaPow(f64),
    /// `phi(n)^r`.
    PhiPow(f64),
}

/// Membership data for the class of multiplicative `f` with `f(p)` close to
/// `p^r`: `|f(p) - p^r| <= c1 p^(r - 1/2)` and `|f(p^v)| <= c2 p^(v r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArClass {
    pub r: f64,
    pub c1: f64,
    pub c2: f64,
}

/// How `f` combines over coprime arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Multiplicative,
    Additive,
    Other,
}

fn is_nonneg_integer(r: f64) -> bool {
    r >= 0.0 && r.fract() == 0.0 && r <= u32::MAX as f64
}

impl FunctionId {
    /// Class membership metadata; present only for `n^r`, `sigma^r`, `phi^r`.
    pub fn ar_class(&self) -> Option<ArClass> {
        match *self {
            FunctionId::IdPow(r) => Some(ArClass {
                r,
                c1: 0.0,
                c2: 1.0,
            }),
            // sigma(p) - p = 1 and sigma(p^v) <= 2 p^v.
            FunctionId::SigmaPow(r) => Some(ArClass {
                r,
                c1: r * 1.5f64.powf(r - 1.0).max(1.0),
                c2: 2f64.powf(r),
            }),
            // p - phi(p) = 1 and phi(p^v) <= p^v.
            FunctionId::PhiPow(r) => Some(ArClass {
                r,
                c1: r * 2f64.powf(1.0 - r).max(1.0),
                c2: 1.0,
            }),
            _ => None,
        }
    }

    pub fn is_integer_valued(&self) -> bool {
        match *self {
            FunctionId::Log | FunctionId::Lambda => false,
            FunctionId::IdPow(r) | FunctionId::SigmaPow(r) | FunctionId::PhiPow(r) => {
                is_nonneg_integer(r)
            }
            _ => true,
        }
    }

    pub fn structure(&self) -> Structure {
        match self {
            FunctionId::Log | FunctionId::SmallOmega | FunctionId::BigOmega => Structure::Additive,
            FunctionId::Lambda => Structure::Other,
            _ => Structure::Multiplicative,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, FunctionId::Mobius)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            FunctionId::TauK(0) => Err(Error::domain("TauK needs at least one factor")),
            FunctionId::IdPow(r) | FunctionId::SigmaPow(r) | FunctionId::PhiPow(r)
                if !(r.is_finite() && r >= 0.0) =>
            {
                Err(Error::domain(format!(
                    "exponent r must be a finite real >= 0, got {r}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Parses a CLI name (`one|id|log|omega|bigomega|tau|mobius|sigma|phi|lambda|tauk`).
    pub fn parse(name: &str, r: Option<f64>, k: Option<u32>) -> Result<FunctionId> {
        let r = r.unwrap_or(1.0);
        let f = match name {
            "one" => FunctionId::One,
            "log" => FunctionId::Log,
            "omega" => FunctionId::SmallOmega,
            "bigomega" => FunctionId::BigOmega,
            "tau" => FunctionId::Tau,
            "tauk" => FunctionId::TauK(k.unwrap_or(2)),
            "mobius" | "mu" => FunctionId::Mobius,
            "lambda" => FunctionId::Lambda,
            "id" => FunctionId::IdPow(r),
            "sigma" => FunctionId::SigmaPow(r),
            "phi" => FunctionId::PhiPow(r),
            other => return Err(Error::domain(format!("unknown function '{other}'"))),
        };
        f.validate()?;
        Ok(f)
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionId::One => write!(f, "one"),
            FunctionId::Log => write!(f, "log"),
            FunctionId::SmallOmega => write!(f, "omega"),
            FunctionId::BigOmega => write!(f, "bigomega"),
            FunctionId::Tau => write!(f, "tau"),
            FunctionId::TauK(k) => write!(f, "tau{k}"),
            FunctionId::Mobius => write!(f, "mobius"),
            FunctionId::Lambda => write!(f, "lambda"),
            FunctionId::IdPow(r) => write!(f, "id^{r}"),
            FunctionId::SigmaPow(r) => write!(f, "sigma^{r}"),
            FunctionId::PhiPow(r) => write!(f, "phi^{r}"),
        }
    }
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn int_pow(base: u64, exp: u64) -> Result<i128> {
    let exp = u32::try_from(exp).map_err(|_| Error::Overflow("integer power"))?;
    (base as i128)
        .checked_pow(exp)
        .ok_or(Error::Overflow("integer power"))
}

fn real_pow(base: ScalarValue, r: f64) -> Result<ScalarValue> {
    if is_nonneg_integer(r) {
        if let Some(b) = base.exact_value() {
            let e = r as u32;
            return b
                .checked_pow(e)
                .map(ScalarValue::exact)
                .ok_or(Error::Overflow("integer power"));
        }
    }
    Ok(ScalarValue::approx(base.to_f64().powf(r)))
}

/// `f(p^m)` for a prime `p`, without forming `p^m` where avoidable.
pub fn eval_prime_power(f: FunctionId, p: u64, m: u32) -> Result<ScalarValue> {
    let m64 = m as u64;
    Ok(match f {
        FunctionId::One => ScalarValue::ONE,
        FunctionId::Log => ScalarValue::approx(m as f64 * (p as f64).ln()),
        FunctionId::SmallOmega => ScalarValue::exact((m > 0) as i128),
        FunctionId::BigOmega => ScalarValue::exact(m as i128),
        FunctionId::Tau => ScalarValue::exact(m as i128 + 1),
        FunctionId::TauK(k) => tau_k_prime_power(k, m)?,
        FunctionId::Mobius => ScalarValue::exact(match m {
            0 => 1,
            1 => -1,
            _ => 0,
        }),
        FunctionId::Lambda => {
            if m == 0 {
                ScalarValue::approx(0.0)
            } else {
                ScalarValue::approx((p as f64).ln())
            }
        }
        FunctionId::IdPow(r) => {
            if is_nonneg_integer(r) {
                ScalarValue::exact(int_pow(p, m64 * r as u64)?)
            } else {
                ScalarValue::approx((p as f64).powf(m as f64 * r))
            }
        }
        FunctionId::SigmaPow(r) => {
            // (p^(m+1) - 1) / (p - 1)
            let sigma = match int_pow(p, m64 + 1) {
                Ok(pm1) => ScalarValue::exact((pm1 - 1) / (p as i128 - 1)),
                Err(_) if !is_nonneg_integer(r) => {
                    let pf = p as f64;
                    ScalarValue::approx((pf.powi(m as i32 + 1) - 1.0) / (pf - 1.0))
                }
                Err(e) => return Err(e),
            };
            real_pow(sigma, r)?
        }
        FunctionId::PhiPow(r) => {
            let phi = if m == 0 {
                ScalarValue::ONE
            } else {
                match int_pow(p, m64 - 1) {
                    Ok(pm) => ScalarValue::exact(pm * (p as i128 - 1)),
                    Err(_) if !is_nonneg_integer(r) => {
                        ScalarValue::approx((p as f64).powi(m as i32 - 1) * (p as f64 - 1.0))
                    }
                    Err(e) => return Err(e),
                }
            };
            real_pow(phi, r)?
        }
    })
}

fn tau_k_prime_power(k: u32, a: u32) -> Result<ScalarValue> {
    if k == 0 {
        return Err(Error::domain("tau_k needs k >= 1"));
    }
    let c = binomial(a as u64 + k as u64 - 1, k as u64 - 1)
        .and_then(|c| i128::try_from(c).ok())
        .ok_or(Error::Overflow("tau_k binomial"))?;
    Ok(ScalarValue::exact(c))
}

/// Evaluates `f` on a factored argument.
pub fn eval_factored(f: FunctionId, fact: &Factorization) -> Result<ScalarValue> {
    f.validate()?;
    match f {
        FunctionId::Log => Ok(ScalarValue::approx((fact.n as f64).ln())),
        FunctionId::Lambda => {
            if fact.is_prime_power() {
                Ok(ScalarValue::approx((fact.parts[0].0 as f64).ln()))
            } else {
                Ok(ScalarValue::approx(0.0))
            }
        }
        _ => match f.structure() {
            Structure::Multiplicative => fact
                .parts
                .iter()
                .try_fold(ScalarValue::ONE, |acc, &(p, a)| {
                    acc.checked_mul(eval_prime_power(f, p, a)?)
                }),
            _ => fact
                .parts
                .iter()
                .try_fold(ScalarValue::ZERO, |acc, &(p, a)| {
                    acc.checked_add(eval_prime_power(f, p, a)?)
                }),
        },
    }
}

/// `f(n)`; exact for integer-valued `f`, natural log as a float for `Log`.
pub fn eval_f(f: FunctionId, n: u64, table: &PrimeTable) -> Result<ScalarValue> {
    if n == 0 {
        return Err(Error::domain("arithmetic functions are defined on n >= 1"));
    }
    if f == FunctionId::Log {
        return Ok(ScalarValue::approx((n as f64).ln()));
    }
    eval_factored(f, &factorize(n, table)?)
}

/// `(mu * f)(n) = sum_{d | n} mu(d) f(n/d)`.
pub fn mobius_transform_point(f: FunctionId, n: u64, table: &PrimeTable) -> Result<ScalarValue> {
    if n == 0 {
        return Err(Error::domain("arithmetic functions are defined on n >= 1"));
    }
    f.validate()?;
    let fact = factorize(n, table)?;
    mobius_transform_factored(f, &fact)
}

pub(crate) fn mobius_transform_factored(
    f: FunctionId,
    fact: &Factorization,
) -> Result<ScalarValue> {
    match f {
        FunctionId::Log => Ok(ScalarValue::approx(if fact.is_prime_power() {
            (fact.parts[0].0 as f64).ln()
        } else {
            0.0
        })),
        FunctionId::SmallOmega => Ok(ScalarValue::exact(fact.is_prime() as i128)),
        FunctionId::BigOmega => Ok(ScalarValue::exact(fact.is_prime_power() as i128)),
        FunctionId::IdPow(r) if r == 1.0 => {
            // phi(n)
            fact.parts
                .iter()
                .try_fold(ScalarValue::ONE, |acc, &(p, a)| {
                    acc.checked_mul(ScalarValue::exact(
                        int_pow(p, a as u64 - 1)? * (p as i128 - 1),
                    ))
                })
        }
        _ if f.structure() == Structure::Multiplicative => {
            fact.parts
                .iter()
                .try_fold(ScalarValue::ONE, |acc, &(p, a)| {
                    let local =
                        eval_prime_power(f, p, a)?.checked_sub(eval_prime_power(f, p, a - 1)?)?;
                    acc.checked_mul(local)
                })
        }
        _ => {
            // Sum over squarefree divisors d of mu(d) f(n/d).
            let w = fact.parts.len();
            let mut acc = ScalarValue::ZERO;
            for mask in 0u32..(1 << w) {
                let mut cofactor = fact.clone();
                for (i, part) in cofactor.parts.iter_mut().enumerate() {
                    if mask & (1 << i) != 0 {
                        part.1 -= 1;
                        cofactor.n /= part.0;
                    }
                }
                cofactor.parts.retain(|&(_, e)| e > 0);
                let term = eval_factored(f, &cofactor)?;
                acc = if mask.count_ones() % 2 == 0 {
                    acc.checked_add(term)?
                } else {
                    acc.checked_sub(term)?
                };
            }
            Ok(acc)
        }
    }
}

/// Number of ordered `k`-tuples with product `n`.
pub fn tau_k_point(k: u32, n: u64, table: &PrimeTable) -> Result<ScalarValue> {
    if k == 0 {
        return Err(Error::domain("tau_k needs k >= 1"));
    }
    if n == 0 {
        return Err(Error::domain("arithmetic functions are defined on n >= 1"));
    }
    tau_k_factored(k, &factorize(n, table)?)
}

pub(crate) fn tau_k_factored(k: u32, fact: &Factorization) -> Result<ScalarValue> {
    fact.parts
        .iter()
        .try_fold(ScalarValue::ONE, |acc, &(_, a)| {
            acc.checked_mul(tau_k_prime_power(k, a)?)
        })
}
