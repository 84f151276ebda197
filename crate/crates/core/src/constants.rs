//! Tail-bounded evaluation of the constants in the main terms: prime sums,
//! Wintner means, the layered-max Euler products, Eulerian numbers and the
//! `b_{k,t}` prime sums.
//!
//! Every routine returns a value together with a bound on its distance from
//! the true constant. Prime tails are bounded with `pi(t) < 1.25506 t / ln t`
//! and integral comparison; Euler product tails through
//! `|prod (1 + e_p) - 1| <= exp(sum |e_p|) - 1`.

use serde::Serialize;

use crate::arith::{binomial, build_prime_table, eval_f, FunctionId, KahanSum};
use crate::error::{Error, Result};

/// Truncation parameters for prime products and exponent sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerConfig {
    pub prime_limit: u64,
    pub exponent_cap: u32,
    pub tail_tolerance: f64,
}

impl Default for EulerConfig {
    fn default() -> Self {
        EulerConfig {
            prime_limit: 100_000,
            exponent_cap: 40,
            tail_tolerance: 1e-9,
        }
    }
}

impl EulerConfig {
    pub fn new(prime_limit: u64, exponent_cap: u32, tail_tolerance: f64) -> Result<Self> {
        let cfg = EulerConfig {
            prime_limit,
            exponent_cap,
            tail_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.prime_limit < 100 {
            return Err(Error::domain(format!(
                "prime limit must be at least 100, got {}",
                self.prime_limit
            )));
        }
        if self.exponent_cap < 2 {
            return Err(Error::domain("exponent cap must be at least 2"));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::domain("tail tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstantResult {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: u64,
}

impl ConstantResult {
    pub fn meets_tolerance(&self, cfg: &EulerConfig) -> bool {
        self.tail_bound <= cfg.tail_tolerance
    }

    /// Whether `other` lies within this result's bound (plus `slack`).
    pub fn contains(&self, other: f64, slack: f64) -> bool {
        (self.value - other).abs() <= self.tail_bound + slack
    }
}

const PI_UPPER: f64 = 1.25506;

/// `Gamma(a + 1, z)` for integer `a >= 0`.
fn upper_gamma_int(a: u32, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=a {
        term *= z / j as f64;
        sum += term;
    }
    let fact: f64 = (1..=a).map(|j| j as f64).product();
    fact * (-z).exp() * sum
}

/// `int_L^inf (ln t)^a t^(-b) dt` for `b > 1`.
pub(crate) fn log_power_integral(a: u32, b: f64, l: f64) -> f64 {
    let c = b - 1.0;
    upper_gamma_int(a, c * l.ln()) / c.powi(a as i32 + 1)
}

/// `int_L^inf (1 + ln t)^a t^(-b) dt` for `b > 1`.
fn one_plus_log_integral(a: u32, b: f64, l: f64) -> f64 {
    (0..=a)
        .map(|i| binomial(a as u64, i as u64).unwrap_or(0) as f64 * log_power_integral(i, b, l))
        .sum()
}

/// Upper bound for `sum_{p > L} (ln p)^a p^(-b)`, valid for `b > 1`, `L >= e^(a/b)`.
pub(crate) fn prime_tail(a: u32, b: f64, l: f64) -> Result<f64> {
    if !(b > 1.0) || l < 2.0 || l.ln() < a as f64 / b {
        return Err(Error::domain(format!(
            "prime tail needs b > 1 and L >= e^(a/b), got a={a}, b={b}, L={l}"
        )));
    }
    // Stieltjes integration against pi(t) with g decreasing:
    // sum_{p > L} g(p) <= int_L^inf pi(t) (-g'(t)) dt and -g' <= b (ln t)^a t^(-b-1).
    Ok(if a == 0 {
        PI_UPPER * b / l.ln() * l.powf(1.0 - b) / (b - 1.0)
    } else {
        PI_UPPER * b * log_power_integral(a - 1, b, l)
    })
}

/// Rounding allowance for a compensated sum whose terms total `abs_sum` in
/// magnitude, each evaluated to within a few ulps.
fn rounding(abs_sum: f64) -> f64 {
    8.0 * f64::EPSILON * abs_sum
}

fn primes_to(limit: u64) -> Result<Vec<u64>> {
    Ok(build_prime_table(limit)?.primes().to_vec())
}

/// `zeta(s)` for real `s > 1` by direct summation with an integral-bracketed tail.
pub fn zeta_value(s: f64, cfg: &EulerConfig) -> Result<ConstantResult> {
    cfg.validate()?;
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(format!("zeta needs real s > 1, got {s}")));
    }
    let n = cfg.prime_limit.max(1000);
    let mut acc = KahanSum::new();
    for m in (1..=n).rev() {
        acc.add((m as f64).powf(-s));
    }
    let partial = acc.value();
    // sum_{m > N} m^-s lies between the integrals from N+1 and from N.
    let hi = (n as f64).powf(1.0 - s) / (s - 1.0);
    let lo = ((n + 1) as f64).powf(1.0 - s) / (s - 1.0);
    let value = partial + 0.5 * (hi + lo);
    Ok(ConstantResult {
        value,
        tail_bound: 0.5 * (hi - lo) + rounding(value),
        terms: n,
    })
}

/// `K_{f,k}` for `f` in {log, omega, Omega}: the prime sums
/// `sum log p / (p^k - 1)`, `sum p^-k`, `sum 1 / (p^k - 1)`.
pub fn gcd_prime_constant(f: FunctionId, k: u32, cfg: &EulerConfig) -> Result<ConstantResult> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    let kf = k as f64;
    let term: fn(f64, f64) -> f64 = match f {
        FunctionId::Log => |p, k| p.ln() / (p.powf(k) - 1.0),
        FunctionId::SmallOmega => |p, k| p.powf(-k),
        FunctionId::BigOmega => |p, k| 1.0 / (p.powf(k) - 1.0),
        _ => return Err(Error::domain(format!("no prime-sum constant for {f}"))),
    };
    let primes = primes_to(cfg.prime_limit)?;
    let acc: KahanSum = primes.iter().rev().map(|&p| term(p as f64, kf)).collect();
    let partial = acc.value();

    let l = cfg.prime_limit as f64;
    // For p > L, 1/(p^k - 1) <= p^-k / (1 - L^-k).
    let widen = 1.0 / (1.0 - l.powf(-kf));
    let tail = match f {
        FunctionId::Log => prime_tail(1, kf, l)? * widen,
        FunctionId::SmallOmega => prime_tail(0, kf, l)?,
        _ => prime_tail(0, kf, l)? * widen,
    };
    Ok(ConstantResult {
        value: partial + 0.5 * tail,
        tail_bound: 0.5 * tail + rounding(partial),
        terms: primes.len() as u64,
    })
}

/// Bound on `sum_{n > N} |f(n)| n^-k` from the growth of `f`.
fn wintner_tail(f: FunctionId, k: u32, n: f64) -> Result<f64> {
    let kf = k as f64;
    let divergent = || Error::domain(format!("sum f(n)/n^{k} does not converge for f = {f}"));
    // Pointwise bounds |f(n)| <= c n^r (1 + ln n)^a, with g(t) = t^(r-k)(1 + ln t)^a
    // decreasing on [N, inf) so that the sum is dominated by the integral.
    let pointwise = |c: f64, r: f64, a: u32| -> Result<f64> {
        let b = kf - r;
        if !(b > 1.0) {
            return Err(divergent());
        }
        if a as f64 >= b * (1.0 + n.ln()) {
            return Err(Error::domain("prime limit too small for the tail estimate"));
        }
        Ok(c * one_plus_log_integral(a, b, n))
    };
    // Summatory bounds sum_{m <= t} |f(m)| <= t (1 + ln t)^a, via partial summation.
    let summatory = |a: u32| -> Result<f64> {
        if k < 2 {
            return Err(divergent());
        }
        Ok(kf * one_plus_log_integral(a, kf, n))
    };
    match f {
        FunctionId::One | FunctionId::Mobius => pointwise(1.0, 0.0, 0),
        FunctionId::Log | FunctionId::Lambda => pointwise(1.0, 0.0, 1),
        FunctionId::SmallOmega | FunctionId::BigOmega => {
            pointwise(1.0 / std::f64::consts::LN_2, 0.0, 1)
        }
        FunctionId::IdPow(r) | FunctionId::PhiPow(r) => pointwise(1.0, r, 0),
        // sigma_r(n) / n^r = sum_{d | n} d^-r <= 1 + ln n for r >= 1; for 0 < r < 1
        // sigma_r(n) <= n^r + n / (1 - r).
        FunctionId::SigmaPow(r) if r >= 1.0 => pointwise(1.0, r, 1),
        FunctionId::SigmaPow(r) if r > 0.0 => pointwise((2.0 - r) / (1.0 - r), 1.0, 0),
        FunctionId::SigmaPow(_) | FunctionId::Tau => summatory(1),
        FunctionId::TauK(j) => summatory(j - 1),
    }
}

/// `(1 / zeta(k)) sum_n f(n) / n^k`; callers divide by `(k-1)!` themselves.
pub fn wintner_gcd_constant(f: FunctionId, k: u32, cfg: &EulerConfig) -> Result<ConstantResult> {
    cfg.validate()?;
    f.validate()?;
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    if let FunctionId::IdPow(r) | FunctionId::PhiPow(r) | FunctionId::SigmaPow(r) = f {
        if r >= k as f64 - 1.0 {
            return Err(Error::domain(format!("{f} grows too fast for k = {k}")));
        }
    }
    let n = cfg.prime_limit;
    let tail = wintner_tail(f, k, n as f64)?;
    let table = build_prime_table(n)?;
    let kf = k as f64;
    let mut acc = KahanSum::new();
    let mut abs = 0.0;
    for m in (1..=n).rev() {
        let t = eval_f(f, m, &table)?.to_f64() * (m as f64).powf(-kf);
        abs += t.abs();
        acc.add(t);
    }
    let s = acc.value();
    let es = tail + rounding(abs);
    let z = zeta_value(kf, cfg)?;
    if z.tail_bound >= z.value {
        return Err(Error::domain("zeta estimate too coarse"));
    }
    let value = s / z.value;
    Ok(ConstantResult {
        value,
        tail_bound: (es + value.abs() * z.tail_bound) / (z.value - z.tail_bound)
            + 4.0 * f64::EPSILON * value.abs(),
        terms: n,
    })
}

/// Per-prime data of a layered-max Euler product
/// `prod_p (1 - 1/p)^e sum_m w_p(m) (sigma_m^k - sigma_{m-1}^k)`,
/// where `sigma_m = sum_{v <= m} q^v` and `w_p(m) = ratio(p, m) (p q)^m`.
struct Layered<'a> {
    k: u32,
    /// Power of `(1 - 1/p)` in each local factor.
    e: u32,
    /// `q = p^-(r+1)`.
    r: f64,
    /// `f(p^m) / p^(m r)`.
    ratio: &'a dyn Fn(f64, u32) -> f64,
    /// Bound on the dropped layers `m > cap`, relative to the local sum.
    layer_tail: &'a dyn Fn(f64, u32) -> f64,
}

impl Layered<'_> {
    /// `(S_p - 1, bound on dropped layers)` for the local sum `S_p`.
    fn local_sum_minus_one(&self, p: f64, cap: u32) -> (f64, f64) {
        let q = p.powf(-(self.r + 1.0));
        let k = self.k as usize;
        let mut acc = KahanSum::new();
        let mut sigma_prev = 1.0; // sigma_0
        let mut qm = 1.0;
        for m in 1..=cap {
            qm *= q;
            let sigma = sigma_prev + qm;
            // sigma_m^k - sigma_{m-1}^k = q^m sum_i sigma_m^i sigma_{m-1}^(k-1-i)
            let diff: f64 = (0..k)
                .map(|i| sigma.powi(i as i32) * sigma_prev.powi((k - 1 - i) as i32))
                .sum();
            let w = (self.ratio)(p, m) * p.powi(-(m as i32));
            acc.add(w * diff);
            sigma_prev = sigma;
        }
        (acc.value(), (self.layer_tail)(p, cap))
    }

    /// The local factor `(1 - 1/p)^e S_p`.
    fn local_factor(&self, p: f64, cap: u32) -> f64 {
        let (s1, _) = self.local_sum_minus_one(p, cap);
        (self.e as f64 * (-1.0 / p).ln_1p() + s1.ln_1p()).exp()
    }

    /// Product over `p <= L` in log form, with the error of the dropped layers.
    fn product(&self, primes: &[u64], cap: u32) -> Result<(f64, f64)> {
        let mut log = KahanSum::new();
        let mut err = 0.0;
        for &p in primes.iter().rev() {
            let pf = p as f64;
            let (s1, dropped) = self.local_sum_minus_one(pf, cap);
            if !(s1 > -1.0) || dropped >= 1.0 + s1 {
                return Err(Error::domain(format!(
                    "nonpositive local factor at p = {p}"
                )));
            }
            log.add(self.e as f64 * (-1.0 / pf).ln_1p());
            log.add(s1.ln_1p());
            // |ln(S + d) - ln S| <= |d| / (S - |d|)
            err += dropped / (1.0 + s1 - dropped) + 8.0 * f64::EPSILON * (s1.abs() + 1.0 / pf);
        }
        Ok((log.value(), err))
    }
}

fn finish_product(log_value: f64, log_err: f64, prime_tail_sum: f64, terms: u64) -> ConstantResult {
    let value = log_value.exp();
    let eta = prime_tail_sum.exp_m1();
    // true = value * exp(e1) * P with |e1| <= log_err and |P - 1| <= eta
    let bound =
        value.abs() * (log_err.exp() * (1.0 + eta) - 1.0) + 4.0 * f64::EPSILON * value.abs();
    ConstantResult {
        value,
        tail_bound: bound,
        terms,
    }
}

fn class_ratio(f: FunctionId) -> Result<Box<dyn Fn(f64, u32) -> f64>> {
    Ok(match f {
        FunctionId::IdPow(_) => Box::new(|_, _| 1.0),
        FunctionId::SigmaPow(r) => {
            Box::new(move |p: f64, m| ((1.0 - p.powi(-(m as i32) - 1)) / (1.0 - 1.0 / p)).powf(r))
        }
        FunctionId::PhiPow(r) => {
            Box::new(move |p: f64, m| if m == 0 { 1.0 } else { (1.0 - 1.0 / p).powf(r) })
        }
        _ => return Err(Error::domain(format!("{f} is not in the power-like class"))),
    })
}

fn check_class(f: FunctionId, r: f64) -> Result<crate::arith::ArClass> {
    f.validate()?;
    match f.ar_class() {
        Some(c) if c.r == r => Ok(c),
        Some(c) => Err(Error::domain(format!(
            "{f} has class exponent {}, not {r}",
            c.r
        ))),
        None => Err(Error::domain(format!("{f} is not in the power-like class"))),
    }
}

fn sigma_inf(q: f64) -> f64 {
    1.0 / (1.0 - q)
}

/// Local factor of `C_{f,k}` at `p`: `(1 - 1/p)^k sum_v f(p^max v) p^-(r+1)|v|`.
pub fn local_factor_c(f: FunctionId, r: f64, k: u32, p: u64, exponent_cap: u32) -> Result<f64> {
    check_class(f, r)?;
    if k == 0 || p < 2 {
        return Err(Error::domain("local factor needs k >= 1 and a prime p"));
    }
    let ratio = class_ratio(f)?;
    let none = |_: f64, _: u32| 0.0;
    let layered = Layered {
        k,
        e: k,
        r,
        ratio: &*ratio,
        layer_tail: &none,
    };
    Ok(layered.local_factor(p as f64, exponent_cap))
}

/// Local factor of `D_k` at `p`: `(1 - 1/p)^(2k) sum_v (max v + 1) p^-|v|`.
pub fn local_factor_d(k: u32, p: u64, exponent_cap: u32) -> Result<f64> {
    if k == 0 || p < 2 {
        return Err(Error::domain("local factor needs k >= 1 and a prime p"));
    }
    let ratio = |_: f64, m: u32| (m + 1) as f64;
    let none = |_: f64, _: u32| 0.0;
    let layered = Layered {
        k,
        e: 2 * k,
        r: 0.0,
        ratio: &ratio,
        layer_tail: &none,
    };
    Ok(layered.local_factor(p as f64, exponent_cap))
}

/// `C_{f,k} = prod_p (1 - 1/p)^k sum_{v} f(p^max v) / p^((r+1)|v|)` for `f` in the
/// power-like class with exponent `r`.
pub fn euler_product_c(f: FunctionId, r: f64, k: u32, cfg: &EulerConfig) -> Result<ConstantResult> {
    cfg.validate()?;
    let class = check_class(f, r)?;
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    let kf = k as f64;
    let (c1, c2) = (class.c1, class.c2);
    let ratio = class_ratio(f)?;
    let layer_tail = move |p: f64, cap: u32| {
        let q = p.powf(-(r + 1.0));
        c2 * kf * sigma_inf(q).powf(kf - 1.0) * p.powi(-(cap as i32) - 1) / (1.0 - 1.0 / p)
    };
    let layered = Layered {
        k,
        e: k,
        r,
        ratio: &*ratio,
        layer_tail: &layer_tail,
    };
    let primes = primes_to(cfg.prime_limit)?;
    let (log, err) = layered.product(&primes, cfg.exponent_cap)?;

    let l = cfg.prime_limit as f64;
    let ql = l.powf(-(r + 1.0));
    let c2k = kf * (kf - 1.0) / 2.0;
    // |F_p - 1| <= A p^-3/2 + B p^-2 for p > L.
    let a = c1 * kf * (1.0 + ql).powf(kf - 1.0);
    let b = c2k * (1.0 + ql).powf((kf - 2.0).max(0.0))
        + c2k
        + (kf + c2k / l) * (1.0 + c1 / l.sqrt()) * kf * (1.0 + ql).powf(kf - 1.0)
        + c2 * kf * sigma_inf(ql).powf(kf - 1.0) / (1.0 - 1.0 / l);
    let tail = a * prime_tail(0, 1.5, l)? + b * prime_tail(0, 2.0, l)?;
    Ok(finish_product(log, err, tail, primes.len() as u64))
}

/// `D_k = prod_p (1 - 1/p)^(2k) sum_v (max v + 1) / p^|v|`.
pub fn euler_product_d(k: u32, cfg: &EulerConfig) -> Result<ConstantResult> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::domain(format!("k must be >= 2, got {k}")));
    }
    let kf = k as f64;
    let ratio = |_: f64, m: u32| (m + 1) as f64;
    // sum_{m > c} (m + 1) x^m = x^(c+1) ((c + 2)/(1 - x) + x/(1 - x)^2)
    let layer_tail = move |p: f64, cap: u32| {
        let x = 1.0 / p;
        let c = cap as f64;
        kf * sigma_inf(x).powf(kf - 1.0)
            * x.powi(cap as i32 + 1)
            * ((c + 2.0) / (1.0 - x) + x / (1.0 - x).powi(2))
    };
    let layered = Layered {
        k,
        e: 2 * k,
        r: 0.0,
        ratio: &ratio,
        layer_tail: &layer_tail,
    };
    let primes = primes_to(cfg.prime_limit)?;
    let (log, err) = layered.product(&primes, cfg.exponent_cap)?;

    let l = cfg.prime_limit as f64;
    let x = 1.0 / l;
    let c2k = kf * (kf - 1.0) / 2.0;
    let c22k = kf * (2.0 * kf - 1.0);
    let b = c22k
        + 2.0 * c2k * (1.0 + x).powf((kf - 2.0).max(0.0))
        + (2.0 * kf + c22k * x) * 2.0 * kf * (1.0 + x).powf(kf - 1.0)
        + kf * sigma_inf(x).powf(kf - 1.0) * (3.0 / (1.0 - x) + x / (1.0 - x).powi(2));
    let tail = b * prime_tail(0, 2.0, l)?;
    Ok(finish_product(log, err, tail, primes.len() as u64))
}

/// Eulerian number: permutations of `t` elements with exactly `m` descents.
pub fn eulerian_number(t: u32, m: u32) -> Result<u128> {
    Ok(eulerian_row(t)?.get(m as usize).copied().unwrap_or(0))
}

/// The row `<t 0>, .., <t t-1>` (the single entry 1 for `t = 0`).
pub fn eulerian_row(t: u32) -> Result<Vec<u128>> {
    let mut row = vec![1u128];
    for n in 2..=t as u128 {
        let mut next = vec![0u128; n as usize];
        for m in 0..n as usize {
            let keep = row
                .get(m)
                .map_or(Some(0), |&v| v.checked_mul(m as u128 + 1));
            let grow = if m == 0 {
                Some(0)
            } else {
                row.get(m - 1)
                    .map_or(Some(0), |&v| v.checked_mul(n - m as u128))
            };
            next[m] = keep
                .zip(grow)
                .and_then(|(a, b)| a.checked_add(b))
                .ok_or(Error::Overflow("Eulerian number"))?;
        }
        row = next;
    }
    Ok(row)
}

/// Coefficients of `psi_{t-1}(q) = sum_m <t m> q^m`, lowest degree first.
pub fn psi_coefficients(t: u32) -> Result<Vec<u128>> {
    if t == 0 {
        return Err(Error::domain("psi needs t >= 1"));
    }
    eulerian_row(t)
}

/// `sum_{m >= 1} m^t q^m = q psi_{t-1}(q) / (1 - q)^(t+1)` evaluated in floating point.
pub fn series_closed_form(t: u32, q: f64) -> Result<f64> {
    if !(q.abs() < 1.0) {
        return Err(Error::domain(format!("series needs |q| < 1, got {q}")));
    }
    let coeffs = psi_coefficients(t)?;
    let psi = coeffs.iter().rev().fold(0.0, |acc, &c| acc * q + c as f64);
    Ok(q * psi / (1.0 - q).powi(t as i32 + 1))
}

/// The same sum at `q = 1/b` as an exact fraction `sum_m <t m> b^(t-m) / (b-1)^(t+1)`.
pub fn series_closed_form_exact(t: u32, b: u64) -> Result<(u128, u128)> {
    if b < 2 {
        return Err(Error::domain("need b >= 2"));
    }
    let coeffs = psi_coefficients(t)?;
    let b = b as u128;
    let mut num = 0u128;
    for (m, &c) in coeffs.iter().enumerate() {
        let term = b
            .checked_pow(t - m as u32)
            .and_then(|p| p.checked_mul(c))
            .ok_or(Error::Overflow("series numerator"))?;
        num = num
            .checked_add(term)
            .ok_or(Error::Overflow("series numerator"))?;
    }
    let den = (b - 1)
        .checked_pow(t + 1)
        .ok_or(Error::Overflow("series denominator"))?;
    Ok((num, den))
}

/// `sum_{m=1}^{terms} m^t q^m` with a geometric bound on the rest of the series.
pub fn series_partial_sum(t: u32, q: f64, terms: u64) -> Result<ConstantResult> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "partial sums need 0 < q < 1, got {q}"
        )));
    }
    let mut acc = KahanSum::new();
    for m in 1..=terms {
        acc.add((m as f64).powi(t as i32) * q.powf(m as f64));
    }
    // Successive term ratios ((m+1)/m)^t q decrease in m.
    let next = (terms + 1) as f64;
    let first = next.powi(t as i32) * q.powf(next);
    let ratio = ((next + 1.0) / next).powi(t as i32) * q;
    let tail = if ratio < 1.0 {
        first / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    let value = acc.value();
    Ok(ConstantResult {
        value,
        tail_bound: tail + rounding(value),
        terms,
    })
}

/// `b_{k,t} = sum_{m<t} <t m> sum_p (ln p)^(t+1) p^-(k(m+1)) / (1 - p^-k)^(t+1)`.
pub fn b_constant(k: u32, t: u32, cfg: &EulerConfig) -> Result<ConstantResult> {
    cfg.validate()?;
    if k < 3 {
        return Err(Error::domain(format!("b_(k,t) needs k >= 3, got {k}")));
    }
    if t == 0 {
        return Err(Error::domain("b_(k,t) needs t >= 1"));
    }
    let row = eulerian_row(t)?;
    let primes = primes_to(cfg.prime_limit)?;
    let kf = k as f64;
    let l = cfg.prime_limit as f64;
    let widen = (1.0 - l.powf(-kf)).powi(-(t as i32 + 1));
    let mut value = KahanSum::new();
    let mut tail = 0.0;
    for (m, &e) in row.iter().enumerate() {
        let ef = e as f64;
        let expo = kf * (m as f64 + 1.0);
        for &p in primes.iter().rev() {
            let pf = p as f64;
            value.add(
                ef * pf.ln().powi(t as i32 + 1) * pf.powf(-expo)
                    / (1.0 - pf.powf(-kf)).powi(t as i32 + 1),
            );
        }
        tail += ef * widen * prime_tail(t + 1, expo, l)?;
    }
    let partial = value.value();
    Ok(ConstantResult {
        value: partial + 0.5 * tail,
        tail_bound: 0.5 * tail + rounding(partial),
        terms: primes.len() as u64,
    })
}
