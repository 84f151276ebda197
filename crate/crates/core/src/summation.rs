//! Summatory functions over the hyperbolic region `n1 * ... * nk <= x`.
//!
//! Four engines compute the same sums by different routes: literal
//! enumeration, a multiplicative sieve of the convolute, the Mobius/Piltz
//! identity for gcd forms, and the remainder-coefficient series for lcm forms.
//! All of them read `x` with floor semantics.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::arith::{
    self, binomial, build_prime_table, eval_f, eval_prime_power, mobius_transform_point,
    FunctionId, KahanSum, MemoryCap, PrimeTable, ScalarValue, Structure,
};
use crate::convolution::{
    composition_histogram, lcm_remainder_coeff, ConvoluteKind, Extremum, Form, RemainderMode,
    TupleIndex,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Enumerate,
    Sieve,
    Identity,
    Series,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Enumerate => "enumerate",
            Method::Sieve => "sieve",
            Method::Identity => "identity",
            Method::Series => "series",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "enumerate" => Ok(Method::Enumerate),
            "sieve" => Ok(Method::Sieve),
            "identity" => Ok(Method::Identity),
            "series" => Ok(Method::Series),
            _ => Err(Error::domain(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummatoryResult {
    pub x: f64,
    pub kind: ConvoluteKind,
    pub method: Method,
    pub value: ScalarValue,
    pub terms_used: u64,
    /// Only the series engine sets this; zero when its enumeration was complete.
    pub truncation_bound: Option<f64>,
}

/// Runtime guard for the series engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationConfig {
    /// Largest coordinate value the coefficient enumeration may reach.
    pub coordinate_cap: u64,
    /// Largest acceptable truncation bound; checked by callers that need a guarantee.
    pub tail_tolerance: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            coordinate_cap: u64::MAX,
            tail_tolerance: 1e-9,
        }
    }
}

impl TruncationConfig {
    pub fn new(coordinate_cap: u64, tail_tolerance: f64) -> Result<Self> {
        if coordinate_cap == 0 || !(tail_tolerance > 0.0) {
            return Err(Error::domain(
                "coordinate cap and tail tolerance must be positive",
            ));
        }
        Ok(TruncationConfig {
            coordinate_cap,
            tail_tolerance,
        })
    }
}

/// `floor(x)`, rejecting negative, infinite and NaN inputs.
pub fn floor_x(x: f64) -> Result<u64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(format!(
            "x must be a finite nonnegative real, got {x}"
        )));
    }
    if x >= 1.8e19 {
        return Err(Error::domain(format!(
            "x = {x} exceeds the supported range"
        )));
    }
    Ok(x.floor() as u64)
}

/// Memoized Piltz summatory `T_k(n)`; one cache per top-level computation.
#[derive(Debug, Default)]
pub struct PiltzCache {
    memo: HashMap<(u32, u64), i128>,
}

impl PiltzCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, k: u32, n: u64) -> Result<i128> {
        if k == 0 {
            return Err(Error::domain("Piltz summatory needs k >= 1"));
        }
        if n == 0 {
            return Ok(0);
        }
        match k {
            1 => Ok(n as i128),
            2 => Ok(hyperbola_t2(n)),
            _ => {
                if let Some(&v) = self.memo.get(&(k, n)) {
                    return Ok(v);
                }
                let mut acc: i128 = 0;
                let mut d = 1u64;
                while d <= n {
                    let q = n / d;
                    let hi = n / q;
                    let inner = self.get(k - 1, q)?;
                    acc = inner
                        .checked_mul((hi - d + 1) as i128)
                        .and_then(|t| acc.checked_add(t))
                        .ok_or(Error::Overflow("Piltz summatory"))?;
                    d = hi + 1;
                }
                self.memo.insert((k, n), acc);
                Ok(acc)
            }
        }
    }
}

fn hyperbola_t2(n: u64) -> i128 {
    let s = arith::isqrt(n);
    let mut acc: i128 = 0;
    for d in 1..=s {
        acc += (n / d) as i128;
    }
    2 * acc - (s as i128) * (s as i128)
}

/// `T_k(x) = sum_{n <= x} tau_k(n)`, exact.
pub fn piltz_summatory(k: u32, x: f64) -> Result<ScalarValue> {
    let n = floor_x(x)?;
    Ok(ScalarValue::exact(PiltzCache::new().get(k, n)?))
}

/// `tau_k(n)` for every `n <= limit`, by lifting over the least prime factor.
pub(crate) fn tau_k_table(
    k: u32,
    limit: u64,
    table: &PrimeTable,
    cap: MemoryCap,
) -> Result<Vec<u64>> {
    cap.check("tau_k table", (limit + 1) * 8)?;
    let mut tau = vec![0u64; limit as usize + 1];
    if limit >= 1 {
        tau[1] = 1;
    }
    for n in 2..=limit {
        let (_, a, rest) = table.split_least(n);
        let local = binomial((a + k - 1) as u64, (k - 1) as u64)
            .and_then(|b| u64::try_from(b).ok())
            .ok_or(Error::Overflow("tau_k table"))?;
        tau[n as usize] = local
            .checked_mul(tau[rest as usize])
            .ok_or(Error::Overflow("tau_k table"))?;
    }
    Ok(tau)
}

/// Uses `table` when it reaches `n`, otherwise builds one that does.
fn with_table<T>(
    n: u64,
    table: &PrimeTable,
    run: impl FnOnce(&PrimeTable) -> Result<T>,
) -> Result<T> {
    if table.limit() >= n {
        run(table)
    } else {
        run(&build_prime_table(n.max(2))?)
    }
}

/// Prefix sums `sum_{j <= y} w(j)` for every integer `y <= limit`.
#[derive(Clone, Debug)]
pub enum PrefixValues {
    Exact(Vec<i128>),
    Float(Vec<f64>),
}

impl PrefixValues {
    pub fn limit(&self) -> u64 {
        match self {
            PrefixValues::Exact(v) => v.len() as u64 - 1,
            PrefixValues::Float(v) => v.len() as u64 - 1,
        }
    }

    /// Value at `y`; panics past the table limit.
    pub fn at(&self, y: u64) -> ScalarValue {
        match self {
            PrefixValues::Exact(v) => ScalarValue::exact(v[y as usize]),
            PrefixValues::Float(v) => ScalarValue::approx(v[y as usize]),
        }
    }

    fn from_exact(mut v: Vec<i128>) -> Result<Self> {
        for i in 1..v.len() {
            v[i] = v[i]
                .checked_add(v[i - 1])
                .ok_or(Error::Overflow("prefix sum"))?;
        }
        Ok(PrefixValues::Exact(v))
    }

    fn from_float(mut v: Vec<f64>) -> Self {
        let mut acc = KahanSum::new();
        for slot in v.iter_mut() {
            acc.add(*slot);
            *slot = acc.value();
        }
        PrefixValues::Float(v)
    }
}

/// `W(y) = sum_{j <= y} j^r tau_k(j)` tabulated for `y <= limit`.
#[derive(Clone, Debug)]
pub struct WeightedPiltzTable {
    pub k: u32,
    pub r: f64,
    pub prefix: PrefixValues,
}

impl WeightedPiltzTable {
    pub fn new(k: u32, r: f64, limit: u64, table: &PrimeTable) -> Result<Self> {
        if k == 0 || !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain(format!(
                "weighted Piltz sum needs k >= 1 and r >= 0, got k={k}, r={r}"
            )));
        }
        let cap = MemoryCap::from_env();
        with_table(limit, table, |t| {
            let tau = tau_k_table(k, limit, t, cap)?;
            cap.check("weighted Piltz table", (limit + 1) * 16)?;
            let prefix = if r.fract() == 0.0 && r <= 64.0 {
                let e = r as u32;
                let mut v = vec![0i128; tau.len()];
                for j in 1..tau.len() {
                    v[j] = (j as i128)
                        .checked_pow(e)
                        .and_then(|w| w.checked_mul(tau[j] as i128))
                        .ok_or(Error::Overflow("weighted Piltz table"))?;
                }
                PrefixValues::from_exact(v)?
            } else {
                let v = (0..tau.len())
                    .map(|j| {
                        if j == 0 {
                            0.0
                        } else {
                            (j as f64).powf(r) * tau[j] as f64
                        }
                    })
                    .collect();
                PrefixValues::from_float(v)
            };
            Ok(WeightedPiltzTable { k, r, prefix })
        })
    }

    pub fn at(&self, y: u64) -> ScalarValue {
        self.prefix.at(y)
    }
}

/// `sum_{j <= x} j^r tau_k(j)`; exact for integer `r`.
pub fn weighted_piltz_summatory(k: u32, r: f64, x: f64) -> Result<ScalarValue> {
    let n = floor_x(x)?;
    if r == 0.0 {
        return piltz_summatory(k, x);
    }
    if n == 0 {
        if k == 0 || !(r >= 0.0) {
            return Err(Error::domain("weighted Piltz sum needs k >= 1 and r >= 0"));
        }
        return Ok(ScalarValue::ZERO);
    }
    let table = build_prime_table(n.max(2))?;
    Ok(WeightedPiltzTable::new(k, r, n, &table)?.at(n))
}

/// Values of the one-variable function attached to a kind, at `1..=limit`.
fn kind_function(kind: &ConvoluteKind) -> FunctionId {
    kind.function().unwrap_or(FunctionId::One)
}

/// Exact sum by walking every tuple `n1 * ... * nk <= x`.
pub fn hyper_sum_enumerate(
    kind: ConvoluteKind,
    x: f64,
    table: &PrimeTable,
) -> Result<SummatoryResult> {
    let kind = ConvoluteKind::new(kind.form, kind.k)?;
    let n = floor_x(x)?;
    let f = kind_function(&kind);
    let values: Vec<ScalarValue> = (0..=n)
        .map(|m| {
            if m == 0 {
                Ok(ScalarValue::ZERO)
            } else {
                eval_f(f, m, table)
            }
        })
        .collect::<Result<_>>()?;
    let by = match kind.form {
        Form::LcmOf(_) => Extremum::Max,
        _ => Extremum::Min,
    };

    struct Walk<'a> {
        values: &'a [ScalarValue],
        by: Extremum,
        acc: crate::arith::Accumulator,
        leaves: u64,
    }

    impl Walk<'_> {
        fn combine(&self, running: u64, m: u64) -> u64 {
            match self.by {
                Extremum::Min => arith::gcd(running, m),
                Extremum::Max => running / arith::gcd(running, m) * m,
            }
        }

        fn rec(&mut self, left: u32, bound: u64, running: u64) -> Result<()> {
            if left == 1 {
                for m in 1..=bound {
                    let v = self.values[self.combine(running, m) as usize];
                    self.acc.add(v)?;
                }
                self.leaves += bound;
                return Ok(());
            }
            for m in 1..=bound {
                self.rec(left - 1, bound / m, self.combine(running, m))?;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        values: &values,
        by,
        acc: crate::arith::Accumulator::new(),
        leaves: 0,
    };
    let start = if by == Extremum::Min { 0 } else { 1 };
    if n > 0 {
        walk.rec(kind.k, n, start)?;
    }
    Ok(SummatoryResult {
        x,
        kind,
        method: Method::Enumerate,
        value: walk.acc.finish(),
        terms_used: walk.leaves,
        truncation_bound: None,
    })
}

/// Pointwise combination rule of a sieve: how the value at `p^a * rest`
/// follows from the values at `p^a` and at `rest`.
#[derive(Clone, Copy, PartialEq)]
enum Lifting {
    Multiplicative,
    Additive,
}

trait SieveCell: Copy {
    const ZERO: Self;
    fn from_scalar(v: ScalarValue) -> Result<Self>;
    fn from_count(c: u64) -> Self;
    fn mul(self, o: Self) -> Result<Self>;
    fn add(self, o: Self) -> Result<Self>;
}

impl SieveCell for i128 {
    const ZERO: Self = 0;
    fn from_scalar(v: ScalarValue) -> Result<Self> {
        v.exact_value()
            .ok_or_else(|| Error::domain("exact sieve met an inexact value"))
    }
    fn from_count(c: u64) -> Self {
        c as i128
    }
    fn mul(self, o: Self) -> Result<Self> {
        self.checked_mul(o)
            .ok_or(Error::Overflow("sieve convolute"))
    }
    fn add(self, o: Self) -> Result<Self> {
        self.checked_add(o)
            .ok_or(Error::Overflow("sieve convolute"))
    }
}

impl SieveCell for f64 {
    const ZERO: Self = 0.0;
    fn from_scalar(v: ScalarValue) -> Result<Self> {
        Ok(v.to_f64())
    }
    fn from_count(c: u64) -> Self {
        c as f64
    }
    fn mul(self, o: Self) -> Result<Self> {
        Ok(self * o)
    }
    fn add(self, o: Self) -> Result<Self> {
        Ok(self + o)
    }
}

/// Pointwise convolute values at `0..=limit` (index 0 unused).
fn sieve_values<T: SieveCell>(
    kind: &ConvoluteKind,
    lifting: Lifting,
    limit: u64,
    table: &PrimeTable,
    cap: MemoryCap,
) -> Result<Vec<T>> {
    let k = kind.k;
    let f = kind_function(kind);
    let tau = tau_k_table(k, limit, table, cap)?;
    cap.check(
        "sieve convolute",
        (limit + 1) * std::mem::size_of::<T>() as u64,
    )?;

    let max_a = if limit < 2 {
        0
    } else {
        63 - limit.leading_zeros()
    };
    let by = match kind.form {
        Form::LcmOf(_) => Extremum::Max,
        _ => Extremum::Min,
    };
    let hists: Vec<Vec<u128>> = (0..=max_a)
        .map(|a| composition_histogram(a, k as usize, by))
        .collect();

    let local = |p: u64, a: u32| -> Result<T> {
        if kind.form == Form::PlainTauK {
            return Ok(T::from_count(tau[p.pow(a) as usize]));
        }
        let mut acc = T::ZERO;
        for (m, &count) in hists[a as usize].iter().enumerate() {
            if count == 0 {
                continue;
            }
            let count = u64::try_from(count).map_err(|_| Error::Overflow("composition count"))?;
            let v = T::from_scalar(eval_prime_power(f, p, m as u32)?)?;
            acc = acc.add(v.mul(T::from_count(count))?)?;
        }
        Ok(acc)
    };

    let mut vals = vec![T::ZERO; limit as usize + 1];
    if limit >= 1 {
        vals[1] = match lifting {
            Lifting::Additive => T::ZERO,
            Lifting::Multiplicative => T::from_scalar(eval_prime_power(f, 2, 0)?)?,
        };
    }
    for n in 2..=limit {
        let (p, a, rest) = table.split_least(n);
        let v = if rest == 1 {
            local(p, a)?
        } else {
            let pa = (n / rest) as usize;
            let rest = rest as usize;
            match lifting {
                Lifting::Multiplicative => vals[pa].mul(vals[rest])?,
                Lifting::Additive => vals[pa]
                    .mul(T::from_count(tau[rest]))?
                    .add(T::from_count(tau[pa]).mul(vals[rest])?)?,
            }
        };
        vals[n as usize] = v;
    }
    Ok(vals)
}

/// Prefix sums of the convolute of `kind` up to `limit`, by sieve lifting.
pub fn sieve_prefix_table(
    kind: ConvoluteKind,
    limit: u64,
    table: &PrimeTable,
) -> Result<PrefixValues> {
    let kind = ConvoluteKind::new(kind.form, kind.k)?;
    let lifting = match kind.function() {
        None => Lifting::Multiplicative,
        Some(f) => match f.structure() {
            Structure::Multiplicative => Lifting::Multiplicative,
            Structure::Additive if f != FunctionId::Log => Lifting::Additive,
            _ => {
                return Err(Error::domain(format!(
                    "the sieve engine needs a multiplicative or integer-additive function, got {f}"
                )))
            }
        },
    };
    let cap = MemoryCap::from_env();
    with_table(limit, table, |t| {
        if kind.is_integer_valued() {
            PrefixValues::from_exact(sieve_values::<i128>(&kind, lifting, limit, t, cap)?)
        } else {
            Ok(PrefixValues::from_float(sieve_values::<f64>(
                &kind, lifting, limit, t, cap,
            )?))
        }
    })
}

/// Sum of the convolute over `n <= x`, via the sieve.
pub fn sieve_convolute_prefix(
    kind: ConvoluteKind,
    x: f64,
    table: &PrimeTable,
) -> Result<SummatoryResult> {
    let n = floor_x(x)?;
    let prefix = sieve_prefix_table(kind, n, table)?;
    Ok(SummatoryResult {
        x,
        kind,
        method: Method::Sieve,
        value: prefix.at(n),
        terms_used: n,
        truncation_bound: None,
    })
}

/// `sum_{d^k <= x} (mu*f)(d) T_k(x / d^k)`.
pub fn hyper_sum_gcd_identity(
    f: FunctionId,
    k: u32,
    x: f64,
    table: &PrimeTable,
) -> Result<SummatoryResult> {
    let kind = ConvoluteKind::gcd(f, k)?;
    let n = floor_x(x)?;
    let mut cache = PiltzCache::new();
    let mut acc = crate::arith::Accumulator::new();
    let mut terms = 0u64;
    let top = arith::iroot(n, k);
    for d in 1..=top {
        let coeff = mobius_transform_point(f, d, table)?;
        if coeff.is_zero() {
            continue;
        }
        let t = cache.get(k, n / d.pow(k))?;
        acc.add(coeff.checked_mul(ScalarValue::exact(t))?)?;
        terms += 1;
    }
    Ok(SummatoryResult {
        x,
        kind,
        method: Method::Identity,
        value: acc.finish(),
        terms_used: terms,
        truncation_bound: None,
    })
}

/// Heap entry: coordinate tuple ordered by product, then lexicographically.
type Pending = Reverse<(u64, Vec<u64>)>;

/// Children of `d` in the spanning tree used by the series enumeration; the
/// parent of a tuple decrements its last coordinate above one.
fn children(d: &[u64], product: u64, x: u64) -> impl Iterator<Item = (usize, u64)> + '_ {
    let start = d.iter().rposition(|&v| v > 1).unwrap_or(0);
    (start..d.len()).filter_map(move |i| {
        let p = (product / d[i]).checked_mul(d[i] + 1)?;
        (p <= x).then_some((i, p))
    })
}

/// `sum_{d1...dk <= x} c(d) W(x / d1...dk)` with `c` the remainder coefficient of
/// `mode` and `W` the matching weighted Piltz sum.
pub fn hyper_sum_lcm_series(
    mode: RemainderMode,
    k: u32,
    x: f64,
    cfg: TruncationConfig,
    table: &PrimeTable,
) -> Result<SummatoryResult> {
    let kind = ConvoluteKind::lcm(mode.lcm_function(), k)?;
    if let RemainderMode::ArClass(f) = mode {
        RemainderMode::ar_class(f, mode.r())?;
    }
    let n = floor_x(x)?;
    if n == 0 {
        return Ok(SummatoryResult {
            x,
            kind,
            method: Method::Series,
            value: ScalarValue::ZERO,
            terms_used: 0,
            truncation_bound: Some(0.0),
        });
    }
    let weights = match mode {
        RemainderMode::ArClass(_) => WeightedPiltzTable::new(k, mode.r(), n, table)?,
        RemainderMode::TauMode => WeightedPiltzTable::new(2 * k, 0.0, n, table)?,
    };

    let mut acc = crate::arith::Accumulator::new();
    let mut terms = 0u64;
    let mut skipped: Vec<(Vec<u64>, u64)> = Vec::new();
    let mut heap: BinaryHeap<Pending> = BinaryHeap::new();
    heap.push(Reverse((1, vec![1; k as usize])));
    while let Some(Reverse((product, d))) = heap.pop() {
        let coeff = lcm_remainder_coeff(mode, k, &TupleIndex(d.clone()), table)?;
        if !coeff.is_zero() {
            acc.add(coeff.checked_mul(weights.at(n / product))?)?;
            terms += 1;
        }
        for (i, p) in children(&d, product, n) {
            let mut child = d.clone();
            child[i] += 1;
            if child[i] > cfg.coordinate_cap {
                skipped.push((child, p));
            } else {
                heap.push(Reverse((p, child)));
            }
        }
    }

    // Everything below a skipped tuple is skipped too; bound that mass
    // termwise in absolute value.
    let mut bound = KahanSum::new();
    while let Some((d, product)) = skipped.pop() {
        let coeff = lcm_remainder_coeff(mode, k, &TupleIndex(d.clone()), table)?;
        bound.add(coeff.to_f64().abs() * weights.at(n / product).to_f64().abs());
        for (i, p) in children(&d, product, n) {
            let mut child = d.clone();
            child[i] += 1;
            skipped.push((child, p));
        }
    }
    let bound = bound.value();
    let value = if bound > 0.0 {
        acc.finish().into_approx()
    } else {
        acc.finish()
    };
    Ok(SummatoryResult {
        x,
        kind,
        method: Method::Series,
        value,
        terms_used: terms,
        truncation_bound: Some(bound),
    })
}

/// Dispatches to the engine named by `method`.
pub fn hyper_sum(
    kind: ConvoluteKind,
    method: Method,
    x: f64,
    table: &PrimeTable,
) -> Result<SummatoryResult> {
    match method {
        Method::Enumerate => hyper_sum_enumerate(kind, x, table),
        Method::Sieve => sieve_convolute_prefix(kind, x, table),
        Method::Identity => match kind.form {
            Form::GcdOf(f) => hyper_sum_gcd_identity(f, kind.k, x, table),
            Form::PlainTauK => hyper_sum_gcd_identity(FunctionId::One, kind.k, x, table)
                .map(|r| SummatoryResult { kind, ..r }),
            Form::LcmOf(_) => Err(Error::domain(
                "the identity engine applies to gcd forms only",
            )),
        },
        Method::Series => {
            let mode = RemainderMode::for_kind(&kind)?;
            hyper_sum_lcm_series(mode, kind.k, x, TruncationConfig::default(), table)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::tau_k_point;

    fn table() -> PrimeTable {
        PrimeTable::with_cap(3000, MemoryCap::default()).unwrap()
    }

    fn ex(v: ScalarValue) -> i128 {
        v.exact_value().expect("exact")
    }

    #[test]
    fn piltz_examples() {
        assert_eq!(ex(piltz_summatory(2, 10.0).unwrap()), 27);
        assert_eq!(ex(piltz_summatory(3, 5.0).unwrap()), 16);
        assert_eq!(ex(piltz_summatory(4, 0.5).unwrap()), 0);
        assert_eq!(ex(piltz_summatory(1, 7.9).unwrap()), 7);
        assert!(piltz_summatory(0, 3.0).is_err());
        assert!(piltz_summatory(2, -1.0).is_err());
        assert!(piltz_summatory(2, f64::NAN).is_err());
    }

    #[test]
    fn piltz_matches_prefix_of_tau_k() {
        let t = table();
        for k in 1..=5 {
            let mut cache = PiltzCache::new();
            let mut running = 0i128;
            for n in 1..=3000u64 {
                running += ex(tau_k_point(k, n, &t).unwrap());
                assert_eq!(cache.get(k, n).unwrap(), running, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(ex(weighted_piltz_summatory(2, 1.0, 4.0).unwrap()), 23);
        assert_eq!(ex(weighted_piltz_summatory(2, 0.0, 10.0).unwrap()), 27);
        assert_eq!(ex(weighted_piltz_summatory(4, 1.0, 1.0).unwrap()), 1);
        let half = weighted_piltz_summatory(1, 0.5, 4.0).unwrap();
        assert!((half.to_f64() - (1.0 + 2f64.sqrt() + 3f64.sqrt() + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn enumerate_examples() {
        let t = table();
        let g = ConvoluteKind::gcd(FunctionId::IdPow(1.0), 2).unwrap();
        assert_eq!(ex(hyper_sum_enumerate(g, 6.0, &t).unwrap().value), 15);
        let l = ConvoluteKind::lcm(FunctionId::IdPow(1.0), 2).unwrap();
        assert_eq!(ex(hyper_sum_enumerate(l, 4.0, &t).unwrap().value), 21);
        assert_eq!(ex(hyper_sum_enumerate(l, 0.9, &t).unwrap().value), 0);
        let tl = ConvoluteKind::lcm(FunctionId::Tau, 2).unwrap();
        assert_eq!(ex(hyper_sum_enumerate(tl, 4.0, &t).unwrap().value), 17);
    }

    #[test]
    fn sieve_examples() {
        let t = table();
        let cases = [
            (ConvoluteKind::gcd(FunctionId::Tau, 2).unwrap(), 9),
            (ConvoluteKind::lcm(FunctionId::One, 2).unwrap(), 8),
            (ConvoluteKind::gcd(FunctionId::Mobius, 2).unwrap(), 6),
            (ConvoluteKind::plain(3).unwrap(), 25),
        ];
        let xs = [4.0, 4.0, 4.0, 6.0];
        for ((kind, want), x) in cases.into_iter().zip(xs) {
            assert_eq!(
                ex(sieve_convolute_prefix(kind, x, &t).unwrap().value),
                want,
                "{kind}"
            );
        }
        let log = ConvoluteKind::gcd(FunctionId::Log, 2).unwrap();
        assert!(matches!(
            sieve_convolute_prefix(log, 10.0, &t),
            Err(Error::Domain(_))
        ));
        let lambda = ConvoluteKind::gcd(FunctionId::Lambda, 2).unwrap();
        assert!(matches!(
            sieve_convolute_prefix(lambda, 10.0, &t),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn identity_examples() {
        let t = table();
        assert_eq!(
            ex(hyper_sum_gcd_identity(FunctionId::IdPow(1.0), 2, 6.0, &t)
                .unwrap()
                .value),
            15
        );
        assert_eq!(
            ex(hyper_sum_gcd_identity(FunctionId::SmallOmega, 3, 7.0, &t)
                .unwrap()
                .value),
            0
        );
        assert_eq!(
            ex(hyper_sum_gcd_identity(FunctionId::BigOmega, 2, 4.0, &t)
                .unwrap()
                .value),
            1
        );
    }

    #[test]
    fn series_examples() {
        let t = table();
        let cfg = TruncationConfig::default();
        let id = RemainderMode::ar_class(FunctionId::IdPow(1.0), 1.0).unwrap();
        let r = hyper_sum_lcm_series(id, 2, 4.0, cfg, &t).unwrap();
        assert_eq!(ex(r.value), 21);
        assert_eq!(r.truncation_bound, Some(0.0));
        let r = hyper_sum_lcm_series(RemainderMode::TauMode, 2, 4.0, cfg, &t).unwrap();
        assert_eq!(ex(r.value), 17);
        let r = hyper_sum_lcm_series(RemainderMode::TauMode, 3, 0.5, cfg, &t).unwrap();
        assert_eq!(ex(r.value), 0);
    }

    #[test]
    fn series_truncation_is_bounded() {
        let t = table();
        let exact = hyper_sum_lcm_series(
            RemainderMode::TauMode,
            2,
            500.0,
            TruncationConfig::default(),
            &t,
        )
        .unwrap()
        .value
        .to_f64();
        let cfg = TruncationConfig::new(20, 1e-9).unwrap();
        let r = hyper_sum_lcm_series(RemainderMode::TauMode, 2, 500.0, cfg, &t).unwrap();
        let bound = r.truncation_bound.unwrap();
        assert!(bound > 0.0);
        assert!(!r.value.is_exact());
        assert!((r.value.to_f64() - exact).abs() <= bound);
    }

    #[test]
    fn engines_agree_on_small_x() {
        let t = table();
        for k in 2..=3 {
            for f in [
                FunctionId::One,
                FunctionId::Tau,
                FunctionId::SmallOmega,
                FunctionId::BigOmega,
            ] {
                let kind = ConvoluteKind::gcd(f, k).unwrap();
                for x in [1.0, 2.0, 17.0, 100.0, 333.0] {
                    let a = hyper_sum_enumerate(kind, x, &t).unwrap().value;
                    let b = sieve_convolute_prefix(kind, x, &t).unwrap().value;
                    let c = hyper_sum_gcd_identity(f, k, x, &t).unwrap().value;
                    assert_eq!((a, a), (b, c), "{kind} x={x}");
                }
            }
        }
    }

    #[test]
    fn float_sieve_for_fractional_powers() {
        let t = table();
        let kind = ConvoluteKind::lcm(FunctionId::IdPow(0.5), 2).unwrap();
        let a = hyper_sum_enumerate(kind, 200.0, &t).unwrap().value;
        let b = sieve_convolute_prefix(kind, 200.0, &t).unwrap().value;
        assert!(a.agrees_with(&b, 1e-12), "{a} vs {b}");
    }
}
