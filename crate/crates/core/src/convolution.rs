//! k-variable convolution machinery.
//!
//! The convolutes of `f(gcd)` and `f(lcm)` over ordered factorizations, the
//! Mobius/Piltz identity for the gcd convolute, and the remainder
//! coefficients that turn `f(lcm)` and `tau(lcm)` into power-weighted or
//! divisor-weighted coordinate convolutions.

use std::fmt;

use serde::Serialize;

use crate::arith::{
    self, eval_f, eval_factored, eval_prime_power, factorize, mobius_transform_factored,
    tau_k_factored, Accumulator, Factorization, FunctionId, PrimeTable, ScalarValue,
};
use crate::error::{Error, Result};

/// Shape of the k-variable function being summed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Form {
    GcdOf(FunctionId),
    LcmOf(FunctionId),
    /// The constant one function, whose convolute is `tau_k`.
    PlainTauK,
}

/// A k-variable function `F(n1..nk)` together with its arity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvoluteKind {
    pub form: Form,
    pub k: u32,
}

impl ConvoluteKind {
    pub fn new(form: Form, k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!(
                "number of variables k must be >= 2, got {k}"
            )));
        }
        if let Form::GcdOf(f) | Form::LcmOf(f) = form {
            f.validate()?;
        }
        Ok(ConvoluteKind { form, k })
    }

    pub fn gcd(f: FunctionId, k: u32) -> Result<Self> {
        Self::new(Form::GcdOf(f), k)
    }

    pub fn lcm(f: FunctionId, k: u32) -> Result<Self> {
        Self::new(Form::LcmOf(f), k)
    }

    pub fn plain(k: u32) -> Result<Self> {
        Self::new(Form::PlainTauK, k)
    }

    /// The function applied to the gcd/lcm, if any.
    pub fn function(&self) -> Option<FunctionId> {
        match self.form {
            Form::GcdOf(f) | Form::LcmOf(f) => Some(f),
            Form::PlainTauK => None,
        }
    }

    pub fn is_integer_valued(&self) -> bool {
        self.function().is_none_or(|f| f.is_integer_valued())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.function().is_none_or(|f| f.is_nonnegative())
    }
}

impl fmt::Display for ConvoluteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.form {
            Form::GcdOf(g) => write!(f, "{g}(gcd), k={}", self.k),
            Form::LcmOf(g) => write!(f, "{g}(lcm), k={}", self.k),
            Form::PlainTauK => write!(f, "tau_{}", self.k),
        }
    }
}

/// An ordered tuple `(n1, .., nk)` of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TupleIndex(pub Vec<u64>);

impl TupleIndex {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() || entries.contains(&0) {
            return Err(Error::domain("tuple entries must be positive and nonempty"));
        }
        Ok(TupleIndex(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn product(&self) -> Option<u64> {
        self.0.iter().try_fold(1u64, |acc, &v| acc.checked_mul(v))
    }

    pub fn gcd(&self) -> u64 {
        self.0.iter().fold(0, |g, &v| arith::gcd(g, v))
    }

    pub fn lcm(&self) -> Option<u64> {
        self.0
            .iter()
            .try_fold(1u64, |l, &v| (l / arith::gcd(l, v)).checked_mul(v))
    }
}

/// Lexicographic stream of ordered `k`-factorizations of `n`.
#[derive(Clone, Debug)]
pub struct OrderedFactorizations {
    divisors: Vec<u64>,
    // idx[i] indexes the divisor chosen for coordinate i < k-1.
    idx: Vec<usize>,
    // rem[i] is what is left to factor before coordinate i is chosen.
    rem: Vec<u64>,
    started: bool,
    done: bool,
}

/// Every ordered `k`-tuple with product `n`, exactly once, lexicographically.
pub fn ordered_factorizations(n: u64, k: u32, table: &PrimeTable) -> Result<OrderedFactorizations> {
    if n == 0 {
        return Err(Error::domain("cannot factor 0"));
    }
    if k == 0 {
        return Err(Error::domain("need at least one factor"));
    }
    let divisors = factorize(n, table)?.divisors();
    let k = k as usize;
    Ok(OrderedFactorizations {
        divisors,
        idx: vec![0; k - 1],
        rem: vec![n; k],
        started: false,
        done: false,
    })
}

impl OrderedFactorizations {
    fn current(&self) -> TupleIndex {
        let k = self.rem.len();
        let mut out: Vec<u64> = self.idx.iter().map(|&i| self.divisors[i]).collect();
        out.push(self.rem[k - 1]);
        TupleIndex(out)
    }

    fn reset_from(&mut self, level: usize) {
        for i in level..self.idx.len() {
            self.idx[i] = 0;
            self.rem[i + 1] = self.rem[i];
        }
    }
}

impl Iterator for OrderedFactorizations {
    type Item = TupleIndex;

    fn next(&mut self) -> Option<TupleIndex> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.reset_from(0);
            return Some(self.current());
        }
        let mut level = self.idx.len();
        while level > 0 {
            level -= 1;
            let r = self.rem[level];
            let next = (self.idx[level] + 1..self.divisors.len())
                .take_while(|&j| self.divisors[j] <= r)
                .find(|&j| r % self.divisors[j] == 0);
            if let Some(j) = next {
                self.idx[level] = j;
                self.rem[level + 1] = r / self.divisors[j];
                self.reset_from(level + 1);
                return Some(self.current());
            }
        }
        self.done = true;
        None
    }
}

/// Compositions of `a` into `k` ordered nonnegative parts; these are the
/// exponent patterns of the ordered factorizations of a prime power `p^a`.
pub fn compositions(a: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(a, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extremum {
    Min,
    Max,
}

/// `hist[m]` = number of compositions of `a` into `k` parts whose min (or max) is `m`.
pub(crate) fn composition_histogram(a: u32, k: usize, by: Extremum) -> Vec<u128> {
    let mut hist = vec![0u128; a as usize + 1];
    for c in compositions(a, k) {
        let m = match by {
            Extremum::Min => *c.iter().min().unwrap(),
            Extremum::Max => *c.iter().max().unwrap(),
        };
        hist[m as usize] += 1;
    }
    hist
}

/// Visits every ordered k-factorization of `fact.n` through per-prime exponent
/// compositions and tallies the tuples by the exponent vector of their gcd or
/// lcm. Returns `(extremal divisor factorization, tuple count)` pairs.
fn tally_by_extremum(fact: &Factorization, k: usize, by: Extremum) -> Vec<(Factorization, u128)> {
    let w = fact.parts.len();
    let comps: Vec<Vec<u32>> = fact
        .parts
        .iter()
        .map(|&(_, a)| {
            compositions(a, k)
                .into_iter()
                .map(|c| match by {
                    Extremum::Min => *c.iter().min().unwrap(),
                    Extremum::Max => *c.iter().max().unwrap(),
                })
                .collect()
        })
        .collect();
    let mut strides = vec![1usize; w + 1];
    for i in 0..w {
        strides[i + 1] = strides[i] * (fact.parts[i].1 as usize + 1);
    }
    let mut counts = vec![0u128; strides[w]];

    fn rec(level: usize, index: usize, comps: &[Vec<u32>], strides: &[usize], counts: &mut [u128]) {
        if level == comps.len() {
            counts[index] += 1;
            return;
        }
        for &m in &comps[level] {
            rec(
                level + 1,
                index + m as usize * strides[level],
                comps,
                strides,
                counts,
            );
        }
    }
    rec(0, 0, &comps, &strides, &mut counts);

    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(index, &c)| {
            let mut parts = Vec::new();
            let mut n = 1u64;
            for i in 0..w {
                let e = ((index / strides[i]) % (fact.parts[i].1 as usize + 1)) as u32;
                if e > 0 {
                    let p = fact.parts[i].0;
                    parts.push((p, e));
                    n *= p.pow(e);
                }
            }
            (Factorization { n, parts }, c)
        })
        .collect()
}

fn convolute_by(
    f: FunctionId,
    k: u32,
    n: u64,
    table: &PrimeTable,
    by: Extremum,
) -> Result<ScalarValue> {
    if k == 0 || n == 0 {
        return Err(Error::domain("convolutes need k >= 1 and n >= 1"));
    }
    f.validate()?;
    let fact = factorize(n, table)?;
    let mut acc = Accumulator::new();
    for (g, count) in tally_by_extremum(&fact, k as usize, by) {
        let count = i128::try_from(count).map_err(|_| Error::Overflow("tuple count"))?;
        acc.add(eval_factored(f, &g)?.checked_mul_int(count)?)?;
    }
    Ok(acc.finish())
}

/// `G_{f,k}(n)`: sum of `f(gcd)` over the ordered `k`-factorizations of `n`.
pub fn convolute_gcd(f: FunctionId, k: u32, n: u64, table: &PrimeTable) -> Result<ScalarValue> {
    convolute_by(f, k, n, table, Extremum::Min)
}

/// `L_{f,k}(n)`: sum of `f(lcm)` over the ordered `k`-factorizations of `n`.
pub fn convolute_lcm(f: FunctionId, k: u32, n: u64, table: &PrimeTable) -> Result<ScalarValue> {
    convolute_by(f, k, n, table, Extremum::Max)
}

/// `G_{f,k}(n)` through `sum_{d^k delta = n} (mu*f)(d) tau_k(delta)`.
pub fn convolute_gcd_identity(
    f: FunctionId,
    k: u32,
    n: u64,
    table: &PrimeTable,
) -> Result<ScalarValue> {
    if k == 0 || n == 0 {
        return Err(Error::domain("convolutes need k >= 1 and n >= 1"));
    }
    f.validate()?;
    let fact = factorize(n, table)?;
    // d runs over divisors of prod p^(a div k).
    let root = Factorization {
        n: 0,
        parts: fact
            .parts
            .iter()
            .filter(|&&(_, a)| a >= k)
            .map(|&(p, a)| (p, a / k))
            .collect(),
    };
    let mut acc = Accumulator::new();
    let w = root.parts.len();
    let mut exps = vec![0u32; w];
    loop {
        let d_fact = Factorization {
            n: root
                .parts
                .iter()
                .zip(&exps)
                .map(|(&(p, _), &e)| p.pow(e))
                .product(),
            parts: root
                .parts
                .iter()
                .zip(&exps)
                .filter(|(_, &e)| e > 0)
                .map(|(&(p, _), &e)| (p, e))
                .collect(),
        };
        let transform = mobius_transform_factored(f, &d_fact)?;
        if !transform.is_zero() {
            let delta = Factorization {
                n: n / d_fact.n.pow(k),
                parts: fact
                    .parts
                    .iter()
                    .map(|&(p, a)| {
                        let e = root
                            .parts
                            .iter()
                            .zip(&exps)
                            .find(|(q, _)| q.0 == p)
                            .map_or(0, |(_, &e)| e);
                        (p, a - e * k)
                    })
                    .filter(|&(_, a)| a > 0)
                    .collect(),
            };
            acc.add(transform.checked_mul(tau_k_factored(k, &delta)?)?)?;
        }
        // Odometer over the exponent box.
        let mut i = 0;
        while i < w {
            if exps[i] < root.parts[i].1 {
                exps[i] += 1;
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        if i == w {
            break;
        }
    }
    Ok(acc.finish())
}

/// Selects the coefficient array that inverts `f(lcm)` (power-like `f`) or
/// `tau(lcm)` into coordinate-wise convolutions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RemainderMode {
    /// `f` in the power-like class; coordinates carry weight `j^r`.
    ArClass(FunctionId),
    /// `tau(lcm)`; coordinates carry weight `tau(j)`.
    TauMode,
}

impl RemainderMode {
    /// Validates that `f` belongs to the power-like class with exponent `r`.
    pub fn ar_class(f: FunctionId, r: f64) -> Result<Self> {
        f.validate()?;
        match f.ar_class() {
            Some(c) if c.r == r => Ok(RemainderMode::ArClass(f)),
            Some(c) => Err(Error::domain(format!(
                "{f} has class exponent {}, not {r}",
                c.r
            ))),
            None => Err(Error::domain(format!("{f} is not in the power-like class"))),
        }
    }

    /// The mode whose series reproduces `kind`, when there is one.
    pub fn for_kind(kind: &ConvoluteKind) -> Result<Self> {
        match kind.form {
            Form::LcmOf(FunctionId::Tau) => Ok(RemainderMode::TauMode),
            Form::LcmOf(f) => {
                let c = f
                    .ar_class()
                    .ok_or_else(|| Error::domain(format!("no lcm series for {f}")))?;
                RemainderMode::ar_class(f, c.r)
            }
            _ => Err(Error::domain("the series method applies to lcm forms only")),
        }
    }

    /// The function applied to the lcm.
    pub fn lcm_function(&self) -> FunctionId {
        match *self {
            RemainderMode::ArClass(f) => f,
            RemainderMode::TauMode => FunctionId::Tau,
        }
    }

    /// Exponent of the power weight (0 in tau mode).
    pub fn r(&self) -> f64 {
        match *self {
            RemainderMode::ArClass(f) => f.ar_class().map_or(0.0, |c| c.r),
            RemainderMode::TauMode => 0.0,
        }
    }

    /// Per-coordinate weight: `j^r` or `tau(j)`.
    pub fn coordinate_weight(&self, j: u64, table: &PrimeTable) -> Result<ScalarValue> {
        match *self {
            RemainderMode::ArClass(_) => eval_f(FunctionId::IdPow(self.r()), j, table),
            RemainderMode::TauMode => eval_f(FunctionId::Tau, j, table),
        }
    }
}

/// Local value of the remainder coefficient at one prime with exponent vector `a`.
pub(crate) fn remainder_local(mode: RemainderMode, p: u64, a: &[u32]) -> Result<ScalarValue> {
    let k = a.len();
    let top = *a.iter().max().unwrap_or(&0);
    match mode {
        RemainderMode::ArClass(f) => {
            let r = mode.r();
            let fvals: Vec<ScalarValue> = (0..=top)
                .map(|m| eval_prime_power(f, p, m))
                .collect::<Result<_>>()?;
            let pr: Vec<ScalarValue> = (0..=k as u32)
                .map(|e| eval_prime_power(FunctionId::IdPow(r), p, e))
                .collect::<Result<_>>()?;
            let mut acc = Accumulator::new();
            for mask in 0u32..(1 << k) {
                if (0..k).any(|i| mask & (1 << i) != 0 && a[i] == 0) {
                    continue;
                }
                let ones = mask.count_ones();
                let m = (0..k).map(|i| a[i] - ((mask >> i) & 1)).max().unwrap_or(0);
                let term = pr[ones as usize].checked_mul(fvals[m as usize])?;
                acc.add(if ones % 2 == 0 { term } else { term.neg() })?;
            }
            Ok(acc.finish())
        }
        RemainderMode::TauMode => {
            // (mu*mu)(p^e) = 1, -2, 1 for e = 0, 1, 2.
            const C: [i128; 3] = [1, -2, 1];
            let mut acc: i128 = 0;
            let mut e = vec![0u32; k];
            loop {
                let mut coeff = 1i128;
                let mut m = 0;
                for i in 0..k {
                    coeff *= C[e[i] as usize];
                    m = m.max(a[i] - e[i]);
                }
                acc = coeff
                    .checked_mul(m as i128 + 1)
                    .and_then(|t| acc.checked_add(t))
                    .ok_or(Error::Overflow("tau remainder coefficient"))?;
                let mut i = 0;
                while i < k {
                    if e[i] < 2 && e[i] < a[i] {
                        e[i] += 1;
                        break;
                    }
                    e[i] = 0;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
            Ok(ScalarValue::exact(acc))
        }
    }
}

/// Groups the coordinate factorizations of a tuple by prime.
pub(crate) fn exponent_vectors(t: &[u64], table: &PrimeTable) -> Result<Vec<(u64, Vec<u32>)>> {
    let k = t.len();
    let mut out: Vec<(u64, Vec<u32>)> = Vec::new();
    for (i, &n) in t.iter().enumerate() {
        for (p, a) in factorize(n, table)?.parts {
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some((_, v)) => v[i] = a,
                None => {
                    let mut v = vec![0; k];
                    v[i] = a;
                    out.push((p, v));
                }
            }
        }
    }
    Ok(out)
}

fn check_tuple(k: u32, t: &TupleIndex) -> Result<()> {
    if k < 2 || t.len() != k as usize {
        return Err(Error::domain(format!(
            "expected a tuple of k = {k} >= 2 entries, got {}",
            t.len()
        )));
    }
    if t.0.contains(&0) {
        return Err(Error::domain("tuple entries must be positive"));
    }
    Ok(())
}

/// `h_{f,k}(t)` (power-like mode) or `g_k(t)` (tau mode), computed as a
/// product of local values over the primes dividing the coordinates.
pub fn lcm_remainder_coeff(
    mode: RemainderMode,
    k: u32,
    t: &TupleIndex,
    table: &PrimeTable,
) -> Result<ScalarValue> {
    check_tuple(k, t)?;
    if let RemainderMode::ArClass(f) = mode {
        RemainderMode::ar_class(f, mode.r())?;
    }
    let mut acc = ScalarValue::ONE;
    for (p, a) in exponent_vectors(&t.0, table)? {
        acc = acc.checked_mul(remainder_local(mode, p, &a)?)?;
        if acc.is_zero() {
            break;
        }
    }
    Ok(acc)
}

/// The same coefficient by its defining divisor sum: for every choice of
/// `d_i | n_i`, `prod c(d_i) * F(lcm(n_i / d_i))` with `c(d) = mu(d) d^r` or
/// `(mu*mu)(d)`. Exponentially slow; kept as an independent check.
pub fn lcm_remainder_coeff_literal(
    mode: RemainderMode,
    k: u32,
    t: &TupleIndex,
    table: &PrimeTable,
) -> Result<ScalarValue> {
    check_tuple(k, t)?;
    let outer = mode.lcm_function();
    let c =
        |d: u64| -> Result<ScalarValue> {
            let fact = factorize(d, table)?;
            match mode {
                RemainderMode::ArClass(_) => eval_f(FunctionId::Mobius, d, table)?
                    .checked_mul(eval_f(FunctionId::IdPow(mode.r()), d, table)?),
                RemainderMode::TauMode => {
                    let mut v = 1i128;
                    for &(_, e) in &fact.parts {
                        v *= match e {
                            1 => -2,
                            2 => 1,
                            _ => 0,
                        };
                    }
                    Ok(ScalarValue::exact(v))
                }
            }
        };
    let divisor_lists: Vec<Vec<u64>> =
        t.0.iter()
            .map(|&n| factorize(n, table).map(|f| f.divisors()))
            .collect::<Result<_>>()?;
    let mut acc = Accumulator::new();
    let mut pick = vec![0usize; t.len()];
    loop {
        let mut term = ScalarValue::ONE;
        let mut quotient = Vec::with_capacity(t.len());
        for (i, &j) in pick.iter().enumerate() {
            let d = divisor_lists[i][j];
            term = term.checked_mul(c(d)?)?;
            quotient.push(t.0[i] / d);
        }
        if !term.is_zero() {
            let l = TupleIndex(quotient).lcm().ok_or(Error::Overflow("lcm"))?;
            acc.add(term.checked_mul(eval_f(outer, l, table)?)?)?;
        }
        let mut i = 0;
        while i < pick.len() {
            pick[i] += 1;
            if pick[i] < divisor_lists[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == pick.len() {
            break;
        }
    }
    Ok(acc.finish())
}

/// Checks `F(lcm t) = sum_{j_i d_i = n_i} prod w(j_i) * coeff(d)` and returns both sides.
pub fn verify_lcm_reconstruction(
    mode: RemainderMode,
    k: u32,
    t: &TupleIndex,
    table: &PrimeTable,
) -> Result<(ScalarValue, ScalarValue)> {
    check_tuple(k, t)?;
    let l = t.lcm().ok_or(Error::Overflow("lcm"))?;
    let lhs = eval_f(mode.lcm_function(), l, table)?;

    let divisor_lists: Vec<Vec<u64>> =
        t.0.iter()
            .map(|&n| factorize(n, table).map(|f| f.divisors()))
            .collect::<Result<_>>()?;
    let mut acc = Accumulator::new();
    let mut pick = vec![0usize; t.len()];
    loop {
        let d: Vec<u64> = pick
            .iter()
            .enumerate()
            .map(|(i, &j)| divisor_lists[i][j])
            .collect();
        let coeff = lcm_remainder_coeff(mode, k, &TupleIndex(d.clone()), table)?;
        if !coeff.is_zero() {
            let mut term = coeff;
            for (i, &di) in d.iter().enumerate() {
                term = term.checked_mul(mode.coordinate_weight(t.0[i] / di, table)?)?;
            }
            acc.add(term)?;
        }
        let mut i = 0;
        while i < pick.len() {
            pick[i] += 1;
            if pick[i] < divisor_lists[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == pick.len() {
            break;
        }
    }
    Ok((lhs, acc.finish()))
}
