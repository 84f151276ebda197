use crate::error::{Error, Result};

/// Environment variable holding the sieve allocation cap in MiB.
pub const MEM_CAP_ENV: &str = "HYPERCONV_MEM_CAP_MB";

const DEFAULT_MEM_CAP_MB: u64 = 2048;

/// Upper bound on the memory any single sieve table may allocate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryCap {
    pub megabytes: u64,
}

impl Default for MemoryCap {
    fn default() -> Self {
        MemoryCap {
            megabytes: DEFAULT_MEM_CAP_MB,
        }
    }
}

impl MemoryCap {
    pub fn new(megabytes: u64) -> Self {
        MemoryCap { megabytes }
    }

    /// Reads `HYPERCONV_MEM_CAP_MB`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        std::env::var(MEM_CAP_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .map(MemoryCap::new)
            .unwrap_or_default()
    }

    /// Fails with [`Error::Resource`] when `bytes` exceeds the cap.
    pub fn check(&self, what: &'static str, bytes: u64) -> Result<()> {
        let requested_mb = bytes.div_ceil(1 << 20);
        if requested_mb > self.megabytes {
            return Err(Error::Resource {
                what,
                requested_mb,
                cap_mb: self.megabytes,
            });
        }
        Ok(())
    }
}

/// Primes and smallest prime factors up to `limit`, built by a linear sieve.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    spf: Vec<u32>,
}

/// Builds a [`PrimeTable`] under the cap read from the environment.
pub fn build_prime_table(limit: u64) -> Result<PrimeTable> {
    PrimeTable::with_cap(limit, MemoryCap::from_env())
}

impl PrimeTable {
    pub fn with_cap(limit: u64, cap: MemoryCap) -> Result<Self> {
        if limit < 2 {
            return Err(Error::domain(format!(
                "prime table limit must be at least 2, got {limit}"
            )));
        }
        if limit > u32::MAX as u64 {
            return Err(Error::Resource {
                what: "prime table",
                requested_mb: limit.saturating_mul(4) >> 20,
                cap_mb: cap.megabytes,
            });
        }
        let estimated_primes = (limit as f64 / (limit as f64).ln() * 1.3) as u64 + 16;
        cap.check("prime table", (limit + 1) * 4 + estimated_primes * 8)?;

        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u64> = Vec::with_capacity(estimated_primes as usize);
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i] as u64;
            for &p in &primes {
                if p > si {
                    break;
                }
                let m = i as u64 * p;
                if m > limit {
                    break;
                }
                spf[m as usize] = p as u32;
            }
        }
        Ok(PrimeTable { limit, primes, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: u64) -> Option<u64> {
        if (2..=self.limit).contains(&n) {
            Some(self.spf[n as usize] as u64)
        } else {
            None
        }
    }

    pub fn is_prime(&self, n: u64) -> bool {
        match self.spf(n) {
            Some(p) => p == n,
            None => n > self.limit && is_prime_u64(n),
        }
    }

    /// Primes `p <= bound`, ascending.
    pub fn primes_up_to(&self, bound: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= bound);
        &self.primes[..end]
    }

    /// Splits `n` (`2 <= n <= limit`) as `p^a * rest` with `p` its least prime.
    #[inline]
    pub(crate) fn split_least(&self, n: u64) -> (u64, u32, u64) {
        let p = self.spf[n as usize] as u64;
        let mut rest = n / p;
        let mut a = 1;
        while rest % p == 0 {
            rest /= p;
            a += 1;
        }
        (p, a, rest)
    }
}

/// Prime factorization of a positive integer; primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub parts: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn one() -> Self {
        Factorization {
            n: 1,
            parts: Vec::new(),
        }
    }

    /// Product of `p^e` over the parts, or `None` on u64 overflow.
    pub fn recompose(&self) -> Option<u64> {
        self.parts
            .iter()
            .try_fold(1u64, |acc, &(p, e)| acc.checked_mul(p.checked_pow(e)?))
    }

    pub fn is_prime(&self) -> bool {
        self.parts.len() == 1 && self.parts[0].1 == 1
    }

    pub fn is_prime_power(&self) -> bool {
        self.parts.len() == 1
    }

    pub fn is_squarefree(&self) -> bool {
        self.parts.iter().all(|&(_, e)| e == 1)
    }

    /// All divisors, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.parts {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Factorizes `n`, using the sieve when `n <= table.limit()`.
///
/// Larger inputs fall back to trial division by the table primes, a
/// deterministic Miller-Rabin test on the cofactor, and plain odd trial
/// division if the cofactor is composite with every prime above the table.
pub fn factorize(n: u64, table: &PrimeTable) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::domain("cannot factorize 0"));
    }
    let mut parts = Vec::new();
    let mut m = n;
    if m <= table.limit {
        while m > 1 {
            let (p, a, rest) = table.split_least(m);
            parts.push((p, a));
            m = rest;
        }
        return Ok(Factorization { n, parts });
    }

    for &p in &table.primes {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            let mut a = 0;
            while m % p == 0 {
                m /= p;
                a += 1;
            }
            parts.push((p, a));
            if m <= table.limit {
                break;
            }
        }
    }
    if m > 1 && m <= table.limit {
        while m > 1 {
            let (p, a, rest) = table.split_least(m);
            parts.push((p, a));
            m = rest;
        }
    } else if m > 1 {
        let last = *table.primes.last().unwrap_or(&2);
        let exhausted = last.checked_mul(last).is_none_or(|sq| sq >= m);
        if exhausted || is_prime_u64(m) {
            parts.push((m, 1));
        } else {
            let mut d = if last % 2 == 0 { last + 1 } else { last + 2 };
            while d.checked_mul(d).is_some_and(|sq| sq <= m) {
                if m % d == 0 {
                    let mut a = 0;
                    while m % d == 0 {
                        m /= d;
                        a += 1;
                    }
                    parts.push((d, a));
                }
                d += 2;
            }
            if m > 1 {
                parts.push((m, 1));
            }
        }
    }
    Ok(Factorization { n, parts })
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for the full u64 range.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(limit: u64) -> PrimeTable {
        PrimeTable::with_cap(limit, MemoryCap::default()).unwrap()
    }

    #[test]
    fn small_tables() {
        assert_eq!(table(10).primes(), &[2, 3, 5, 7]);
        assert_eq!(table(2).primes(), &[2]);
        assert!(matches!(
            PrimeTable::with_cap(1, MemoryCap::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let err = PrimeTable::with_cap(10_000_000, MemoryCap::new(1)).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn spf_matches_trial_division() {
        let t = table(5000);
        for n in 2..=5000u64 {
            let least = (2..=n).find(|d| n % d == 0).unwrap();
            assert_eq!(t.spf(n), Some(least), "n = {n}");
        }
    }

    #[test]
    fn factorize_examples() {
        let t = table(1000);
        assert_eq!(factorize(1, &t).unwrap().parts, vec![]);
        assert_eq!(factorize(12, &t).unwrap().parts, vec![(2, 2), (3, 1)]);
        let f = factorize(29088, &t).unwrap();
        assert_eq!(f.parts, vec![(2, 5), (3, 2), (101, 1)]);
        assert_eq!(f.recompose(), Some(29088));
        assert!(factorize(0, &t).is_err());
    }

    #[test]
    fn factorize_beyond_table() {
        let t = table(100);
        // 1009 * 1013 has both factors above the table.
        let f = factorize(1009 * 1013, &t).unwrap();
        assert_eq!(f.parts, vec![(1009, 1), (1013, 1)]);
        let f = factorize(2 * 2 * 1_000_003, &t).unwrap();
        assert_eq!(f.parts, vec![(2, 2), (1_000_003, 1)]);
        let f = factorize(97 * 97 * 101, &t).unwrap();
        assert_eq!(f.parts, vec![(97, 2), (101, 1)]);
    }

    #[test]
    fn miller_rabin_matches_sieve() {
        let t = table(20_000);
        for n in 0..=20_000u64 {
            assert_eq!(is_prime_u64(n), n >= 2 && t.spf(n) == Some(n), "n = {n}");
        }
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        assert!(!is_prime_u64(3_215_031_751));
    }

    #[test]
    fn divisors_sorted() {
        let t = table(100);
        assert_eq!(
            factorize(12, &t).unwrap().divisors(),
            vec![1, 2, 3, 4, 6, 12]
        );
    }
}
