use hyperconv::arith::{
    binomial, build_prime_table, eval_f, factorize, mobius_transform_point, tau_k_point,
    FunctionId, PrimeTable, ScalarValue,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn table() -> &'static PrimeTable {
    static T: OnceLock<PrimeTable> = OnceLock::new();
    T.get_or_init(|| build_prime_table(1_000_000).unwrap())
}

fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

proptest! {
    #[test]
    fn factorization_recomposes(n in 1u64..=1_000_000) {
        let f = factorize(n, table()).unwrap();
        prop_assert_eq!(f.recompose(), Some(n));
        prop_assert_eq!(f.parts, trial_division(n));
    }

    #[test]
    fn factorization_beyond_the_table(n in 1_000_001u64..=4_000_000_000_000) {
        let f = factorize(n, table()).unwrap();
        prop_assert_eq!(f.recompose(), Some(n));
        prop_assert!(f.parts.windows(2).all(|w| w[0].0 < w[1].0));
        for &(p, _) in &f.parts {
            prop_assert_eq!(trial_division(p), vec![(p, 1)]);
        }
    }

    #[test]
    fn tau_k_multiplicative(m in 1u64..=10_000, n in 1u64..=10_000, k in 1u32..=6) {
        prop_assume!(hyperconv::arith::gcd(m, n) == 1);
        let t = table();
        let lhs = tau_k_point(k, m * n, t).unwrap();
        let rhs = tau_k_point(k, m, t).unwrap().checked_mul(tau_k_point(k, n, t).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn factorize_recompose_exhaustive() {
    let t = table();
    for n in 1..=1_000_000u64 {
        assert_eq!(factorize(n, t).unwrap().recompose(), Some(n));
    }
}

#[test]
fn mobius_divisor_sum_is_indicator() {
    let t = table();
    for n in 1..=100_000u64 {
        let mut s = 0i128;
        for d in factorize(n, t).unwrap().divisors() {
            s += eval_f(FunctionId::Mobius, d, t)
                .unwrap()
                .exact_value()
                .unwrap();
        }
        assert_eq!(s, (n == 1) as i128, "n = {n}");
    }
}

#[test]
fn mobius_transform_inverts() {
    let t = table();
    let fs = [
        FunctionId::One,
        FunctionId::IdPow(1.0),
        FunctionId::IdPow(2.0),
        FunctionId::IdPow(0.5),
        FunctionId::Log,
        FunctionId::SmallOmega,
        FunctionId::BigOmega,
        FunctionId::Tau,
        FunctionId::TauK(3),
        FunctionId::Mobius,
        FunctionId::Lambda,
        FunctionId::SigmaPow(1.0),
        FunctionId::SigmaPow(0.5),
        FunctionId::PhiPow(1.0),
        FunctionId::PhiPow(1.5),
    ];
    for f in fs {
        for n in 1..=10_000u64 {
            let mut acc = ScalarValue::exact(0);
            for d in factorize(n, t).unwrap().divisors() {
                acc = acc
                    .checked_add(mobius_transform_point(f, d, t).unwrap())
                    .unwrap();
            }
            let direct = eval_f(f, n, t).unwrap();
            if direct.is_exact() {
                assert_eq!(acc, direct, "{f} at {n}");
            } else {
                let scale = direct.to_f64().abs().max(1.0);
                assert!(
                    (acc.to_f64() - direct.to_f64()).abs() <= 1e-9 * scale,
                    "{f} at {n}"
                );
            }
        }
    }
}

#[test]
fn tau_k_on_prime_powers() {
    let t = table();
    for &p in t.primes_up_to(100) {
        for a in 0..=10u32 {
            for k in 1..=6u32 {
                let Some(n) = p.checked_pow(a) else { continue };
                let expected = binomial((a + k - 1) as u64, (k - 1) as u64).unwrap() as i128;
                assert_eq!(
                    tau_k_point(k, n, t).unwrap().exact_value(),
                    Some(expected),
                    "p={p} a={a} k={k}"
                );
            }
        }
    }
}

#[test]
fn tau_k_multiplicative_exhaustive_small() {
    let t = table();
    for m in 1..=300u64 {
        for n in 1..=300u64 {
            if hyperconv::arith::gcd(m, n) != 1 {
                continue;
            }
            for k in [2, 3, 4] {
                let lhs = tau_k_point(k, m * n, t).unwrap();
                let rhs = tau_k_point(k, m, t)
                    .unwrap()
                    .checked_mul(tau_k_point(k, n, t).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }
}
