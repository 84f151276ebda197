//! Acceptance suite: one test per criterion, each reporting a PASS/FAIL line
//! with its runtime against the allowed budget.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use hyperconv::arith::{build_prime_table, FunctionId};
use hyperconv::constants::{
    euler_product_c, euler_product_d, eulerian_row, gcd_prime_constant, series_partial_sum,
    wintner_gcd_constant, zeta_value, EulerConfig,
};
use hyperconv::convolution::{
    convolute_gcd, convolute_gcd_identity, verify_lcm_reconstruction, ConvoluteKind, RemainderMode,
    TupleIndex,
};
use hyperconv::fit::{
    error_exponent_report, fit_main_term, sample_grid, wintner_ratio_report, FitReport,
};
use hyperconv::summation::{
    hyper_sum_enumerate, hyper_sum_gcd_identity, hyper_sum_lcm_series, sieve_prefix_table, Method,
    TruncationConfig,
};

/// Runs one criterion, prints its verdict and fails the test on FAIL.
fn criterion(
    id: u32,
    title: &str,
    budget: Duration,
    body: impl FnOnce() -> Result<String, String>,
) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; over the time budget")),
        Err(d) => (false, d),
    };
    let line = format!(
        "{} [{id:>2}] {title}: {detail} ({:.2} s, budget {} s)\n",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    // Written to the raw handle so the verdict shows without --nocapture.
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{line}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const EXACT_FS: [FunctionId; 6] = [
    FunctionId::One,
    FunctionId::IdPow(1.0),
    FunctionId::Tau,
    FunctionId::SmallOmega,
    FunctionId::BigOmega,
    FunctionId::Mobius,
];

fn primes_up_to(n: usize) -> Vec<u64> {
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            for j in (i * i..=n).step_by(i) {
                composite[j] = true;
            }
        }
    }
    out
}

fn euler_gamma() -> f64 {
    let n = 1_000_000u64;
    let h: f64 = (1..=n).rev().map(|j| 1.0 / j as f64).sum();
    let nf = n as f64;
    h - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf * nf)
}

#[test]
fn c01_gcd_engines_agree() {
    criterion(
        1,
        "gcd sums: enumerate = sieve = identity for x <= 2000",
        secs(120),
        || {
            let table = build_prime_table(2000).map_err(|e| e.to_string())?;
            let mut checked = 0;
            for k in [2u32, 3] {
                for f in EXACT_FS {
                    let kind = ConvoluteKind::gcd(f, k).unwrap();
                    let prefix = sieve_prefix_table(kind, 2000, &table).unwrap();
                    for x in 1..=2000u64 {
                        let e = hyper_sum_enumerate(kind, x as f64, &table).unwrap().value;
                        let i = hyper_sum_gcd_identity(f, k, x as f64, &table)
                            .unwrap()
                            .value;
                        let s = prefix.at(x);
                        ensure(e.is_exact() && e == s && e == i, || {
                            format!("{f} k={k} x={x}: enumerate {e:?}, sieve {s:?}, identity {i:?}")
                        })?;
                        checked += 1;
                    }
                }
                let kind = ConvoluteKind::gcd(FunctionId::Log, k).unwrap();
                for x in 1..=2000u64 {
                    let e = hyper_sum_enumerate(kind, x as f64, &table)
                        .unwrap()
                        .value
                        .to_f64();
                    let i = hyper_sum_gcd_identity(FunctionId::Log, k, x as f64, &table)
                        .unwrap()
                        .value
                        .to_f64();
                    ensure(
                        (e - i).abs() <= 1e-9 * e.abs().max(f64::MIN_POSITIVE),
                        || format!("log k={k} x={x}: {e} vs {i}"),
                    )?;
                    checked += 1;
                }
            }
            Ok(format!("{checked} (f, k, x) cases"))
        },
    );
}

#[test]
fn c02_lcm_engines_agree() {
    criterion(
        2,
        "lcm sums: enumerate = sieve = series for x <= 2000",
        secs(300),
        || {
            let table = build_prime_table(2000).map_err(|e| e.to_string())?;
            let mut checked = 0;
            for k in [2u32, 3] {
                for mode in [
                    RemainderMode::TauMode,
                    RemainderMode::ar_class(FunctionId::IdPow(1.0), 1.0).unwrap(),
                ] {
                    let kind = ConvoluteKind::lcm(mode.lcm_function(), k).unwrap();
                    let prefix = sieve_prefix_table(kind, 2000, &table).unwrap();
                    for x in 1..=2000u64 {
                        let e = hyper_sum_enumerate(kind, x as f64, &table).unwrap().value;
                        let s = hyper_sum_lcm_series(
                            mode,
                            k,
                            x as f64,
                            TruncationConfig::default(),
                            &table,
                        )
                        .unwrap();
                        let p = prefix.at(x);
                        ensure(e.is_exact() && e == p && e == s.value, || {
                            format!(
                                "{mode:?} k={k} x={x}: enumerate {e:?}, sieve {p:?}, series {:?}",
                                s.value
                            )
                        })?;
                        checked += 1;
                    }
                }
            }
            Ok(format!("{checked} (mode, k, x) cases"))
        },
    );
}

#[test]
fn c03_pointwise_gcd_identity() {
    criterion(
        3,
        "G_(f,k)(n) by enumeration = by identity for n <= 1e5",
        secs(120),
        || {
            let table = build_prime_table(100_000).map_err(|e| e.to_string())?;
            let mut checked = 0u64;
            for k in [2u32, 3, 4] {
                for f in EXACT_FS {
                    for n in 1..=100_000u64 {
                        let a = convolute_gcd(f, k, n, &table).unwrap();
                        let b = convolute_gcd_identity(f, k, n, &table).unwrap();
                        ensure(a == b, || format!("{f} k={k} n={n}: {a:?} vs {b:?}"))?;
                        checked += 1;
                    }
                }
            }
            Ok(format!("{checked} (f, k, n) cases"))
        },
    );
}

#[test]
fn c04_c2_equals_zeta_ratio() {
    criterion(4, "C_2 = zeta(3)/zeta(2) within 1e-6", secs(1), || {
        let cfg = EulerConfig::default();
        let c2 =
            euler_product_c(FunctionId::IdPow(1.0), 1.0, 2, &cfg).map_err(|e| e.to_string())?;
        let ratio = zeta_value(3.0, &cfg).unwrap().value / zeta_value(2.0, &cfg).unwrap().value;
        let gap = (c2.value - ratio).abs();
        ensure(gap <= 1e-6, || {
            format!("C_2 = {} vs {ratio}, gap {gap:e}", c2.value)
        })?;
        Ok(format!(
            "C_2 = {:.10}, gap {gap:.2e}, certified bound {:.2e}",
            c2.value, c2.tail_bound
        ))
    });
}

#[test]
fn c05_d2_against_product() {
    criterion(
        5,
        "D_2/3! = (1/pi^2) prod (1 - 1/(p+1)^2) within 1e-6",
        secs(1),
        || {
            let d2 = euler_product_d(2, &EulerConfig::default()).map_err(|e| e.to_string())?;
            let log: f64 = primes_up_to(100_000)
                .iter()
                .map(|&p| (-1.0 / ((p + 1) as f64).powi(2)).ln_1p())
                .sum();
            let product = log.exp() / (PI * PI);
            let gap = (d2.value / 6.0 - product).abs();
            ensure(gap <= 1e-6, || {
                format!("D_2/6 = {} vs {product}", d2.value / 6.0)
            })?;
            Ok(format!("D_2/6 = {:.10}, gap {gap:.2e}", d2.value / 6.0))
        },
    );
}

#[test]
fn c06_lcm_tau_leading_coefficient() {
    criterion(
        6,
        "sum tau(lcm), k=2: fitted leading coefficient within 15% of D_2/3!",
        secs(180),
        || {
            let table = build_prime_table(1_000_000).map_err(|e| e.to_string())?;
            let kind = ConvoluteKind::lcm(FunctionId::Tau, 2).unwrap();
            let grid = sample_grid(kind, 1e3, 1e6, 24, Method::Sieve, &table)
                .map_err(|e| e.to_string())?;
            let reference = euler_product_d(2, &EulerConfig::default()).unwrap().value / 6.0;
            let fit = fit_main_term(&grid, 1.0, 3)
                .map_err(|e| e.to_string())?
                .with_reference(reference);
            let dev = fit.leading_deviation().unwrap();
            ensure(dev.abs() <= 0.15, || {
                format!(
                    "leading {} vs {reference}, deviation {dev:+.4}",
                    fit.leading()
                )
            })?;
            Ok(format!(
                "leading {:.6} vs {reference:.6}, deviation {:+.2}%",
                fit.leading(),
                100.0 * dev
            ))
        },
    );
}

#[test]
fn c07_gcd_tau_wintner_limit() {
    criterion(
        7,
        "sum tau(gcd), k=2: fitted leading coefficient within 5% of zeta(2)",
        secs(180),
        || {
            let table = build_prime_table(10_000_000).map_err(|e| e.to_string())?;
            let kind = ConvoluteKind::gcd(FunctionId::Tau, 2).unwrap();
            let grid = sample_grid(kind, 1e4, 1e7, 24, Method::Sieve, &table)
                .map_err(|e| e.to_string())?;
            let reference = wintner_gcd_constant(FunctionId::Tau, 2, &EulerConfig::default())
                .unwrap()
                .value;
            let fit = fit_main_term(&grid, 1.0, 1)
                .map_err(|e| e.to_string())?
                .with_reference(reference);
            let dev = fit.leading_deviation().unwrap();
            ensure(dev.abs() <= 0.05, || {
                format!("leading {} vs {reference}", fit.leading())
            })?;
            Ok(format!(
                "leading {:.6} vs {reference:.6}, deviation {:+.2}%",
                fit.leading(),
                100.0 * dev
            ))
        },
    );
}

#[test]
fn c08_gcd_omega_leading_coefficient() {
    criterion(
        8,
        "sum omega(gcd), k=3: leading within 25% of K/2, ratio deviation shrinking",
        secs(300),
        || {
            let table = build_prime_table(100_000).map_err(|e| e.to_string())?;
            let kind = ConvoluteKind::gcd(FunctionId::SmallOmega, 3).unwrap();
            let k_omega =
                gcd_prime_constant(FunctionId::SmallOmega, 3, &EulerConfig::default()).unwrap();
            let grid = sample_grid(kind, 1e3, 1e7, 24, Method::Identity, &table)
                .map_err(|e| e.to_string())?;
            let reference = k_omega.value / 2.0;
            let fit = fit_main_term(&grid, 1.0, 2)
                .map_err(|e| e.to_string())?
                .with_reference(reference);
            let dev = fit.leading_deviation().unwrap();
            ensure(dev.abs() <= 0.25, || {
                format!("leading {} vs {reference}", fit.leading())
            })?;

            let checkpoints = sample_grid(kind, 1e5, 1e7, 3, Method::Identity, &table)
                .map_err(|e| e.to_string())?;
            let ratios =
                wintner_ratio_report(&checkpoints, 3, &k_omega).map_err(|e| e.to_string())?;
            let devs: Vec<f64> = [1e5, 1e6, 1e7]
                .iter()
                .map(|&x| ratios.deviation_at(x).ok_or(format!("no ratio at {x}")))
                .collect::<Result<_, _>>()?;
            ensure(devs.windows(2).all(|w| w[1].abs() < w[0].abs()), || {
                format!("ratio deviations {devs:?} not shrinking")
            })?;
            Ok(format!(
                "leading {:.6} vs {reference:.6} ({:+.2}%), ratio deviations {:+.3} {:+.3} {:+.3}",
                fit.leading(),
                100.0 * dev,
                devs[0],
                devs[1],
                devs[2]
            ))
        },
    );
}

#[test]
fn c09_eulerian_machinery() {
    criterion(
        9,
        "Eulerian row sums and sum m^3/2^m -> 26",
        secs(1),
        || {
            let mut fact = 1u128;
            for t in 1..=10u32 {
                fact *= t as u128;
                let sum: u128 = eulerian_row(t).map_err(|e| e.to_string())?.iter().sum();
                ensure(sum == fact, || format!("row {t} sums to {sum}, not {fact}"))?;
            }
            let mut last_gap = f64::INFINITY;
            for terms in [10u64, 20, 40, 80, 160] {
                let partial = series_partial_sum(3, 0.5, terms).map_err(|e| e.to_string())?;
                let gap = (partial.value - 26.0).abs();
                ensure(gap <= partial.tail_bound, || {
                    format!(
                        "{terms} terms: gap {gap:e} exceeds tail bound {:e}",
                        partial.tail_bound
                    )
                })?;
                ensure(gap <= last_gap, || format!("{terms} terms: gap grew"))?;
                last_gap = gap;
            }
            Ok(format!("rows t <= 10; 160-term gap {last_gap:.1e}"))
        },
    );
}

#[test]
fn c10_reconstruction_identities() {
    criterion(
        10,
        "lcm reconstruction exact on tuples with entries <= 60, k = 2, 3",
        secs(120),
        || {
            let table = build_prime_table(1000).map_err(|e| e.to_string())?;
            let modes = [
                RemainderMode::ar_class(FunctionId::IdPow(1.0), 1.0).unwrap(),
                RemainderMode::ar_class(FunctionId::IdPow(0.0), 0.0).unwrap(),
                RemainderMode::TauMode,
            ];
            let mut checked = 0u64;
            for mode in modes {
                for a in 1..=60u64 {
                    for b in 1..=60u64 {
                        let (l, r) =
                            verify_lcm_reconstruction(mode, 2, &TupleIndex(vec![a, b]), &table)
                                .unwrap();
                        ensure(l == r, || format!("{mode:?} ({a},{b}): {l:?} vs {r:?}"))?;
                        checked += 1;
                        for c in 1..=60u64 {
                            let (l, r) = verify_lcm_reconstruction(
                                mode,
                                3,
                                &TupleIndex(vec![a, b, c]),
                                &table,
                            )
                            .unwrap();
                            ensure(l == r, || format!("{mode:?} ({a},{b},{c}): {l:?} vs {r:?}"))?;
                            checked += 1;
                        }
                    }
                }
            }
            Ok(format!("{checked} tuples over 3 modes"))
        },
    );
}

#[test]
fn c11_divisor_error_exponent() {
    criterion(
        11,
        "divisor problem residual slope on [1e4, 1e7] is at most 1/2",
        secs(120),
        || {
            let table = build_prime_table(1000).map_err(|e| e.to_string())?;
            let kind = ConvoluteKind::plain(2).unwrap();
            let grid = sample_grid(kind, 1e4, 1e7, 24, Method::Identity, &table)
                .map_err(|e| e.to_string())?;
            // main term x (log x + 2 gamma - 1)
            let main = FitReport::from_coefficients(1.0, vec![2.0 * euler_gamma() - 1.0, 1.0]);
            let report = error_exponent_report(&grid, &main).map_err(|e| e.to_string())?;
            let slope = report
                .slope
                .ok_or_else(|| report.note.clone().unwrap_or_default())?;
            ensure(slope <= 0.5, || format!("slope {slope:.4}"))?;
            Ok(format!(
                "slope {slope:.4} over {} points",
                report.points_used
            ))
        },
    );
}
