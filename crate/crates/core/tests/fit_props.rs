use hyperconv::arith::{build_prime_table, FunctionId};
use hyperconv::constants::{wintner_gcd_constant, EulerConfig};
use hyperconv::convolution::ConvoluteKind;
use hyperconv::fit::{
    error_exponent_report, fit_main_term, fit_points, geometric_points, main_term_shape,
    sample_grid, theta, wintner_ratio_report, FitReport,
};
use hyperconv::summation::Method;
use proptest::prelude::*;

fn euler_gamma() -> f64 {
    let n = 1_000_000u64;
    let h: f64 = (1..=n).rev().map(|j| 1.0 / j as f64).sum();
    let nf = n as f64;
    h - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf * nf)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_main_terms_are_recovered(
        a0 in -5.0f64..5.0,
        a1 in 0.1f64..5.0,
        x_min in 10.0f64..1e3,
        span in 100.0f64..1e5,
        count in 6usize..40,
    ) {
        let xs = geometric_points(x_min, x_min * span, count).unwrap();
        prop_assume!(xs.len() >= 4);
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x * (a1 * x.ln() + a0))).collect();
        let fit = fit_points(&pts, 1.0, 1).unwrap();
        prop_assert!(rel(fit.coefficients[1], a1) <= 1e-9, "{:?}", fit.coefficients);
        prop_assert!((fit.coefficients[0] - a0).abs() <= 1e-9 * a0.abs().max(a1));
    }

    #[test]
    fn cubic_log_polynomials_are_recovered(
        c in proptest::collection::vec(0.05f64..3.0, 4),
        scale in prop_oneof![Just(1.0f64), Just(2.0)],
    ) {
        let xs = geometric_points(100.0, 1e7, 24).unwrap();
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| {
                let l = x.ln();
                (x, x.powf(scale) * (c[0] + c[1] * l + c[2] * l * l + c[3] * l * l * l))
            })
            .collect();
        let fit = fit_points(&pts, scale, 3).unwrap();
        for j in 0..4 {
            prop_assert!(rel(fit.coefficients[j], c[j]) <= 1e-7, "{:?} vs {:?}", fit.coefficients, c);
        }
        prop_assert!(fit.warning.is_none());
    }
}

#[test]
fn gcd_fits_approach_the_wintner_constant() {
    let table = build_prime_table(10_000_000).unwrap();
    let cfg = EulerConfig::default();
    for f in [FunctionId::One, FunctionId::Tau] {
        let kind = ConvoluteKind::gcd(f, 2).unwrap();
        let reference = wintner_gcd_constant(f, 2, &cfg).unwrap().value;
        let mut deviations = Vec::new();
        for x_max in [1e5, 1e6, 1e7] {
            let grid = sample_grid(kind, x_max / 1000.0, x_max, 24, Method::Sieve, &table).unwrap();
            let fit = fit_main_term(&grid, 1.0, 1)
                .unwrap()
                .with_reference(reference);
            deviations.push(fit.leading_deviation().unwrap().abs());
        }
        assert!(
            deviations.windows(2).all(|w| w[1] < w[0]),
            "{f}: deviations {deviations:?} are not shrinking"
        );
        assert!(deviations[2] < 0.05, "{f}: {deviations:?}");
    }
}

#[test]
fn divisor_ratio_near_one() {
    let table = build_prime_table(10_000_000).unwrap();
    let kind = ConvoluteKind::gcd(FunctionId::One, 2).unwrap();
    let grid = sample_grid(kind, 1e5, 1e7, 8, Method::Sieve, &table).unwrap();
    let one = wintner_gcd_constant(FunctionId::One, 2, &EulerConfig::default()).unwrap();
    let report = wintner_ratio_report(&grid, 2, &one).unwrap();
    let dev = report.deviation_at(1e7).unwrap();
    assert!(dev.abs() < 0.05, "{dev}");
    assert!(!report.diverging);
}

#[test]
fn divisor_error_exponent_is_at_most_one_half() {
    let table = build_prime_table(1000).unwrap();
    let kind = ConvoluteKind::plain(2).unwrap();
    let grid = sample_grid(kind, 1e4, 1e7, 24, Method::Identity, &table).unwrap();
    let main = FitReport::from_coefficients(1.0, vec![2.0 * euler_gamma() - 1.0, 1.0]);
    let report = error_exponent_report(&grid, &main).unwrap();
    let slope = report.slope.expect("residuals above the rounding floor");
    assert!(slope > 0.0 && slope <= 0.5, "{slope}");
}

#[test]
fn theory_shapes() {
    assert_eq!(theta(2), 0.5);
    assert!((theta(3) - 0.5).abs() < 1e-15);
    assert!((theta(5) - 4.0 / 6.0).abs() < 1e-15);
    let s = main_term_shape(&ConvoluteKind::lcm(FunctionId::Tau, 2).unwrap()).unwrap();
    assert_eq!((s.scale_exponent, s.degree), (1.0, 3));
    let s = main_term_shape(&ConvoluteKind::lcm(FunctionId::IdPow(1.0), 3).unwrap()).unwrap();
    assert_eq!((s.scale_exponent, s.degree), (2.0, 2));
    let s = main_term_shape(&ConvoluteKind::gcd(FunctionId::SmallOmega, 3).unwrap()).unwrap();
    assert_eq!((s.scale_exponent, s.degree), (1.0, 2));
}
