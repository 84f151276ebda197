//! Empirical main terms: sample a summatory function on a geometric grid,
//! fit `S(x) / x^s` by a polynomial in `log x`, and compare the leading
//! coefficient, the Wintner ratio and the residual growth against theory.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arith::{FunctionId, PrimeTable, ScalarValue};
use crate::constants::{
    euler_product_c, euler_product_d, gcd_prime_constant, wintner_gcd_constant, ConstantResult,
    EulerConfig,
};
use crate::convolution::{ConvoluteKind, Form};
use crate::error::{Error, Result};
use crate::summation::{floor_x, hyper_sum, sieve_prefix_table, Method};

/// Condition number of the normalized design matrix above which a fit is flagged.
pub const CONDITION_WARNING: f64 = 1e10;

/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleGrid {
    pub kind: ConvoluteKind,
    pub method: Method,
    pub points: Vec<(f64, ScalarValue)>,
}

impl SampleGrid {
    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }
}

/// Geometric integer grid from `x_min` to `x_max` with at most `count` points.
pub fn geometric_points(x_min: f64, x_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(x_min >= 1.0) || !(x_max > x_min) || !x_max.is_finite() {
        return Err(Error::domain(format!(
            "grid needs 1 <= x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if count < 2 {
        return Err(Error::domain("grid needs at least two points"));
    }
    let ratio = (x_max / x_min).ln();
    let mut xs: Vec<f64> = (0..count)
        .map(|i| (x_min * (ratio * i as f64 / (count - 1) as f64).exp()).round())
        .collect();
    xs[count - 1] = x_max.round();
    xs.dedup();
    Ok(xs)
}

/// Evaluates the summatory function of `kind` by `method` at geometric x values.
pub fn sample_grid(
    kind: ConvoluteKind,
    x_min: f64,
    x_max: f64,
    count: usize,
    method: Method,
    table: &PrimeTable,
) -> Result<SampleGrid> {
    let xs = geometric_points(x_min, x_max, count)?;
    let points = if method == Method::Sieve {
        let prefix = sieve_prefix_table(kind, floor_x(x_max)?, table)?;
        xs.iter()
            .map(|&x| Ok((x, prefix.at(floor_x(x)?))))
            .collect::<Result<_>>()?
    } else {
        xs.iter()
            .map(|&x| Ok((x, hyper_sum(kind, method, x, table)?.value)))
            .collect::<Result<_>>()?
    };
    Ok(SampleGrid {
        kind,
        method,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub scale_exponent: f64,
    pub degree: usize,
    /// `c_j` multiplies `(log x)^j`.
    pub coefficients: Vec<f64>,
    pub leading_reference: Option<f64>,
    /// `S(x) - x^s P(log x)` at each grid point.
    pub residuals: Vec<f64>,
    pub error_slope: Option<f64>,
    pub condition_number: f64,
    pub warning: Option<String>,
    /// The fit in the centred basis `u = (log x - center) / spread`, used for evaluation.
    pub center: f64,
    pub spread: f64,
    pub normalized: Vec<f64>,
}

impl FitReport {
    /// A main term given directly by its coefficients in `log x`.
    pub fn from_coefficients(scale_exponent: f64, coefficients: Vec<f64>) -> Self {
        FitReport {
            scale_exponent,
            degree: coefficients.len().saturating_sub(1),
            normalized: coefficients.clone(),
            coefficients,
            leading_reference: None,
            residuals: Vec::new(),
            error_slope: None,
            condition_number: 1.0,
            warning: None,
            center: 0.0,
            spread: 1.0,
        }
    }

    pub fn leading(&self) -> f64 {
        self.coefficients.last().copied().unwrap_or(0.0)
    }

    /// Relative deviation of the leading coefficient from the reference.
    pub fn leading_deviation(&self) -> Option<f64> {
        self.leading_reference.map(|r| (self.leading() - r) / r)
    }

    /// `x^s P(log x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let u = (x.ln() - self.center) / self.spread;
        let p = self
            .normalized
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * u + c);
        x.powf(self.scale_exponent) * p
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.leading_reference = Some(reference);
        self
    }
}

/// Least-squares fit of `S(x) / x^s` by a polynomial of the given degree in `log x`.
pub fn fit_main_term(grid: &SampleGrid, scale_exponent: f64, degree: usize) -> Result<FitReport> {
    fit_points(
        &grid
            .points
            .iter()
            .map(|&(x, s)| (x, s.to_f64()))
            .collect::<Vec<_>>(),
        scale_exponent,
        degree,
    )
}

/// As [`fit_main_term`] on raw `(x, S(x))` pairs.
pub fn fit_points(points: &[(f64, f64)], scale_exponent: f64, degree: usize) -> Result<FitReport> {
    let n = points.len();
    if n < degree + 2 {
        return Err(Error::domain(format!(
            "fit of degree {degree} needs at least {} points, got {n}",
            degree + 2
        )));
    }
    if points.iter().any(|&(x, _)| !(x > 0.0)) {
        return Err(Error::domain("fit needs x > 0"));
    }
    let logs: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let (lo, hi) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| {
            (a.min(l), b.max(l))
        });
    let center = 0.5 * (lo + hi);
    let spread = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };

    let design = DMatrix::from_fn(n, degree + 1, |i, j| {
        ((logs[i] - center) / spread).powi(j as i32)
    });
    let rhs = DVector::from_iterator(n, points.iter().map(|&(x, s)| s / x.powf(scale_exponent)));
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition_number = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let solved = svd
        .solve(&rhs, smax * f64::EPSILON * n as f64)
        .map_err(|e| Error::domain(format!("least squares failed: {e}")))?;
    let normalized: Vec<f64> = solved.iter().copied().collect();

    // Expand sum_j a_j ((L - m)/s)^j in powers of L.
    let mut coefficients = vec![0.0; degree + 1];
    for (j, &a) in normalized.iter().enumerate() {
        let scale = a / spread.powi(j as i32);
        let mut binom = 1.0;
        for i in 0..=j {
            if i > 0 {
                binom = binom * (j - i + 1) as f64 / i as f64;
            }
            coefficients[i] += scale * binom * (-center).powi((j - i) as i32);
        }
    }

    let mut report = FitReport {
        scale_exponent,
        degree,
        coefficients,
        leading_reference: None,
        residuals: Vec::new(),
        error_slope: None,
        condition_number,
        warning: (condition_number > CONDITION_WARNING)
            .then(|| format!("ill-conditioned basis (condition number {condition_number:.3e})")),
        center,
        spread,
        normalized,
    };
    report.residuals = points
        .iter()
        .map(|&(x, s)| s - report.evaluate(x))
        .collect();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WintnerRatioReport {
    pub k: u32,
    pub reference: f64,
    /// `(x, S(x) (k-1)! / (x (log x)^(k-1)))`
    pub ratios: Vec<(f64, f64)>,
    /// Relative deviation of the last ratio from the reference.
    pub final_deviation: f64,
    /// The ratios increase strictly and move away from the reference, as when
    /// the true main term has a higher power of `log x`.
    pub diverging: bool,
}

impl WintnerRatioReport {
    pub fn deviation_at(&self, x: f64) -> Option<f64> {
        self.ratios
            .iter()
            .find(|&&(px, _)| px == x)
            .map(|&(_, r)| (r - self.reference) / self.reference)
    }
}

/// Normalized ratios `S(x) (k-1)! / (x (log x)^(k-1))` along the grid.
pub fn wintner_ratio_report(
    grid: &SampleGrid,
    k: u32,
    reference: &ConstantResult,
) -> Result<WintnerRatioReport> {
    if k == 0 {
        return Err(Error::domain("k must be positive"));
    }
    let fact: f64 = (1..k).map(|j| j as f64).product();
    let ratios: Vec<(f64, f64)> = grid
        .points
        .iter()
        .filter(|&&(x, _)| x > 1.0)
        .map(|&(x, s)| (x, s.to_f64() * fact / (x * x.ln().powi(k as i32 - 1))))
        .collect();
    let Some(&(_, last)) = ratios.last() else {
        return Err(Error::domain("ratio report needs a grid point above 1"));
    };
    let reference = reference.value;
    let dev = |r: f64| (r - reference) / reference;
    let increasing = ratios.windows(2).all(|w| w[1].1 > w[0].1);
    let diverging = ratios.len() >= 2 && increasing && dev(last).abs() > dev(ratios[0].1).abs();
    Ok(WintnerRatioReport {
        k,
        reference,
        final_deviation: dev(last),
        ratios,
        diverging,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorExponentReport {
    pub slope: Option<f64>,
    pub points_used: usize,
    pub points_dropped: usize,
    pub note: Option<String>,
}

/// Least-squares slope of `log |S(x) - main(x)|` against `log x`.
pub fn error_exponent_report(grid: &SampleGrid, fitted: &FitReport) -> Result<ErrorExponentReport> {
    if grid.points.len() < 6 {
        return Err(Error::domain("error exponent needs at least 6 grid points"));
    }
    let mut pts = Vec::new();
    let mut dropped = 0;
    for &(x, s) in &grid.points {
        let s = s.to_f64();
        let r = s - fitted.evaluate(x);
        // Residuals at the rounding floor carry no information about growth.
        if r.abs() <= 64.0 * f64::EPSILON * s.abs().max(1.0) {
            dropped += 1;
        } else {
            pts.push((x.ln(), r.abs().ln()));
        }
    }
    if pts.len() < 3 {
        return Ok(ErrorExponentReport {
            slope: None,
            points_used: pts.len(),
            points_dropped: dropped,
            note: Some("residuals at rounding floor".into()),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(ErrorExponentReport {
        slope: Some(sxy / sxx),
        points_used: pts.len(),
        points_dropped: dropped,
        note: (dropped > 0).then(|| format!("{dropped} residuals at rounding floor dropped")),
    })
}

/// An admissible exponent in the Piltz divisor problem for `tau_index` factors:
/// `1/2` for two factors, `(j-1)/(j+1)` for `j >= 3`.
pub fn theta(tau_index: u32) -> f64 {
    match tau_index {
        0 | 1 => 0.0,
        2 => 0.5,
        j => (j as f64 - 1.0) / (j as f64 + 1.0),
    }
}

/// Shape of the main term of `sum_{n1...nk <= x} F`: `x^scale P(log x)` with
/// `deg P = degree`, and the error exponent theory predicts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainTermShape {
    pub scale_exponent: f64,
    pub degree: usize,
    /// Number of factors of the Piltz problem whose exponent governs the error.
    pub theta_index: u32,
    pub theta: f64,
    /// Smallest admissible theta for this family of sums.
    pub theta_floor: f64,
    /// `scale - 1 + theta`.
    pub error_exponent: f64,
}

pub fn main_term_shape(kind: &ConvoluteKind) -> Result<MainTermShape> {
    let k = kind.k;
    let (scale, degree, index, floor) = match kind.form {
        Form::PlainTauK => (1.0, k - 1, k, 0.0),
        Form::GcdOf(FunctionId::Log | FunctionId::SmallOmega | FunctionId::BigOmega) => {
            (1.0, k - 1, k, 1.0 / k as f64)
        }
        Form::GcdOf(_) => (1.0, k - 1, k, 0.5),
        Form::LcmOf(FunctionId::Tau) => (1.0, 2 * k - 1, 2 * k, 0.5),
        Form::LcmOf(f) => match f.ar_class() {
            Some(c) => (c.r + 1.0, k - 1, k, 0.5),
            None => return Err(Error::domain(format!("no main term known for {f}(lcm)"))),
        },
    };
    let theta = theta(index);
    Ok(MainTermShape {
        scale_exponent: scale,
        degree: degree as usize,
        theta_index: index,
        theta,
        theta_floor: floor,
        error_exponent: scale - 1.0 + theta,
    })
}

/// Leading coefficient of the main-term polynomial predicted by theory.
pub fn leading_reference(kind: &ConvoluteKind, cfg: &EulerConfig) -> Result<ConstantResult> {
    let k = kind.k;
    let fact = |n: u32| (1..=n).map(|j| j as f64).product::<f64>();
    let scaled = |c: ConstantResult, by: f64| ConstantResult {
        value: c.value / by,
        tail_bound: c.tail_bound / by,
        terms: c.terms,
    };
    match kind.form {
        Form::PlainTauK => Ok(ConstantResult {
            value: 1.0 / fact(k - 1),
            tail_bound: 0.0,
            terms: 0,
        }),
        Form::GcdOf(f @ (FunctionId::Log | FunctionId::SmallOmega | FunctionId::BigOmega)) => {
            Ok(scaled(gcd_prime_constant(f, k, cfg)?, fact(k - 1)))
        }
        Form::GcdOf(f) => Ok(scaled(wintner_gcd_constant(f, k, cfg)?, fact(k - 1))),
        Form::LcmOf(FunctionId::Tau) => Ok(scaled(euler_product_d(k, cfg)?, fact(2 * k - 1))),
        Form::LcmOf(f) => {
            let c = f
                .ar_class()
                .ok_or_else(|| Error::domain(format!("no main term known for {f}(lcm)")))?;
            Ok(scaled(
                euler_product_c(f, c.r, k, cfg)?,
                (c.r + 1.0) * fact(k - 1),
            ))
        }
    }
}
