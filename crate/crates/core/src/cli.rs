//! Command-line front end: parses flags, runs one engine and renders the
//! result as JSON or CSV.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Number, Value};

use crate::arith::{build_prime_table, eval_f, factorize, FunctionId, PrimeTable, ScalarValue};
use crate::constants::{
    b_constant, euler_product_c, euler_product_d, eulerian_row, gcd_prime_constant,
    series_closed_form_exact, series_partial_sum, wintner_gcd_constant, zeta_value, ConstantResult,
    EulerConfig,
};
use crate::convolution::{
    convolute_gcd, convolute_gcd_identity, convolute_lcm, lcm_remainder_coeff,
    verify_lcm_reconstruction, ConvoluteKind, Form, RemainderMode, TupleIndex,
};
use crate::error::{Error, Result};
use crate::fit::{
    error_exponent_report, fit_main_term, leading_reference, main_term_shape, sample_grid,
    wintner_ratio_report, DEFAULT_POINTS,
};
use crate::summation::{
    floor_x, hyper_sum, hyper_sum_enumerate, hyper_sum_gcd_identity, hyper_sum_lcm_series,
    sieve_prefix_table, Method, TruncationConfig,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_RESOURCE: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "hyperconv",
    version,
    about = "Hyperbolic sums of functions of gcd and lcm"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prime factorization of --n.
    Factor(Flags),
    /// Value of --f at --n.
    Eval(Flags),
    /// Convolute G_{f,k}(n) or L_{f,k}(n); with --tuple, a remainder coefficient.
    Convolute(Flags),
    /// Sum over n1...nk <= x.
    Sum(Flags),
    /// A constant of the main terms (--name).
    Constant(Flags),
    /// Fit the main term on a geometric grid.
    Fit(Flags),
    /// Run a verification suite (--suite).
    Verify(Flags),
    /// Summatory values at every integer x in [--x-min, --x-max].
    Table(Flags),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctionName {
    One,
    Id,
    Log,
    Omega,
    Bigomega,
    Tau,
    Tauk,
    Mobius,
    Lambda,
    Sigma,
    Phi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormName {
    Gcd,
    Lcm,
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Enumerate,
    Sieve,
    Identity,
    Series,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstantName {
    /// Prime sums for log, omega, Omega.
    K,
    /// (1/zeta(k)) sum f(n)/n^k.
    Wintner,
    C,
    D,
    B,
    Zeta,
    /// Row t of the Eulerian triangle.
    Eulerian,
    /// sum m^t q^m at q = 1/2 (or 1/s) against its closed form.
    Series,
    /// The predicted leading coefficient of the main term for --form/--f/--k.
    Leading,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    CrossMethod,
    Identity,
    Reconstruction,
    Constants,
    Eulerian,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, value_enum)]
    pub f: Option<FunctionName>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_enum)]
    pub form: Option<FormName>,
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub prime_limit: Option<u64>,
    #[arg(long)]
    pub exp_cap: Option<u32>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, ignore_case = true)]
    pub name: Option<ConstantName>,
    /// Second index of b_{k,t}, Eulerian rows and series exponents.
    #[arg(long)]
    pub t: Option<u32>,
    /// Argument of zeta, or the base b of q = 1/b for series.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Comma-separated coordinates for remainder coefficients.
    #[arg(long)]
    pub tuple: Option<String>,
    /// Override the theory degree in `fit`.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Coordinate cap of the series engine.
    #[arg(long)]
    pub coord_cap: Option<u64>,
    /// Report wall-clock time in meta.elapsed_ms (otherwise null, keeping output reproducible).
    #[arg(long)]
    pub timing: bool,
}

/// Errors of the front end, each mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Engine(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Engine(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Engine(Error::Verification(_)) => EXIT_VERIFICATION,
            CliError::Engine(Error::Resource { .. }) | CliError::Io(_) => EXIT_RESOURCE,
            CliError::Engine(_) => EXIT_DOMAIN,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn need<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

/// Floats rounded to 12 significant digits, then printed in shortest form.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let a = rounded.abs();
    if (1e-6..1e16).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn float_value(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(
            format_float(v)
                .parse::<Number>()
                .expect("finite float renders as a JSON number"),
        )
    } else {
        Value::Null
    }
}

fn scalar_value(v: &ScalarValue) -> Value {
    match v.exact_value() {
        Some(e) => Value::Number(
            e.to_string()
                .parse::<Number>()
                .expect("integer renders as a JSON number"),
        ),
        None => float_value(v.to_f64()),
    }
}

fn scalar_text(v: &ScalarValue) -> String {
    match v.exact_value() {
        Some(e) => e.to_string(),
        None => format_float(v.to_f64()),
    }
}

/// One output row: `x,value,method,exact` in CSV.
struct Row {
    x: String,
    value: Value,
    text: String,
    exact: bool,
    tail_bound: Option<f64>,
}

impl Row {
    fn scalar(x: String, v: &ScalarValue, tail_bound: Option<f64>) -> Row {
        Row {
            x,
            value: scalar_value(v),
            text: scalar_text(v),
            exact: v.is_exact(),
            tail_bound,
        }
    }

    fn constant(x: String, c: &ConstantResult) -> Row {
        Row {
            x,
            value: float_value(c.value),
            text: format_float(c.value),
            exact: false,
            tail_bound: Some(c.tail_bound),
        }
    }

    fn text(x: String, text: String, exact: bool) -> Row {
        Row {
            x,
            value: Value::String(text.clone()),
            text,
            exact,
            tail_bound: None,
        }
    }
}

struct Output {
    query: Map<String, Value>,
    rows: Vec<Row>,
    method: String,
    terms: Option<u64>,
    report: Option<Value>,
    /// A failed check: the output is still written, then the status is nonzero.
    failure: Option<String>,
}

impl Output {
    fn new(query: Map<String, Value>, method: impl Into<String>) -> Self {
        Output {
            query,
            rows: Vec::new(),
            method: method.into(),
            terms: None,
            report: None,
            failure: None,
        }
    }

    fn render(&self, format: Format, elapsed_ms: Option<f64>) -> String {
        match format {
            Format::Csv => {
                let mut s = String::from("x,value,method,exact\n");
                for r in &self.rows {
                    s.push_str(&format!("{},{},{},{}\n", r.x, r.text, self.method, r.exact));
                }
                s
            }
            Format::Json => {
                let row_json = |r: &Row| {
                    json!({
                        "value": r.value,
                        "exact": r.exact,
                        "tail_bound": r.tail_bound.map_or(Value::Null, float_value),
                    })
                };
                let mut top = Map::new();
                top.insert("query".into(), Value::Object(self.query.clone()));
                top.insert(
                    "result".into(),
                    self.rows.last().map_or(Value::Null, row_json),
                );
                top.insert(
                    "meta".into(),
                    json!({
                        "method": self.method,
                        "terms": self.terms,
                        "elapsed_ms": elapsed_ms.map_or(Value::Null, float_value),
                    }),
                );
                if self.rows.len() > 1 {
                    let rows: Vec<Value> = self
                        .rows
                        .iter()
                        .map(|r| {
                            let mut v = row_json(r);
                            v["x"] = Value::String(r.x.clone());
                            v
                        })
                        .collect();
                    top.insert("rows".into(), Value::Array(rows));
                }
                if let Some(rep) = &self.report {
                    top.insert("report".into(), rep.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json");
                s.push('\n');
                s
            }
        }
    }
}

fn function_id(flags: &Flags) -> CliResult<FunctionId> {
    let name = need(flags.f, "f")?;
    let r = flags.r.unwrap_or(1.0);
    let f = match name {
        FunctionName::One => FunctionId::One,
        FunctionName::Id => FunctionId::IdPow(r),
        FunctionName::Log => FunctionId::Log,
        FunctionName::Omega => FunctionId::SmallOmega,
        FunctionName::Bigomega => FunctionId::BigOmega,
        FunctionName::Tau => FunctionId::Tau,
        FunctionName::Tauk => FunctionId::TauK(need(flags.t, "t")?),
        FunctionName::Mobius => FunctionId::Mobius,
        FunctionName::Lambda => FunctionId::Lambda,
        FunctionName::Sigma => FunctionId::SigmaPow(r),
        FunctionName::Phi => FunctionId::PhiPow(r),
    };
    Ok(f)
}

fn kind(flags: &Flags) -> CliResult<ConvoluteKind> {
    let k = need(flags.k, "k")?;
    Ok(match flags.form.unwrap_or(FormName::Gcd) {
        FormName::Gcd => ConvoluteKind::gcd(function_id(flags)?, k)?,
        FormName::Lcm => ConvoluteKind::lcm(function_id(flags)?, k)?,
        FormName::Plain => ConvoluteKind::plain(k)?,
    })
}

fn method(flags: &Flags, default: Method) -> Method {
    match flags.method {
        None => default,
        Some(MethodName::Enumerate) => Method::Enumerate,
        Some(MethodName::Sieve) => Method::Sieve,
        Some(MethodName::Identity) => Method::Identity,
        Some(MethodName::Series) => Method::Series,
    }
}

fn euler_config(flags: &Flags) -> CliResult<EulerConfig> {
    let d = EulerConfig::default();
    Ok(EulerConfig::new(
        flags.prime_limit.unwrap_or(d.prime_limit),
        flags.exp_cap.unwrap_or(d.exponent_cap),
        flags.tol.unwrap_or(d.tail_tolerance),
    )?)
}

fn query(flags: &Flags, command: &str) -> Map<String, Value> {
    let mut q = Map::new();
    q.insert("command".into(), Value::String(command.into()));
    let mut put = |key: &str, v: Value| {
        q.insert(key.into(), v);
    };
    if let Some(v) = flags.form {
        put("form", json!(format!("{v:?}").to_lowercase()));
    }
    if let Some(v) = flags.f {
        put("f", json!(format!("{v:?}").to_lowercase()));
    }
    if let Some(v) = flags.r {
        put("r", float_value(v));
    }
    if let Some(v) = flags.k {
        put("k", json!(v));
    }
    if let Some(v) = flags.t {
        put("t", json!(v));
    }
    if let Some(v) = flags.s {
        put("s", float_value(v));
    }
    if let Some(v) = flags.n {
        put("n", json!(v));
    }
    if let Some(v) = flags.x {
        put("x", float_value(v));
    }
    if let Some(v) = flags.x_min {
        put("x_min", float_value(v));
    }
    if let Some(v) = flags.x_max {
        put("x_max", float_value(v));
    }
    if let Some(v) = flags.points {
        put("points", json!(v));
    }
    if let Some(v) = flags.method {
        put("method", json!(format!("{v:?}").to_lowercase()));
    }
    if let Some(v) = flags.name {
        put("name", json!(format!("{v:?}")));
    }
    if let Some(v) = &flags.tuple {
        put("tuple", json!(v));
    }
    if let Some(v) = flags.suite {
        put("suite", json!(format!("{v:?}").to_lowercase()));
    }
    if let Some(v) = flags.prime_limit {
        put("prime_limit", json!(v));
    }
    if let Some(v) = flags.exp_cap {
        put("exp_cap", json!(v));
    }
    if let Some(v) = flags.tol {
        put("tol", float_value(v));
    }
    q
}

fn table_for(limit: u64) -> Result<PrimeTable> {
    build_prime_table(limit.clamp(1000, 10_000_000))
}

fn cmd_factor(flags: &Flags) -> CliResult<Output> {
    let n = need(flags.n, "n")?;
    let table = table_for(n.min(1_000_000))?;
    let fact = factorize(n, &table)?;
    let text = if fact.parts.is_empty() {
        "1".to_string()
    } else {
        fact.parts
            .iter()
            .map(|&(p, e)| {
                if e == 1 {
                    p.to_string()
                } else {
                    format!("{p}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join(" * ")
    };
    let mut out = Output::new(query(flags, "factor"), "factor");
    out.terms = Some(fact.parts.len() as u64);
    out.report = Some(json!({
        "factors": fact.parts.iter().map(|&(p, e)| json!([p, e])).collect::<Vec<_>>(),
    }));
    out.rows.push(Row::text(n.to_string(), text, true));
    Ok(out)
}

fn cmd_eval(flags: &Flags) -> CliResult<Output> {
    let n = need(flags.n, "n")?;
    let f = function_id(flags)?;
    let table = table_for(n.min(1_000_000))?;
    let v = eval_f(f, n, &table)?;
    let mut out = Output::new(query(flags, "eval"), "eval");
    out.terms = Some(1);
    out.rows.push(Row::scalar(n.to_string(), &v, None));
    Ok(out)
}

fn parse_tuple(s: &str) -> CliResult<TupleIndex> {
    let entries = s
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| {
            CliError::Usage(format!(
                "--tuple must be comma-separated positive integers: {e}"
            ))
        })?;
    Ok(TupleIndex::new(entries)?)
}

fn remainder_mode(flags: &Flags) -> CliResult<RemainderMode> {
    let f = function_id(flags)?;
    Ok(if f == FunctionId::Tau {
        RemainderMode::TauMode
    } else {
        let r = f
            .ar_class()
            .map(|c| c.r)
            .ok_or_else(|| Error::domain(format!("{f} has no lcm remainder coefficients")))?;
        RemainderMode::ar_class(f, r)?
    })
}

fn cmd_convolute(flags: &Flags) -> CliResult<Output> {
    let k = need(flags.k, "k")?;
    let mut out = Output::new(query(flags, "convolute"), "");
    if let Some(t) = &flags.tuple {
        let t = parse_tuple(t)?;
        let mode = remainder_mode(flags)?;
        let table = table_for(t.entries().iter().copied().max().unwrap_or(1))?;
        let v = lcm_remainder_coeff(mode, k, &t, &table)?;
        let (lhs, rhs) = verify_lcm_reconstruction(mode, k, &t, &table)?;
        out.method = "remainder".into();
        out.terms = Some(1);
        out.report = Some(json!({
            "reconstruction": { "lhs": scalar_value(&lhs), "rhs": scalar_value(&rhs), "agree": lhs.agrees_with(&rhs, 1e-9) },
        }));
        out.rows.push(Row::scalar(
            t.entries()
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(" "),
            &v,
            None,
        ));
        return Ok(out);
    }
    let n = need(flags.n, "n")?;
    let kind = kind(flags)?;
    let table = table_for(n.min(1_000_000))?;
    let f = kind.function().unwrap_or(FunctionId::One);
    let m = method(flags, Method::Enumerate);
    let v = match (kind.form, m) {
        (Form::GcdOf(_) | Form::PlainTauK, Method::Enumerate) => convolute_gcd(f, k, n, &table)?,
        (Form::GcdOf(_) | Form::PlainTauK, Method::Identity) => {
            convolute_gcd_identity(f, k, n, &table)?
        }
        (Form::LcmOf(_), Method::Enumerate) => convolute_lcm(f, k, n, &table)?,
        _ => {
            return Err(CliError::Usage(
                "convolute supports --method enumerate, or identity for gcd".into(),
            ))
        }
    };
    out.method = m.name().into();
    out.rows.push(Row::scalar(n.to_string(), &v, None));
    Ok(out)
}

fn cmd_sum(flags: &Flags) -> CliResult<Output> {
    let x = need(flags.x, "x")?;
    let kind = kind(flags)?;
    let m = method(flags, Method::Sieve);
    let table = table_for(floor_x(x)?)?;
    let tol = flags
        .tol
        .unwrap_or(TruncationConfig::default().tail_tolerance);
    let result = match (m, flags.coord_cap) {
        (Method::Series, Some(cap)) => {
            let mode = RemainderMode::for_kind(&kind)?;
            hyper_sum_lcm_series(mode, kind.k, x, TruncationConfig::new(cap, tol)?, &table)?
        }
        _ => hyper_sum(kind, m, x, &table)?,
    };
    let mut out = Output::new(query(flags, "sum"), m.name());
    out.terms = Some(result.terms_used);
    if let Some(b) = result.truncation_bound {
        if b > tol {
            out.failure = Some(format!("truncation bound {b:e} exceeds tolerance {tol:e}"));
        }
    }
    out.rows.push(Row::scalar(
        format_float(x),
        &result.value,
        result.truncation_bound,
    ));
    Ok(out)
}

fn cmd_constant(flags: &Flags) -> CliResult<Output> {
    let name = need(flags.name, "name")?;
    let cfg = euler_config(flags)?;
    let mut out = Output::new(query(flags, "constant"), format!("constant:{name:?}"));
    let c = match name {
        ConstantName::K => gcd_prime_constant(function_id(flags)?, need(flags.k, "k")?, &cfg)?,
        ConstantName::Wintner => {
            wintner_gcd_constant(function_id(flags)?, need(flags.k, "k")?, &cfg)?
        }
        ConstantName::C => euler_product_c(
            function_id(flags)?,
            flags.r.unwrap_or(1.0),
            need(flags.k, "k")?,
            &cfg,
        )?,
        ConstantName::D => euler_product_d(need(flags.k, "k")?, &cfg)?,
        ConstantName::B => b_constant(need(flags.k, "k")?, need(flags.t, "t")?, &cfg)?,
        ConstantName::Zeta => zeta_value(need(flags.s, "s")?, &cfg)?,
        ConstantName::Leading => leading_reference(&kind(flags)?, &cfg)?,
        ConstantName::Eulerian => {
            let t = need(flags.t, "t")?;
            let row = eulerian_row(t)?;
            for (m, v) in row.iter().enumerate() {
                let v = i128::try_from(*v).map_err(|_| Error::Overflow("Eulerian number"))?;
                out.rows
                    .push(Row::scalar(m.to_string(), &ScalarValue::exact(v), None));
            }
            out.terms = Some(row.len() as u64);
            return Ok(out);
        }
        ConstantName::Series => {
            let t = need(flags.t, "t")?;
            let b = flags.s.unwrap_or(2.0);
            if b.fract() != 0.0 || b < 2.0 {
                return Err(
                    Error::domain("--s must be an integer base >= 2 for the series").into(),
                );
            }
            let (num, den) = series_closed_form_exact(t, b as u64)?;
            let partial = series_partial_sum(t, 1.0 / b, 200)?;
            let closed = num as f64 / den as f64;
            out.report = Some(json!({
                "closed_form": format!("{num}/{den}"),
                "closed_form_value": float_value(closed),
            }));
            if !partial.contains(closed, 1e-12 * closed) {
                out.failure = Some("partial sums do not approach the closed form".into());
            }
            partial
        }
    };
    if c.tail_bound > cfg.tail_tolerance && name != ConstantName::Series {
        eprintln!(
            "note: achieved tail bound {:e} exceeds tolerance {:e}",
            c.tail_bound, cfg.tail_tolerance
        );
    }
    out.terms = Some(c.terms);
    out.rows.push(Row::constant(String::new(), &c));
    Ok(out)
}

fn cmd_fit(flags: &Flags) -> CliResult<Output> {
    let kind = kind(flags)?;
    let shape = main_term_shape(&kind)?;
    let m = method(flags, Method::Sieve);
    let x_max = need(flags.x_max, "x-max")?;
    let x_min = flags.x_min.unwrap_or((x_max / 1000.0).max(10.0));
    let points = flags.points.unwrap_or(DEFAULT_POINTS);
    let degree = flags.degree.unwrap_or(shape.degree);
    let table = table_for(floor_x(x_max)?)?;
    let grid = sample_grid(kind, x_min, x_max, points, m, &table)?;
    let cfg = euler_config(flags)?;
    let mut fit = fit_main_term(&grid, shape.scale_exponent, degree)?;
    let reference = leading_reference(&kind, &cfg).ok();
    if let Some(r) = &reference {
        fit = fit.with_reference(r.value);
    }
    let slope = if grid.points.len() >= 6 {
        error_exponent_report(&grid, &fit)?.slope
    } else {
        None
    };
    fit.error_slope = slope;
    let ratio = match &reference {
        Some(r) if shape.scale_exponent == 1.0 => {
            let scaled = ConstantResult {
                value: r.value * (1..kind.k).map(|j| j as f64).product::<f64>(),
                ..*r
            };
            Some(wintner_ratio_report(&grid, kind.k, &scaled)?)
        }
        _ => None,
    };
    let mut out = Output::new(query(flags, "fit"), m.name());
    out.terms = Some(grid.points.len() as u64);
    for (x, s) in &grid.points {
        out.rows.push(Row::scalar(format_float(*x), s, None));
    }
    let floats = |v: &[f64]| v.iter().map(|&c| float_value(c)).collect::<Vec<_>>();
    out.report = Some(json!({
        "scale_exponent": float_value(fit.scale_exponent),
        "degree": fit.degree,
        "coefficients": floats(&fit.coefficients),
        "leading": float_value(fit.leading()),
        "leading_reference": fit.leading_reference.map_or(Value::Null, float_value),
        "leading_deviation": fit.leading_deviation().map_or(Value::Null, float_value),
        "error_slope": fit.error_slope.map_or(Value::Null, float_value),
        "theta": float_value(shape.theta),
        "theta_index": shape.theta_index,
        "theta_floor": float_value(shape.theta_floor),
        "expected_error_exponent": float_value(shape.error_exponent),
        "condition_number": float_value(fit.condition_number),
        "warning": fit.warning,
        "ratio_final_deviation": ratio.as_ref().map_or(Value::Null, |r| float_value(r.final_deviation)),
        "ratio_diverging": ratio.as_ref().map(|r| r.diverging),
    }));
    if let Some(w) = &fit.warning {
        eprintln!("warning: {w}");
    }
    Ok(out)
}

fn cmd_table(flags: &Flags) -> CliResult<Output> {
    let kind = kind(flags)?;
    let m = method(flags, Method::Sieve);
    let x_max = floor_x(need(flags.x_max, "x-max")?)?;
    let x_min = floor_x(flags.x_min.unwrap_or(1.0))?.max(1);
    if x_min > x_max {
        return Err(CliError::Usage("--x-min exceeds --x-max".into()));
    }
    let table = table_for(x_max)?;
    let mut out = Output::new(query(flags, "table"), m.name());
    if m == Method::Sieve {
        let prefix = sieve_prefix_table(kind, x_max, &table)?;
        for x in x_min..=x_max {
            out.rows
                .push(Row::scalar(x.to_string(), &prefix.at(x), None));
        }
    } else {
        for x in x_min..=x_max {
            let r = hyper_sum(kind, m, x as f64, &table)?;
            out.rows
                .push(Row::scalar(x.to_string(), &r.value, r.truncation_bound));
        }
    }
    out.terms = Some(out.rows.len() as u64);
    Ok(out)
}

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn k_list(flags: &Flags, default: &[u32]) -> Vec<u32> {
    flags.k.map_or_else(|| default.to_vec(), |k| vec![k])
}

fn suite_cross_method(flags: &Flags, checks: &mut Vec<Check>) -> Result<()> {
    let x_max = floor_x(flags.x_max.unwrap_or(2000.0))?;
    let table = table_for(x_max)?;
    let exact_fs = [
        FunctionId::One,
        FunctionId::IdPow(1.0),
        FunctionId::Tau,
        FunctionId::SmallOmega,
        FunctionId::BigOmega,
        FunctionId::Mobius,
    ];
    for k in k_list(flags, &[2, 3]) {
        for f in exact_fs {
            let kind = ConvoluteKind::gcd(f, k)?;
            let prefix = sieve_prefix_table(kind, x_max, &table)?;
            let mut bad = None;
            for x in 1..=x_max {
                let e = hyper_sum_enumerate(kind, x as f64, &table)?.value;
                let i = hyper_sum_gcd_identity(f, k, x as f64, &table)?.value;
                if e != prefix.at(x) || e != i {
                    bad = Some(x);
                    break;
                }
            }
            checks.push(Check {
                name: format!("gcd {f} k={k}"),
                passed: bad.is_none(),
                detail: bad.map_or(format!("x <= {x_max}"), |x| format!("mismatch at x = {x}")),
            });
        }
        let mut worst: f64 = 0.0;
        for x in 1..=x_max {
            let e = hyper_sum_enumerate(ConvoluteKind::gcd(FunctionId::Log, k)?, x as f64, &table)?
                .value;
            let i = hyper_sum_gcd_identity(FunctionId::Log, k, x as f64, &table)?.value;
            let scale = e.to_f64().abs().max(1e-300);
            worst = worst.max((e.to_f64() - i.to_f64()).abs() / scale);
        }
        checks.push(Check {
            name: format!("gcd log k={k}"),
            passed: worst <= 1e-9,
            detail: format!("max relative gap {worst:e}"),
        });
        for mode in [
            RemainderMode::TauMode,
            RemainderMode::ar_class(FunctionId::IdPow(1.0), 1.0)?,
        ] {
            let kind = ConvoluteKind::lcm(mode.lcm_function(), k)?;
            let prefix = sieve_prefix_table(kind, x_max, &table)?;
            let mut bad = None;
            for x in 1..=x_max {
                let e = hyper_sum_enumerate(kind, x as f64, &table)?.value;
                let s =
                    hyper_sum_lcm_series(mode, k, x as f64, TruncationConfig::default(), &table)?
                        .value;
                if e != prefix.at(x) || e != s {
                    bad = Some(x);
                    break;
                }
            }
            checks.push(Check {
                name: format!("lcm {} k={k}", mode.lcm_function()),
                passed: bad.is_none(),
                detail: bad.map_or(format!("x <= {x_max}"), |x| format!("mismatch at x = {x}")),
            });
        }
    }
    Ok(())
}

fn suite_identity(flags: &Flags, checks: &mut Vec<Check>) -> Result<()> {
    let n_max = flags.n.unwrap_or(100_000);
    let table = table_for(n_max)?;
    for k in k_list(flags, &[2, 3, 4]) {
        for f in [
            FunctionId::One,
            FunctionId::IdPow(1.0),
            FunctionId::Tau,
            FunctionId::SmallOmega,
            FunctionId::BigOmega,
            FunctionId::Mobius,
        ] {
            let bad = (1..=n_max)
                .map(|n| {
                    Ok((
                        n,
                        convolute_gcd(f, k, n, &table)? == convolute_gcd_identity(f, k, n, &table)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .find(|&(_, ok)| !ok);
            checks.push(Check {
                name: format!("pointwise identity {f} k={k}"),
                passed: bad.is_none(),
                detail: bad.map_or(format!("n <= {n_max}"), |(n, _)| {
                    format!("mismatch at n = {n}")
                }),
            });
        }
    }
    Ok(())
}

fn suite_reconstruction(flags: &Flags, checks: &mut Vec<Check>) -> Result<()> {
    let bound = flags.n.unwrap_or(60);
    let table = table_for(bound)?;
    let modes = [
        RemainderMode::ar_class(FunctionId::IdPow(1.0), 1.0)?,
        RemainderMode::ar_class(FunctionId::IdPow(0.0), 0.0)?,
        RemainderMode::TauMode,
    ];
    for k in k_list(flags, &[2, 3]) {
        for mode in modes {
            let mut t = vec![1u64; k as usize];
            let mut bad = None;
            'outer: loop {
                let (lhs, rhs) =
                    verify_lcm_reconstruction(mode, k, &TupleIndex(t.clone()), &table)?;
                if lhs != rhs {
                    bad = Some(t.clone());
                    break;
                }
                let mut i = 0;
                loop {
                    if i == t.len() {
                        break 'outer;
                    }
                    if t[i] < bound {
                        t[i] += 1;
                        break;
                    }
                    t[i] = 1;
                    i += 1;
                }
            }
            checks.push(Check {
                name: format!("reconstruction {mode:?} k={k}"),
                passed: bad.is_none(),
                detail: bad.map_or(format!("entries <= {bound}"), |t| {
                    format!("mismatch at {t:?}")
                }),
            });
        }
    }
    Ok(())
}

fn suite_constants(flags: &Flags, checks: &mut Vec<Check>) -> Result<()> {
    let cfg = euler_config(flags).map_err(|e| match e {
        CliError::Engine(e) => e,
        other => Error::domain(other.to_string()),
    })?;
    let c2 = euler_product_c(FunctionId::IdPow(1.0), 1.0, 2, &cfg)?;
    let ratio = zeta_value(3.0, &cfg)?.value / zeta_value(2.0, &cfg)?.value;
    checks.push(Check {
        name: "C_2 = zeta(3)/zeta(2)".into(),
        passed: (c2.value - ratio).abs() <= 1e-6,
        detail: format!("{} vs {}", format_float(c2.value), format_float(ratio)),
    });
    let d2 = euler_product_d(2, &cfg)?;
    let primes = build_prime_table(cfg.prime_limit)?;
    let prod: f64 = primes
        .primes()
        .iter()
        .map(|&p| (1.0 - 1.0 / ((p + 1) as f64).powi(2)).ln())
        .sum::<f64>()
        .exp()
        / std::f64::consts::PI.powi(2);
    checks.push(Check {
        name: "D_2/3! against the k=2 product".into(),
        passed: (d2.value / 6.0 - prod).abs() <= 1e-6,
        detail: format!("{} vs {}", format_float(d2.value / 6.0), format_float(prod)),
    });
    Ok(())
}

fn suite_eulerian(checks: &mut Vec<Check>) -> Result<()> {
    let mut fact = 1u128;
    let mut ok = true;
    for t in 1..=10u32 {
        fact *= t as u128;
        ok &= eulerian_row(t)?.iter().sum::<u128>() == fact;
    }
    checks.push(Check {
        name: "Eulerian row sums".into(),
        passed: ok,
        detail: "t <= 10".into(),
    });
    let (num, den) = series_closed_form_exact(3, 2)?;
    let partial = series_partial_sum(3, 0.5, 100)?;
    checks.push(Check {
        name: "sum m^3 / 2^m = 26".into(),
        passed: num == 26 * den && partial.contains(26.0, 0.0),
        detail: format!(
            "{}/{} and partial {}",
            num,
            den,
            format_float(partial.value)
        ),
    });
    Ok(())
}

fn cmd_verify(flags: &Flags) -> CliResult<Output> {
    let suite = need(flags.suite, "suite")?;
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::CrossMethod {
        suite_cross_method(flags, &mut checks)?;
    }
    if all || suite == Suite::Identity {
        suite_identity(flags, &mut checks)?;
    }
    if all || suite == Suite::Reconstruction {
        suite_reconstruction(flags, &mut checks)?;
    }
    if all || suite == Suite::Constants {
        suite_constants(flags, &mut checks)?;
    }
    if all || suite == Suite::Eulerian {
        suite_eulerian(&mut checks)?;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut out = Output::new(query(flags, "verify"), "verify");
    out.terms = Some(checks.len() as u64);
    for c in &checks {
        out.rows.push(Row::text(
            c.name.clone(),
            if c.passed { "PASS" } else { "FAIL" }.into(),
            true,
        ));
    }
    out.report = Some(json!({
        "passed": passed,
        "total": checks.len(),
        "checks": checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect::<Vec<_>>(),
    }));
    if passed < checks.len() {
        out.failure = Some(format!(
            "{} of {} checks failed",
            checks.len() - passed,
            checks.len()
        ));
    }
    Ok(out)
}

fn dispatch(command: &Command) -> CliResult<(Output, &Flags)> {
    Ok(match command {
        Command::Factor(f) => (cmd_factor(f)?, f),
        Command::Eval(f) => (cmd_eval(f)?, f),
        Command::Convolute(f) => (cmd_convolute(f)?, f),
        Command::Sum(f) => (cmd_sum(f)?, f),
        Command::Constant(f) => (cmd_constant(f)?, f),
        Command::Fit(f) => (cmd_fit(f)?, f),
        Command::Verify(f) => (cmd_verify(f)?, f),
        Command::Table(f) => (cmd_table(f)?, f),
    })
}

/// Runs the command line, writing results to `stdout` (or `--out`) and
/// diagnostics to `stderr`. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let start = Instant::now();
    let result = dispatch(&cli.command).and_then(|(out, flags)| {
        let elapsed = flags.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
        let text = out.render(flags.format, elapsed);
        match &flags.out {
            Some(path) => std::fs::write(path, &text).map_err(CliError::Io)?,
            None => stdout.write_all(text.as_bytes()).map_err(CliError::Io)?,
        }
        match out.failure {
            Some(msg) => Err(CliError::Engine(Error::Verification(msg))),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
