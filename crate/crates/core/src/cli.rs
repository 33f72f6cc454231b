//! Command-line front end. [`run`] takes argv and output streams and returns
//! the process exit code, so the binary is a thin wrapper.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage error,
//! 3 parameter out of range, 4 nonconvergence, 5 envelope violation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::connect::{oracle_connection, ConnectionMatrix, Pair};
use crate::densities::DensityId;
use crate::error::Error;
use crate::expand::{Expansion, ExpansionId, ExpansionSpec, DEFAULT_SERIES_TOL, EXPANSION_NAMES, K_CAP};
use crate::polyfam::Family;
use crate::sampler::{sample_run, SamplerConfig};
use crate::scalar::{fmt_rational, parse_rational, Rational, Scalar};
use crate::verify::{reports_to_csv, run_all, RunConfig, Suite};

pub const SCHEMA: &str = "qortho v1";

pub const FAMILY_NAMES: [&str; 11] = [
    "qhermite", "rogers", "asc", "bigb", "chebt", "chebu", "chebt-hat", "chebu-hat", "hermite", "kesten",
    "kesten-hat",
];
pub const DENSITY_NAMES: [&str; 6] = ["n", "cn", "r", "u", "t", "k"];
pub const PAIR_NAMES: [&str; 12] = [
    "asc-to-hermite",
    "hermite-to-asc",
    "u-to-hermite",
    "hermite-to-u",
    "rogers-to-rogers",
    "rogers-to-hermite",
    "hermite-to-rogers",
    "u-to-asc",
    "kesten-to-asc",
    "t-from-u",
    "u-from-t",
    "hermite-to-classical-asc",
];

#[derive(Debug, Parser)]
#[command(name = "qortho", version, about = "q-Normal orthogonal polynomials, densities and expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Shared parameters; values are decimals or exact "p/q" literals.
#[derive(Debug, Clone, Default, Args, Serialize)]
struct Params {
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Points {
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<String>,
    /// Number of equispaced interior points of the support when --x is absent.
    #[arg(long, default_value_t = 21)]
    grid: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Evaluate F_n(x) (exact when some value is a p/q literal and none is a decimal).
    Eval {
        #[arg(long)]
        family: String,
        #[command(flatten)]
        #[serde(flatten)]
        params: Params,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<String>,
    },
    /// Monomial coefficients of F_n.
    Coeffs {
        #[arg(long)]
        family: String,
        #[command(flatten)]
        #[serde(flatten)]
        params: Params,
        #[arg(long)]
        n: usize,
    },
    /// Evaluate a density.
    Density {
        #[arg(long)]
        density: String,
        #[command(flatten)]
        #[serde(flatten)]
        params: Params,
        #[command(flatten)]
        #[serde(flatten)]
        points: Points,
    },
    /// Evaluate a density expansion, or list its coefficients.
    Expand {
        #[arg(long)]
        expansion: String,
        #[command(flatten)]
        #[serde(flatten)]
        params: Params,
        #[command(flatten)]
        #[serde(flatten)]
        points: Points,
        #[arg(long, default_value_t = DEFAULT_SERIES_TOL)]
        tol: f64,
        /// Fixed truncation order instead of the adaptive one.
        #[arg(long)]
        k_max: Option<usize>,
        /// Print c_0..c_n instead of evaluating.
        #[arg(long)]
        coeffs: Option<usize>,
    },
    /// Connection coefficients gamma_{k,n} of a pair.
    Connect {
        #[arg(long)]
        pair: String,
        #[command(flatten)]
        #[serde(flatten)]
        params: Params,
        #[arg(long)]
        n: usize,
        /// Rows 0..=n instead of row n only.
        #[arg(long)]
        all: bool,
        /// Solve by the triangular oracle instead of the closed form.
        #[arg(long)]
        oracle: bool,
    },
    /// Run verification checks; exits 1 when any check fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.5, 0.0, 0.3, 0.7])]
        q_grid: Vec<f64>,
        /// Tolerance for every floating-point check.
        #[arg(long)]
        tol: Option<f64>,
        /// Keep checks whose id starts with this prefix.
        #[arg(long)]
        check: Option<String>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Draw samples from f_N or f_CN by rejection from the semicircle.
    Sample {
        #[arg(long)]
        density: String,
        #[command(flatten)]
        #[serde(flatten)]
        params: Params,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8192)]
        batch: usize,
        /// Little-endian f64 bytes instead of text.
        #[arg(long)]
        binary: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Coeffs { .. } => "coeffs",
            Command::Density { .. } => "density",
            Command::Expand { .. } => "expand",
            Command::Connect { .. } => "connect",
            Command::Verify { .. } => "verify",
            Command::Sample { .. } => "sample",
        }
    }

    /// Resolved flags, "key=value" in key order.
    fn flags(&self) -> Map<String, Value> {
        let v = serde_json::to_value(self).unwrap_or(Value::Null);
        let inner = v.as_object().and_then(|o| o.values().next()).cloned().unwrap_or(Value::Null);
        match inner {
            Value::Object(m) => m
                .into_iter()
                .filter(|(_, v)| !v.is_null() && v.as_array().is_none_or(|a| !a.is_empty()))
                .collect(),
            _ => Map::new(),
        }
    }
}

fn flag_string(flags: &Map<String, Value>) -> String {
    flags
        .iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Array(a) => a
                    .iter()
                    .map(|e| e.as_str().map(str::to_owned).unwrap_or_else(|| e.to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            format!("{}={s}", k.replace('_', "-"))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Output of a subcommand before formatting.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    meta: Map<String, Value>,
    /// Exit code on success (1 when a verification check failed).
    status: i32,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new(), meta: Map::new(), status: 0 }
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or_else(|| Value::String(v.to_string()))
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => fmt_float(f),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Shortest round-trip form, in exponent notation outside [1e-4, 1e16).
fn fmt_float(f: f64) -> String {
    if f != 0.0 && (f.abs() < 1e-4 || f.abs() >= 1e16) {
        format!("{f:e}")
    } else {
        f.to_string()
    }
}

fn write_table(t: &Table, header: &str, format: Format, meta: Value, out: &mut dyn Write) -> CliResult<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{header}")?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| Failure::Io(std::io::Error::other(e));
            w.write_record(&t.columns).map_err(err)?;
            for row in &t.rows {
                w.write_record(row.iter().map(cell)).map_err(err)?;
            }
            out.write_all(&w.into_inner().map_err(|e| Failure::Io(std::io::Error::other(e.to_string())))?)?;
        }
        Format::Json => {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| Value::Object(t.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                .collect();
            let mut m = meta;
            if let Value::Object(o) = &mut m {
                o.extend(t.meta.clone());
            }
            serde_json::to_writer_pretty(&mut *out, &json!({"meta": m, "rows": rows}))
                .map_err(|e| Failure::Io(std::io::Error::other(e)))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Literal parsed under the float or exact backend.
fn is_exact_literal(s: &str) -> bool {
    let s = s.trim();
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit() || c == '/' || c == '-' || c == '+')
}

fn parse_f64(name: &str, s: &str) -> CliResult<f64> {
    if s.contains('/') {
        return parse_rational(s).map(|r| r.to_f64()).map_err(|_| usage(format!("--{name}: bad number {s}")));
    }
    s.trim().parse::<f64>().map_err(|_| usage(format!("--{name}: bad number {s}")))
}

/// Parameter values in one backend.
struct Resolved<T> {
    q: Option<T>,
    rho: Option<T>,
    beta: Option<T>,
    gamma: Option<T>,
    y: Option<T>,
}

impl<T: Clone> Resolved<T> {
    fn need(v: &Option<T>, name: &str) -> CliResult<T> {
        v.clone().ok_or_else(|| usage(format!("--{name} is required here")))
    }
    fn q(&self) -> CliResult<T> {
        Self::need(&self.q, "q")
    }
    fn rho(&self) -> CliResult<T> {
        Self::need(&self.rho, "rho")
    }
    fn beta(&self) -> CliResult<T> {
        Self::need(&self.beta, "beta")
    }
    fn gamma(&self) -> CliResult<T> {
        Self::need(&self.gamma, "gamma")
    }
    fn y(&self) -> CliResult<T> {
        Self::need(&self.y, "y")
    }
}

impl Params {
    fn fields(&self) -> [(&'static str, &Option<String>); 5] {
        [("q", &self.q), ("rho", &self.rho), ("beta", &self.beta), ("gamma", &self.gamma), ("y", &self.y)]
    }

    /// Exact when at least one value is a p/q literal and none is a decimal.
    fn exact(&self, extra: &[String]) -> bool {
        let vals: Vec<&str> =
            self.fields().iter().filter_map(|(_, v)| v.as_deref()).chain(extra.iter().map(String::as_str)).collect();
        vals.iter().any(|s| s.contains('/')) && vals.iter().all(|s| is_exact_literal(s))
    }

    fn resolve<T>(&self, parse: impl Fn(&str, &str) -> CliResult<T>) -> CliResult<Resolved<T>> {
        let p = |name: &str, v: &Option<String>| v.as_deref().map(|s| parse(name, s)).transpose();
        Ok(Resolved {
            q: p("q", &self.q)?,
            rho: p("rho", &self.rho)?,
            beta: p("beta", &self.beta)?,
            gamma: p("gamma", &self.gamma)?,
            y: p("y", &self.y)?,
        })
    }

    fn floats(&self) -> CliResult<Resolved<f64>> {
        self.resolve(parse_f64)
    }

    fn rationals(&self) -> CliResult<Resolved<Rational>> {
        self.resolve(|name, s| parse_rational(s).map_err(|_| usage(format!("--{name}: bad rational {s}"))))
    }
}

fn family<T: Scalar>(name: &str, p: &Resolved<T>) -> CliResult<Family<T>> {
    Ok(match name {
        "qhermite" => Family::QHermite { q: p.q()? },
        "rogers" => Family::Rogers { beta: p.beta()?, q: p.q()? },
        "asc" => Family::Asc { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "bigb" => Family::BigB { q: p.q()? },
        "chebt" => Family::ChebT,
        "chebu" => Family::ChebU,
        "chebt-hat" => Family::ChebTHat { q: p.q()? },
        "chebu-hat" => Family::ChebUHat { q: p.q()? },
        "hermite" => Family::ClassicalHermite,
        "kesten" => Family::Kesten { y: p.y()?, rho: p.rho()? },
        "kesten-hat" => Family::KestenHat { y: p.y()?, rho: p.rho()?, q: p.q()? },
        _ => return Err(usage(format!("unknown family {name}; one of {}", FAMILY_NAMES.join(", ")))),
    })
}

fn density(name: &str, p: &Resolved<f64>) -> CliResult<DensityId> {
    Ok(match name {
        "n" => DensityId::n(p.q()?),
        "cn" => DensityId::cn(p.y()?, p.rho()?, p.q()?),
        "r" => DensityId::r(p.beta()?, p.q()?),
        "u" => DensityId::u(p.q()?),
        "t" => DensityId::t(p.q()?),
        "k" => DensityId::k(p.y()?, p.rho()?, p.q()?),
        _ => return Err(usage(format!("unknown density {name}; one of {}", DENSITY_NAMES.join(", ")))),
    })
}

fn expansion(name: &str, p: &Resolved<f64>) -> CliResult<ExpansionId<f64>> {
    use ExpansionId::*;
    Ok(match name {
        "n-over-u" => NOverU { q: p.q()? },
        "u-over-n" => UOverN { q: p.q()? },
        "cn-over-n" => CnOverN { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "n-over-cn" => NOverCn { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "r-over-n" => ROverN { beta: p.beta()?, q: p.q()? },
        "n-over-r" => NOverR { gamma: p.gamma().or_else(|_| p.beta())?, q: p.q()? },
        "cn-over-k" => CnOverK { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "cn-over-u" => CnOverU { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "mehler" => MehlerClassical { y: p.y()?, rho: p.rho()? },
        "pm-q0" => PmQ0 { y: p.y()?, rho: p.rho()? },
        _ => return Err(usage(format!("unknown expansion {name}; one of {}", EXPANSION_NAMES.join(", ")))),
    })
}

fn pair<T: Scalar>(name: &str, p: &Resolved<T>) -> CliResult<Pair<T>> {
    Ok(match name {
        "asc-to-hermite" => Pair::AscToHermite { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "hermite-to-asc" => Pair::HermiteToAsc { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "u-to-hermite" => Pair::ChebUHatToHermite { q: p.q()? },
        "hermite-to-u" => Pair::HermiteToChebUHat { q: p.q()? },
        "rogers-to-rogers" => Pair::RogersToRogers { gamma: p.gamma()?, beta: p.beta()?, q: p.q()? },
        "rogers-to-hermite" => Pair::RogersToHermite { gamma: p.gamma()?, q: p.q()? },
        "hermite-to-rogers" => Pair::HermiteToRogers { beta: p.beta()?, q: p.q()? },
        "u-to-asc" => Pair::ChebUHatToAsc { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "kesten-to-asc" => Pair::KestenHatToAsc { y: p.y()?, rho: p.rho()?, q: p.q()? },
        "t-from-u" => Pair::ChebTFromU,
        "u-from-t" => Pair::ChebUFromT,
        "hermite-to-classical-asc" => Pair::HermiteToClassicalAsc { y: p.y()?, rho: p.rho()? },
        _ => return Err(usage(format!("unknown pair {name}; one of {}", PAIR_NAMES.join(", ")))),
    })
}

fn support_points(points: &Points, q: f64) -> CliResult<Vec<f64>> {
    if !points.x.is_empty() {
        return points.x.iter().map(|s| parse_f64("x", s)).collect();
    }
    if points.grid == 0 {
        return Err(usage("--grid must be positive"));
    }
    let a = if q < 1.0 { 2.0 / (1.0 - q).sqrt() } else { 5.0 };
    let n = points.grid as f64;
    Ok((0..points.grid).map(|i| a * (-1.0 + (2 * i + 1) as f64 / n)).collect())
}

fn exact_or_float<F, E>(exact: bool, on_exact: E, on_float: F) -> CliResult<Table>
where
    E: FnOnce() -> CliResult<Table>,
    F: FnOnce() -> CliResult<Table>,
{
    if exact {
        on_exact()
    } else {
        on_float()
    }
}

fn connection_table<T: Scalar>(
    m: ConnectionMatrix<T>,
    n: usize,
    all: bool,
    show: impl Fn(&T) -> Value,
) -> CliResult<Table> {
    let mut t = Table::new(vec!["n", "k", "gamma"]);
    let rows = if all { 0..=n } else { n..=n };
    for r in rows {
        for k in (0..=r).rev() {
            let v = m.get(k, r);
            if !v.is_zero() {
                t.rows.push(vec![json!(r), json!(k), show(&v)]);
            }
        }
    }
    t.meta.insert("source".into(), json!(m.source));
    t.meta.insert("target".into(), json!(m.target));
    Ok(t)
}

fn execute(cmd: &Command, raw_out: &mut dyn Write, format: Format, header: &str, meta: Value) -> CliResult<i32> {
    let exact_cell = |r: &Rational| Value::String(fmt_rational(r));
    let table = match cmd {
        Command::Eval { family: name, params, n, x } => exact_or_float(
            params.exact(x),
            || {
                let f = family(name, &params.rationals()?)?;
                let xs = x.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
                let mut t = Table::new(vec!["n", "x", "value"]);
                for xv in &xs {
                    t.rows.push(vec![json!(n), exact_cell(xv), exact_cell(&f.eval(*n, xv)?)]);
                }
                Ok(t)
            },
            || {
                let f = family(name, &params.floats()?)?;
                let mut t = Table::new(vec!["n", "x", "value"]);
                for s in x {
                    let xv = parse_f64("x", s)?;
                    t.rows.push(vec![json!(n), num(xv), num(f.eval(*n, &xv)?)]);
                }
                Ok(t)
            },
        )?,
        Command::Coeffs { family: name, params, n } => {
            let exact = params.exact(&[]) || params.fields().iter().all(|(_, v)| v.is_none());
            exact_or_float(
                exact,
                || {
                    let f = family(name, &params.rationals()?)?;
                    let p = f.coeffs_all(*n)?.pop().expect("n + 1 polynomials");
                    let mut t = Table::new(vec!["n", "power", "coeff"]);
                    for (i, c) in p.coeffs().iter().enumerate().rev() {
                        t.rows.push(vec![json!(n), json!(i), exact_cell(c)]);
                    }
                    Ok(t)
                },
                || {
                    let f = family(name, &params.floats()?)?;
                    let p = f.coeffs_all(*n)?.pop().expect("n + 1 polynomials");
                    let mut t = Table::new(vec!["n", "power", "coeff"]);
                    for (i, c) in p.coeffs().iter().enumerate().rev() {
                        t.rows.push(vec![json!(n), json!(i), num(*c)]);
                    }
                    Ok(t)
                },
            )?
        }
        Command::Density { density: name, params, points } => {
            let d = density(name, &params.floats()?)?;
            d.validate()?;
            let mut t = Table::new(vec!["x", "value", "error"]);
            for x in support_points(points, d.q())? {
                let v = d.eval_with_error(x)?;
                t.rows.push(vec![num(x), num(v.value), num(v.error)]);
            }
            t
        }
        Command::Expand { expansion: name, params, points, tol, k_max, coeffs } => {
            let id = expansion(name, &params.floats()?)?;
            id.validate()?;
            if let Some(n) = coeffs {
                let hat = id.hat_coeffs(*n)?;
                let mut t = Table::new(vec!["n", "coeff"]);
                for (i, c) in hat.iter().enumerate() {
                    t.rows.push(vec![json!(i), num(c / id.paper_scale(i))]);
                }
                t
            } else {
                let mut spec = ExpansionSpec::new(id.clone()).with_tol(*tol);
                if let Some(k) = k_max {
                    if *k > K_CAP {
                        return Err(Failure::Lib(Error::InvalidParameter(format!("--k-max above {K_CAP}"))));
                    }
                    spec = spec.with_k(*k);
                }
                let e = Expansion::new(spec)?;
                let mut t = Table::new(vec!["x", "value", "base", "partial_sum", "k", "tail"]);
                for x in support_points(points, id.q())? {
                    let v = e.eval(x)?;
                    t.rows.push(vec![num(x), num(v.value), num(v.base), num(v.partial_sum), json!(v.k), num(v.tail)]);
                }
                t
            }
        }
        Command::Connect { pair: name, params, n, all, oracle } => {
            let exact = params.exact(&[]) || params.fields().iter().all(|(_, v)| v.is_none());
            exact_or_float(
                exact,
                || {
                    let pr = pair(name, &params.rationals()?)?;
                    let m = if *oracle { oracle_connection(&pr.source(), &pr.target(), *n)? } else { pr.matrix(*n)? };
                    connection_table(m, *n, *all, exact_cell)
                },
                || {
                    if *oracle {
                        return Err(usage("--oracle needs exact p/q parameters"));
                    }
                    connection_table(pair(name, &params.floats()?)?.matrix(*n)?, *n, *all, |v| num(*v))
                },
            )?
        }
        Command::Verify { suite, q_grid, tol, check, seed } => {
            let suite = Suite::parse(suite)
                .ok_or_else(|| usage(format!("unknown suite {suite}; one of {}", Suite::NAMES.join(", "))))?;
            let cfg = RunConfig { suite, q_grid: q_grid.clone(), tol: *tol, check: check.clone(), seed: *seed };
            let reports = run_all(&cfg);
            let failed = reports.iter().filter(|r| !r.pass).count();
            match format {
                Format::Csv => {
                    writeln!(raw_out, "{header}")?;
                    raw_out.write_all(reports_to_csv(&reports).as_bytes())?;
                    return Ok(i32::from(failed > 0));
                }
                Format::Json => {
                    let mut t = Table::new(vec!["check_id", "params_json", "residual", "tolerance", "pass"]);
                    for r in &reports {
                        t.rows.push(vec![
                            json!(r.check_id),
                            json!(r.params.to_string()),
                            num(r.residual),
                            num(r.tolerance),
                            json!(r.pass),
                        ]);
                    }
                    t.meta.insert("checks".into(), json!(reports.len()));
                    t.meta.insert("failed".into(), json!(failed));
                    t.status = i32::from(failed > 0);
                    t
                }
            }
        }
        Command::Sample { density: name, params, n, seed, batch, binary } => {
            let p = params.floats()?;
            let d = match name.as_str() {
                "n" | "cn" => density(name, &p)?,
                _ => return Err(usage("sample supports --density n or cn")),
            };
            let mut cfg = SamplerConfig::new(d, *seed)?;
            cfg.batch = *batch;
            let run = sample_run(&cfg, *n)?;
            if *binary {
                for v in &run.samples {
                    raw_out.write_all(&v.to_le_bytes())?;
                }
                return Ok(0);
            }
            let mut t = Table::new(vec!["x"]);
            t.rows = run.samples.iter().map(|v| vec![num(*v)]).collect();
            t.meta.insert("envelope".into(), num(run.m));
            t.meta.insert("acceptance_rate".into(), num(run.acceptance_rate()));
            t.meta.insert("proposals".into(), json!(run.proposals));
            if format == Format::Csv {
                // one value per line after the header
                writeln!(raw_out, "{header}")?;
                for v in &run.samples {
                    writeln!(raw_out, "{}", fmt_float(*v))?;
                }
                return Ok(0);
            }
            t
        }
    };
    write_table(&table, header, format, meta, raw_out)?;
    Ok(table.status)
}

/// Runs the command line; returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    let flags = cli.command.flags();
    let header = format!("# {SCHEMA}, {}, {}", cli.command.name(), flag_string(&flags));
    let meta = json!({"schema": SCHEMA, "subcommand": cli.command.name(), "flags": flags});
    let mut buf: Vec<u8> = Vec::new();
    let result = execute(&cli.command, &mut buf, cli.format, &header, meta);
    let code = match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 2;
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.code();
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            return 3;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &buf),
        None => stdout.write_all(&buf).and_then(|_| stdout.flush()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 3;
    }
    code
}
