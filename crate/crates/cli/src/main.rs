//! Verification driver: a measure file in, verdicts and plot data out.
//!
//! Every subcommand assembles the same JSON report shape (`"schema": 1`):
//! config echo, one entry per check suite, optional data payload, and a
//! timing block. Runs are deterministic for a fixed config and seed; only
//! the timing block varies. Exit codes double as CI signals: 0 when every
//! check passed, 1 when a check failed, 2 when the invocation itself was
//! unusable (bad flags, missing or malformed measure, exact backend on a
//! quadrature measure).

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ctoda_core::blockmat::Mat;
use ctoda_core::cbop::{
    build_family, check_family_invariants, check_node_routes, check_orthogonality,
    check_quasidet_routes, check_symmetry_lemma, check_xshift, LemmaOutcome, PolyFamily,
};
use ctoda_core::lattice::{
    check_coefficient_routes, check_evolution, check_lax, check_nc_ctoda, check_pair_xy,
    check_recurrence, check_t3_annihilation, recurrence, t3_construct, t3_wave_evolution,
    LatticeError,
};
use ctoda_core::measure::{
    discretize, moment_condition_check, moments, parse_measure_json, DiscreteMeasure, Flow,
    MomentTable, QuadFamily,
};
use ctoda_core::qdid::{check_derivative_formulas, check_homological, check_nc_jacobi, DqdFamily};
use ctoda_core::reduction::{bridge_check, check_hirota, tau_sigma};
use ctoda_core::report::{IdentityReport, ResidualReport};
use ctoda_core::ring::{BaseScalar, Float64, Jet2, MeasureScalar, Rational, Scalar};

#[derive(Parser)]
#[command(
    name = "ctoda",
    version,
    about = "Matrix-valued Cauchy bi-orthogonal polynomials and the noncommutative C-Toda lattice: verification suites and data export"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment table and the moment-condition diagnostic
    Moments(MomentsArgs),
    /// Polynomial family data: xi rows and the H, V, Z, U companions
    Polys(PolysArgs),
    /// Recurrence coefficients and the checks behind them
    Recurrence(RecurrenceArgs),
    /// Lattice verification suites (recurrence, evolution, nctoda, lax, t3)
    Lattice(LatticeArgs),
    /// Lax pair compatibility at one band width
    Lax(LaxArgs),
    /// Randomized quasideterminant identity suites
    Identities(IdentitiesArgs),
    /// Scalar tau/sigma reduction: Hirota bilinear form and bridge identities
    Reduce(ReduceArgs),
    /// Third-flow construction: auxiliary system, annihilation, wave expansion
    T3(T3Args),
    /// Everything applicable to one measure, end to end
    Verify(VerifyArgs),
}

// ---------------------------------------------------------------------------
// Shared argument groups
// ---------------------------------------------------------------------------

#[derive(Args, Clone)]
struct Source {
    /// Measure file: {"p": 1, "nodes": [{"x": "1/2", "W": [["1"]]}], "flow": "t1"}
    #[arg(long, value_name = "FILE")]
    measure: Option<PathBuf>,
    /// Built-in quadrature measure, "laguerre:ALPHA" or "exp:BETA" (f64 only)
    #[arg(long, value_name = "FAMILY", conflicts_with = "measure")]
    quad: Option<String>,
    /// Node count for --quad
    #[arg(long, default_value_t = 16, value_name = "COUNT")]
    quad_nodes: usize,
    /// Block size for --quad (weights become w I_p)
    #[arg(long, default_value_t = 1, value_name = "P")]
    quad_p: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Backend {
    /// Arbitrary-precision rationals; residuals must vanish identically
    Exact,
    /// Double precision with relative tolerances
    F64,
}

impl Backend {
    fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::F64 => "f64",
        }
    }
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    source: Source,
    /// Highest moment order to tabulate
    #[arg(long, default_value_t = 6, value_name = "K")]
    order: usize,
    /// Depth of the moment-condition check (defaults to the order)
    #[arg(long, value_name = "N")]
    n_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PolysArgs {
    #[command(flatten)]
    source: Source,
    /// Highest polynomial degree to construct
    #[arg(long, value_name = "N")]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecurrenceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "N")]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Relative tolerance for f64 residuals
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Export n, H_n, a_n (and tau_n, sigma_n when p = 1) as CSV
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LatticeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "N")]
    n_max: usize,
    /// Comma-separated subset of recurrence,evolution,nctoda,lax,t3
    #[arg(long, default_value = "recurrence,evolution,nctoda,lax,t3")]
    checks: String,
    /// Truncation band for the Lax check
    #[arg(long, default_value_t = 6, value_name = "T")]
    lax_band: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Relative tolerance for f64 residuals
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Relative tolerance for the f64 Lax residuals
    #[arg(long, default_value_t = 1e-7)]
    lax_tol: f64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LaxArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "N")]
    n_max: usize,
    /// Truncation band T (at least 5)
    #[arg(long, default_value_t = 6, value_name = "T")]
    band: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Relative tolerance for f64 residuals
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Which {
    All,
    Ncj,
    Homo,
    Dqd,
}

#[derive(Args)]
struct IdentitiesArgs {
    /// Identity family to run
    #[arg(long, value_enum, default_value_t = Which::All)]
    which: Which,
    /// Trials per identity instance
    #[arg(long, default_value_t = 100, value_name = "K")]
    trials: usize,
    /// Block size
    #[arg(long = "p", default_value_t = 1, value_name = "P")]
    p: usize,
    #[arg(long, default_value_t = 1, value_name = "S")]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "N")]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Relative tolerance for f64 residuals
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct T3Args {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "N")]
    n_max: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Relative tolerance for f64 residuals
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "N")]
    n_max: usize,
    /// "all" or a comma-separated subset of moments,family,orthogonality,
    /// recurrence,evolution,nctoda,lax,t3,reduce,identities
    #[arg(long, default_value = "all")]
    checks: String,
    #[arg(long, default_value_t = 6, value_name = "T")]
    lax_band: usize,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,
    /// Relative tolerance for f64 residuals
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Relative tolerance for the f64 Lax residuals
    #[arg(long, default_value_t = 1e-7)]
    lax_tol: f64,
    /// Trials per randomized identity
    #[arg(long, default_value_t = 25, value_name = "K")]
    trials: usize,
    #[arg(long, default_value_t = 1, value_name = "S")]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SuiteOut {
    name: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    items: Vec<ctoda_core::report::CheckItem>,
}

fn suite_out(rep: ResidualReport) -> SuiteOut {
    let status = if rep.all_passed() { "pass" } else { "fail" };
    SuiteOut {
        name: rep.name,
        status,
        reason: None,
        items: rep.items,
    }
}

fn suite_skipped(name: &str, reason: impl Into<String>) -> SuiteOut {
    SuiteOut {
        name: name.into(),
        status: "skipped",
        reason: Some(reason.into()),
        items: Vec::new(),
    }
}

fn suite_failed(name: &str, reason: impl Into<String>) -> SuiteOut {
    SuiteOut {
        name: name.into(),
        status: "fail",
        reason: Some(reason.into()),
        items: Vec::new(),
    }
}

fn condition_suite(cond: &ctoda_core::measure::MomentConditionReport, exact: bool) -> SuiteOut {
    let ok = cond.first_failure.is_none();
    SuiteOut {
        name: "moment condition".into(),
        status: if ok { "pass" } else { "fail" },
        reason: cond
            .first_failure
            .map(|k| format!("leading minor {k} is singular")),
        items: vec![ctoda_core::report::CheckItem {
            label: match cond.max_valid_n {
                Some(n) => format!("leading minors invertible through {n}"),
                None => "leading minor 0 already singular".into(),
            },
            n: cond.max_valid_n,
            passed: ok,
            residual: if ok { 0.0 } else { f64::INFINITY },
            scale: 1.0,
            exact,
        }],
    }
}

#[derive(Serialize)]
struct Report {
    schema: u32,
    tool: String,
    command: &'static str,
    config: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    suites: Vec<SuiteOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    identities: Vec<IdentityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<Value>,
    passed: bool,
    /// Milliseconds per suite plus "total". The one nondeterministic field.
    timing_ms: BTreeMap<String, u64>,
}

struct Stopwatch {
    t0: Instant,
    marks: BTreeMap<String, u64>,
}

impl Stopwatch {
    fn new() -> Self {
        Stopwatch {
            t0: Instant::now(),
            marks: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let s = Instant::now();
        let out = f();
        let ms = s.elapsed().as_millis() as u64;
        *self.marks.entry(name.to_string()).or_insert(0) += ms;
        out
    }

    fn finish(mut self) -> BTreeMap<String, u64> {
        self.marks
            .insert("total".into(), self.t0.elapsed().as_millis() as u64);
        self.marks
    }
}

/// Print the human summary, write the report file if asked, return the verdict.
/// With `json_stdout` the JSON itself is the stdout payload (data commands
/// without an output path).
fn finish(
    command: &'static str,
    config: Value,
    suites: Vec<SuiteOut>,
    identities: Vec<IdentityReport>,
    data: Option<Value>,
    timing_ms: BTreeMap<String, u64>,
    path: Option<&PathBuf>,
    json_stdout: bool,
) -> Result<bool, String> {
    let passed =
        suites.iter().all(|s| s.status != "fail") && identities.iter().all(|r| r.passed());
    let report = Report {
        schema: 1,
        tool: format!("ctoda {}", env!("CARGO_PKG_VERSION")),
        command,
        config,
        suites,
        identities,
        data,
        passed,
        timing_ms,
    };
    let rendered = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    if json_stdout && path.is_none() {
        println!("{rendered}");
        return Ok(passed);
    }
    print_human(&report);
    if let Some(p) = path {
        std::fs::write(p, format!("{rendered}\n"))
            .map_err(|e| format!("cannot write {}: {e}", p.display()))?;
        println!("report written to {}", p.display());
    }
    Ok(passed)
}

fn print_human(report: &Report) {
    for s in &report.suites {
        let tag = match s.status {
            "pass" => "pass",
            "skipped" => "skip",
            _ => "FAIL",
        };
        match (&s.reason, s.items.len()) {
            (Some(r), _) => println!("[{tag}] {}: {r}", s.name),
            (None, 0) => println!("[{tag}] {} (nothing to check at this depth)", s.name),
            (None, k) => {
                let max = s.items.iter().map(|i| i.residual).fold(0.0, f64::max);
                if max == 0.0 && s.items.iter().all(|i| i.exact) {
                    println!("[{tag}] {} ({k} checks, exact zeros)", s.name);
                } else {
                    println!("[{tag}] {} ({k} checks, max residual {max:.2e})", s.name);
                }
            }
        }
        for item in s.items.iter().filter(|i| !i.passed).take(8) {
            match item.n {
                Some(n) => println!(
                    "       {} n={n} residual={:.3e} scale={:.3e}",
                    item.label, item.residual, item.scale
                ),
                None => println!(
                    "       {} residual={:.3e} scale={:.3e}",
                    item.label, item.residual, item.scale
                ),
            }
        }
        let bad = s.items.iter().filter(|i| !i.passed).count();
        if bad > 8 {
            println!("       ... and {} more failing checks", bad - 8);
        }
    }
    for r in &report.identities {
        let tag = if r.passed() { "pass" } else { "FAIL" };
        println!("[{tag}] {r}");
    }
    println!(
        "result: {}",
        if report.passed { "pass" } else { "FAIL" }
    );
}

// ---------------------------------------------------------------------------
// Measure loading
// ---------------------------------------------------------------------------

enum AnyMeasure {
    Exact(DiscreteMeasure<Rational>),
    Float(DiscreteMeasure<Float64>),
}

fn parse_quad(spec: &str) -> Result<QuadFamily, String> {
    let (name, value) = spec
        .split_once(':')
        .ok_or_else(|| format!("quad spec {spec:?} is not NAME:VALUE"))?;
    let v: f64 = value
        .parse()
        .map_err(|_| format!("quad parameter {value:?} is not a number"))?;
    match name {
        "laguerre" => Ok(QuadFamily::Laguerre { alpha: v }),
        "exp" => Ok(QuadFamily::ScaledExponential { beta: v }),
        other => Err(format!(
            "unknown quadrature family {other:?} (expected laguerre or exp)"
        )),
    }
}

fn load_measure(src: &Source, backend: Backend) -> Result<AnyMeasure, String> {
    match (&src.measure, &src.quad) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let mu = parse_measure_json(&text)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(match backend {
                Backend::Exact => AnyMeasure::Exact(mu),
                Backend::F64 => AnyMeasure::Float(mu.to_float()),
            })
        }
        (None, Some(spec)) => {
            if backend == Backend::Exact {
                return Err(
                    "quadrature measures are float by construction; pass --backend f64".into(),
                );
            }
            let fam = parse_quad(spec)?;
            let mu = discretize(fam, src.quad_nodes, src.quad_p).map_err(|e| e.to_string())?;
            Ok(AnyMeasure::Float(mu))
        }
        (None, None) => Err("one of --measure or --quad is required".into()),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn source_echo(src: &Source) -> Value {
    json!({
        "measure": src.measure.as_ref().map(|p| p.display().to_string()),
        "quad": src.quad,
        "quad_nodes": src.quad.as_ref().map(|_| src.quad_nodes),
        "quad_p": src.quad.as_ref().map(|_| src.quad_p),
    })
}

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

fn cell<B: BaseScalar>(x: &B) -> Value {
    if B::EXACT {
        Value::String(x.to_string())
    } else {
        Value::from(x.to_f64())
    }
}

fn mat_json<B: BaseScalar>(m: &Mat<B>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| cell(m.at(i, j))).collect()))
            .collect(),
    )
}

fn csv_cell<B: BaseScalar>(x: &B) -> String {
    if B::EXACT {
        x.to_string()
    } else {
        format!("{}", x.to_f64())
    }
}

/// The plot series: one row per degree with H_n, a_n, and in the scalar case
/// tau_n and sigma_n. Cells beyond what the data supports stay empty.
fn write_series_csv<B>(path: &PathBuf, mu: &DiscreteMeasure<B>, n_max: usize) -> Result<(), String>
where
    B: BaseScalar + MeasureScalar<B>,
{
    let p = mu.p();
    let table: MomentTable<B> = moments(mu, n_max + 1);
    let fam = build_family(&table, n_max).map_err(|e| e.to_string())?;
    let coeffs = recurrence(&fam);
    let scalar = p == 1;
    let tau = scalar.then(|| tau_sigma(&table, n_max));

    let mut head = vec!["n".to_string()];
    for i in 0..p {
        for j in 0..p {
            head.push(format!("h_{i}{j}"));
        }
    }
    for i in 0..p {
        for j in 0..p {
            head.push(format!("a_{i}{j}"));
        }
    }
    if scalar {
        head.push("tau".into());
        head.push("sigma".into());
    }

    let mut lines = vec![head.join(",")];
    for n in 0..=n_max {
        let mut row = vec![n.to_string()];
        for i in 0..p {
            for j in 0..p {
                row.push(if n <= fam.n_max() {
                    csv_cell(fam.h(n).at(i, j))
                } else {
                    String::new()
                });
            }
        }
        for i in 0..p {
            for j in 0..p {
                row.push(if n < coeffs.a.len() {
                    csv_cell(coeffs.a[n].at(i, j))
                } else {
                    String::new()
                });
            }
        }
        if let Some(td) = &tau {
            row.push(if n < td.tau.len() {
                csv_cell(&td.tau[n])
            } else {
                String::new()
            });
            row.push(if n < td.sigma.len() {
                csv_cell(&td.sigma[n])
            } else {
                String::new()
            });
        }
        lines.push(row.join(","));
    }
    std::fs::write(path, format!("{}\n", lines.join("\n")))
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    println!("series written to {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// Building blocks shared by the check subcommands
// ---------------------------------------------------------------------------

/// Base-scalar family at t = 0 (non-jet backends cannot see the flow).
fn base_family<B>(
    mu: &DiscreteMeasure<B>,
    n_max: usize,
) -> Result<(MomentTable<B>, PolyFamily<B>), String>
where
    B: BaseScalar + MeasureScalar<B>,
{
    let table: MomentTable<B> = moments(mu, n_max + 1);
    let fam = build_family(&table, n_max).map_err(|e| e.to_string())?;
    Ok((table, fam))
}

/// Jet family under the given flow, with the re-flowed measure it was built
/// from (checks that integrate need the same deformation).
fn jet_family<B>(
    mu: &DiscreteMeasure<B>,
    flow: Flow,
    n_max: usize,
) -> Result<
    (
        DiscreteMeasure<B>,
        MomentTable<Jet2<B>>,
        PolyFamily<Jet2<B>>,
    ),
    String,
>
where
    B: BaseScalar,
    Jet2<B>: MeasureScalar<B>,
{
    let mu = mu.clone().with_flow(flow);
    let table: MomentTable<Jet2<B>> = moments(&mu, n_max + 1);
    let fam = build_family(&table, n_max).map_err(|e| e.to_string())?;
    Ok((mu, table, fam))
}

fn completeness_problem<S: Scalar>(fam: &PolyFamily<S>, n_max: usize) -> Option<String> {
    if fam.is_complete() && fam.n_max() == n_max {
        None
    } else {
        Some(format!(
            "family construction stops at degree {} (moment condition fails)",
            fam.n_max()
        ))
    }
}

/// The three recurrence suites on an already-built family.
fn recurrence_suites<B, S>(
    mu: &DiscreteMeasure<B>,
    fam: &PolyFamily<S>,
    tol: f64,
) -> Vec<SuiteOut>
where
    B: BaseScalar,
    S: MeasureScalar<B>,
{
    let coeffs = recurrence(fam);
    vec![
        suite_out(check_coefficient_routes(&coeffs, tol)),
        suite_out(check_pair_xy(mu, fam, tol)),
        suite_out(check_recurrence(fam, &coeffs, tol)),
    ]
}

/// Evolution, lattice equations, and the Lax window under the first flow.
/// The Lax check degrades to "skipped" when the band cannot be filled.
fn t1_suites<B>(
    mu: &DiscreteMeasure<B>,
    n_max: usize,
    want_evolution: bool,
    want_nctoda: bool,
    want_lax: bool,
    band: usize,
    tol: f64,
    lax_tol: f64,
) -> Vec<SuiteOut>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    let mut out = Vec::new();
    let names: &[(&str, bool)] = &[
        ("first-flow evolution", want_evolution),
        ("noncommutative lattice", want_nctoda),
        ("lax compatibility", want_lax),
    ];
    let (mu1, _table, fam) = match jet_family(mu, Flow::T1, n_max) {
        Ok(x) => x,
        Err(e) => {
            for (name, wanted) in names {
                if *wanted {
                    out.push(suite_failed(name, e.clone()));
                }
            }
            return out;
        }
    };
    if let Some(problem) = completeness_problem(&fam, n_max) {
        for (name, wanted) in names {
            if *wanted {
                out.push(suite_failed(name, problem.clone()));
            }
        }
        return out;
    }
    let coeffs = recurrence(&fam);
    if want_evolution {
        out.push(match check_evolution(&fam, &coeffs, tol) {
            Ok(rep) => suite_out(rep),
            Err(e) => suite_failed("first-flow evolution", e.to_string()),
        });
    }
    if want_nctoda {
        out.push(match check_nc_ctoda(&fam, &coeffs, tol) {
            Ok(rep) => suite_out(rep),
            Err(e) => suite_failed("noncommutative lattice", e.to_string()),
        });
    }
    if want_lax {
        let samples: Vec<B> = mu1.nodes().iter().map(|(x, _)| x.clone()).collect();
        out.push(match check_lax(&fam, &coeffs, band, &samples, lax_tol) {
            Ok(rep) => suite_out(rep),
            Err(LatticeError::InsufficientData { t, usable }) => suite_skipped(
                "lax compatibility",
                format!("band {t} needs usable rows through {}, have {usable}", t - 2),
            ),
            Err(e) => suite_failed("lax compatibility", e.to_string()),
        });
    }
    out
}

/// Auxiliary construction, annihilation, and the wave expansion under the
/// third flow.
fn t3_suites<B>(mu: &DiscreteMeasure<B>, n_max: usize, tol: f64) -> Vec<SuiteOut>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    let names = ["t3 auxiliary system", "t3 annihilation", "t3 wave expansion"];
    let (mu3, _table, fam) = match jet_family(mu, Flow::T3, n_max) {
        Ok(x) => x,
        Err(e) => return names.iter().map(|n| suite_failed(n, e.clone())).collect(),
    };
    if let Some(problem) = completeness_problem(&fam, n_max) {
        return names
            .iter()
            .map(|n| suite_failed(n, problem.clone()))
            .collect();
    }

    let mut out = Vec::new();
    let mut aux_rep = ResidualReport::new(names[0]);
    let mut ann_rep = ResidualReport::new(names[1]);
    let mut aux_failed = None;
    for m in 2..=n_max {
        match t3_construct(&fam, m, tol) {
            Ok((aux, rep)) => {
                aux_rep.merge(rep);
                ann_rep.merge(check_t3_annihilation(&mu3, &fam, m, &aux, tol));
            }
            Err(e) => {
                aux_failed = Some(e.to_string());
                break;
            }
        }
    }
    if let Some(e) = aux_failed {
        out.push(suite_failed(names[0], e));
    } else if n_max < 2 {
        out.push(suite_skipped(names[0], "auxiliary system starts at m = 2"));
        out.push(suite_skipped(names[1], "auxiliary system starts at m = 2"));
    } else {
        out.push(suite_out(aux_rep));
        out.push(suite_out(ann_rep));
    }

    let mut wave_rep = ResidualReport::new(names[2]);
    let mut wave_failed = None;
    for n in 0..n_max {
        match t3_wave_evolution(&mu3, &fam, n, tol) {
            Ok((_gamma, rep)) => wave_rep.merge(rep),
            Err(e) => {
                wave_failed = Some(e.to_string());
                break;
            }
        }
    }
    out.push(match wave_failed {
        Some(e) => suite_failed(names[2], e),
        None => suite_out(wave_rep),
    });
    out
}

/// Hirota bilinear equations and the tau/sigma bridge (scalar case, first flow).
fn reduce_suites<B>(mu: &DiscreteMeasure<B>, n_max: usize, tol: f64) -> Vec<SuiteOut>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    let names = ["hirota bilinear", "tau-sigma bridge"];
    let (_mu1, table, fam) = match jet_family(mu, Flow::T1, n_max) {
        Ok(x) => x,
        Err(e) => return names.iter().map(|n| suite_failed(n, e.clone())).collect(),
    };
    if let Some(problem) = completeness_problem(&fam, n_max) {
        return names
            .iter()
            .map(|n| suite_failed(n, problem.clone()))
            .collect();
    }
    let data = tau_sigma(&table, n_max);
    vec![
        suite_out(check_hirota(&data, tol)),
        suite_out(bridge_check(&fam, &data, tol)),
    ]
}

fn identity_suites(which: Which, p: usize, trials: usize, seed: u64) -> Vec<IdentityReport> {
    let wants = |w: Which| which == Which::All || which == w;
    let mut out = Vec::new();
    for inner in [1usize, 2] {
        if wants(Which::Ncj) {
            out.push(check_nc_jacobi(p, inner, trials, seed ^ inner as u64));
        }
        if wants(Which::Homo) {
            out.push(check_homological(p, inner, trials, seed ^ (16 + inner as u64)));
        }
    }
    if wants(Which::Dqd) {
        for size in [2usize, 3, 4] {
            for family in [
                DqdFamily::General,
                DqdFamily::Grammian,
                DqdFamily::Row,
                DqdFamily::Column,
            ] {
                out.push(check_derivative_formulas(
                    family,
                    p,
                    size,
                    trials,
                    seed ^ (32 + size as u64),
                ));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_moments(a: MomentsArgs) -> Result<bool, String> {
    if a.order < 1 {
        return Err("order must be at least 1".into());
    }
    let n_max = a.n_max.unwrap_or(a.order);
    if n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => moments_engine(&mu, &a, n_max),
        AnyMeasure::Float(mu) => moments_engine(&mu, &a, n_max),
    }
}

fn moments_engine<B>(mu: &DiscreteMeasure<B>, a: &MomentsArgs, n_max: usize) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
{
    let mut watch = Stopwatch::new();
    let (table, cond) = watch.time("moments", || {
        let table: MomentTable<B> = moments(mu, a.order);
        let cond = moment_condition_check(&table, n_max);
        (table, cond)
    });
    let suite = condition_suite(&cond, B::EXACT);
    let pair: Vec<Value> = (0..=a.order)
        .map(|i| Value::Array((0..=a.order).map(|j| mat_json(table.pair(i, j))).collect()))
        .collect();
    let single: Vec<Value> = (0..=a.order).map(|i| mat_json(table.single(i))).collect();
    let single2 = table.is_asymmetric().then(|| {
        Value::Array((0..=a.order).map(|i| mat_json(table.single2(i))).collect())
    });
    let data = json!({
        "p": mu.p(),
        "order": a.order,
        "pair": pair,
        "single": single,
        "single2": single2,
        "condition": cond,
    });
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({"order": a.order, "n_max": n_max, "backend": a.backend.name()}),
    );
    finish(
        "moments",
        config,
        vec![suite],
        Vec::new(),
        Some(data),
        watch.finish(),
        a.out.as_ref(),
        true,
    )
}

fn cmd_polys(a: PolysArgs) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => polys_engine(&mu, &a),
        AnyMeasure::Float(mu) => polys_engine(&mu, &a),
    }
}

fn polys_engine<B>(mu: &DiscreteMeasure<B>, a: &PolysArgs) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
{
    let mut watch = Stopwatch::new();
    let (_table, fam) = watch.time("family", || base_family(mu, a.n_max))?;
    let suite = match completeness_problem(&fam, a.n_max) {
        None => SuiteOut {
            name: "family construction".into(),
            status: "pass",
            reason: None,
            items: vec![ctoda_core::report::CheckItem {
                label: format!("complete through degree {}", fam.n_max()),
                n: Some(fam.n_max()),
                passed: true,
                residual: 0.0,
                scale: 1.0,
                exact: B::EXACT,
            }],
        },
        Some(problem) => suite_failed("family construction", problem),
    };
    let built = fam.n_max();
    let xi: Vec<Value> = (0..=built)
        .map(|n| Value::Array((0..n).map(|k| mat_json(fam.xi(n, k))).collect()))
        .collect();
    let series = |get: &dyn Fn(usize) -> Mat<B>| -> Vec<Value> {
        (0..=built).map(|n| mat_json(&get(n))).collect()
    };
    let data = json!({
        "p": fam.p(),
        "n_max": built,
        "complete": fam.is_complete() && built == a.n_max,
        "xi": xi,
        "h": series(&|n| fam.h(n).clone()),
        "v": series(&|n| fam.v(n).clone()),
        "z": series(&|n| fam.z(n).clone()),
        "u": series(&|n| fam.u(n).clone()),
    });
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({"n_max": a.n_max, "backend": a.backend.name()}),
    );
    finish(
        "polys",
        config,
        vec![suite],
        Vec::new(),
        Some(data),
        watch.finish(),
        a.out.as_ref(),
        true,
    )
}

fn cmd_recurrence(a: RecurrenceArgs) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => recurrence_engine(&mu, &a),
        AnyMeasure::Float(mu) => recurrence_engine(&mu, &a),
    }
}

fn recurrence_engine<B>(mu: &DiscreteMeasure<B>, a: &RecurrenceArgs) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
{
    let mut watch = Stopwatch::new();
    let mut suites = Vec::new();
    let mut data = None;
    let (_table, fam) = watch.time("family", || base_family(mu, a.n_max))?;
    match completeness_problem(&fam, a.n_max) {
        Some(problem) => suites.push(suite_failed("family construction", problem)),
        None => {
            let coeffs = recurrence(&fam);
            suites = watch.time("recurrence", || recurrence_suites(mu, &fam, a.tol));
            let tables = |v: &Vec<Mat<B>>| -> Vec<Value> { v.iter().map(mat_json).collect() };
            data = Some(json!({
                "a": tables(&coeffs.a),
                "b": tables(&coeffs.b),
                "c": tables(&coeffs.c),
                "d": tables(&coeffs.d),
                "first_v_singular": coeffs.first_v_singular,
                "first_h_singular": coeffs.first_h_singular,
            }));
        }
    }
    if let Some(csv) = &a.csv {
        write_series_csv(csv, mu, a.n_max)?;
    }
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({"n_max": a.n_max, "backend": a.backend.name(), "tol": a.tol}),
    );
    finish(
        "recurrence",
        config,
        suites,
        Vec::new(),
        data,
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum LatticeCheck {
    Recurrence,
    Evolution,
    NcToda,
    Lax,
    T3,
}

fn parse_lattice_checks(s: &str) -> Result<Vec<LatticeCheck>, String> {
    s.split(',')
        .map(|tok| match tok.trim() {
            "recurrence" => Ok(LatticeCheck::Recurrence),
            "evolution" => Ok(LatticeCheck::Evolution),
            "nctoda" => Ok(LatticeCheck::NcToda),
            "lax" => Ok(LatticeCheck::Lax),
            "t3" => Ok(LatticeCheck::T3),
            other => Err(format!(
                "unknown check {other:?} (expected recurrence, evolution, nctoda, lax, t3)"
            )),
        })
        .collect()
}

fn cmd_lattice(a: LatticeArgs) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    let checks = parse_lattice_checks(&a.checks)?;
    if checks.contains(&LatticeCheck::Lax) && a.lax_band < 5 {
        return Err("lax band must be at least 5".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => lattice_engine(&mu, &a, &checks),
        AnyMeasure::Float(mu) => lattice_engine(&mu, &a, &checks),
    }
}

fn lattice_engine<B>(
    mu: &DiscreteMeasure<B>,
    a: &LatticeArgs,
    checks: &[LatticeCheck],
) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    mu.validate_for_lattice().map_err(|e| e.to_string())?;
    let want = |c: LatticeCheck| checks.contains(&c);
    let mut watch = Stopwatch::new();
    let mut suites = Vec::new();

    if want(LatticeCheck::Recurrence) {
        let (_table, fam) = watch.time("recurrence", || base_family(mu, a.n_max))?;
        match completeness_problem(&fam, a.n_max) {
            Some(problem) => suites.push(suite_failed("family construction", problem)),
            None => {
                suites.extend(watch.time("recurrence", || recurrence_suites(mu, &fam, a.tol)))
            }
        }
    }
    let t1_wanted = want(LatticeCheck::Evolution) || want(LatticeCheck::NcToda)
        || want(LatticeCheck::Lax);
    if t1_wanted {
        suites.extend(watch.time("first flow", || {
            t1_suites(
                mu,
                a.n_max,
                want(LatticeCheck::Evolution),
                want(LatticeCheck::NcToda),
                want(LatticeCheck::Lax),
                a.lax_band,
                a.tol,
                a.lax_tol,
            )
        }));
    }
    if want(LatticeCheck::T3) {
        suites.extend(watch.time("third flow", || t3_suites(mu, a.n_max, a.tol)));
    }
    if let Some(csv) = &a.csv {
        write_series_csv(csv, mu, a.n_max)?;
    }
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({
            "n_max": a.n_max,
            "checks": a.checks,
            "lax_band": a.lax_band,
            "backend": a.backend.name(),
            "tol": a.tol,
            "lax_tol": a.lax_tol,
        }),
    );
    finish(
        "lattice",
        config,
        suites,
        Vec::new(),
        None,
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

fn cmd_lax(a: LaxArgs) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    if a.band < 5 {
        return Err("band must be at least 5".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => lax_engine(&mu, &a),
        AnyMeasure::Float(mu) => lax_engine(&mu, &a),
    }
}

fn lax_engine<B>(mu: &DiscreteMeasure<B>, a: &LaxArgs) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    mu.validate_for_lattice().map_err(|e| e.to_string())?;
    let mut watch = Stopwatch::new();
    let (mu1, _table, fam) = watch.time("lax", || jet_family(mu, Flow::T1, a.n_max))?;
    if let Some(problem) = completeness_problem(&fam, a.n_max) {
        return Err(problem);
    }
    let coeffs = recurrence(&fam);
    let samples: Vec<B> = mu1.nodes().iter().map(|(x, _)| x.clone()).collect();
    let rep = watch.time("lax", || {
        check_lax(&fam, &coeffs, a.band, &samples, a.tol)
    });
    let suites = match rep {
        Ok(rep) => vec![suite_out(rep)],
        // An unfillable band is an invocation problem for the standalone
        // command: the caller asked for exactly this window.
        Err(LatticeError::InsufficientData { t, usable }) => {
            return Err(format!(
                "band {t} needs usable rows through {}, have {usable}; raise n-max or widen the measure",
                t - 2
            ));
        }
        Err(e) => return Err(e.to_string()),
    };
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({"n_max": a.n_max, "band": a.band, "backend": a.backend.name(), "tol": a.tol}),
    );
    finish(
        "lax",
        config,
        suites,
        Vec::new(),
        None,
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

fn cmd_identities(a: IdentitiesArgs) -> Result<bool, String> {
    if a.p < 1 {
        return Err("p must be at least 1".into());
    }
    if a.trials < 1 {
        return Err("trials must be at least 1".into());
    }
    let mut watch = Stopwatch::new();
    let reports = watch.time("identities", || {
        identity_suites(a.which, a.p, a.trials, a.seed)
    });
    let which = match a.which {
        Which::All => "all",
        Which::Ncj => "ncj",
        Which::Homo => "homo",
        Which::Dqd => "dqd",
    };
    let config = json!({
        "which": which,
        "trials": a.trials,
        "p": a.p,
        "seed": a.seed,
    });
    finish(
        "identities",
        config,
        Vec::new(),
        reports,
        None,
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

fn cmd_reduce(a: ReduceArgs) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => reduce_engine(&mu, &a),
        AnyMeasure::Float(mu) => reduce_engine(&mu, &a),
    }
}

fn reduce_engine<B>(mu: &DiscreteMeasure<B>, a: &ReduceArgs) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    if mu.p() != 1 {
        return Err("the reduction is the scalar case; this measure has p > 1".into());
    }
    mu.validate_for_lattice().map_err(|e| e.to_string())?;
    let mut watch = Stopwatch::new();
    let suites = watch.time("reduction", || reduce_suites(mu, a.n_max, a.tol));

    // Ladder data for plotting: value and first derivative of each entry.
    let data = {
        let mu1 = mu.clone().with_flow(Flow::T1);
        let table: MomentTable<Jet2<B>> = moments(&mu1, a.n_max + 1);
        let td = tau_sigma(&table, a.n_max);
        let values = |v: &[Jet2<B>]| -> Vec<Value> { v.iter().map(|j| cell(&j.c0)).collect() };
        let dots = |v: &[Jet2<B>]| -> Vec<Value> { v.iter().map(|j| cell(&j.c1)).collect() };
        json!({
            "tau": values(&td.tau),
            "tau_dot": dots(&td.tau),
            "sigma": values(&td.sigma),
            "sigma_dot": dots(&td.sigma),
        })
    };
    if let Some(csv) = &a.csv {
        write_series_csv(csv, mu, a.n_max)?;
    }
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({"n_max": a.n_max, "backend": a.backend.name(), "tol": a.tol}),
    );
    finish(
        "reduce",
        config,
        suites,
        Vec::new(),
        Some(data),
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

fn cmd_t3(a: T3Args) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => t3_engine(&mu, &a),
        AnyMeasure::Float(mu) => t3_engine(&mu, &a),
    }
}

fn t3_engine<B>(mu: &DiscreteMeasure<B>, a: &T3Args) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    mu.validate_for_lattice().map_err(|e| e.to_string())?;
    let mut watch = Stopwatch::new();
    let suites = watch.time("third flow", || t3_suites(mu, a.n_max, a.tol));
    let mut config = source_echo(&a.source);
    merge_config(
        &mut config,
        json!({"n_max": a.n_max, "backend": a.backend.name(), "tol": a.tol}),
    );
    finish(
        "t3",
        config,
        suites,
        Vec::new(),
        None,
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum VerifyCheck {
    Moments,
    Family,
    Orthogonality,
    Recurrence,
    Evolution,
    NcToda,
    Lax,
    T3,
    Reduce,
    Identities,
}

const ALL_VERIFY: [VerifyCheck; 10] = [
    VerifyCheck::Moments,
    VerifyCheck::Family,
    VerifyCheck::Orthogonality,
    VerifyCheck::Recurrence,
    VerifyCheck::Evolution,
    VerifyCheck::NcToda,
    VerifyCheck::Lax,
    VerifyCheck::T3,
    VerifyCheck::Reduce,
    VerifyCheck::Identities,
];

fn parse_verify_checks(s: &str) -> Result<Vec<VerifyCheck>, String> {
    if s.trim() == "all" {
        return Ok(ALL_VERIFY.to_vec());
    }
    s.split(',')
        .map(|tok| match tok.trim() {
            "moments" => Ok(VerifyCheck::Moments),
            "family" => Ok(VerifyCheck::Family),
            "orthogonality" => Ok(VerifyCheck::Orthogonality),
            "recurrence" => Ok(VerifyCheck::Recurrence),
            "evolution" => Ok(VerifyCheck::Evolution),
            "nctoda" => Ok(VerifyCheck::NcToda),
            "lax" => Ok(VerifyCheck::Lax),
            "t3" => Ok(VerifyCheck::T3),
            "reduce" => Ok(VerifyCheck::Reduce),
            "identities" => Ok(VerifyCheck::Identities),
            other => Err(format!("unknown check {other:?}")),
        })
        .collect()
}

fn cmd_verify(a: VerifyArgs) -> Result<bool, String> {
    if a.n_max < 1 {
        return Err("n-max must be at least 1".into());
    }
    let checks = parse_verify_checks(&a.checks)?;
    if checks.contains(&VerifyCheck::Lax) && a.lax_band < 5 {
        return Err("lax band must be at least 5".into());
    }
    match load_measure(&a.source, a.backend)? {
        AnyMeasure::Exact(mu) => {
            let xmu = mu.clone();
            let xshift = move |trials: usize, seed: u64| check_xshift(&xmu, trials, seed);
            verify_engine(&mu, &a, &checks, Some(&xshift))
        }
        AnyMeasure::Float(mu) => verify_engine(&mu, &a, &checks, None),
    }
}

fn verify_engine<B>(
    mu: &DiscreteMeasure<B>,
    a: &VerifyArgs,
    checks: &[VerifyCheck],
    xshift: Option<&dyn Fn(usize, u64) -> IdentityReport>,
) -> Result<bool, String>
where
    B: BaseScalar + MeasureScalar<B>,
    Jet2<B>: MeasureScalar<B>,
{
    let want = |c: VerifyCheck| checks.contains(&c);
    let mut watch = Stopwatch::new();
    let mut suites = Vec::new();
    let mut identities = Vec::new();

    let (table, fam) = watch.time("family", || base_family(mu, a.n_max))?;
    let problem = completeness_problem(&fam, a.n_max);

    if want(VerifyCheck::Moments) {
        let cond = watch.time("moments", || moment_condition_check(&table, a.n_max));
        suites.push(condition_suite(&cond, B::EXACT));
    }

    if let Some(problem) = &problem {
        // Nothing downstream is meaningful on a truncated family.
        suites.push(suite_failed("family construction", problem.clone()));
        let mut config = source_echo(&a.source);
        merge_config(&mut config, verify_config(a));
        return finish(
            "verify",
            config,
            suites,
            identities,
            None,
            watch.finish(),
            a.report.as_ref(),
            false,
        );
    }

    if want(VerifyCheck::Family) {
        watch.time("family checks", || {
            suites.push(suite_out(check_quasidet_routes(&table, &fam, a.tol)));
            suites.push(suite_out(check_node_routes(mu, &fam, a.tol)));
            suites.push(suite_out(check_family_invariants(&table, &fam, a.tol)));
            match check_symmetry_lemma(&table, &fam, a.tol) {
                LemmaOutcome::Verified(rep) => suites.push(suite_out(rep)),
                LemmaOutcome::SkippedAsymmetric => suites.push(suite_skipped(
                    "symmetry lemma",
                    "two-weight measures have no symmetric pairing",
                )),
            }
            match xshift {
                Some(run) => identities.push(run(a.trials, a.seed)),
                None => suites.push(suite_skipped(
                    "x-shift identity",
                    "random polynomial draws are exact-backend only",
                )),
            }
        });
    }

    if want(VerifyCheck::Orthogonality) {
        suites.push(suite_out(watch.time("orthogonality", || {
            check_orthogonality(mu, &fam, a.tol)
        })));
    }

    if want(VerifyCheck::Recurrence) {
        suites.extend(watch.time("recurrence", || recurrence_suites(mu, &fam, a.tol)));
    }

    let lattice_ok = mu.validate_for_lattice();
    let t1_wanted =
        want(VerifyCheck::Evolution) || want(VerifyCheck::NcToda) || want(VerifyCheck::Lax);
    if t1_wanted {
        match &lattice_ok {
            Ok(()) => suites.extend(watch.time("first flow", || {
                t1_suites(
                    mu,
                    a.n_max,
                    want(VerifyCheck::Evolution),
                    want(VerifyCheck::NcToda),
                    want(VerifyCheck::Lax),
                    a.lax_band,
                    a.tol,
                    a.lax_tol,
                )
            })),
            Err(e) => {
                for name in [
                    "first-flow evolution",
                    "noncommutative lattice",
                    "lax compatibility",
                ] {
                    suites.push(suite_skipped(name, e.to_string()));
                }
            }
        }
    }

    if want(VerifyCheck::T3) {
        match &lattice_ok {
            Ok(()) => suites.extend(watch.time("third flow", || t3_suites(mu, a.n_max, a.tol))),
            Err(e) => {
                for name in ["t3 auxiliary system", "t3 annihilation", "t3 wave expansion"] {
                    suites.push(suite_skipped(name, e.to_string()));
                }
            }
        }
    }

    if want(VerifyCheck::Reduce) {
        if mu.p() != 1 {
            suites.push(suite_skipped(
                "hirota bilinear",
                "reduction is the scalar case",
            ));
            suites.push(suite_skipped(
                "tau-sigma bridge",
                "reduction is the scalar case",
            ));
        } else {
            match &lattice_ok {
                Ok(()) => {
                    suites.extend(watch.time("reduction", || reduce_suites(mu, a.n_max, a.tol)))
                }
                Err(e) => {
                    suites.push(suite_skipped("hirota bilinear", e.to_string()));
                    suites.push(suite_skipped("tau-sigma bridge", e.to_string()));
                }
            }
        }
    }

    if want(VerifyCheck::Identities) {
        identities.extend(watch.time("identities", || {
            identity_suites(Which::All, mu.p(), a.trials, a.seed)
        }));
    }

    if let Some(csv) = &a.csv {
        write_series_csv(csv, mu, a.n_max)?;
    }
    let mut config = source_echo(&a.source);
    merge_config(&mut config, verify_config(a));
    finish(
        "verify",
        config,
        suites,
        identities,
        None,
        watch.finish(),
        a.report.as_ref(),
        false,
    )
}

fn verify_config(a: &VerifyArgs) -> Value {
    json!({
        "n_max": a.n_max,
        "checks": a.checks,
        "lax_band": a.lax_band,
        "backend": a.backend.name(),
        "tol": a.tol,
        "lax_tol": a.lax_tol,
        "trials": a.trials,
        "seed": a.seed,
    })
}

fn merge_config(base: &mut Value, extra: Value) {
    if let (Value::Object(b), Value::Object(e)) = (base, extra) {
        for (k, v) in e {
            b.insert(k, v);
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Moments(a) => cmd_moments(a),
        Command::Polys(a) => cmd_polys(a),
        Command::Recurrence(a) => cmd_recurrence(a),
        Command::Lattice(a) => cmd_lattice(a),
        Command::Lax(a) => cmd_lax(a),
        Command::Identities(a) => cmd_identities(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::T3(a) => cmd_t3(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    // Die quietly when the consumer closes the pipe (`ctoda ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
