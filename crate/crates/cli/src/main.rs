//! `fracgreen`: evaluate, compare and apply fundamental solutions of
//! space-time fractional diffusion from the command line.
//!
//! Exit codes: 0 success, 1 I/O, 2 invalid input, 3 numerical failure,
//! 4 failed comparison or self-test, 5 leak through the periodic boundary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracgreen::eval::{compare_rows, evaluate, linspace, rows_to_csv, rows_to_json, EvalRow, Route};
use fracgreen::field::{format_real, SampledField, SourceField};
use fracgreen::green_fourier::GreenKind;
use fracgreen::moments::{
    is_unverified_asymmetric, moment_closed, moment_closed_two_sided, moment_numeric, MomentOrder, UNVERIFIED_ASYMMETRIC,
};
use fracgreen::solver::solve;
use fracgreen::validation::{run, Level};
use fracgreen::{AnyParams, DiffusionParams, FracError, QuadratureConfig};

#[derive(Parser)]
#[command(name = "fracgreen", version, about = "Fundamental solutions of space-time fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate G1 or G2 on a uniform grid.
    Eval(EvalArgs),
    /// Evaluate a grid by two routes and check that they agree.
    Compare(CompareArgs),
    /// Fractional moment int |x|^delta G1(x, t) dx.
    Moments(MomentArgs),
    /// Full solution for initial data and an optional source.
    Solve(SolveArgs),
    /// Run the built-in acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct Grid {
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Kind::G1)]
    kind: Kind,
}

/// Tolerances: a JSON config file, then individual overrides.
#[derive(Args)]
struct Tolerances {
    /// JSON file with any of rel_tol, abs_tol, k_max, max_panels,
    /// contour_abscissa, contour_height, series_max_terms.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    params: PathBuf,
    #[command(flatten)]
    grid: Grid,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    route: RouteArg,
    #[command(flatten)]
    tol: Tolerances,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct CompareArgs {
    params: PathBuf,
    /// Two routes, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    routes: Vec<RouteArg>,
    #[command(flatten)]
    grid: Grid,
    #[command(flatten)]
    tol: Tolerances,
    /// Relative tolerance for the first route only, overriding the shared
    /// tolerances; shows what a loosened route looks like against a tight one.
    #[arg(long)]
    first_rel_tol: Option<f64>,
    /// Also fail when the largest relative deviation exceeds this, whatever
    /// the error estimates say.
    #[arg(long)]
    max_rel: Option<f64>,
}

#[derive(Args)]
struct MomentArgs {
    params: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args)]
struct SolveArgs {
    params: PathBuf,
    /// Initial field, JSON `{x0, dx, values}` or CSV with header `x,value`.
    #[arg(long)]
    n0: PathBuf,
    /// Source, JSON `{times, slices}`.
    #[arg(long)]
    phi: Option<PathBuf>,
    #[arg(long)]
    t: f64,
    #[command(flatten)]
    tol: Tolerances,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
    level: LevelArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Auto,
    Fourier,
    Series,
    Mellin,
    Closed,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Auto => Route::Auto,
            RouteArg::Fourier => Route::Fourier,
            RouteArg::Series => Route::Series,
            RouteArg::Mellin => Route::Mellin,
            RouteArg::Closed => Route::Closed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    G1,
    G2,
}

impl From<Kind> for GreenKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::G1 => GreenKind::G1,
            Kind::G2 => GreenKind::G2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Closed,
    Numeric,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

/// Why a command stopped.
enum Failure {
    Lib(FracError),
    /// Per-point numerical failures.
    Points(Vec<(f64, String)>),
    /// A comparison or self-test that ran but did not pass.
    Check,
}

impl From<FracError> for Failure {
    fn from(e: FracError) -> Self {
        Failure::Lib(e)
    }
}

fn error_code(e: &FracError) -> u8 {
    match e {
        FracError::Io(_) => 1,
        FracError::InvalidParams(_)
        | FracError::InvalidInput(_)
        | FracError::DomainViolation { .. }
        | FracError::ContourInvalid { .. }
        | FracError::UnsupportedAtBoundary(_)
        | FracError::NotApplicable(_) => 2,
        FracError::BoundaryLeak { .. } => 5,
        FracError::ToleranceNotMet { .. }
        | FracError::PoleAtBMinusA(_)
        | FracError::ImaginaryResidueTooLarge { .. }
        | FracError::DivergentAtOrigin
        | FracError::GammaPole(_)
        | FracError::NonConvergentTail(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
        Err(Failure::Points(points)) => {
            eprintln!("error: {} point(s) failed", points.len());
            for (x, e) in points {
                eprintln!("  x = {}: {e}", format_real(x));
            }
            ExitCode::from(3)
        }
        Err(Failure::Check) => ExitCode::from(4),
    }
}

/// `FRACGREEN_THREADS` caps the worker pool.
fn configure_threads() -> Result<(), FracError> {
    let Ok(v) = std::env::var("FRACGREEN_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| FracError::InvalidInput(format!("FRACGREEN_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| FracError::InvalidInput(e.to_string()))
}

fn read(path: &Path) -> Result<String, FracError> {
    fs::read_to_string(path).map_err(|e| FracError::Io(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, body: &str) -> Result<(), FracError> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| FracError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load_params(path: &Path) -> Result<AnyParams, FracError> {
    AnyParams::from_json(&read(path)?)
}

fn single(p: AnyParams) -> Result<DiffusionParams, FracError> {
    p.to_multi()
        .as_single()
        .ok_or_else(|| FracError::NotApplicable("moments need a single space term".into()))
}

impl Tolerances {
    fn resolve(&self) -> Result<QuadratureConfig, FracError> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str(&read(path)?)
                .map_err(|e| FracError::InvalidInput(format!("{}: {e}", path.display())))?,
            None => QuadratureConfig::default(),
        };
        if let Some(r) = self.rel_tol {
            cfg.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            cfg.abs_tol = a;
        }
        cfg.validate()
    }
}

/// Rows for every point, or the list of points that failed.
fn collect_rows(rows: Vec<fracgreen::Result<EvalRow>>, xs: &[f64]) -> Result<Vec<EvalRow>, Failure> {
    let mut good = Vec::with_capacity(rows.len());
    let mut bad = Vec::new();
    for (r, &x) in rows.into_iter().zip(xs) {
        match r {
            Ok(r) => good.push(r),
            Err(e) => bad.push((x, e.to_string())),
        }
    }
    if bad.is_empty() {
        Ok(good)
    } else {
        Err(Failure::Points(bad))
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let p = load_params(&a.params)?;
    let cfg = a.tol.resolve()?;
    let xs = linspace(a.grid.x_min, a.grid.x_max, a.grid.points)?;
    let rows = evaluate(&p, a.grid.kind.into(), a.route.into(), &xs, a.grid.t, &cfg)?;
    let rows = collect_rows(rows, &xs)?;
    let body = match a.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => rows_to_json(&rows),
    };
    write_out(a.out.as_deref(), &body)?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let [first, second] = a.routes[..] else {
        return Err(FracError::InvalidInput(format!("--routes takes two routes, got {}", a.routes.len())).into());
    };
    if let Some(m) = a.max_rel {
        if !(m >= 0.0) {
            return Err(FracError::InvalidInput(format!("--max-rel {m} must be >= 0")).into());
        }
    }
    let p = load_params(&a.params)?;
    let cfg = a.tol.resolve()?;
    let first_cfg = match a.first_rel_tol {
        Some(r) => QuadratureConfig { rel_tol: r, ..cfg }.validate()?,
        None => cfg,
    };
    let xs = linspace(a.grid.x_min, a.grid.x_max, a.grid.points)?;
    let (kind, t) = (a.grid.kind.into(), a.grid.t);
    let (ra, rb): (Route, Route) = (first.into(), second.into());
    let rows_a = evaluate(&p, kind, ra, &xs, t, &first_cfg)?;
    let rows_b = evaluate(&p, kind, rb, &xs, t, &cfg)?;
    let c = compare_rows(&rows_a, &rows_b, &xs);
    if !c.failed.is_empty() {
        return Err(Failure::Points(c.failed));
    }
    println!("routes: {ra} vs {rb}");
    println!("compared: {}", c.compared);
    println!("skipped (not applicable): {}", c.skipped);
    if c.compared == 0 {
        println!("result: FAIL (no point where both routes apply)");
        return Err(Failure::Check);
    }
    println!("max relative deviation: {:.3e}", c.max_rel);
    println!("mean relative deviation: {:.3e}", c.mean_rel);
    println!("worst x: {}", format_real(c.worst_x));
    println!("within combined error estimates: {}", if c.within_estimates { "yes" } else { "no" });
    let mut passed = c.passed();
    if let Some(m) = a.max_rel {
        let ok = c.max_rel <= m;
        println!("within --max-rel {m:e}: {}", if ok { "yes" } else { "no" });
        passed &= ok;
    }
    if passed {
        println!("result: PASS");
        Ok(())
    } else {
        println!("result: FAIL");
        Err(Failure::Check)
    }
}

fn cmd_moments(a: MomentArgs) -> Result<(), Failure> {
    let p = single(load_params(&a.params)?)?;
    let cfg = a.tol.resolve()?;
    let order = MomentOrder::new(a.delta).check(p.alpha)?;
    let asymmetric = is_unverified_asymmetric(&p);
    let closed = match a.method {
        Method::Numeric => None,
        _ => Some(moment_closed(&p, order, a.t)?),
    };
    let numeric = match a.method {
        Method::Closed => None,
        _ => Some(moment_numeric(&p, a.delta, a.t, &cfg)?),
    };
    if let Some(c) = closed {
        println!("closed: {}", format_real(c));
        if asymmetric {
            println!("closed_two_sided: {}", format_real(moment_closed_two_sided(&p, order, a.t)?));
        }
    }
    if let Some(n) = numeric {
        println!("numeric: {}", format_real(n));
    }
    if let (Some(c), Some(n)) = (closed, numeric) {
        println!("relative_difference: {:.3e}", ((c - n) / n).abs());
    }
    if asymmetric && closed.is_some() {
        println!("flag: {UNVERIFIED_ASYMMETRIC}");
    }
    Ok(())
}

fn load_field(path: &Path) -> Result<SampledField, FracError> {
    let body = read(path)?;
    if body.trim_start().starts_with('{') {
        SampledField::from_json(&body)
    } else {
        SampledField::from_csv(&body)
    }
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let p = load_params(&a.params)?;
    let cfg = a.tol.resolve()?;
    let n0 = load_field(&a.n0)?;
    let phi = match &a.phi {
        Some(path) => Some(SourceField::from_json(&read(path)?)?),
        None => None,
    };
    let out = solve(p.to_multi(), &n0, phi.as_ref(), a.t, &cfg)?;
    let body = match a.format {
        Format::Csv => out.to_csv(),
        Format::Json => out.to_json() + "\n",
    };
    write_out(a.out.as_deref(), &body)?;
    Ok(())
}

fn cmd_selftest(a: SelftestArgs) -> Result<(), Failure> {
    let level = match a.level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let report = run(level);
    print!("{}", report.render());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
