use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hzeros_core::asymptotics::{predict_expected_zeros, PredictionMode, Regime};
use hzeros_core::ensembles::{ensemble_pair, EnsembleKind};
use hzeros_core::intensity::{density_grid, radial_profile};
use hzeros_core::montecarlo::monte_carlo_expectation;
use hzeros_core::quadrature::{expected_zeros, expected_zeros_with_budget, Region, DEFAULT_MAX_EVALUATIONS};
use serde::Serialize;
use serde_json::{json, Value};

const SCHEMA_VERSION: &str = "1.0";

#[derive(Parser, Debug)]
#[command(name = "hzeros", version, about = "Expected zeros of random Gaussian harmonic polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected number of zeros in a region (JSON report).
    Expect(ExpectArgs),
    /// Zero density as a radial profile and/or planar grid (CSV files).
    Intensity(IntensityArgs),
    /// Quadrature against the asymptotic law over a list of degrees (CSV table).
    Sweep(SweepArgs),
    /// Sampled zero counts compared with the quadrature value (JSON report).
    Montecarlo(MonteCarloArgs),
}

#[derive(Args, Debug, Serialize)]
struct Ensemble {
    #[arg(long, value_parser = parse_kind)]
    ensemble: EnsembleKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
}

#[derive(Args, Debug, Serialize)]
struct ExpectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    ensemble: Ensemble,
    #[arg(long, default_value = "plane", value_parser = parse_region)]
    region: Region,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Integrand evaluation budget for the adaptive quadrature.
    #[arg(long, default_value_t = DEFAULT_MAX_EVALUATIONS)]
    max_evaluations: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct IntensityArgs {
    #[arg(long, value_parser = parse_kind)]
    ensemble: EnsembleKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Grid cells per side.
    #[arg(long, requires = "extent")]
    grid: Option<usize>,
    /// Half-width of the square grid.
    #[arg(long, requires = "grid")]
    extent: Option<f64>,
    #[arg(long, requires = "r_max")]
    radial_points: Option<usize>,
    #[arg(long, requires = "radial_points")]
    r_max: Option<f64>,
    /// Also write I_{n,m} - I_{n,0}.
    #[arg(long)]
    subtract_analytic: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, value_parser = parse_kind)]
    ensemble: EnsembleKind,
    /// m = round(alpha n) for each n.
    #[arg(long, conflicts_with = "m_fixed", required_unless_present = "m_fixed")]
    alpha: Option<f64>,
    #[arg(long)]
    m_fixed: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value = "theorem", value_parser = parse_mode)]
    mode: PredictionMode,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct MonteCarloArgs {
    #[command(flatten)]
    #[serde(flatten)]
    ensemble: Ensemble,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<EnsembleKind, String> {
    s.parse().map_err(|e: hzeros_core::Error| e.to_string())
}

fn parse_region(s: &str) -> Result<Region, String> {
    s.parse().map_err(|e: hzeros_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<PredictionMode, String> {
    match s {
        "theorem" => Ok(PredictionMode::Theorem),
        "conjecture" => Ok(PredictionMode::Conjecture),
        _ => Err(format!("unknown mode `{s}` (theorem|conjecture)")),
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<hzeros_core::Error> for Failure {
    fn from(e: hzeros_core::Error) -> Self {
        match e {
            hzeros_core::Error::ResampleBudget { .. } => Failure::Numeric(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Report {
    schema_version: &'static str,
    command: Value,
    ensemble: Value,
    results: Value,
    timing: Value,
    version: &'static str,
    seed: Option<u64>,
}

impl Report {
    fn new(name: &str, args: &impl Serialize, ensemble: Value, results: Value, started: Instant, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: json!({ "name": name, "args": args }),
            ensemble,
            results,
            timing: json!({ "elapsed_seconds": started.elapsed().as_secs_f64() }),
            version: env!("CARGO_PKG_VERSION"),
            seed,
        }
    }
}

fn ensemble_meta(kind: EnsembleKind, n: usize, m: usize) -> Value {
    json!({ "kind": kind, "n": n, "m": m })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn emit_report(report: &Report, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    emit(&text, out)
}

fn check_tolerance(rel_tol: f64) -> Result<(), Failure> {
    if !(1e-12..=1e-2).contains(&rel_tol) {
        return Err(Failure::Usage(format!("--rel-tol {rel_tol:e} outside [1e-12, 1e-2]")));
    }
    Ok(())
}

fn cmd_expect(args: &ExpectArgs) -> Result<(), Failure> {
    let started = Instant::now();
    check_tolerance(args.rel_tol)?;
    let Ensemble { ensemble: kind, n, m } = args.ensemble;
    let (p, q) = ensemble_pair(kind, n, m)?;
    let r = expected_zeros_with_budget(&p, &q, n, m, args.region, args.rel_tol, args.max_evaluations)?;
    let results = json!({
        "region": args.region.to_string(),
        "expected_zeros": r.value,
        "abs_error_estimate": r.abs_error_estimate,
        "evaluations": r.evaluations,
        "truncation_point": r.truncation_point,
        "converged": r.converged,
    });
    let report = Report::new("expect", args, ensemble_meta(kind, n, m), results, started, None);
    emit_report(&report, args.out.as_deref())?;
    if !r.converged {
        return Err(Failure::Numeric(format!(
            "quadrature did not reach rel_tol {:e} within {} evaluations",
            args.rel_tol, r.evaluations
        )));
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_intensity(args: &IntensityArgs) -> Result<(), Failure> {
    let (kind, n, m) = (args.ensemble, args.n, args.m);
    if args.grid.is_none() && args.radial_points.is_none() {
        return Err(Failure::Usage("give --grid/--extent and/or --radial-points/--r-max".into()));
    }
    let (p, q) = ensemble_pair(kind, n, m)?;
    let (p0, q0) = ensemble_pair(kind, n, 0)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Io(format!("{}: {e}", args.out_dir.display())))?;
    let mut written = Vec::new();
    if let (Some(points), Some(r_max)) = (args.radial_points, args.r_max) {
        let profile = radial_profile(&p, &q, n, m, r_max, points)?;
        written.push(write_file(&args.out_dir, "intensity_profile.csv", &profile.to_csv())?);
        if args.subtract_analytic {
            let base = radial_profile(&p0, &q0, n, 0, r_max, points)?;
            let diff = profile.difference(&base)?;
            written.push(write_file(&args.out_dir, "intensity_profile_minus_analytic.csv", &diff.to_csv())?);
        }
    }
    if let (Some(resolution), Some(extent)) = (args.grid, args.extent) {
        let grid = density_grid(&p, &q, n, m, extent, resolution)?;
        written.push(write_file(&args.out_dir, "intensity_grid.csv", &grid.to_csv())?);
        if args.subtract_analytic {
            let base = density_grid(&p0, &q0, n, 0, extent, resolution)?;
            let diff = grid.difference(&base)?;
            written.push(write_file(&args.out_dir, "intensity_grid_minus_analytic.csv", &diff.to_csv())?);
        }
    }
    let listing: String = written.iter().map(|p| format!("{}\n", p.display())).collect();
    emit(&listing, None)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    check_tolerance(args.rel_tol)?;
    if args.n_list.is_empty() {
        return Err(Failure::Usage("--n-list is empty".into()));
    }
    if let Some(alpha) = args.alpha {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Failure::Usage(format!("--alpha {alpha} outside (0, 1]")));
        }
    }
    let mut csv = String::from("n,m,value,abs_error,prediction,ratio\n");
    let mut unconverged = Vec::new();
    for &n in &args.n_list {
        let (m, regime) = match (args.alpha, args.m_fixed) {
            (Some(alpha), _) if alpha == 1.0 => (n, Regime::MEqualsN),
            (Some(alpha), _) => ((alpha * n as f64).round() as usize, Regime::MProportional),
            (None, Some(m)) => (m, Regime::MFixed),
            (None, None) => unreachable!("clap requires one of --alpha, --m-fixed"),
        };
        let (p, q) = ensemble_pair(args.ensemble, n, m)?;
        let r = expected_zeros(&p, &q, n, m, Region::Plane, args.rel_tol)?;
        if !r.converged {
            unconverged.push(n);
        }
        let prediction = predict_expected_zeros(args.ensemble, n, m, regime, args.mode)?;
        csv.push_str(&format!(
            "{n},{m},{},{},{},{}\n",
            r.value,
            r.abs_error_estimate,
            prediction.value,
            r.value / prediction.value
        ));
    }
    emit(&csv, args.out.as_deref())?;
    if !unconverged.is_empty() {
        return Err(Failure::Numeric(format!("quadrature did not converge for n = {unconverged:?}")));
    }
    Ok(())
}

fn cmd_montecarlo(args: &MonteCarloArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let Ensemble { ensemble: kind, n, m } = args.ensemble;
    let est = monte_carlo_expectation(kind, n, m, args.trials, args.seed)?;
    let (p, q) = ensemble_pair(kind, n, m)?;
    let reference = expected_zeros(&p, &q, n, m, Region::Plane, 1e-10)?;
    let z_score = if est.stderr > 0.0 {
        Some((est.mean - reference.value) / est.stderr)
    } else if (est.mean - reference.value).abs() <= 1e-6 * reference.value.max(1.0) {
        Some(0.0)
    } else {
        None
    };
    let histogram: serde_json::Map<String, Value> =
        est.histogram.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let results = json!({
        "trials": est.trials,
        "mean": est.mean,
        "stderr": est.stderr,
        "histogram": histogram,
        "resampled": est.resampled,
        "quadrature_reference": reference.value,
        "z_score": z_score,
    });
    let report = Report::new("montecarlo", args, ensemble_meta(kind, n, m), results, started, Some(args.seed));
    emit_report(&report, args.out.as_deref())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("HZ_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("HZ_THREADS must be a nonnegative integer, got `{raw}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Expect(args) => cmd_expect(args),
        Command::Intensity(args) => cmd_intensity(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Numeric(msg) | Failure::Io(msg)) = &f;
            eprintln!("hzeros: {msg}");
            ExitCode::from(f.code())
        }
    }
}
