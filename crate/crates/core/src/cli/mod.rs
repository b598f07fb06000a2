//! Batch front-end: `solve`, `value`, `simulate` and `validate`.
//!
//! Exit codes: 0 success, 1 bad configuration or usage, 2 Picard iteration
//! did not converge (outputs are still written), 3 numeric failure,
//! 4 validation failure.

pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gmb::BridgeTables;
use crate::montecarlo::optimality_check;
use crate::solver::{solve, value_at, Boundary, ConvergenceLog, ValueSurface};

pub use config::{ConfigError, Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "GMB_OSP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gmb-osp", version, about = "Optimal stopping boundaries of Gauss-Markov bridges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the stopping boundary; writes boundary.csv and convergence.json.
    Solve(Common),
    /// Evaluate the value function on a grid; writes value_surface.csv.
    Value(ValueArgs),
    /// Monte Carlo payoff of the boundary rule and its shifts; writes mc_report.json.
    Simulate(Common),
    /// Run the oracle and property checks and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo seed, overriding `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 or absent means one per core.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ValueArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated times; default 11 equispaced points on [0, T].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_grid: Option<Vec<f64>>,
    /// Comma-separated states; default 31 points around the pin and b(0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x_grid: Option<Vec<f64>>,
    /// Reuse a boundary.csv from `solve` instead of solving again.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, hide = true)]
    pub inject_fault: Option<Fault>,
}

/// Deliberate defects for checking that `validate` notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    KernelSignFlip,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let threads = match &cli.command {
        Command::Solve(c) | Command::Simulate(c) => c.threads,
        Command::Value(v) => v.common.threads,
        Command::Validate(v) => v.common.threads,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_NUMERIC;
        }
    };
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> i32 {
    let outcome = match command {
        Command::Solve(c) => with_config(&c, |cfg, out| cmd_solve(cfg, out)),
        Command::Value(v) => with_config(&v.common, |cfg, out| {
            let grids = (v.t_grid.as_deref(), v.x_grid.as_deref());
            cmd_value(cfg, out, grids, v.boundary.as_deref())
        }),
        Command::Simulate(c) => with_config(&c, |cfg, out| cmd_simulate(cfg, out)),
        Command::Validate(v) => return cmd_validate(&v),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Spec(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn with_config(common: &Common, f: impl FnOnce(&RunConfig, &Path) -> Result<i32>) -> Result<i32> {
    let Some(path) = &common.config else {
        eprintln!("error: --config <path> is required");
        return Ok(EXIT_CONFIG);
    };
    let mut cfg = match RunConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    if let Some(seed) = common.seed {
        cfg.mc.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    f(&cfg, &out)
}

fn convergence_code(log: &ConvergenceLog) -> i32 {
    if log.converged {
        EXIT_OK
    } else {
        eprintln!(
            "warning: not converged after {} iterations (last d = {:.3e})",
            log.iterations,
            log.d.last().copied().unwrap_or(f64::NAN)
        );
        EXIT_NOT_CONVERGED
    }
}

/// Solves the configured bridge and writes `boundary.csv` and
/// `convergence.json`.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (_, boundary, log) = solve(&cfg.bridge(), &cfg.solver_config())?;
    if cfg.output.wants(Format::Csv) {
        output::write_atomic(&out.join("boundary.csv"), &output::boundary_csv(&boundary)?)?;
    }
    if cfg.output.wants(Format::Json) {
        output::write_atomic(&out.join("convergence.json"), &output::json_bytes(&log)?)?;
    }
    println!(
        "{} iterations, b(0) = {:.6}, output in {}",
        log.iterations,
        boundary.values()[0],
        out.display()
    );
    Ok(convergence_code(&log))
}

fn solved_or_loaded(cfg: &RunConfig, boundary: Option<&Path>) -> Result<(BridgeTables, Boundary, i32)> {
    let spec = cfg.bridge();
    let solver = cfg.solver_config();
    match boundary {
        Some(path) => {
            solver.validate()?;
            let tables = BridgeTables::build(spec, solver.quadrature())?;
            let b = output::read_boundary_csv(path, tables.pin())?;
            if (b.mesh().horizon() - tables.horizon()).abs() > 1e-12 * tables.horizon() {
                return Err(Error::Domain(format!(
                    "{} ends at t = {}, the model horizon is {}",
                    path.display(),
                    b.mesh().horizon(),
                    tables.horizon()
                )));
            }
            Ok((tables, b, EXIT_OK))
        }
        None => {
            let (tables, b, log) = solve(&spec, &solver)?;
            Ok((tables, b, convergence_code(&log)))
        }
    }
}

/// Rows `(t, x, V(t, x))` over the product grid, `t` outer.
pub fn value_rows(tables: &BridgeTables, boundary: &Boundary, ts: &[f64], xs: &[f64]) -> Result<Vec<[f64; 3]>> {
    let surface = ValueSurface::new(tables, boundary)?;
    let mut rows = Vec::with_capacity(ts.len() * xs.len());
    for &t in ts {
        for &x in xs {
            rows.push([t, x, surface.value(t, x)?]);
        }
    }
    Ok(rows)
}

fn default_grids(cfg: &RunConfig, boundary: &Boundary) -> (Vec<f64>, Vec<f64>) {
    let horizon = cfg.model.horizon;
    let ts = (0..=10).map(|k| horizon * k as f64 / 10.0).collect();
    let lo = cfg.model.z.min(cfg.model.x0) - 1.0;
    let hi = boundary.values()[0].max(cfg.model.x0) + 0.5;
    let xs = (0..=30).map(|k| lo + (hi - lo) * k as f64 / 30.0).collect();
    (ts, xs)
}

/// Evaluates `V` on a grid and writes `value_surface.csv`.
pub fn cmd_value(
    cfg: &RunConfig,
    out: &Path,
    grids: (Option<&[f64]>, Option<&[f64]>),
    boundary: Option<&Path>,
) -> Result<i32> {
    let (tables, boundary, code) = solved_or_loaded(cfg, boundary)?;
    let (default_t, default_x) = default_grids(cfg, &boundary);
    let ts = grids.0.unwrap_or(&default_t);
    let xs = grids.1.unwrap_or(&default_x);
    if let Some(t) = ts.iter().find(|t| !(0.0..=tables.horizon()).contains(*t)) {
        return Err(Error::config("--t-grid", format!("t = {t} outside [0, T]")));
    }
    let rows = value_rows(&tables, &boundary, ts, xs)?;
    if cfg.output.wants(Format::Csv) {
        let bytes = output::csv_bytes(["t", "x", "V"], rows)?;
        output::write_atomic(&out.join("value_surface.csv"), &bytes)?;
    }
    println!("{} x {} grid, output in {}", ts.len(), xs.len(), out.display());
    Ok(code)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub paths: usize,
    pub seed: u64,
    pub t0: f64,
    pub x0: f64,
    /// `V(0, x0)` from the integral representation, for comparison.
    pub value: f64,
    pub mean: f64,
    /// `null` for a single path.
    pub se: Option<f64>,
    pub histogram: Histogram,
    pub shifts: Vec<ShiftReport>,
}

/// Stopping-node counts, nonzero entries only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub t: Vec<f64>,
    pub count: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub delta: f64,
    pub mean: f64,
    pub difference: f64,
    pub se: Option<f64>,
}

pub fn mc_report(cfg: &RunConfig, tables: &BridgeTables, boundary: &Boundary) -> Result<McReport> {
    let mc = cfg.mc_config()?;
    let x0 = cfg.model.x0;
    let report = optimality_check(tables, boundary, 0.0, x0, &cfg.mc.deltas, &mc)?;
    let se = |s: f64| (mc.paths > 1).then_some(s);
    let (t, count) = boundary
        .times()
        .iter()
        .zip(&report.base.stop_time_histogram)
        .filter(|(_, &c)| c > 0)
        .map(|(&t, &c)| (t, c))
        .unzip();
    Ok(McReport {
        paths: mc.paths,
        seed: mc.seed,
        t0: 0.0,
        x0,
        value: value_at(tables, boundary, 0.0, x0)?,
        mean: report.base.mean,
        se: se(report.base.std_error),
        histogram: Histogram { t, count },
        shifts: report
            .shifts
            .iter()
            .map(|s| ShiftReport {
                delta: s.delta,
                mean: s.mean,
                difference: s.difference,
                se: se(s.difference_std_error),
            })
            .collect(),
    })
}

/// Simulates the boundary rule from `(0, x0)` and writes `mc_report.json`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (tables, boundary, code) = solved_or_loaded(cfg, None)?;
    let report = mc_report(cfg, &tables, &boundary)?;
    if cfg.output.wants(Format::Json) {
        output::write_atomic(&out.join("mc_report.json"), &output::json_bytes(&report)?)?;
    }
    println!(
        "payoff {:.6} (se {}), V(0, x0) = {:.6}, output in {}",
        report.mean,
        report.se.map_or("n/a".to_string(), |s| format!("{s:.2e}")),
        report.value,
        out.display()
    );
    Ok(code)
}

pub fn cmd_validate(args: &ValidateArgs) -> i32 {
    if args.inject_fault == Some(Fault::KernelSignFlip) {
        crate::kernel::inject_sign_flip(true);
    }
    let mut checks = validate::builtin_checks();
    if let Some(path) = &args.common.config {
        match RunConfig::load(path) {
            Ok(cfg) => checks.extend(validate::model_checks(&cfg.bridge(), &cfg.solver_config())),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    print!("{}", validate::render_table(&checks));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        EXIT_OK
    } else {
        eprintln!("failed: {}", failed.join(", "));
        EXIT_VALIDATION
    }
}
