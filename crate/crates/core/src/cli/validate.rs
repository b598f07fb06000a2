//! The `validate` command: oracle and property checks with a pass/fail
//! table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gmb::{BridgeSpec, BridgeTables, DriftLine};
use crate::kernel::{eval_kernel, std_normal_pdf, KernelInput};
use crate::reference::{bb_relative_l2, oub_closed_forms, BBSpec, OUBSpec, BB_BOUNDARY_CONSTANT};
use crate::solver::{free_boundary_residual, solve, Boundary, SolverConfig};
use crate::transform::transform_boundary;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, e.to_string()),
        }
    }
}

pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{verdict}  {:<width$}  {}\n", c.name, c.detail));
    }
    out
}

/// Checks that need no configuration.
pub fn builtin_checks() -> Vec<Check> {
    let bb = BBSpec::new(1.0, 0.0, 1.0).expect("valid Brownian bridge");
    let solved = solve(&bb.bridge(0.0), &SolverConfig::default());
    let mut checks = vec![
        Check::from_result("bb_boundary", check_bb(&bb, &solved)),
        Check::from_result("bb_sigma_scaling", check_sigma_scaling(&solved)),
        Check::from_result("oub_closed_forms", check_oub_pipeline()),
        Check::from_result("oub_small_rate_limit", check_small_rate()),
        Check::from_result("kernel_quadrature", check_kernel_quadrature()),
        Check::from_result("chapman_kolmogorov", check_chapman_kolmogorov()),
    ];
    match &solved {
        Ok((tables, boundary, _)) => {
            checks.push(Check::from_result("bb_lower_bound", check_lower_bound(tables, boundary)));
            checks.push(Check::from_result(
                "bb_self_consistency",
                check_residual(tables, boundary, SolverConfig::default().tol),
            ));
        }
        Err(e) => checks.push(Check::new("bb_lower_bound", false, e.to_string())),
    }
    checks
}

/// Checks on the model of a run configuration.
pub fn model_checks(spec: &BridgeSpec, cfg: &SolverConfig) -> Vec<Check> {
    let (tables, boundary, log) = match solve(spec, cfg) {
        Ok(s) => s,
        Err(e) => return vec![Check::new("config_solve", false, e.to_string())],
    };
    let n = boundary.values().len() - 1;
    let z = tables.pin();
    vec![
        Check::new(
            "config_converged",
            log.converged,
            format!("{} iterations, last d = {:.3e}", log.iterations, log.d.last().unwrap_or(&f64::NAN)),
        ),
        Check::new(
            "config_horizon_pin",
            boundary.values()[n - 1] == z && boundary.values()[n] == z,
            format!("b(t_N-1) = {}, b(t_N) = {}", boundary.values()[n - 1], boundary.values()[n]),
        ),
        Check::from_result("config_self_consistency", check_residual(&tables, &boundary, cfg.tol)),
        Check::from_result("config_lower_bound", check_lower_bound(&tables, &boundary)),
    ]
}

type Solved = Result<(BridgeTables, Boundary, crate::solver::ConvergenceLog)>;

fn check_bb(bb: &BBSpec, solved: &Solved) -> Result<(bool, String)> {
    let (_, boundary, log) = solved.as_ref().map_err(clone_err)?;
    let b0 = boundary.values()[0];
    let l2 = bb_relative_l2(bb, boundary);
    let passed = log.converged && (b0 - BB_BOUNDARY_CONSTANT).abs() <= 0.01 && l2 <= 2e-2;
    Ok((
        passed,
        format!("b(0) = {b0:.5}, rel L2 = {l2:.2e}, {} iterations", log.iterations),
    ))
}

fn check_sigma_scaling(unit: &Solved) -> Result<(bool, String)> {
    let (_, one, _) = unit.as_ref().map_err(clone_err)?;
    let (_, two, _) = solve(&BridgeSpec::brownian(2.0, 1.0, 0.0, 0.0), &SolverConfig::default())?;
    let gap = (two.values()[0] - 2.0 * one.values()[0]).abs();
    Ok((gap <= 0.02, format!("|b_2(0) - 2 b_1(0)| = {gap:.2e}")))
}

fn check_oub_pipeline() -> Result<(bool, String)> {
    let spec = OUBSpec::new(1.0, 1.0, 1.0, 1.0, 0.0)?;
    let tables = BridgeTables::build(spec.bridge(), 5000)?;
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let t = k as f64 / 51.0;
        let exact = oub_closed_forms(&spec, t)?;
        let (r1, r2) = tables.bridge_factorization(t);
        let mean = tables.bridge_transition(0.0, spec.x, t)?.mean;
        let gamma = crate::transform::time_change(&tables, t)?.gamma;
        for (got, want) in [(mean, exact.mean), (r1 * r2, exact.r1 * exact.r2), (gamma, exact.gamma)] {
            worst = worst.max(((got - want) / want).abs());
        }
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e} over 50 nodes")))
}

fn check_small_rate() -> Result<(bool, String)> {
    let (c, horizon, x, z) = (1.3, 2.0, 0.4, -1.0);
    let spec = OUBSpec::new(1e-4, c, horizon, z, x)?;
    let mut worst: f64 = 0.0;
    for t in [0.2, 0.9, 1.7] {
        let f = oub_closed_forms(&spec, t)?;
        let mean = x * (1.0 - t / horizon) + z * t / horizon;
        let cov = c * c * t * (horizon - t) / horizon;
        worst = worst.max(((f.mean - mean) / mean).abs()).max(((f.r1 * f.r2 - cov) / cov).abs());
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e}")))
}

/// `E[μ(X)·1{X ≥ x2}]` for `X ~ N(mean, sd²)` by composite Simpson on
/// `[max(ξ, −12), 12]` in standardized units.
fn kernel_by_quadrature(mean: f64, sd: f64, drift: &DriftLine, x2: f64) -> f64 {
    const PANELS: usize = 20_000;
    let lo = ((x2 - mean) / sd).max(-12.0);
    let hi = 12.0;
    if lo >= hi {
        return 0.0;
    }
    let h = (hi - lo) / PANELS as f64;
    let f = |u: f64| drift.eval(mean + sd * u) * std_normal_pdf(u);
    let mut acc = f(lo) + f(hi);
    for k in 1..PANELS {
        acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn check_kernel_quadrature() -> Result<(bool, String)> {
    let bb = BridgeTables::build(BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), 2000)?;
    let oub = BridgeTables::build(OUBSpec::new(1.0, 1.0, 1.0, 0.5, 0.0)?.bridge(), 2000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for tables in [&bb, &oub] {
        for _ in 0..100 {
            let t1 = rng.random_range(0.0..0.9);
            let t2 = rng.random_range(t1 + 1e-3..0.95);
            let x1 = rng.random_range(-2.0..2.0);
            let law = tables.bridge_transition(t1, x1, t2)?;
            let x2 = law.mean + law.std_dev() * rng.random_range(-3.0..3.0);
            let drift = tables.drift_line(t2)?;
            let closed = eval_kernel(tables, KernelInput { t1, x1, t2, x2 })?;
            let quad = kernel_by_quadrature(law.mean, law.std_dev(), &drift, x2);
            worst = worst.max((closed - quad).abs());
        }
    }
    Ok((worst < 1e-8, format!("max |K - quadrature| = {worst:.2e} over 200 inputs")))
}

fn check_chapman_kolmogorov() -> Result<(bool, String)> {
    let tables = BridgeTables::build(OUBSpec::new(-0.7, 1.2, 2.0, 0.3, -0.5)?.bridge(), 4000)?;
    let (t1, t2, t3, x1) = (0.2, 0.9, 1.6, 0.4);
    let direct = tables.bridge_transition(t1, x1, t3)?;
    let mid = tables.bridge_transition(t1, x1, t2)?;
    let at = |x: f64| tables.bridge_transition(t2, x, t3);
    let slope = at(1.0)?.mean - at(0.0)?.mean;
    let last = at(mid.mean)?;
    let mean_gap = (last.mean - direct.mean).abs();
    let var_gap = (last.var + slope * slope * mid.var - direct.var).abs();
    Ok((
        mean_gap.max(var_gap) <= 1e-8,
        format!("mean gap {mean_gap:.2e}, variance gap {var_gap:.2e}"),
    ))
}

/// `g(s) < b_W(s)` at every unpinned node; at the pinned node `t_{N−1}`
/// the two may touch.
fn check_lower_bound(tables: &BridgeTables, boundary: &Boundary) -> Result<(bool, String)> {
    let nodes = transform_boundary(tables, boundary)?;
    // the node before the horizon holds the pin z, not a solved value
    let (pinned, free) = nodes.split_last().expect("mesh has at least two intervals");
    let gaps: Vec<f64> = free.iter().map(|n| n.boundary - n.lower_bound).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        gaps.iter().all(|&g| g > 0.0),
        format!(
            "min b_W - g over unpinned nodes = {min_gap:.3e} (pinned node {:.3e})",
            pinned.boundary - pinned.lower_bound
        ),
    ))
}

fn check_residual(tables: &BridgeTables, boundary: &Boundary, tol: f64) -> Result<(bool, String)> {
    let r = free_boundary_residual(tables, boundary)?;
    Ok((r <= tol, format!("relative residual {r:.2e} (tol {tol:.0e})")))
}

fn clone_err(e: &crate::Error) -> crate::Error {
    crate::Error::Numeric(e.to_string())
}
