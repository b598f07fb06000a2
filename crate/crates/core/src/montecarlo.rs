//! Exact-transition simulation of the bridge and Monte Carlo estimates of
//! the payoff of a boundary stopping rule.
//!
//! Paths move node to node by sampling the Gaussian transition law, so
//! there is no discretization bias from the exploding drift near `T`.
//! Stopping is checked at mesh nodes only.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gmb::{BridgeTables, ParentState};
use crate::rng::PathStream;
use crate::solver::{Boundary, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(paths: usize, seed: u64) -> Result<Self> {
        if paths == 0 {
            return Err(Error::config("mc.paths", "must be >= 1"));
        }
        Ok(Self { paths, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Paths stopped at each mesh node.
    pub stop_time_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftResult {
    pub delta: f64,
    pub mean: f64,
    /// Mean of `payoff(boundary + δ) − payoff(boundary)` over paired paths.
    pub difference: f64,
    pub difference_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub base: PayoffEstimate,
    pub shifts: Vec<ShiftResult>,
}

/// Values of one simulated path at mesh nodes `start..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub start: usize,
    pub values: Vec<f64>,
}

fn start_index(mesh: &Mesh, t0: f64) -> Result<usize> {
    let nodes = mesh.nodes();
    let n = mesh.intervals();
    let tol = 1e-12 * mesh.horizon();
    let i = nodes
        .iter()
        .position(|&t| (t - t0).abs() <= tol)
        .ok_or_else(|| Error::Domain(format!("t0 = {t0} is not a mesh node")))?;
    if i == n {
        return Err(Error::Domain("no mesh nodes remain after t0".into()));
    }
    Ok(i)
}

/// Sequential sampler for one path; node `i` consumes the `i`-th draw of
/// the path's stream.
struct Walker<'a> {
    tables: &'a BridgeTables,
    states: &'a [ParentState],
    stream: PathStream,
    index: usize,
    value: f64,
}

fn node_states(tables: &BridgeTables, mesh: &Mesh) -> Vec<ParentState> {
    let n = mesh.intervals();
    let mut states: Vec<ParentState> = mesh.nodes().iter().map(|&t| tables.parent_state(t)).collect();
    states[n] = tables.end_state();
    states
}

impl<'a> Walker<'a> {
    fn new(
        tables: &'a BridgeTables,
        states: &'a [ParentState],
        start: usize,
        x0: f64,
        seed: u64,
        path: u64,
    ) -> Self {
        Self {
            tables,
            states,
            stream: PathStream::new(seed, path),
            index: start,
            value: x0,
        }
    }

    fn advance(&mut self) -> f64 {
        let (from, to) = (&self.states[self.index], &self.states[self.index + 1]);
        let draw = self.stream.standard_normal();
        let law = self.tables.transition_between(from, self.value, to);
        self.index += 1;
        self.value = if self.index + 1 == self.states.len() {
            self.tables.pin()
        } else {
            law.mean + law.std_dev() * draw
        };
        self.value
    }
}

pub fn sample_path(
    tables: &BridgeTables,
    t0: f64,
    x0: f64,
    mesh: &Mesh,
    seed: u64,
    path: u64,
) -> Result<Path> {
    if !x0.is_finite() {
        return Err(Error::Domain(format!("x0 = {x0} is not finite")));
    }
    let start = start_index(mesh, t0)?;
    let states = node_states(tables, mesh);
    let mut walker = Walker::new(tables, &states, start, x0, seed, path);
    let mut values = vec![x0];
    while walker.index < mesh.intervals() {
        values.push(walker.advance());
    }
    Ok(Path { start, values })
}

/// Simulates one path until every rule has stopped; returns
/// `(payoff, node)` per rule.
fn stop_under_rules(
    tables: &BridgeTables,
    states: &[ParentState],
    start: usize,
    x0: f64,
    seed: u64,
    path: u64,
    rules: &[&[f64]],
) -> Vec<(f64, usize)> {
    let mut walker = Walker::new(tables, states, start, x0, seed, path);
    let mut out: Vec<Option<(f64, usize)>> = vec![None; rules.len()];
    let mut pending = rules.len();
    let n = states.len() - 1;
    loop {
        let (i, x) = (walker.index, walker.value);
        for (slot, rule) in out.iter_mut().zip(rules) {
            if slot.is_none() && (x >= rule[i] || i == n) {
                *slot = Some((x, i));
                pending -= 1;
            }
        }
        if pending == 0 {
            break;
        }
        walker.advance();
    }
    out.into_iter().map(|s| s.expect("every rule stops by T")).collect()
}

fn compensated_mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = neumaier_sum(xs.iter().copied()) / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (m - 1.0) / m).sqrt())
}

fn neumaier_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn summarize(outcomes: impl Iterator<Item = (f64, usize)>, nodes: usize) -> PayoffEstimate {
    let mut histogram = vec![0u64; nodes];
    let payoffs: Vec<f64> = outcomes
        .map(|(x, i)| {
            histogram[i] += 1;
            x
        })
        .collect();
    let (mean, std_error) = compensated_mean_and_se(&payoffs);
    PayoffEstimate {
        mean,
        std_error,
        stop_time_histogram: histogram,
    }
}

/// Payoff of stopping at the first node where `X ≥ b`, started from
/// `(t0, x0)`.
pub fn estimate_payoff(
    tables: &BridgeTables,
    boundary: &Boundary,
    t0: f64,
    x0: f64,
    cfg: &McConfig,
) -> Result<PayoffEstimate> {
    Ok(optimality_check(tables, boundary, t0, x0, &[], cfg)?.base)
}

/// Payoff of `boundary` and of its uniform shifts `boundary + δ`, all on
/// common random numbers.
pub fn optimality_check(
    tables: &BridgeTables,
    boundary: &Boundary,
    t0: f64,
    x0: f64,
    deltas: &[f64],
    cfg: &McConfig,
) -> Result<OptimalityReport> {
    if cfg.paths == 0 {
        return Err(Error::config("mc.paths", "must be >= 1"));
    }
    if !x0.is_finite() {
        return Err(Error::Domain(format!("x0 = {x0} is not finite")));
    }
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::Domain(format!("shift {d} is not finite")));
    }
    let mesh = boundary.mesh();
    let start = start_index(mesh, t0)?;
    let shifted: Vec<Boundary> = deltas.iter().map(|&d| boundary.shifted(d)).collect();
    let rules: Vec<&[f64]> = std::iter::once(boundary.values())
        .chain(shifted.iter().map(|b| b.values()))
        .collect();

    let states = node_states(tables, mesh);
    let outcomes: Vec<Vec<(f64, usize)>> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|p| stop_under_rules(tables, &states, start, x0, cfg.seed, p, &rules))
        .collect();

    let nodes = mesh.nodes().len();
    let base = summarize(outcomes.iter().map(|o| o[0]), nodes);
    let shifts = deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let est = summarize(outcomes.iter().map(|o| o[k + 1]), nodes);
            let diffs: Vec<f64> = outcomes.iter().map(|o| o[k + 1].0 - o[0].0).collect();
            let (difference, difference_std_error) = compensated_mean_and_se(&diffs);
            ShiftResult {
                delta,
                mean: est.mean,
                difference,
                difference_std_error,
            }
        })
        .collect();
    Ok(OptimalityReport { base, shifts })
}
