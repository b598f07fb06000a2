//! Picard iteration for the free-boundary equation
//! `b(t) = z − ∫_t^T K(t, b(t), u, b(u)) du`, and the value formula
//! `V(t, x) = z − ∫_t^T K(t, x, u, b(u)) du`.
//!
//! Both integrals are right Riemann sums on the mesh. The addend whose
//! right end is `T` is dropped because the kernel is undefined there; the
//! boundary is pinned to `z` on the last two nodes instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmb::{BridgeSpec, BridgeTables, DriftLine, ParentState};
use crate::kernel::kernel_between;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    #[default]
    LogSpaced,
    Uniform,
    Custom,
}

/// Partition `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    kind: MeshKind,
}

impl Mesh {
    /// `t_i = T·ln(1 + i(e − 1)/N)`; increments shrink toward the horizon.
    pub fn log_spaced(n: usize, horizon: f64) -> Result<Self> {
        check_mesh_args(n, horizon)?;
        let scale = (std::f64::consts::E - 1.0) / n as f64;
        let mut nodes: Vec<f64> = (0..=n)
            .map(|i| horizon * (i as f64 * scale).ln_1p())
            .collect();
        nodes[n] = horizon;
        Ok(Self { nodes, kind: MeshKind::LogSpaced })
    }

    pub fn uniform(n: usize, horizon: f64) -> Result<Self> {
        check_mesh_args(n, horizon)?;
        let mut nodes: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        nodes[n] = horizon;
        Ok(Self { nodes, kind: MeshKind::Uniform })
    }

    pub fn custom(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Domain("a mesh needs at least 3 nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Domain(format!("mesh must start at 0, not {}", nodes[0])));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("mesh nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes, kind: MeshKind::Custom })
    }

    pub fn build(kind: MeshKind, n: usize, horizon: f64) -> Result<Self> {
        match kind {
            MeshKind::LogSpaced => Self::log_spaced(n, horizon),
            MeshKind::Uniform => Self::uniform(n, horizon),
            MeshKind::Custom => Err(Error::Domain(
                "custom meshes are built from explicit nodes".into(),
            )),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }
}

fn check_mesh_args(n: usize, horizon: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("mesh needs N >= 2, got {n}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} must be positive")));
    }
    Ok(())
}

/// Boundary values `b_i` on a mesh, pinned to `z` on the last two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    mesh: Mesh,
    values: Vec<f64>,
}

impl Boundary {
    pub fn constant(mesh: Mesh, z: f64) -> Self {
        let values = vec![z; mesh.nodes.len()];
        Self { mesh, values }
    }

    /// Wraps raw values, re-pinning the last two to `z`.
    pub fn from_values(mesh: Mesh, mut values: Vec<f64>, z: f64) -> Result<Self> {
        if values.len() != mesh.nodes.len() {
            return Err(Error::Domain(format!(
                "{} boundary values for a mesh of {} nodes",
                values.len(),
                mesh.nodes.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("boundary value {v} is not finite")));
        }
        let n = mesh.intervals();
        values[n - 1] = z;
        values[n] = z;
        Ok(Self { mesh, values })
    }

    /// A stopping rule on `mesh` that need not honour the horizon pin.
    /// Only meant for Monte Carlo experiments with arbitrary rules.
    pub fn rule(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.nodes.len() {
            return Err(Error::Domain(format!(
                "{} rule values for a mesh of {} nodes",
                values.len(),
                mesh.nodes.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric("stopping rule contains NaN".into()));
        }
        Ok(Self { mesh, values })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> &[f64] {
        &self.mesh.nodes
    }

    /// Linear interpolation; clamps to `z` beyond `t_{N−1}`.
    pub fn at(&self, t: f64) -> f64 {
        let nodes = &self.mesh.nodes;
        let n = self.mesh.intervals();
        if t >= nodes[n - 1] {
            return self.values[n];
        }
        if t <= 0.0 {
            return self.values[0];
        }
        let k = nodes.partition_point(|&u| u <= t) - 1;
        let w = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    /// Uniform shift of every value except the pinned tail.
    pub fn shifted(&self, delta: f64) -> Self {
        let n = self.mesh.intervals();
        let mut values = self.values.clone();
        values[..n - 1].iter_mut().for_each(|v| *v += delta);
        Self { mesh: self.mesh.clone(), values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Mesh intervals `N`.
    pub n: usize,
    /// Threshold on the relative squared L2 change `d_k`.
    pub tol: f64,
    pub max_iter: usize,
    /// Quadrature intervals for the bridge tables; `None` means `10·N`.
    pub q: Option<usize>,
    pub mesh_kind: MeshKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 500,
            tol: 1e-3,
            max_iter: 100,
            q: None,
            mesh_kind: MeshKind::LogSpaced,
        }
    }
}

impl SolverConfig {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn quadrature(&self) -> usize {
        self.q.unwrap_or(10 * self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config("solver.N", format!("must be >= 2, got {}", self.n)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("solver.tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::config("solver.max_iter", "must be >= 1"));
        }
        if self.quadrature() < 2 {
            return Err(Error::config("solver.Q", "must be >= 2"));
        }
        if self.mesh_kind == MeshKind::Custom {
            return Err(Error::config("solver.mesh_kind", "custom meshes are library-only"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub iterations: usize,
    pub converged: bool,
    pub d: Vec<f64>,
    /// Set when the relative metric was undefined and the absolute squared
    /// L2 distance was used instead.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub absolute_fallback: bool,
}

/// Parent states and drift lines at every mesh node, shared across sweeps.
struct NodeCache {
    states: Vec<ParentState>,
    drifts: Vec<Option<DriftLine>>,
}

impl NodeCache {
    fn new(tables: &BridgeTables, mesh: &Mesh) -> Result<Self> {
        if (mesh.horizon() - tables.horizon()).abs() > 1e-12 * tables.horizon() {
            return Err(Error::Domain(format!(
                "mesh horizon {} differs from model horizon {}",
                mesh.horizon(),
                tables.horizon()
            )));
        }
        let n = mesh.intervals();
        let mut states: Vec<ParentState> =
            mesh.nodes.iter().map(|&t| tables.parent_state(t)).collect();
        states[n] = tables.end_state();
        let drifts = (0..=n)
            .map(|j| if j < n { tables.drift_line(mesh.nodes[j]).ok() } else { None })
            .collect();
        Ok(Self { states, drifts })
    }

    /// `Σ_{j} K(t_i, x, t_{j+1}, b_{j+1})(t_{j+1} − t_j)` for `j = i..N−2`.
    fn tail_integral(
        &self,
        tables: &BridgeTables,
        mesh: &Mesh,
        i: usize,
        x: f64,
        b: &[f64],
    ) -> Result<f64> {
        let n = mesh.intervals();
        let from = &self.states[i];
        let mut acc = 0.0;
        for j in i..n.saturating_sub(1) {
            let drift = self.drifts[j + 1].as_ref().ok_or_else(|| {
                Error::Domain(format!("mesh node t_{} lies too close to the horizon", j + 1))
            })?;
            let k = kernel_between(tables, from, x, &self.states[j + 1], drift, b[j + 1]);
            if !k.is_finite() {
                return Err(Error::Numeric(format!("kernel is {k} at (i, j) = ({i}, {j})")));
            }
            acc += k * mesh.step(j);
        }
        Ok(acc)
    }

    fn sweep(&self, tables: &BridgeTables, prev: &Boundary) -> Result<Boundary> {
        let mesh = &prev.mesh;
        let n = mesh.intervals();
        let z = tables.pin();
        let b = &prev.values;
        let mut values = (0..=n - 2)
            .into_par_iter()
            .map(|i| Ok(z - self.tail_integral(tables, mesh, i, b[i], b)?))
            .collect::<Result<Vec<f64>>>()?;
        values.extend([z, z]);
        Ok(Boundary { mesh: mesh.clone(), values })
    }
}

/// One Picard update of the boundary.
pub fn picard_step(tables: &BridgeTables, prev: &Boundary) -> Result<Boundary> {
    NodeCache::new(tables, &prev.mesh)?.sweep(tables, prev)
}

/// `Σ (b_new − b_old)² Δt / Σ b_new² Δt` over `i = 1..N`.
pub fn converge_metric(new: &Boundary, old: &Boundary) -> Result<f64> {
    let (num, den) = weighted_sums(new, old)?;
    if den == 0.0 {
        return Err(Error::Metric("new boundary is identically zero".into()));
    }
    Ok(num / den)
}

fn weighted_sums(new: &Boundary, old: &Boundary) -> Result<(f64, f64)> {
    if new.mesh.nodes != old.mesh.nodes {
        return Err(Error::Domain("boundaries live on different meshes".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..new.values.len() {
        let dt = new.mesh.step(i - 1);
        let diff = new.values[i] - old.values[i];
        num += diff * diff * dt;
        den += new.values[i] * new.values[i] * dt;
    }
    Ok((num, den))
}

/// Iterates [`picard_step`] from `b ≡ z` on the configured mesh.
pub fn picard_solve(tables: &BridgeTables, cfg: &SolverConfig) -> Result<(Boundary, ConvergenceLog)> {
    cfg.validate()?;
    let mesh = Mesh::build(cfg.mesh_kind, cfg.n, tables.horizon())?;
    picard_solve_on(tables, mesh, cfg)
}

/// As [`picard_solve`] on an explicit mesh (e.g. a custom partition).
pub fn picard_solve_on(
    tables: &BridgeTables,
    mesh: Mesh,
    cfg: &SolverConfig,
) -> Result<(Boundary, ConvergenceLog)> {
    let cache = NodeCache::new(tables, &mesh)?;
    let mut current = Boundary::constant(mesh, tables.pin());
    let mut log = ConvergenceLog {
        iterations: 0,
        converged: false,
        d: Vec::new(),
        absolute_fallback: false,
    };
    while log.iterations < cfg.max_iter {
        let next = cache.sweep(tables, &current)?;
        let d = match converge_metric(&next, &current) {
            Ok(d) => d,
            Err(Error::Metric(_)) => {
                log.absolute_fallback = true;
                weighted_sums(&next, &current)?.0
            }
            Err(e) => return Err(e),
        };
        if d.is_nan() {
            return Err(Error::Numeric(format!("d_{} is NaN", log.iterations + 1)));
        }
        log.iterations += 1;
        log.d.push(d);
        current = next;
        if d <= cfg.tol {
            log.converged = true;
            break;
        }
    }
    Ok((current, log))
}

/// Builds the tables with the configured quadrature and solves.
pub fn solve(spec: &BridgeSpec, cfg: &SolverConfig) -> Result<(BridgeTables, Boundary, ConvergenceLog)> {
    cfg.validate()?;
    let tables = BridgeTables::build(spec.clone(), cfg.quadrature())?;
    let (boundary, log) = picard_solve(&tables, cfg)?;
    Ok((tables, boundary, log))
}

/// Relative L2 mismatch between `boundary` and one more application of the
/// discretized integral operator.
pub fn free_boundary_residual(tables: &BridgeTables, boundary: &Boundary) -> Result<f64> {
    let image = picard_step(tables, boundary)?;
    converge_metric(&image, boundary)
}

/// `V(t, x) = z − ∫_t^T K(t, x, u, b(u)) du`, discretized like the solver,
/// below the boundary and `x` on or above it.
pub fn value_at(tables: &BridgeTables, boundary: &Boundary, t: f64, x: f64) -> Result<f64> {
    ValueSurface::new(tables, boundary)?.value(t, x)
}

/// Evaluates the value function repeatedly against one boundary.
pub struct ValueSurface<'a> {
    tables: &'a BridgeTables,
    boundary: &'a Boundary,
    cache: NodeCache,
}

impl<'a> ValueSurface<'a> {
    pub fn new(tables: &'a BridgeTables, boundary: &'a Boundary) -> Result<Self> {
        let cache = NodeCache::new(tables, &boundary.mesh)?;
        Ok(Self { tables, boundary, cache })
    }

    /// `V(t, x)`: the gain `x` on the stopping set `x ≥ b(t)`, the
    /// discretized integral below it, and `z` at `t = T`.
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        let integral = self.integral(t, x)?;
        if t < self.tables.horizon() && x >= self.boundary.at(t) {
            return Ok(x);
        }
        Ok(integral)
    }

    /// `z − Σ K(t, x, t_j, b_j)Δ_j` for any `x`, stopping set included.
    pub fn integral(&self, t: f64, x: f64) -> Result<f64> {
        let horizon = self.tables.horizon();
        if !x.is_finite() {
            return Err(Error::Domain(format!("x = {x} is not finite")));
        }
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
        }
        let mesh = &self.boundary.mesh;
        let nodes = &mesh.nodes;
        let n = mesh.intervals();
        let z = self.tables.pin();
        if t >= nodes[n - 1] {
            return Ok(z);
        }
        let b = &self.boundary.values;
        // first node strictly after t
        let next = nodes.partition_point(|&u| u <= t);
        if nodes[next - 1] == t {
            let i = next - 1;
            return Ok(z - self.cache.tail_integral(self.tables, mesh, i, x, b)?);
        }
        // off-node start: sub-mesh {t} ∪ {t_j > t}
        let from = self.tables.parent_state(t);
        let mut acc = 0.0;
        let mut left = t;
        for j in next..n {
            let drift = self.cache.drifts[j].as_ref().ok_or_else(|| {
                Error::Domain(format!("mesh node t_{j} lies too close to the horizon"))
            })?;
            let k = kernel_between(self.tables, &from, x, &self.cache.states[j], drift, b[j]);
            acc += k * (nodes[j] - left);
            left = nodes[j];
        }
        if !acc.is_finite() {
            return Err(Error::Numeric(format!("value integral is {acc} at ({t}, {x})")));
        }
        Ok(z - acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{eval_kernel, KernelInput};

    fn bb_tables() -> BridgeTables {
        BridgeTables::build(BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), 1000).unwrap()
    }

    #[test]
    fn log_mesh_shape() {
        let mesh = Mesh::log_spaced(500, 1.0).unwrap();
        assert_eq!(mesh.nodes()[0], 0.0);
        assert_eq!(mesh.nodes()[500], 1.0);
        assert!((mesh.nodes()[250] - 0.620_115).abs() < 1e-5);
        for i in 0..499 {
            assert!(mesh.step(i + 1) < mesh.step(i));
        }
        let scaled = Mesh::log_spaced(10, 2.5).unwrap();
        assert_eq!(scaled.horizon(), 2.5);
        assert!(Mesh::log_spaced(1, 1.0).is_err());
        assert!(Mesh::custom(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn metric_examples() {
        let mesh = Mesh::uniform(4, 1.0).unwrap();
        let a = Boundary { mesh: mesh.clone(), values: vec![1.0; 5] };
        let b = Boundary { mesh: mesh.clone(), values: vec![2.0; 5] };
        assert_eq!(converge_metric(&a, &a).unwrap(), 0.0);
        assert!((converge_metric(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let zero = Boundary { mesh, values: vec![0.0; 5] };
        assert!(matches!(converge_metric(&zero, &a), Err(Error::Metric(_))));
    }

    #[test]
    fn two_interval_step_by_hand() {
        let tables = bb_tables();
        let mesh = Mesh::log_spaced(2, 1.0).unwrap();
        let prev = Boundary::from_values(mesh.clone(), vec![0.3, 0.0, 0.0], 0.0).unwrap();
        let next = picard_step(&tables, &prev).unwrap();
        let t1 = mesh.nodes()[1];
        let k = eval_kernel(&tables, KernelInput { t1: 0.0, x1: 0.3, t2: t1, x2: 0.0 }).unwrap();
        assert!((next.values()[0] - (0.0 - k * t1)).abs() < 1e-15);
        assert_eq!(&next.values()[1..], &[0.0, 0.0]);
        assert_eq!(prev.values()[0], 0.3);
    }

    #[test]
    fn first_iterate_rises_above_pin() {
        let tables = bb_tables();
        let mesh = Mesh::log_spaced(50, 1.0).unwrap();
        let next = picard_step(&tables, &Boundary::constant(mesh, 0.0)).unwrap();
        assert!(next.values()[0] > 0.0);
    }

    #[test]
    fn value_at_horizon_is_pin() {
        let tables = BridgeTables::build(BridgeSpec::brownian(1.0, 1.0, 0.0, 0.25), 200).unwrap();
        let cfg = SolverConfig::with_n(20);
        let (b, _) = picard_solve(&tables, &cfg).unwrap();
        assert_eq!(value_at(&tables, &b, 1.0, 3.0).unwrap(), 0.25);
        assert!(value_at(&tables, &b, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn value_is_gain_on_stopping_set() {
        let tables = bb_tables();
        let (b, _) = picard_solve(&tables, &SolverConfig::with_n(40)).unwrap();
        let s = ValueSurface::new(&tables, &b).unwrap();
        for (t, x) in [(0.0, b.values()[0]), (0.3, 2.0), (0.999, 0.1)] {
            assert_eq!(s.value(t, x).unwrap(), x);
        }
        // the integral itself only approximates the gain there
        let raw = s.integral(0.0, b.values()[0] + 0.2).unwrap();
        assert!((raw - b.values()[0] - 0.2).abs() < 0.05);
    }

    #[test]
    fn off_node_value_is_continuous() {
        let tables = bb_tables();
        let (b, _) = picard_solve(&tables, &SolverConfig::with_n(40)).unwrap();
        let t = b.times()[10];
        let on = value_at(&tables, &b, t, -0.2).unwrap();
        let near = value_at(&tables, &b, t + 1e-9, -0.2).unwrap();
        assert!((on - near).abs() < 1e-6);
    }

    #[test]
    fn boundary_interpolation_and_shift() {
        let mesh = Mesh::uniform(4, 1.0).unwrap();
        let b = Boundary::from_values(mesh, vec![1.0, 0.5, 0.25, 9.0, 9.0], 0.0).unwrap();
        assert_eq!(b.values()[3..], [0.0, 0.0]);
        assert!((b.at(0.125) - 0.75).abs() < 1e-15);
        assert_eq!(b.at(0.9), 0.0);
        let s = b.shifted(0.1);
        assert!((s.values()[0] - 1.1).abs() < 1e-15);
        assert_eq!(s.values()[3..], [0.0, 0.0]);
    }
}
