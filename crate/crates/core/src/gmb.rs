//! Gauss–Markov processes and the bridges derived from them.
//!
//! The parent process `dX̃ = θ̃(κ̃ − X̃)dt + ν̃ dB` has the Brownian
//! representation `X̃_t = m̃(t) + φ̃(t)·W_{h̃(t)}` with
//!
//! ```text
//! φ̃(t) = exp(−∫₀ᵗ θ̃),   m̃(t) = φ̃(t)(x₀ + ∫₀ᵗ κ̃θ̃/φ̃),   h̃(t) = ∫₀ᵗ ν̃²/φ̃².
//! ```
//!
//! Conditioning that representation on its value at `T` gives every law
//! the bridge needs, without ever integrating the bridge's own exploding
//! mean-reversion rate.

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFn, CumulativeTable};
use crate::error::{Error, Result};

/// Relative width of the window before the horizon where drift-type
/// quantities are rejected.
pub const HORIZON_GUARD: f64 = 1e-12;

/// The unconditioned time-inhomogeneous OU process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSpec {
    pub theta: CoefficientFn,
    pub kappa: CoefficientFn,
    pub nu: CoefficientFn,
    pub horizon: f64,
    pub x0: f64,
}

impl ParentSpec {
    /// Brownian motion with volatility `sigma` started at `x0`.
    pub fn brownian(sigma: f64, horizon: f64, x0: f64) -> Self {
        Self {
            theta: CoefficientFn::constant(0.0),
            kappa: CoefficientFn::constant(0.0),
            nu: CoefficientFn::constant(sigma),
            horizon,
            x0,
        }
    }

    /// `dX = aX dt + c dB`, i.e. `θ̃ ≡ −a`, `κ̃ ≡ 0`, `ν̃ ≡ c`.
    pub fn linear_drift(a: f64, c: f64, horizon: f64, x0: f64) -> Self {
        Self {
            theta: CoefficientFn::constant(-a),
            kappa: CoefficientFn::constant(0.0),
            nu: CoefficientFn::constant(c),
            horizon,
            x0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Spec(format!("horizon {} must be positive", self.horizon)));
        }
        if !self.x0.is_finite() {
            return Err(Error::Spec(format!("x0 = {} is not finite", self.x0)));
        }
        Ok(())
    }
}

/// A parent process pinned to `z` at its horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub parent: ParentSpec,
    pub z: f64,
}

impl BridgeSpec {
    pub fn new(parent: ParentSpec, z: f64) -> Self {
        Self { parent, z }
    }

    /// Brownian bridge with volatility `sigma` from `(0, x0)` to `(T, z)`.
    pub fn brownian(sigma: f64, horizon: f64, x0: f64, z: f64) -> Self {
        Self::new(ParentSpec::brownian(sigma, horizon, x0), z)
    }

    pub fn horizon(&self) -> f64 {
        self.parent.horizon
    }

    pub fn validate(&self) -> Result<()> {
        self.parent.validate()?;
        if !self.z.is_finite() {
            return Err(Error::Spec(format!("pin z = {} is not finite", self.z)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw {
    pub mean: f64,
    pub var: f64,
}

impl GaussianLaw {
    pub fn point(x: f64) -> Self {
        Self { mean: x, var: 0.0 }
    }

    pub fn std_dev(&self) -> f64 {
        self.var.sqrt()
    }
}

/// Parent quantities frozen at one time, so repeated transitions out of
/// (or into) the same node skip the table lookups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentState {
    pub t: f64,
    pub phi: f64,
    pub mean: f64,
    pub h: f64,
}

/// The bridge drift `μ(t, x) = θ(t)(κ(t) − x)` at a fixed time, stored as
/// `μ(t, x) = at_zero − theta·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftLine {
    pub theta: f64,
    pub at_zero: f64,
}

impl DriftLine {
    pub fn eval(&self, x: f64) -> f64 {
        self.at_zero - self.theta * x
    }

    /// Mean-reversion level `κ(t) = μ(t, 0)/θ(t)`.
    pub fn kappa(&self) -> f64 {
        self.at_zero / self.theta
    }
}

/// Quadrature tables for `φ̃`, `m̃` and `h̃` on a uniform `Q`-grid.
#[derive(Debug, Clone)]
pub struct BridgeTables {
    spec: BridgeSpec,
    theta_int: CumulativeTable,
    level_int: CumulativeTable,
    h_tilde: CumulativeTable,
    end: ParentState,
}

impl BridgeTables {
    pub fn build(spec: BridgeSpec, q: usize) -> Result<Self> {
        spec.validate()?;
        let p = &spec.parent;
        let horizon = p.horizon;
        let grid: Vec<f64> = crate::coefficients::uniform_grid(q, horizon)?.collect();

        for (k, &t) in grid.iter().enumerate() {
            let nu = p.nu.value(t);
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::Spec(format!(
                    "volatility must be positive; nu({t}) = {nu} at node {k}"
                )));
            }
            for (name, f) in [("theta", &p.theta), ("kappa", &p.kappa)] {
                if !f.value(t).is_finite() {
                    return Err(Error::Spec(format!("{name}({t}) is not finite at node {k}")));
                }
            }
        }

        let theta_int = CumulativeTable::from_fn(|t| p.theta.value(t), q, horizon)?;
        let phi: Vec<f64> = theta_int.values().iter().map(|v| (-v).exp()).collect();
        if let Some((k, v)) = phi
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Numeric(format!(
                "exp(-∫θ) = {v} at node {k}; mean reversion overflows the horizon"
            )));
        }

        let level: Vec<f64> = grid
            .iter()
            .zip(&phi)
            .map(|(&t, f)| p.kappa.value(t) * p.theta.value(t) / f)
            .collect();
        let level_int = CumulativeTable::from_samples(&level, horizon)?;

        let spread: Vec<f64> = grid
            .iter()
            .zip(&phi)
            .map(|(&t, f)| {
                let nu = p.nu.value(t);
                nu * nu / (f * f)
            })
            .collect();
        let h_tilde = CumulativeTable::from_samples(&spread, horizon)?;

        let mut tables = Self {
            spec,
            theta_int,
            level_int,
            h_tilde,
            end: ParentState {
                t: horizon,
                phi: 1.0,
                mean: 0.0,
                h: 0.0,
            },
        };
        tables.end = tables.parent_state(horizon);
        if !(tables.end.h.is_finite() && tables.end.h > 0.0) {
            return Err(Error::Numeric(format!(
                "parent variance clock h(T) = {} is degenerate",
                tables.end.h
            )));
        }
        Ok(tables)
    }

    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn horizon(&self) -> f64 {
        self.spec.parent.horizon
    }

    pub fn pin(&self) -> f64 {
        self.spec.z
    }

    pub fn quadrature_intervals(&self) -> usize {
        self.h_tilde.intervals()
    }

    /// `φ̃(t) = exp(−∫₀ᵗ θ̃)`.
    pub fn parent_phi(&self, t: f64) -> f64 {
        (-self.theta_int.at(t)).exp()
    }

    /// `m̃(t)`, the parent mean started from `x₀`.
    pub fn parent_mean(&self, t: f64) -> f64 {
        self.parent_phi(t) * (self.spec.parent.x0 + self.level_int.at(t))
    }

    /// `h̃(t) = ∫₀ᵗ ν̃²/φ̃²`.
    pub fn h_tilde(&self, t: f64) -> f64 {
        self.h_tilde.at(t)
    }

    pub fn parent_state(&self, t: f64) -> ParentState {
        let phi = self.parent_phi(t);
        ParentState {
            t,
            phi,
            mean: phi * (self.spec.parent.x0 + self.level_int.at(t)),
            h: self.h_tilde.at(t),
        }
    }

    pub fn end_state(&self) -> ParentState {
        self.end
    }

    /// Parent factorization `(r̃₁, r̃₂) = (φ̃·h̃, φ̃)`.
    pub fn parent_factorization(&self, t: f64) -> (f64, f64) {
        let s = self.parent_state(t);
        (s.phi * s.h, s.phi)
    }

    /// Bridge factorization normalized so that `r₁(T) = 1`:
    /// `r₁ = φ̃h̃/(φ̃(T)h̃(T))`, `r₂ = φ̃(T)φ̃(h̃(T) − h̃)`.
    pub fn bridge_factorization(&self, t: f64) -> (f64, f64) {
        let s = self.parent_state(t);
        let e = self.end;
        (s.phi * s.h / (e.phi * e.h), e.phi * s.phi * (e.h - s.h))
    }

    /// Law of `X_{t2}` given `X_{t1} = x1` under the bridge.
    pub fn bridge_transition(&self, t1: f64, x1: f64, t2: f64) -> Result<GaussianLaw> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t1) || !(0.0..=horizon).contains(&t2) {
            return Err(Error::Domain(format!(
                "times ({t1}, {t2}) outside [0, {horizon}]"
            )));
        }
        if t2 < t1 {
            return Err(Error::Domain(format!("t2 = {t2} precedes t1 = {t1}")));
        }
        if !x1.is_finite() {
            return Err(Error::Domain(format!("x1 = {x1} is not finite")));
        }
        let from = self.parent_state(t1);
        let to = if t2 == horizon {
            self.end
        } else {
            self.parent_state(t2)
        };
        Ok(self.transition_between(&from, x1, &to))
    }

    /// Bridge transition between precomputed states (`from.t ≤ to.t`).
    pub fn transition_between(&self, from: &ParentState, x1: f64, to: &ParentState) -> GaussianLaw {
        if to.t >= self.horizon() {
            return GaussianLaw::point(self.spec.z);
        }
        if to.t == from.t {
            return GaussianLaw::point(x1);
        }
        let end = &self.end;
        let span = end.h - from.h;
        let elapsed = to.h - from.h;
        let w = elapsed / span;
        let start_dev = (x1 - from.mean) / from.phi;
        let pin_dev = (self.spec.z - end.mean) / end.phi;
        let mean = to.mean + to.phi * ((1.0 - w) * start_dev + w * pin_dev);
        let var = to.phi * to.phi * elapsed * (end.h - to.h) / span;
        GaussianLaw {
            mean,
            var: var.max(0.0),
        }
    }

    fn check_before_horizon(&self, t: f64) -> Result<()> {
        let horizon = self.horizon();
        if !(0.0..=horizon * (1.0 - HORIZON_GUARD)).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} must lie in [0, T) away from the horizon T = {horizon}"
            )));
        }
        Ok(())
    }

    /// Drift of the bridge at `t` as an affine function of the state.
    ///
    /// Obtained from the parent drift plus `ν̃²·∂ₓ log p̃(t, x; T, z)`.
    pub fn drift_line(&self, t: f64) -> Result<DriftLine> {
        self.check_before_horizon(t)?;
        Ok(self.drift_line_at(&self.parent_state(t)))
    }

    pub(crate) fn drift_line_at(&self, s: &ParentState) -> DriftLine {
        let p = &self.spec.parent;
        let (theta_p, kappa_p, nu) = (p.theta.value(s.t), p.kappa.value(s.t), p.nu.value(s.t));
        let end = &self.end;
        let remaining = end.h - s.h;
        let pull = nu * nu / (s.phi * s.phi * remaining);
        // conditional mean of X̃_T given X̃_t = 0, in units of φ̃(T)/φ̃(t)
        let pin_gap = (self.spec.z - end.mean) * s.phi / end.phi + s.mean;
        DriftLine {
            theta: theta_p + pull,
            at_zero: theta_p * kappa_p + pull * pin_gap,
        }
    }

    /// `μ(t, x) = θ(t)(κ(t) − x)` of the bridge SDE.
    pub fn bridge_drift(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.drift_line(t)?.eval(x))
    }

    /// Mean-reversion rate `θ(t)` of the bridge.
    pub fn theta_of(&self, t: f64) -> Result<f64> {
        Ok(self.drift_line(t)?.theta)
    }

    /// Bridge coefficients `(θ(t), κ(t), ν(t))`.
    pub fn bridge_coefficients(&self, t: f64) -> Result<(f64, f64, f64)> {
        let line = self.drift_line(t)?;
        Ok((line.theta, line.kappa(), self.spec.parent.nu.value(t)))
    }
}

/// Factorizes a Gauss–Markov covariance `R(t, t′) = r₁(t∧t′)·r₂(t∨t′)` on
/// `grid`, anchored at the interior reference time `t_ref`.
///
/// Interior nodes must have nonzero `R`; endpoint samples whose defining
/// ratio is `0/0` are extrapolated linearly from their two neighbours.
pub fn factorize_covariance(
    cov: impl Fn(f64, f64) -> f64,
    t_ref: f64,
    grid: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if grid.len() < 4 {
        return Err(Error::Domain("factorization grid needs at least 4 nodes".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("factorization grid must be strictly increasing".into()));
    }
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if !(t_ref > first && t_ref < last) {
        return Err(Error::Domain(format!(
            "reference time {t_ref} is not interior to [{first}, {last}]"
        )));
    }
    let anchor = cov(t_ref, t_ref);
    if !(anchor > 0.0) {
        return Err(Error::Degenerate(format!("R({t_ref}, {t_ref}) = {anchor}")));
    }

    let mut r1 = Vec::with_capacity(grid.len());
    let mut r2 = Vec::with_capacity(grid.len());
    for &t in grid {
        let (a, b) = if t <= t_ref {
            let cross = cov(t, t_ref);
            (cross, cov(t, t) / cross)
        } else {
            let cross = cov(t_ref, t);
            (cov(t, t) * anchor / cross, cross / anchor)
        };
        r1.push(a);
        r2.push(b);
    }

    let n = grid.len();
    for (idx, (nb1, nb2)) in [(0, (1, 2)), (n - 1, (n - 2, n - 3))] {
        for r in [&mut r1, &mut r2] {
            if !r[idx].is_finite() {
                let slope = (r[nb1] - r[nb2]) / (grid[nb1] - grid[nb2]);
                r[idx] = r[nb1] + slope * (grid[idx] - grid[nb1]);
            }
        }
    }

    for k in 1..n - 1 {
        if !(r1[k].is_finite() && r2[k].is_finite()) || r1[k] == 0.0 || r2[k] == 0.0 {
            return Err(Error::Degenerate(format!(
                "covariance vanishes or diverges at interior node t = {}",
                grid[k]
            )));
        }
    }
    let ratio: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a / b).collect();
    for k in 1..n - 1 {
        if ratio[k] <= 0.0 {
            return Err(Error::NotMarkov(format!(
                "r1/r2 = {} is not positive at t = {}",
                ratio[k], grid[k]
            )));
        }
        if k >= 2 && ratio[k] <= ratio[k - 1] {
            return Err(Error::NotMarkov(format!(
                "r1/r2 stops increasing between t = {} and t = {}",
                grid[k - 1],
                grid[k]
            )));
        }
    }
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb() -> BridgeTables {
        BridgeTables::build(BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), 1000).unwrap()
    }

    #[test]
    fn brownian_parent_tables() {
        let spec = BridgeSpec::brownian(1.0, 1.0, 0.7, 0.0);
        let tables = BridgeTables::build(spec, 50).unwrap();
        for t in [0.0, 0.13, 0.5, 1.0] {
            assert_eq!(tables.parent_phi(t), 1.0);
            assert_eq!(tables.parent_mean(t), 0.7);
            assert!((tables.h_tilde(t) - t).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_drift_parent_covariance() {
        // dX = X dt + dB: Cov(t, t') = sinh(t)·e^{t'} for t ≤ t'
        let spec = BridgeSpec::new(ParentSpec::linear_drift(1.0, 1.0, 1.0, 0.0), 0.0);
        let tables = BridgeTables::build(spec, 5000).unwrap();
        let (t, t2) = (0.5, 0.8);
        let (r1, _) = tables.parent_factorization(t);
        let (_, r2) = tables.parent_factorization(t2);
        let exact = 0.5f64.sinh() * 0.8f64.exp();
        assert!(((r1 * r2 - exact) / exact).abs() < 1e-6);
        let (r1, r2) = tables.parent_factorization(t);
        let exact = 0.5f64.sinh() * 0.5f64.exp();
        assert!(((r1 * r2 - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn transition_edge_cases() {
        let tables = bb();
        assert_eq!(tables.bridge_transition(0.3, 1.2, 0.3).unwrap(), GaussianLaw::point(1.2));
        assert_eq!(tables.bridge_transition(0.3, 1.2, 1.0).unwrap(), GaussianLaw::point(0.0));
        assert_eq!(tables.bridge_transition(1.0, 1.2, 1.0).unwrap(), GaussianLaw::point(0.0));
        assert!(matches!(tables.bridge_transition(0.5, 0.0, 0.4), Err(Error::Domain(_))));
        assert!(matches!(tables.bridge_transition(0.5, 0.0, 1.1), Err(Error::Domain(_))));
    }

    #[test]
    fn brownian_bridge_transition() {
        let law = bb().bridge_transition(0.25, 1.0, 0.5).unwrap();
        assert!((law.mean - 2.0 / 3.0).abs() < 1e-14);
        assert!((law.var - 1.0 / 6.0).abs() < 1e-14);
        // Independent route: φ²(t2)∫ν²/φ² with the bridge φ(t) = 1 − t.
        let phi = |t: f64| 1.0 - t;
        let steps = 20_000;
        let dt = 0.25 / steps as f64;
        let integral: f64 = (0..steps)
            .map(|k| {
                let u = 0.25 + (k as f64 + 0.5) * dt;
                dt / (phi(u) * phi(u))
            })
            .sum();
        assert!((phi(0.5).powi(2) * integral - law.var).abs() < 1e-9);
    }

    #[test]
    fn brownian_bridge_drift_and_theta() {
        let tables = bb();
        assert!((tables.bridge_drift(0.5, 1.0).unwrap() + 2.0).abs() < 1e-12);
        assert!((tables.theta_of(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(tables.theta_of(1.0), Err(Error::Domain(_))));
        assert!(matches!(tables.bridge_drift(1.0 - 1e-14, 0.0), Err(Error::Domain(_))));

        let loud = BridgeTables::build(BridgeSpec::brownian(3.0, 2.0, 0.0, 1.0), 200).unwrap();
        for t in [0.0, 0.5, 1.5] {
            assert!((loud.theta_of(t).unwrap() - 1.0 / (2.0 - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_drift_bridge_theta() {
        // θ(t) = −r₂′/r₂ with r₂ ∝ sinh(a(T − t)) gives a·coth(a(T − t)).
        let spec = BridgeSpec::new(ParentSpec::linear_drift(1.0, 1.0, 1.0, 0.0), 0.0);
        let tables = BridgeTables::build(spec, 5000).unwrap();
        let expected = 1.0 / 0.5f64.tanh();
        assert!((tables.theta_of(0.5).unwrap() - expected).abs() < 1e-5);
        assert!((expected - 2.1640).abs() < 1e-4);
    }

    #[test]
    fn drift_vanishes_at_level() {
        let spec = BridgeSpec::new(
            ParentSpec {
                theta: CoefficientFn::constant(2.0),
                kappa: CoefficientFn::constant(0.0),
                nu: CoefficientFn::constant(1.0),
                horizon: 1.0,
                x0: 0.3,
            },
            0.5,
        );
        let tables = BridgeTables::build(spec, 2000).unwrap();
        for t in [0.1, 0.4, 0.8] {
            let line = tables.drift_line(t).unwrap();
            assert!(line.eval(line.kappa()).abs() < 1e-12);
            assert!(line.theta > 0.0);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0);
        spec.parent.nu = CoefficientFn::linear(1.0, -2.0);
        assert!(matches!(BridgeTables::build(spec, 100), Err(Error::Spec(_))));
        let spec = BridgeSpec::brownian(1.0, -1.0, 0.0, 0.0);
        assert!(matches!(BridgeTables::build(spec, 100), Err(Error::Spec(_))));
        let mut spec = BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0);
        spec.parent.theta = CoefficientFn::constant(-1000.0);
        assert!(matches!(BridgeTables::build(spec, 100), Err(Error::Numeric(_))));
    }

    #[test]
    fn factorize_brownian_motion() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let (r1, r2) = factorize_covariance(f64::min, 0.5, &grid).unwrap();
        for ((t, a), b) in grid.iter().zip(&r1).zip(&r2) {
            assert!((a - t).abs() < 1e-14);
            assert!((b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn factorize_brownian_bridge() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let cov = |s: f64, t: f64| s.min(t) * (1.0 - s.max(t));
        let (r1, r2) = factorize_covariance(cov, 0.5, &grid).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            if t <= 0.5 {
                assert!((r1[k] - t / 2.0).abs() < 1e-14);
            } else {
                assert!((r2[k] - 2.0 * (1.0 - t)).abs() < 1e-14);
            }
            for (j, &u) in grid.iter().enumerate().skip(k) {
                assert!((r1[k] * r2[j] - cov(t, u)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn factorize_rejects_non_markov() {
        let grid: Vec<f64> = (0..=30).map(|k| k as f64 / 10.0).collect();
        let cov = |s: f64, t: f64| (s - t).cos();
        assert!(matches!(
            factorize_covariance(cov, 0.5, &grid),
            Err(Error::NotMarkov(_))
        ));
        assert!(matches!(
            factorize_covariance(|_, _| 0.0, 0.5, &grid),
            Err(Error::Degenerate(_))
        ));
    }
}
