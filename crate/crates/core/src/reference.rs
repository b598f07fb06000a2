//! Closed-form oracles.
//!
//! - The Brownian-bridge stopping boundary `z + K·σ·√(T − t)` with
//!   `K ≈ 0.8399`.
//! - Mean and covariance factorization of the bridge of `dX = aX dt + c dB`.

use crate::error::{Error, Result};
use crate::gmb::{BridgeSpec, ParentSpec};
use crate::solver::Boundary;

/// Four-digit boundary constant of the Brownian bridge.
pub const BB_BOUNDARY_CONSTANT: f64 = 0.8399;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBSpec {
    pub horizon: f64,
    pub z: f64,
    pub sigma: f64,
}

impl BBSpec {
    pub fn new(horizon: f64, z: f64, sigma: f64) -> Result<Self> {
        if !(horizon > 0.0 && sigma > 0.0) {
            return Err(Error::Spec(format!(
                "Brownian bridge needs T > 0 and sigma > 0, got T = {horizon}, sigma = {sigma}"
            )));
        }
        Ok(Self { horizon, z, sigma })
    }

    pub fn bridge(&self, x0: f64) -> BridgeSpec {
        BridgeSpec::brownian(self.sigma, self.horizon, x0, self.z)
    }
}

pub fn bb_boundary(spec: &BBSpec, t: f64) -> f64 {
    spec.z + BB_BOUNDARY_CONSTANT * spec.sigma * (spec.horizon - t).max(0.0).sqrt()
}

/// Time-weighted relative L2 distance between `boundary` and the closed
/// form over `[0, t_{N−2}]`, right-endpoint weights `t_i − t_{i−1}`.
pub fn bb_relative_l2(spec: &BBSpec, boundary: &Boundary) -> f64 {
    let t = boundary.times();
    let b = boundary.values();
    let n = t.len() - 1;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..=n.saturating_sub(2) {
        let exact = bb_boundary(spec, t[i]);
        let dt = t[i] - t[i - 1];
        num += (b[i] - exact).powi(2) * dt;
        den += exact * exact * dt;
    }
    (num / den).sqrt()
}

/// Bridge from `(0, x)` to `(T, z)` of the parent `dX = aX dt + c dB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUBSpec {
    pub a: f64,
    pub c: f64,
    pub horizon: f64,
    pub z: f64,
    pub x: f64,
}

impl OUBSpec {
    pub fn new(a: f64, c: f64, horizon: f64, z: f64, x: f64) -> Result<Self> {
        if !(c > 0.0 && horizon > 0.0 && a != 0.0) {
            return Err(Error::Spec(format!(
                "OU bridge needs c > 0, T > 0, a != 0; got a = {a}, c = {c}, T = {horizon}"
            )));
        }
        Ok(Self { a, c, horizon, z, x })
    }

    pub fn bridge(&self) -> BridgeSpec {
        BridgeSpec::new(ParentSpec::linear_drift(self.a, self.c, self.horizon, self.x), self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OubClosedForms {
    pub mean: f64,
    pub r1: f64,
    pub r2: f64,
    pub gamma: f64,
}

/// `m(t) = (x·sinh(a(T−t)) + z·sinh(at))/sinh(aT)`,
/// `r₁(t) = sinh(at)/sinh(aT)`, `r₂(t) = c²·sinh(a(T−t))/a`, `γ = r₁/r₂`.
pub fn oub_closed_forms(spec: &OUBSpec, t: f64) -> Result<OubClosedForms> {
    let OUBSpec { a, c, horizon, z, x } = *spec;
    if !(0.0..horizon).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {horizon})")));
    }
    let full = (a * horizon).sinh();
    let ahead = (a * (horizon - t)).sinh();
    let behind = (a * t).sinh();
    let r1 = behind / full;
    let r2 = c * c * ahead / a;
    Ok(OubClosedForms {
        mean: (x * ahead + z * behind) / full,
        r1,
        r2,
        gamma: r1 / r2,
    })
}

/// `θ(t) = −r₂′/r₂ = a·coth(a(T − t))`.
pub fn oub_theta(spec: &OUBSpec, t: f64) -> Result<f64> {
    if !(0.0..spec.horizon).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {})", spec.horizon)));
    }
    Ok(spec.a / (spec.a * (spec.horizon - t)).tanh())
}
