//! Brownian-motion coordinates of the bridge.
//!
//! With `α = m̃`, `β = r₂` and `γ = r₁/r₂` (normalized so `r₁(T) = 1`), the
//! bridge reads `X_t = G(γ(t), Y_{γ(t)})` for a Brownian motion `Y` and the
//! gain `G(s, y) = a₁(s) + a₂(s)(c₀s + y)`, `a₁ = α∘γ⁻¹`, `a₂ = β∘γ⁻¹`,
//! `c₀ = z − α(T)`. Nothing here solves the transformed problem; the maps
//! exist to check the original-coordinate solution against it.

use crate::error::{Error, Result};
use crate::gmb::{BridgeTables, HORIZON_GUARD};
use crate::solver::Boundary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmCoords {
    pub s: f64,
    pub y: f64,
}

/// `α`, `β`, `γ` and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeChange {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_gamma: f64,
}

impl TimeChange {
    /// `a₁′(s) = α′(t)/γ′(t)`.
    pub fn a1_prime(&self) -> f64 {
        self.d_alpha / self.d_gamma
    }

    /// `a₂′(s) = β′(t)/γ′(t)`.
    pub fn a2_prime(&self) -> f64 {
        self.d_beta / self.d_gamma
    }
}

pub fn time_change(tables: &BridgeTables, t: f64) -> Result<TimeChange> {
    let horizon = tables.horizon();
    if !(0.0..=horizon * (1.0 - HORIZON_GUARD)).contains(&t) {
        return Err(Error::Domain(format!(
            "t = {t} must lie in [0, T) away from T = {horizon}"
        )));
    }
    let parent = &tables.spec().parent;
    let s = tables.parent_state(t);
    let end = tables.end_state();
    let remaining = end.h - s.h;
    let theta = parent.theta.value(t);
    let nu = parent.nu.value(t);
    let dh = nu * nu / (s.phi * s.phi);
    Ok(TimeChange {
        t,
        alpha: s.mean,
        beta: end.phi * s.phi * remaining,
        gamma: s.h / (end.phi * end.phi * end.h * remaining),
        d_alpha: theta * (parent.kappa.value(t) - s.mean),
        d_beta: -end.phi * s.phi * (theta * remaining + dh),
        d_gamma: dh / (end.phi * end.phi * remaining * remaining),
    })
}

pub fn to_bm_coords(tables: &BridgeTables, t: f64, x: f64) -> Result<BmCoords> {
    let tc = time_change(tables, t)?;
    let c0 = tables.pin() - tables.end_state().mean;
    Ok(BmCoords {
        s: tc.gamma,
        y: (x - tc.alpha) / tc.beta - tc.gamma * c0,
    })
}

/// Gain-function data for one bridge.
#[derive(Debug, Clone, Copy)]
pub struct GainParams<'a> {
    tables: &'a BridgeTables,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl<'a> GainParams<'a> {
    pub fn new(tables: &'a BridgeTables) -> Self {
        let alpha_end = tables.end_state().mean;
        Self {
            tables,
            c0: tables.pin() - alpha_end,
            c1: alpha_end,
            c2: 1.0,
        }
    }

    /// `γ⁻¹(s)` by bisection on `[0, T)`.
    pub fn time_of(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("s = {s} must be finite and >= 0")));
        }
        let mut lo = 0.0;
        let mut hi = self.tables.horizon() * (1.0 - HORIZON_GUARD);
        if time_change(self.tables, hi)?.gamma < s {
            return Err(Error::Domain(format!("s = {s} lies beyond the guarded horizon")));
        }
        while hi - lo > f64::EPSILON * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if time_change(self.tables, mid)?.gamma < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn at(&self, s: f64) -> Result<TimeChange> {
        time_change(self.tables, self.time_of(s)?)
    }

    pub fn a1(&self, s: f64) -> Result<f64> {
        Ok(self.at(s)?.alpha)
    }

    pub fn a2(&self, s: f64) -> Result<f64> {
        Ok(self.at(s)?.beta)
    }
}

/// `G(s, y) = a₁(s) + a₂(s)(c₀s + y)`.
pub fn gain(gp: &GainParams<'_>, s: f64, y: f64) -> Result<f64> {
    let tc = gp.at(s)?;
    Ok(gain_at(gp, &tc, s, y))
}

pub fn gain_at(gp: &GainParams<'_>, tc: &TimeChange, s: f64, y: f64) -> f64 {
    tc.alpha + tc.beta * (gp.c0 * s + y)
}

/// `g(s) = (−a₁′ − c₀(a₂ + a₂′s))/a₂′`, a strict lower bound of the
/// transformed boundary.
pub fn osb_lower_bound(gp: &GainParams<'_>, s: f64) -> Result<f64> {
    lower_bound_at(gp, &gp.at(s)?)
}

pub fn lower_bound_at(gp: &GainParams<'_>, tc: &TimeChange) -> Result<f64> {
    let a2p = tc.a2_prime();
    if !(a2p.abs() >= 1e-12) {
        return Err(Error::Degenerate(format!("a2'(s) = {a2p} at t = {}", tc.t)));
    }
    Ok((-tc.a1_prime() - gp.c0 * (tc.beta + a2p * tc.gamma)) / a2p)
}

/// One node of a boundary expressed in Brownian coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedNode {
    pub t: f64,
    pub s: f64,
    pub a2: f64,
    /// `b_W(s) = (b(t) − a₁(s))/a₂(s) − c₀s`.
    pub boundary: f64,
    pub lower_bound: f64,
}

/// Maps every pre-horizon mesh node of `boundary` to Brownian coordinates.
pub fn transform_boundary(tables: &BridgeTables, boundary: &Boundary) -> Result<Vec<TransformedNode>> {
    let gp = GainParams::new(tables);
    let times = boundary.times();
    let n = times.len() - 1;
    (0..n)
        .map(|i| {
            let tc = time_change(tables, times[i])?;
            let coords = to_bm_coords(tables, times[i], boundary.values()[i])?;
            Ok(TransformedNode {
                t: times[i],
                s: coords.s,
                a2: tc.beta,
                boundary: coords.y,
                lower_bound: lower_bound_at(&gp, &tc)?,
            })
        })
        .collect()
}
