//! Optimal stopping of Gauss–Markov bridges.
//!
//! Given a time-inhomogeneous Ornstein–Uhlenbeck "parent" process
//!
//! ```text
//! dX̃_t = θ̃(t)(κ̃(t) − X̃_t) dt + ν̃(t) dB_t
//! ```
//!
//! pinned to hit `z` at the horizon `T`, this crate computes the boundary
//! `b(t)` above which it is optimal to stop and collect `X_t`, together
//! with the value function `V(t, x) = sup_τ E[X_{t+τ}]`.
//!
//! The boundary solves a Volterra-type integral equation
//! `b(t) = z − ∫_t^T K(t, b(t), u, b(u)) du`, which [`solver::picard_solve`]
//! attacks by fixed-point iteration on a logarithmically spaced mesh.
//! The remaining modules provide the pieces and the checks:
//!
//! - [`coefficients`]: parametric coefficient functions and cumulative tables.
//! - [`gmb`]: bridge transition laws, drift, and covariance factorization.
//! - [`kernel`]: the integral kernel and normal helpers.
//! - [`transform`]: Brownian-motion coordinates, gain function, lower bound.
//! - [`montecarlo`]: exact-transition simulation and payoff estimation.
//! - [`reference`]: closed-form Brownian-bridge and OU-bridge oracles.
//! - [`cli`]: JSON configuration and the batch commands.

pub mod cli;
pub mod coefficients;
mod error;
pub mod gmb;
pub mod kernel;
pub mod montecarlo;
pub mod reference;
pub mod rng;
pub mod solver;
pub mod transform;

pub use coefficients::{CoefficientFn, CumulativeTable, Family};
pub use error::{Error, Result};
pub use gmb::{BridgeSpec, BridgeTables, GaussianLaw, ParentSpec};
pub use solver::{Boundary, ConvergenceLog, Mesh, MeshKind, SolverConfig};
