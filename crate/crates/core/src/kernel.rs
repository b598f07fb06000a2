//! The Volterra kernel of the free-boundary equation.
//!
//! `K(t₁, x₁, t₂, x₂) = E[μ(t₂, X_{t₂}) · 1{X_{t₂} ≥ x₂} | X_{t₁} = x₁]`
//! for the bridge drift `μ(t, x) = θ(t)(κ(t) − x)`. Because `μ` is affine
//! and the transition law Gaussian, the expectation is closed-form:
//!
//! ```text
//! K = μ(t₂, E)·Φ̄(ξ) − θ(t₂)·√V·φ(ξ),   ξ = (x₂ − E)/√V.
//! ```

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::gmb::{BridgeTables, DriftLine, GaussianLaw, ParentState};

static SIGN_FLIP: AtomicBool = AtomicBool::new(false);

/// Mutation fixture: negates every kernel value process-wide. Exists so the
/// `validate` command can prove its checks catch a broken kernel.
#[doc(hidden)]
pub fn inject_sign_flip(on: bool) {
    SIGN_FLIP.store(on, Ordering::Relaxed);
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// `Φ̄(u) = 1 − Φ(u)`, evaluated through `erfc` so the upper tail keeps
/// full relative precision.
pub fn std_normal_survival(u: f64) -> f64 {
    0.5 * libm::erfc(u * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn std_normal_cdf(u: f64) -> f64 {
    std_normal_survival(-u)
}

/// Arguments of one kernel evaluation, `0 ≤ t1 ≤ t2 < T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelInput {
    pub t1: f64,
    pub x1: f64,
    pub t2: f64,
    pub x2: f64,
}

pub fn eval_kernel(tables: &BridgeTables, input: KernelInput) -> Result<f64> {
    let KernelInput { t1, x1, t2, x2 } = input;
    if !(x1.is_finite() && !x2.is_nan()) {
        return Err(Error::Domain(format!("kernel states ({x1}, {x2}) invalid")));
    }
    if !(0.0 <= t1 && t1 <= t2) {
        return Err(Error::Domain(format!("kernel times ({t1}, {t2}) out of order")));
    }
    let drift = tables.drift_line(t2)?;
    let from = tables.parent_state(t1);
    let to = tables.parent_state(t2);
    let law = tables.transition_between(&from, x1, &to);
    Ok(kernel_from_law(law, x1, &drift, x2))
}

/// Kernel between precomputed states; `to` must lie strictly before `T`.
pub(crate) fn kernel_between(
    tables: &BridgeTables,
    from: &ParentState,
    x1: f64,
    to: &ParentState,
    drift: &DriftLine,
    x2: f64,
) -> f64 {
    let law = tables.transition_between(from, x1, to);
    kernel_from_law(law, x1, drift, x2)
}

fn kernel_from_law(law: GaussianLaw, x1: f64, drift: &DriftLine, x2: f64) -> f64 {
    if law.var == 0.0 {
        let k = if x1 >= x2 { drift.eval(x1) } else { 0.0 };
        return if SIGN_FLIP.load(Ordering::Relaxed) { -k } else { k };
    }
    let sd = law.std_dev();
    let xi = (x2 - law.mean) / sd;
    let k = drift.eval(law.mean) * std_normal_survival(xi) - drift.theta * sd * std_normal_pdf(xi);
    if SIGN_FLIP.load(Ordering::Relaxed) {
        -k
    } else {
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmb::BridgeSpec;

    #[test]
    fn normal_helpers() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert_eq!(std_normal_survival(0.0), 0.5);
        assert!((std_normal_survival(1.959_963_985) - 0.025).abs() < 1e-9);
        assert!((std_normal_cdf(-1.959_963_985) - 0.025).abs() < 1e-9);
        // deep tail keeps relative accuracy
        let tail = std_normal_survival(10.0);
        assert!(((tail - 7.619_853_024_160_527e-24) / tail).abs() < 1e-12);
    }

    fn bb() -> BridgeTables {
        BridgeTables::build(BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), 100).unwrap()
    }

    #[test]
    fn brownian_bridge_value() {
        let k = eval_kernel(&bb(), KernelInput { t1: 0.0, x1: 0.0, t2: 0.5, x2: 0.0 }).unwrap();
        assert!((k + 0.398_942_280_401_432_7 * 2.0 * 0.5).abs() < 1e-12);
        assert!((k + 0.3989).abs() < 1e-4);
    }

    #[test]
    fn truncation_limits() {
        let tables = bb();
        let at = |x2| eval_kernel(&tables, KernelInput { t1: 0.1, x1: 0.4, t2: 0.6, x2 }).unwrap();
        assert!(at(1e3).abs() < 1e-300);
        let law = tables.bridge_transition(0.1, 0.4, 0.6).unwrap();
        let full = tables.bridge_drift(0.6, law.mean).unwrap();
        assert!((at(-1e3) - full).abs() < 1e-15);
    }

    #[test]
    fn degenerate_branch_uses_indicator() {
        let tables = bb();
        let k = |x2| eval_kernel(&tables, KernelInput { t1: 0.5, x1: 1.0, t2: 0.5, x2 }).unwrap();
        assert!((k(1.0) + 2.0).abs() < 1e-12);
        assert_eq!(k(1.5), 0.0);
    }

    #[test]
    fn rejects_horizon_and_order() {
        let tables = bb();
        let bad = KernelInput { t1: 0.2, x1: 0.0, t2: 1.0, x2: 0.0 };
        assert!(matches!(eval_kernel(&tables, bad), Err(Error::Domain(_))));
        let bad = KernelInput { t1: 0.6, x1: 0.0, t2: 0.5, x2: 0.0 };
        assert!(matches!(eval_kernel(&tables, bad), Err(Error::Domain(_))));
    }

    #[test]
    fn matches_affine_decomposition() {
        let tables = bb();
        let input = KernelInput { t1: 0.2, x1: -0.3, t2: 0.7, x2: 0.1 };
        let law = tables.bridge_transition(input.t1, input.x1, input.t2).unwrap();
        let line = tables.drift_line(input.t2).unwrap();
        let xi = (input.x2 - law.mean) / law.std_dev();
        let alt = line.theta
            * ((line.kappa() - law.mean) * std_normal_survival(xi) - law.std_dev() * std_normal_pdf(xi));
        let k = eval_kernel(&tables, input).unwrap();
        assert!((k - alt).abs() < 1e-14);
    }
}
