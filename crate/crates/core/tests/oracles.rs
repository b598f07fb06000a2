//! Checks on the quadrature oracles themselves, then the closed-form kernel
//! against them.

mod common;

use std::f64::consts::PI;

use common::{gauss_hermite, gauss_legendre, half_range_hermite, Rules};
use gmb_osp::kernel::{eval_kernel, std_normal_cdf, std_normal_survival, KernelInput};
use gmb_osp::reference::OUBSpec;
use gmb_osp::{BridgeSpec, BridgeTables};

#[test]
fn legendre_rule_integrates_polynomials_and_smooth_functions() {
    let (x, w) = gauss_legendre(24);
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(46)).sum();
    assert!((p - 2.0 / 47.0).abs() < 1e-14);
    let e: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
    assert!((e - (1f64.exp() - (-1f64).exp())).abs() < 1e-14);
}

#[test]
fn hermite_rule_moments() {
    let (x, w) = gauss_hermite(200);
    let sqrt_pi = PI.sqrt();
    let moment = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
    assert!((moment(0) - sqrt_pi).abs() < 1e-12);
    assert!(moment(1).abs() < 1e-12);
    assert!((moment(2) - sqrt_pi / 2.0).abs() < 1e-12);
    assert!((moment(4) - 3.0 * sqrt_pi / 4.0).abs() < 1e-11);
    // ∫ cos(x) e^{−x²} = √π e^{−1/4}
    let c: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
    assert!((c - sqrt_pi * (-0.25f64).exp()).abs() < 1e-12);
}

#[test]
fn half_range_rule_moments() {
    let (s, w) = half_range_hermite(200);
    assert!(s.iter().all(|&s| s > 0.0));
    let sqrt_pi = PI.sqrt();
    let moment = |k: i32| s.iter().zip(&w).map(|(s, w)| w * s.powi(k)).sum::<f64>();
    assert!((moment(0) - sqrt_pi / 2.0).abs() < 1e-13);
    assert!((moment(1) - 0.5).abs() < 1e-13);
    assert!((moment(2) - sqrt_pi / 4.0).abs() < 1e-13);
    assert!((moment(3) - 0.5).abs() < 1e-13);
    // ∫₀^∞ e^{−s² − 2cs} ds = (√π/2) e^{c²} erfc(c)
    for c in [0.0, 0.7, 3.0] {
        let got: f64 = s.iter().zip(&w).map(|(s, w)| w * (-2.0 * c * s).exp()).sum();
        let want = sqrt_pi / 2.0 * (c * c).exp() * 2.0 * std_normal_survival(c * 2f64.sqrt());
        assert!(((got - want) / want).abs() < 1e-12, "c = {c}: {got} vs {want}");
    }
}

#[test]
fn truncated_expectation_matches_normal_identities() {
    let rules = Rules::new(200);
    // E[1{X ≥ x2}] and E[X·1{X ≥ x2}] for X ~ N(m, v)
    for (m, v, x2) in [(0.0, 1.0f64, 0.0), (0.3, 0.04, 0.9), (-1.0, 2.5, -3.0), (2.0, 0.5, 1.9)] {
        let sd = v.sqrt();
        let xi = (x2 - m) / sd;
        let p = rules.truncated_linear(1.0, 0.0, m, v, x2);
        assert!((p - std_normal_survival(xi)).abs() < 1e-13);
        let first = -rules.truncated_linear(0.0, 1.0, m, v, x2);
        let want = m * std_normal_survival(xi) + sd * (-0.5 * xi * xi).exp() / (2.0 * PI).sqrt();
        assert!((first - want).abs() < 1e-13, "{first} vs {want}");
    }
    assert!((std_normal_cdf(0.3) + std_normal_survival(0.3) - 1.0).abs() < 1e-16);
}

#[test]
fn kernel_matches_oracle_on_spot_inputs() {
    let rules = Rules::new(200);
    let bb = BridgeTables::build(BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), 2000).unwrap();
    let oub = BridgeTables::build(OUBSpec::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap().bridge(), 2000).unwrap();
    for tables in [&bb, &oub] {
        for (t1, x1, t2, x2) in [(0.0, 0.0, 0.5, 0.0), (0.1, 0.8, 0.95, 1.5), (0.6, -0.3, 0.61, -0.29)] {
            let k = eval_kernel(tables, KernelInput { t1, x1, t2, x2 }).unwrap();
            let law = tables.bridge_transition(t1, x1, t2).unwrap();
            let line = tables.drift_line(t2).unwrap();
            let q = rules.truncated_linear(line.at_zero, line.theta, law.mean, law.var, x2);
            assert!((k - q).abs() < 1e-10, "{k} vs {q}");
        }
    }
}
