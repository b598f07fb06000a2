//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use gmb_osp::{BridgeSpec, CoefficientFn, ParentSpec};
use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss rule for a weight with recurrence `p_{k+1} = (x − a_k)p_k − b_k p_{k−1}`
/// and total mass `mu0` (Golub–Welsch).
pub fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = a[k];
        if k + 1 < n {
            let off = b[k + 1].sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    rule.sort_by(|l, r| l.0.total_cmp(&r.0));
    rule.into_iter().unzip()
}

/// `n`-point Gauss–Hermite rule for the weight `e^{−x²}` on the real line.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let a = vec![0.0; n];
    let b: Vec<f64> = (0..n).map(|k| k as f64 / 2.0).collect();
    golub_welsch(&a, &b, std::f64::consts::PI.sqrt())
}

/// `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let a = vec![0.0; n];
    let b: Vec<f64> = (0..n)
        .map(|k| {
            let k = k as f64;
            k * k / (4.0 * k * k - 1.0)
        })
        .collect();
    golub_welsch(&a, &b, 2.0)
}

/// `n`-point Gauss rule for the half-range Hermite weight `e^{−s²}` on
/// `[0, ∞)`. Recurrence coefficients come from the discretized Stieltjes
/// procedure on a composite Gauss–Legendre discretization of `[0, 30]`.
pub fn half_range_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (gl_x, gl_w) = gauss_legendre(24);
    let panels = 400;
    let width = 30.0 / panels as f64;
    let mut xs = Vec::with_capacity(panels * gl_x.len());
    let mut ws = Vec::with_capacity(xs.capacity());
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (x, w) in gl_x.iter().zip(&gl_w) {
            let s = mid + 0.5 * width * x;
            xs.push(s);
            ws.push(0.5 * width * w * (-s * s).exp());
        }
    }
    let mu0: f64 = ws.iter().sum();
    let mut a = Vec::with_capacity(n);
    let mut b = vec![0.0f64; n];
    let mut prev = vec![0.0; xs.len()];
    let mut cur = vec![1.0 / mu0.sqrt(); xs.len()];
    for k in 0..n {
        let ak: f64 = (0..xs.len()).map(|i| ws[i] * xs[i] * cur[i] * cur[i]).sum();
        a.push(ak);
        if k + 1 == n {
            break;
        }
        let sqrt_bk = b[k].sqrt();
        let next: Vec<f64> = (0..xs.len())
            .map(|i| (xs[i] - ak) * cur[i] - sqrt_bk * prev[i])
            .collect();
        let norm = (0..xs.len()).map(|i| ws[i] * next[i] * next[i]).sum::<f64>().sqrt();
        b[k + 1] = norm * norm;
        prev = cur;
        cur = next.into_iter().map(|v| v / norm).collect();
    }
    golub_welsch(&a, &b, mu0)
}

/// Rules built once per test binary.
pub struct Rules {
    pub full: (Vec<f64>, Vec<f64>),
    pub half: (Vec<f64>, Vec<f64>),
}

impl Rules {
    pub fn new(n: usize) -> Self {
        Self {
            full: gauss_hermite(n),
            half: half_range_hermite(n),
        }
    }

    /// `E[(c − θX)·1{X ≥ x2}]`, `X ~ N(mean, var)`, by Gauss–Hermite
    /// quadrature split at the truncation point: the decaying tail is
    /// integrated with the half-range rule, the rest (when the cut lies
    /// below the mean) as full-line expectation minus the lower tail.
    pub fn truncated_linear(&self, at_zero: f64, theta: f64, mean: f64, var: f64, x2: f64) -> f64 {
        let scale = (2.0 * var).sqrt();
        let f = |x: f64| at_zero - theta * x;
        let w0 = (x2 - mean) / scale;
        let pi_sqrt = std::f64::consts::PI.sqrt();
        let tail = |sign: f64| {
            let (s, w) = &self.half;
            let damp = (-w0 * w0).exp();
            s.iter()
                .zip(w)
                .map(|(&s, &w)| w * f(mean + scale * (w0 + sign * s)) * (-2.0 * sign * w0 * s).exp())
                .sum::<f64>()
                * damp
                / pi_sqrt
        };
        if w0 >= 0.0 {
            tail(1.0)
        } else {
            let (u, w) = &self.full;
            let whole = u.iter().zip(w).map(|(&u, &w)| w * f(mean + scale * u)).sum::<f64>() / pi_sqrt;
            whole - tail(-1.0)
        }
    }
}

pub fn parent(theta: CoefficientFn, kappa: CoefficientFn, nu: CoefficientFn) -> ParentSpec {
    ParentSpec {
        theta,
        kappa,
        nu,
        horizon: 1.0,
        x0: 0.0,
    }
}

/// Time-varying coefficient sets in the style of the paper's coefficient
/// study: sinusoidal κ̃, normal-CDF ramp κ̃, normal-density bump ν̃ and
/// sinusoidal θ̃. All pinned at `z = 0` with `T = 1`.
pub fn time_varying_sets() -> Vec<(&'static str, BridgeSpec)> {
    let c = CoefficientFn::constant;
    let tau = 2.0 * std::f64::consts::PI;
    vec![
        (
            "sinusoidal_kappa",
            BridgeSpec::new(parent(c(3.0), CoefficientFn::sinusoid(0.0, 1.0, tau, 0.0), c(1.0)), 0.0),
        ),
        (
            "ramp_kappa",
            BridgeSpec::new(parent(c(3.0), CoefficientFn::normal_cdf_ramp(-1.0, 1.0, 50.0, 0.5), c(1.0)), 0.0),
        ),
        (
            "bump_nu",
            BridgeSpec::new(
                parent(c(1.0), c(1.0), CoefficientFn::normal_pdf_bump(1.0, tau.sqrt(), 100.0, 0.25)),
                0.0,
            ),
        ),
        (
            "sinusoidal_theta",
            BridgeSpec::new(parent(CoefficientFn::sinusoid(1.0, 0.5, tau, 0.0), c(-1.0), c(1.0)), 0.0),
        ),
    ]
}
