//! Time-dependent coefficient functions and cumulative-integral tables.
//!
//! Every `∫₀ᵗ` that appears in the bridge formulas is backed by a
//! [`CumulativeTable`]: a composite trapezoidal integral on a uniform grid,
//! queried between nodes by linear interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{std_normal_cdf, std_normal_pdf};

/// Names accepted by the configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `[c]` → `c`
    Constant,
    /// `[a, b]` → `a + b·t`
    Linear,
    /// `[offset, amplitude, omega]` or `[offset, amplitude, omega, phase]`
    /// → `offset + amplitude·sin(omega·t + phase)`
    Sinusoid,
    /// `[low, high, scale, center]` → `low + (high − low)·Φ(scale·(t − center))`
    NormalCdfRamp,
    /// `[base, amplitude, scale, center]` → `base + amplitude·φ(scale·(t − center))`
    NormalPdfBump,
    /// `[t0, v0, t1, v1, ...]` with strictly increasing knots; linear in
    /// between and clamped outside the knot range.
    #[serde(rename = "table")]
    PiecewiseLinearTable,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Linear => "linear",
            Family::Sinusoid => "sinusoid",
            Family::NormalCdfRamp => "normal_cdf_ramp",
            Family::NormalPdfBump => "normal_pdf_bump",
            Family::PiecewiseLinearTable => "table",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "constant" => Family::Constant,
            "linear" => Family::Linear,
            "sinusoid" => Family::Sinusoid,
            "normal_cdf_ramp" => Family::NormalCdfRamp,
            "normal_pdf_bump" => Family::NormalPdfBump,
            "table" => Family::PiecewiseLinearTable,
            other => return Err(Error::Spec(format!("unknown coefficient family `{other}`"))),
        })
    }
}

/// A parametric function of time.
///
/// Construct through [`CoefficientFn::new`] (or the shorthand
/// constructors) so that the parameter list is validated once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoefficient", into = "RawCoefficient")]
pub struct CoefficientFn {
    family: Family,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficient {
    family: String,
    params: Vec<f64>,
}

impl TryFrom<RawCoefficient> for CoefficientFn {
    type Error = Error;

    fn try_from(raw: RawCoefficient) -> Result<Self> {
        CoefficientFn::new(Family::from_name(&raw.family)?, raw.params)
    }
}

impl From<CoefficientFn> for RawCoefficient {
    fn from(f: CoefficientFn) -> Self {
        RawCoefficient {
            family: f.family.name().to_string(),
            params: f.params,
        }
    }
}

impl CoefficientFn {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::Spec(format!(
                "{} parameter {p} is not finite",
                family.name()
            )));
        }
        let arity_ok = match family {
            Family::Constant => params.len() == 1,
            Family::Linear => params.len() == 2,
            Family::Sinusoid => matches!(params.len(), 3 | 4),
            Family::NormalCdfRamp | Family::NormalPdfBump => params.len() == 4,
            Family::PiecewiseLinearTable => params.len() >= 2 && params.len() % 2 == 0,
        };
        if !arity_ok {
            return Err(Error::Spec(format!(
                "{} does not accept {} parameters",
                family.name(),
                params.len()
            )));
        }
        if family == Family::PiecewiseLinearTable
            && params.chunks(2).zip(params.chunks(2).skip(1)).any(|(a, b)| b[0] <= a[0])
        {
            return Err(Error::Spec("table knots must be strictly increasing".into()));
        }
        Ok(Self { family, params })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Family::Constant, vec![c]).expect("constant must be finite")
    }

    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(Family::Linear, vec![a, b]).expect("linear coefficients must be finite")
    }

    pub fn sinusoid(offset: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        Self::new(Family::Sinusoid, vec![offset, amplitude, omega, phase])
            .expect("sinusoid parameters must be finite")
    }

    pub fn normal_cdf_ramp(low: f64, high: f64, scale: f64, center: f64) -> Self {
        Self::new(Family::NormalCdfRamp, vec![low, high, scale, center])
            .expect("ramp parameters must be finite")
    }

    pub fn normal_pdf_bump(base: f64, amplitude: f64, scale: f64, center: f64) -> Self {
        Self::new(Family::NormalPdfBump, vec![base, amplitude, scale, center])
            .expect("bump parameters must be finite")
    }

    pub fn table(knots: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            Family::PiecewiseLinearTable,
            knots.iter().flat_map(|&(t, v)| [t, v]).collect(),
        )
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Closed-form value at `t`, without a horizon check.
    pub fn value(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Constant => p[0],
            Family::Linear => p[0] + p[1] * t,
            Family::Sinusoid => {
                let phase = p.get(3).copied().unwrap_or(0.0);
                p[0] + p[1] * (p[2] * t + phase).sin()
            }
            Family::NormalCdfRamp => p[0] + (p[1] - p[0]) * std_normal_cdf(p[2] * (t - p[3])),
            Family::NormalPdfBump => p[0] + p[1] * std_normal_pdf(p[2] * (t - p[3])),
            Family::PiecewiseLinearTable => table_value(p, t),
        }
    }

    /// Value at `t`, rejecting times outside `[0, horizon]`.
    pub fn eval(&self, t: f64, horizon: f64) -> Result<f64> {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {horizon}]")));
        }
        Ok(self.value(t))
    }

    /// Cumulative integral `∫₀ᵗ f(u) du` on a uniform grid of `q` intervals.
    pub fn cumulative(&self, q: usize, horizon: f64) -> Result<CumulativeTable> {
        CumulativeTable::from_fn(|t| self.value(t), q, horizon)
    }
}

fn table_value(flat: &[f64], t: f64) -> f64 {
    let n = flat.len() / 2;
    let (t_first, t_last) = (flat[0], flat[2 * (n - 1)]);
    if t <= t_first {
        return flat[1];
    }
    if t >= t_last {
        return flat[2 * n - 1];
    }
    // first knot strictly greater than t
    let k = (1..n).find(|&k| flat[2 * k] > t).unwrap_or(n - 1);
    let (t0, v0, t1, v1) = (flat[2 * k - 2], flat[2 * k - 1], flat[2 * k], flat[2 * k + 1]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Samples of `∫₀ᵗ f` on `Q + 1` uniform nodes spanning `[0, T]`.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    horizon: f64,
    values: Vec<f64>,
}

impl CumulativeTable {
    /// Composite trapezoidal cumulative integral of `f` over `[0, horizon]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, q: usize, horizon: f64) -> Result<Self> {
        let samples = uniform_grid(q, horizon)?
            .map(&f)
            .collect::<Vec<_>>();
        Self::from_samples(&samples, horizon)
    }

    /// Cumulative trapezoid of already-sampled integrand values on a uniform
    /// grid of `samples.len() - 1` intervals.
    pub fn from_samples(samples: &[f64], horizon: f64) -> Result<Self> {
        let q = samples.len().saturating_sub(1);
        if q < 2 {
            return Err(Error::Domain(format!("need at least 2 intervals, got {q}")));
        }
        if let Some((k, v)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "integrand is {v} at node {k} (t = {})",
                node(k, q, horizon)
            )));
        }
        let half_step = 0.5 * horizon / q as f64;
        let mut values = Vec::with_capacity(q + 1);
        let mut acc = 0.0;
        values.push(acc);
        for pair in samples.windows(2) {
            acc += half_step * (pair[0] + pair[1]);
            values.push(acc);
        }
        Ok(Self { horizon, values })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of intervals `Q`.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let q = self.intervals();
        (0..=q).map(move |k| node(k, q, self.horizon))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linearly interpolated cumulative value; clamps to the grid ends.
    pub fn at(&self, t: f64) -> f64 {
        let q = self.intervals();
        let pos = (t / self.horizon) * q as f64;
        if pos <= 0.0 {
            return self.values[0];
        }
        if pos >= q as f64 {
            return self.values[q];
        }
        let k = pos.floor() as usize;
        let w = pos - k as f64;
        if w == 0.0 {
            self.values[k]
        } else {
            self.values[k] + w * (self.values[k + 1] - self.values[k])
        }
    }
}

/// Nodes `k·T/Q`, with the last node exactly `T`.
pub(crate) fn uniform_grid(q: usize, horizon: f64) -> Result<impl Iterator<Item = f64>> {
    if q < 2 {
        return Err(Error::Domain(format!("need at least 2 intervals, got {q}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} must be positive")));
    }
    Ok((0..=q).map(move |k| node(k, q, horizon)))
}

fn node(k: usize, q: usize, horizon: f64) -> f64 {
    if k == q {
        horizon
    } else {
        horizon * k as f64 / q as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(CoefficientFn::constant(2.5).eval(0.3, 1.0).unwrap(), 2.5);
        let s = CoefficientFn::sinusoid(1.0, 0.5, 4.0 * std::f64::consts::PI, 0.0);
        assert!((s.eval(0.125, 1.0).unwrap() - 1.5).abs() < 1e-15);
        let tab = CoefficientFn::table(&[(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert_eq!(tab.eval(0.5, 1.0).unwrap(), 1.0);
        let ramp = CoefficientFn::normal_cdf_ramp(-1.0, 1.0, 50.0, 0.5);
        assert_eq!(ramp.value(0.5), 0.0);
        let bump = CoefficientFn::normal_pdf_bump(1.0, 1.0, 1.0, 0.0);
        assert!((bump.value(0.0) - (1.0 + 0.398_942_280_401_432_7)).abs() < 1e-15);
    }

    #[test]
    fn table_clamps_outside_knots() {
        let tab = CoefficientFn::table(&[(0.2, 1.0), (0.4, 3.0), (0.8, -1.0)]).unwrap();
        assert_eq!(tab.value(0.0), 1.0);
        assert_eq!(tab.value(1.0), -1.0);
        assert!((tab.value(0.3) - 2.0).abs() < 1e-15);
        assert!((tab.value(0.6) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_out_of_horizon() {
        let c = CoefficientFn::constant(1.0);
        assert!(matches!(c.eval(-0.1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(c.eval(1.5, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn parameter_validation() {
        assert!(CoefficientFn::new(Family::Constant, vec![]).is_err());
        assert!(CoefficientFn::new(Family::Linear, vec![1.0, f64::NAN]).is_err());
        assert!(CoefficientFn::table(&[(0.5, 1.0), (0.5, 2.0)]).is_err());
        assert!(matches!(Family::from_name("cubic"), Err(Error::Spec(_))));
    }

    #[test]
    fn config_names_round_trip() {
        let json = r#"{"family":"table","params":[0,1,1,2]}"#;
        let f: CoefficientFn = serde_json::from_str(json).unwrap();
        assert_eq!(f.family(), Family::PiecewiseLinearTable);
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"family":"table","params":[0.0,1.0,1.0,2.0]}"#);
        let bad = r#"{"family":"constant","params":[1],"extra":0}"#;
        assert!(serde_json::from_str::<CoefficientFn>(bad).is_err());
    }

    #[test]
    fn cumulative_constant_is_exact() {
        let tab = CoefficientFn::constant(3.0).cumulative(7, 2.0).unwrap();
        for (t, v) in tab.grid().zip(tab.values()) {
            assert!((v - 3.0 * t).abs() < 1e-14);
        }
        assert_eq!(tab.values()[0], 0.0);
        assert_eq!(tab.grid().last(), Some(2.0));
    }

    #[test]
    fn cumulative_linear_and_sine() {
        let lin = CoefficientFn::linear(0.0, 1.0).cumulative(1000, 1.0).unwrap();
        assert!((lin.at(1.0) - 0.5).abs() < 1e-6);
        let sine = CumulativeTable::from_fn(f64::sin, 1000, 1.0).unwrap();
        assert!((sine.at(1.0) - (1.0 - 1f64.cos())).abs() < 1e-6);
    }

    #[test]
    fn trapezoid_is_second_order() {
        let exact = std::f64::consts::E - 1.0;
        let err = |q| (CumulativeTable::from_fn(f64::exp, q, 1.0).unwrap().at(1.0) - exact).abs();
        let ratio = err(100) / err(200);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn non_finite_sample_names_node() {
        let err = CumulativeTable::from_fn(|t| if t > 0.5 { f64::INFINITY } else { 0.0 }, 4, 1.0)
            .unwrap_err();
        assert!(err.to_string().contains("node 3"), "{err}");
    }

    #[test]
    fn interpolates_between_nodes() {
        let tab = CoefficientFn::linear(0.0, 2.0).cumulative(4, 1.0).unwrap();
        // nodes hold t^2 exactly; midpoint of [0.25, 0.5] interpolates linearly
        let mid = tab.at(0.375);
        assert!((mid - 0.5 * (0.0625 + 0.25)).abs() < 1e-15);
        assert_eq!(tab.at(-1.0), 0.0);
        assert_eq!(tab.at(5.0), 1.0);
    }

    #[test]
    fn eval_is_pure() {
        let f = CoefficientFn::normal_pdf_bump(0.3, 2.0, 7.0, 0.4);
        let a = f.value(0.123_456_789);
        assert_eq!(a.to_bits(), f.value(0.123_456_789).to_bits());
    }
}
