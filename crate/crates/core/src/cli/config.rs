//! The JSON run configuration.
//!
//! ```json
//! {
//!   "model":  { "theta": {"family": "constant", "params": [0]},
//!               "kappa": {"family": "constant", "params": [0]},
//!               "nu":    {"family": "constant", "params": [1]},
//!               "T": 1.0, "z": 0.0, "x0": 0.0 },
//!   "solver": { "N": 500, "tol": 0.001, "max_iter": 100, "Q": 5000, "mesh_kind": "log_spaced" },
//!   "mc":     { "paths": 100000, "seed": 1, "deltas": [-0.2, 0.2] },
//!   "output": { "directory": "out", "formats": ["csv", "json"] }
//! }
//! ```
//!
//! Only `model.nu`, `model.T` and `model.z` are required. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientFn;
use crate::error::{Error, Result};
use crate::gmb::{BridgeSpec, ParentSpec};
use crate::montecarlo::McConfig;
use crate::solver::{MeshKind, SolverConfig};

/// Points at which coefficient invariants are checked before solving.
const COEFFICIENT_PROBES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "zero_fn")]
    pub theta: CoefficientFn,
    #[serde(default = "zero_fn")]
    pub kappa: CoefficientFn,
    pub nu: CoefficientFn,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub z: f64,
    #[serde(default)]
    pub x0: f64,
}

fn zero_fn() -> CoefficientFn {
    CoefficientFn::constant(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(rename = "Q")]
    pub q: Option<usize>,
    pub mesh_kind: MeshKind,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            n: d.n,
            tol: d.tol,
            max_iter: d.max_iter,
            q: d.q,
            mesh_kind: d.mesh_kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub paths: usize,
    pub seed: u64,
    pub deltas: Vec<f64>,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            paths: 100_000,
            seed: 0,
            deltas: vec![-0.2, 0.2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// A config rejection with the offending key path and, when it can be
/// found, the line of the file it sits on.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: PathBuf,
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let file = self.file.display();
        match self.line {
            Some(line) => write!(f, "{file}:{line}: `{}`: {}", self.key, self.message),
            None => write!(f, "{file}: `{}`: {}", self.key, self.message),
        }
    }
}

impl RunConfig {
    /// Parses and validates; every error names a key path.
    pub fn parse(text: &str, file: &Path) -> std::result::Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let inner = e.into_inner();
            ConfigError {
                file: file.to_path_buf(),
                line: (inner.line() > 0).then_some(inner.line()),
                key,
                message: inner.to_string(),
            }
        })?;
        cfg.validate().map_err(|e| {
            let (key, message) = match e {
                Error::Config { path, message } => (path, message),
                other => (String::from("."), other.to_string()),
            };
            ConfigError {
                file: file.to_path_buf(),
                line: locate_key(text, &key),
                key,
                message,
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: path.to_path_buf(),
            line: None,
            key: String::from("."),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.solver_config().validate()?;
        if self.mc.paths == 0 {
            return Err(Error::config("mc.paths", "must be >= 1"));
        }
        if let Some(d) = self.mc.deltas.iter().find(|d| !d.is_finite()) {
            return Err(Error::config("mc.deltas", format!("shift {d} is not finite")));
        }
        if self.output.formats.is_empty() {
            return Err(Error::config("output.formats", "at least one of \"csv\", \"json\""));
        }
        Ok(())
    }

    pub fn bridge(&self) -> BridgeSpec {
        self.model.bridge()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            n: self.solver.n,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            q: self.solver.q,
            mesh_kind: self.solver.mesh_kind,
        }
    }

    pub fn mc_config(&self) -> Result<McConfig> {
        McConfig::new(self.mc.paths, self.mc.seed)
    }
}

impl ModelConfig {
    pub fn bridge(&self) -> BridgeSpec {
        BridgeSpec::new(
            ParentSpec {
                theta: self.theta.clone(),
                kappa: self.kappa.clone(),
                nu: self.nu.clone(),
                horizon: self.horizon,
                x0: self.x0,
            },
            self.z,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let horizon = self.horizon;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::config("model.T", format!("must be positive, got {horizon}")));
        }
        if !self.z.is_finite() {
            return Err(Error::config("model.z", format!("must be finite, got {}", self.z)));
        }
        if !self.x0.is_finite() {
            return Err(Error::config("model.x0", format!("must be finite, got {}", self.x0)));
        }
        for k in 0..=COEFFICIENT_PROBES {
            let t = horizon * k as f64 / COEFFICIENT_PROBES as f64;
            for (key, f) in [("model.theta", &self.theta), ("model.kappa", &self.kappa)] {
                let v = f.value(t);
                if !v.is_finite() {
                    return Err(Error::config(key, format!("value {v} at t = {t} is not finite")));
                }
            }
            let nu = self.nu.value(t);
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::config(
                    "model.nu",
                    format!("must be positive on [0, T], got {nu} at t = {t}"),
                ));
            }
        }
        Ok(())
    }
}

/// Line (1-based) of the last segment of a dotted key path, found by
/// scanning for each quoted segment in turn.
fn locate_key(text: &str, path: &str) -> Option<usize> {
    let mut from = 0;
    for segment in path.split('.').filter(|s| !s.is_empty()) {
        let needle = format!("\"{segment}\"");
        from += text[from..].find(&needle)?;
    }
    (!path.is_empty() && path != ".").then(|| text[..from].matches('\n').count() + 1)
}
