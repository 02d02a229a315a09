//! JSON scenario documents.
//!
//! ```json
//! {
//!   "name": "optional label",
//!   "n": 2,
//!   "adjacency": [[0, 1], [1, 0]],
//!   "demand": [[0, 10], [0, 0]],
//!   "cpu_caps": [100, 100],
//!   "mem_caps": [512, 512],
//!   "coeffs": {"alpha1": 0.074104, "alpha2": 0.025896, "beta1": 0.327393, "beta2": 0.184607},
//!   "weights": {"gamma": 16, "phi": 1}
//! }
//! ```
//!
//! Matrices are row-major; servers are numbered from 1 in every message.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate_scenario, validate_topology, CostCoefficients, DemandMatrix, ModelError, ObjectiveWeights, ResourceCaps,
    Scenario,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffsEntry {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightsEntry {
    pub gamma: f64,
    pub phi: f64,
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub adjacency: Vec<Vec<i64>>,
    pub demand: Vec<Vec<f64>>,
    pub cpu_caps: Vec<f64>,
    pub mem_caps: Vec<f64>,
    pub coeffs: CoeffsEntry,
    pub weights: WeightsEntry,
}

fn conv<T: Scalar>(v: f64) -> T {
    T::from_f64(v).unwrap_or_else(T::nan)
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        serde_json::from_str(text).map_err(|e| ScenarioFileError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Validates every matrix against `n` and the domain invariants.
    pub fn into_scenario<T: Scalar>(&self) -> Result<Scenario<T>, ScenarioFileError> {
        let n = self.n;
        if self.adjacency.len() != n {
            return Err(ModelError::DimensionMismatch { what: "adjacency", expected: n, found: self.adjacency.len() }.into());
        }
        if self.demand.len() != n {
            return Err(ModelError::DimensionMismatch { what: "demand", expected: n, found: self.demand.len() }.into());
        }
        let topology = validate_topology(&self.adjacency)?;
        let rows: Vec<Vec<T>> = self.demand.iter().map(|r| r.iter().map(|&v| conv(v)).collect()).collect();
        let demand = DemandMatrix::from_rows(&rows)?;
        let caps = ResourceCaps::new(
            self.cpu_caps.iter().map(|&v| conv(v)).collect(),
            self.mem_caps.iter().map(|&v| conv(v)).collect(),
        )?;
        let c = self.coeffs;
        let coeffs = CostCoefficients::new(conv(c.alpha1), conv(c.alpha2), conv(c.beta1), conv(c.beta2))?;
        let weights = ObjectiveWeights::new(conv(self.weights.gamma), conv(self.weights.phi))?;
        Ok(validate_scenario(topology, demand, caps, coeffs, weights)?)
    }

    pub fn from_scenario<T: Scalar>(s: &Scenario<T>, name: Option<String>) -> Self {
        let c = s.coeffs;
        Self {
            name,
            n: s.n(),
            adjacency: s.topology.to_rows(),
            demand: s.demand.to_rows().into_iter().map(|r| r.into_iter().map(T::as_f64).collect()).collect(),
            cpu_caps: s.caps.cpu.iter().map(|v| v.as_f64()).collect(),
            mem_caps: s.caps.mem.iter().map(|v| v.as_f64()).collect(),
            coeffs: CoeffsEntry {
                alpha1: c.alpha1.as_f64(),
                alpha2: c.alpha2.as_f64(),
                beta1: c.beta1.as_f64(),
                beta2: c.beta2.as_f64(),
            },
            weights: WeightsEntry { gamma: s.weights.gamma.as_f64(), phi: s.weights.phi.as_f64() },
        }
    }
}
