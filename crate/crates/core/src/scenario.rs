//! Input files.
//!
//! A scenario describes a path and its discretization:
//!
//! ```json
//! {"A_minus": {"diag": [-1.0]}, "delta_A": {"diag": [2.0]},
//!  "profile": {"kind": "tanh", "time_scale": 1.0},
//!  "discretization": {"T": 12.0, "Nt": 1200}}
//! ```
//!
//! A pair file holds two matrices, `{"H0": .., "H": ..}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DiscretizedDA, FLATNESS_TOL};
use crate::operator::{HermitianOperator, MatrixSpec};
use crate::path::{OperatorPath, PathSpec};

/// Node density used when a scenario omits its discretization.
const DEFAULT_NODES_PER_UNIT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "Nt")]
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub path: PathSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<Discretization>,
}

impl Scenario {
    pub fn parse(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn operator_path(&self) -> Result<OperatorPath> {
        self.path.to_path()
    }

    /// The given discretization, or a horizon where the profile is flat to
    /// the truncation tolerance with 50 nodes per unit time.
    pub fn resolved_discretization(&self) -> Result<Discretization> {
        if let Some(d) = self.discretization {
            return Ok(d);
        }
        let p = self.operator_path()?;
        let horizon = (p.profile().flat_horizon(FLATNESS_TOL / 2.0)).max(12.0).ceil();
        Ok(Discretization {
            horizon,
            nt: (2.0 * horizon * DEFAULT_NODES_PER_UNIT) as usize + 1,
        })
    }

    pub fn assemble(&self) -> Result<(OperatorPath, DiscretizedDA)> {
        let path = self.operator_path()?;
        let d = self.resolved_discretization()?;
        let da = DiscretizedDA::assemble(&path, d.horizon, d.nt)?;
        Ok((path, da))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    #[serde(rename = "H0")]
    pub h0: MatrixSpec,
    #[serde(rename = "H")]
    pub h: MatrixSpec,
}

impl PairFile {
    pub fn parse(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn operators(&self) -> Result<(HermitianOperator, HermitianOperator)> {
        Ok((self.h0.to_operator()?, self.h.to_operator()?))
    }
}
