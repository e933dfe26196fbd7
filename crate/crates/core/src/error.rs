use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error(
        "matrix is not Hermitian: worst entry ({row}, {col}) has |H - H*| = {residual:.3e} \
         (tolerance {tolerance:.3e})"
    )]
    NotHermitian {
        row: usize,
        col: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("identity violated: {0}")]
    IdentityViolation(String),

    #[error("path is not flat at the truncation horizon: |theta'(+-{horizon})| = {slope:.3e}")]
    Truncation { horizon: f64, slope: f64 },

    #[error("projections do not form a Fredholm pair: ||P - Q|| = {0:.6}")]
    PairNotFredholm(f64),

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    #[error("Lebesgue point estimate failed at {x} ({side})")]
    LebesguePointFailure { x: f64, side: &'static str },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Non-fatal diagnostics attached to numerical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Evaluation point closer than the guard band to an eigenvalue.
    GuardBand { lambda: f64, distance: f64 },
    /// Some eigenvalue of H_s sat on an endpoint of the averaging set.
    EndpointCollision { s: f64, endpoint: f64 },
    /// Boundary operator of the discretization has an eigenvalue near zero.
    BoundaryDegeneracy { side: String, eigenvalue: f64 },
    /// Singular values of the discretized operator cluster at the kernel threshold.
    IllSeparatedKernel { threshold: f64, nearest: f64 },
    /// Requested semigroup time exceeds the trust horizon of the grid.
    TrustHorizon { t: f64, horizon: f64 },
    /// An asymptote has zero in its spectrum.
    NonFredholm { side: String, eigenvalue: f64 },
    /// Signature count ambiguous: eigenvalue within the zero threshold.
    BoundaryKernel { eigenvalue: f64, threshold: f64 },
    /// Iterative estimate stopped without meeting its tolerance.
    Unconverged { detail: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::GuardBand { lambda, distance } => write!(
                f,
                "lambda = {lambda} is {distance:.3e} from an eigenvalue (inside the guard band)"
            ),
            Warning::EndpointCollision { s, endpoint } => {
                write!(f, "eigenvalue of H_s at s = {s} collides with endpoint {endpoint}")
            }
            Warning::BoundaryDegeneracy { side, eigenvalue } => write!(
                f,
                "boundary operator at {side} has eigenvalue {eigenvalue:.3e}; Fredholmness at risk"
            ),
            Warning::IllSeparatedKernel { threshold, nearest } => write!(
                f,
                "singular value {nearest:.3e} within a factor 10 of the kernel threshold {threshold:.3e}"
            ),
            Warning::TrustHorizon { t, horizon } => {
                write!(f, "t = {t} beyond the trust horizon {horizon:.3}")
            }
            Warning::NonFredholm { side, eigenvalue } => write!(
                f,
                "asymptote {side} has eigenvalue {eigenvalue:.3e} at zero; operator is not Fredholm"
            ),
            Warning::BoundaryKernel {
                eigenvalue,
                threshold,
            } => write!(
                f,
                "eigenvalue {eigenvalue:.3e} within zero threshold {threshold:.3e}; counted as neither sign"
            ),
            Warning::Unconverged { detail } => write!(f, "not converged: {detail}"),
        }
    }
}
