use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, HermitianOperator, MatrixSpec};

/// Switching profile `theta` rising monotonically from 0 at `-inf` to 1 at `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `e^t / (e^t + 1)`
    Logistic,
    /// `(1 + tanh t) / 2`
    Tanh,
    /// Cubic smoothstep from 0 at `t = -1` to 1 at `t = 1`.
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    #[serde(default = "one")]
    pub time_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn new(kind: ProfileKind, time_scale: f64) -> Result<Self> {
        if !(time_scale > 0.0) || !time_scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "time_scale must be positive, got {time_scale}"
            )));
        }
        Ok(Profile { kind, time_scale })
    }

    pub fn theta(&self, t: f64) -> f64 {
        let u = t / self.time_scale;
        match self.kind {
            ProfileKind::Logistic => {
                if u >= 0.0 {
                    1.0 / (1.0 + (-u).exp())
                } else {
                    let e = u.exp();
                    e / (1.0 + e)
                }
            }
            ProfileKind::Tanh => 0.5 * (1.0 + u.tanh()),
            ProfileKind::Ramp => {
                let x = ((u + 1.0) / 2.0).clamp(0.0, 1.0);
                x * x * (3.0 - 2.0 * x)
            }
        }
    }

    pub fn theta_prime(&self, t: f64) -> f64 {
        let u = t / self.time_scale;
        let d = match self.kind {
            ProfileKind::Logistic => {
                let e = (-u.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            ProfileKind::Tanh => {
                let c = u.cosh();
                if c.is_finite() {
                    0.5 / (c * c)
                } else {
                    0.0
                }
            }
            ProfileKind::Ramp => {
                let x = (u + 1.0) / 2.0;
                if (0.0..=1.0).contains(&x) {
                    3.0 * x * (1.0 - x)
                } else {
                    0.0
                }
            }
        };
        d / self.time_scale
    }

    /// Smallest `T` (to within a factor 1.01) with `|theta'(+-t)| < tol` for
    /// every `|t| >= T`.
    pub fn flat_horizon(&self, tol: f64) -> f64 {
        let mut t = self.time_scale;
        while self.theta_prime(t).max(self.theta_prime(-t)) >= tol {
            t *= 1.01;
        }
        t
    }
}

/// `A(t) = A_- + theta(t) delta`.
#[derive(Debug, Clone)]
pub struct OperatorPath {
    a_minus: HermitianOperator,
    delta: HermitianOperator,
    a_plus: HermitianOperator,
    profile: Profile,
}

impl OperatorPath {
    pub fn new(a_minus: HermitianOperator, delta: HermitianOperator, profile: Profile) -> Result<Self> {
        if a_minus.dim() != delta.dim() {
            return Err(Error::DimensionMismatch {
                left: a_minus.dim(),
                right: delta.dim(),
            });
        }
        let a_plus = a_minus.add_scaled(&delta, 1.0)?;
        Ok(OperatorPath {
            a_minus,
            delta,
            a_plus,
            profile,
        })
    }

    /// Scalar path `a_minus -> a_minus + delta`.
    pub fn scalar(a_minus: f64, delta: f64, profile: Profile) -> Self {
        Self::new(
            HermitianOperator::scalar(a_minus),
            HermitianOperator::scalar(delta),
            profile,
        )
        .expect("scalar path is consistent")
    }

    /// Path between two operators.
    pub fn between(a_minus: HermitianOperator, a_plus: &HermitianOperator, profile: Profile) -> Result<Self> {
        let delta = a_plus.add_scaled(&a_minus, -1.0)?;
        Self::new(a_minus, delta, profile)
    }

    pub fn dim(&self) -> usize {
        self.a_minus.dim()
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn a_minus(&self) -> &HermitianOperator {
        &self.a_minus
    }

    pub fn a_plus(&self) -> &HermitianOperator {
        &self.a_plus
    }

    pub fn delta(&self) -> &HermitianOperator {
        &self.delta
    }

    /// The norm-resolvent limits `(A_-, A_+)`.
    pub fn asymptotes(&self) -> (HermitianOperator, HermitianOperator) {
        (self.a_minus.clone(), self.a_plus.clone())
    }

    pub fn matrix_at(&self, t: f64) -> CMatrix {
        self.a_minus.matrix() + self.delta.matrix().scale(self.profile.theta(t))
    }

    pub fn at(&self, t: f64) -> HermitianOperator {
        HermitianOperator::new(self.matrix_at(t)).expect("path values are Hermitian")
    }

    /// `B(t) = theta(t) delta`.
    pub fn b(&self, t: f64) -> CMatrix {
        self.delta.matrix().scale(self.profile.theta(t))
    }

    /// `B'(t) = theta'(t) delta`.
    pub fn b_prime(&self, t: f64) -> CMatrix {
        self.delta.matrix().scale(self.profile.theta_prime(t))
    }

    /// The time-reflected path `t -> A(-t)`, running from `A_+` to `A_-`.
    /// Exact because every shipped profile satisfies `theta(-t) = 1 - theta(t)`.
    pub fn reversed(&self) -> Self {
        OperatorPath {
            a_minus: self.a_plus.clone(),
            delta: self.delta.scale(-1.0),
            a_plus: self.a_minus.clone(),
            profile: self.profile,
        }
    }

    /// Zero is in the resolvent set of both asymptotes, up to `tol`.
    pub fn is_fredholm(&self, tol: f64) -> bool {
        self.a_minus.min_abs_eigenvalue() > tol && self.a_plus.min_abs_eigenvalue() > tol
    }

    /// Abscissae `mu` of the vertical lines `mu + iR` forming the essential
    /// spectrum of `d/dt + A`, sorted and deduplicated.
    pub fn essential_spectrum_lines(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .a_minus
            .eigenvalues()
            .iter()
            .chain(self.a_plus.eigenvalues())
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
        v
    }

    pub fn to_spec(&self) -> PathSpec {
        PathSpec {
            a_minus: MatrixSpec::from(&self.a_minus),
            delta_a: MatrixSpec::from(&self.delta),
            profile: self.profile,
        }
    }
}

/// Serialized path: `{"A_minus": .., "delta_A": .., "profile": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    #[serde(rename = "A_minus")]
    pub a_minus: MatrixSpec,
    #[serde(rename = "delta_A")]
    pub delta_a: MatrixSpec,
    pub profile: Profile,
}

impl PathSpec {
    pub fn to_path(&self) -> Result<OperatorPath> {
        let profile = Profile::new(self.profile.kind, self.profile.time_scale)?;
        OperatorPath::new(self.a_minus.to_operator()?, self.delta_a.to_operator()?, profile)
    }
}
