//! Witten indices of the model operator.
//!
//! `W_r = lim_{lambda -> 0-} Delta_r(lambda)` with
//! `Delta_r(lambda) = (-lambda) tr((|D|^2 - lambda)^{-1} - (|D*|^2 - lambda)^{-1})`, and
//! `W_s = lim_{t -> inf} tr(exp(-t |D|^2) - exp(-t |D*|^2))`.
//! Both are compared against the signature formula of the endpoints and
//! against the Lebesgue values of `xi(.; A+, A-)` at zero.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::model::DiscretizedDA;
use crate::operator::{HermitianOperator, SampleMeta, SpectralSample};
use crate::path::OperatorPath;
use crate::pushnitski::{Integrand, LebesguePointEstimator, Side};
use crate::step::StepFunction;

/// Zero threshold for signature counts, relative to the operator norm.
pub const SIGNATURE_TOL: f64 = 1e-10;
/// Maximum number of `lambda` steps in [`witten_resolvent`].
pub const MAX_RESOLVENT_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    NonConverged,
    /// Converged, but with warnings attached.
    Warned,
}

/// Outcome of one or both regularizations.
#[derive(Debug, Clone, PartialEq)]
pub struct WittenEstimate {
    pub w_r: Option<f64>,
    pub w_s: Option<f64>,
    pub delta_r_curve: Option<SpectralSample>,
    pub delta_s_curve: Option<SpectralSample>,
    pub extrapolation_error: f64,
    pub status: Status,
    pub warnings: Vec<Warning>,
}

#[derive(Serialize, Deserialize)]
struct Curves {
    lambda: Vec<f64>,
    delta_r: Vec<f64>,
    t: Vec<f64>,
    delta_s: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WittenJson {
    w_r: Option<f64>,
    w_s: Option<f64>,
    error: f64,
    status: Status,
    curves: Curves,
    #[serde(default)]
    warnings: Vec<Warning>,
}

impl Serialize for WittenEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let split = |c: &Option<SpectralSample>| {
            c.as_ref()
                .map(|c| (c.grid().to_vec(), c.values().to_vec()))
                .unwrap_or_default()
        };
        let (lambda, delta_r) = split(&self.delta_r_curve);
        let (t, delta_s) = split(&self.delta_s_curve);
        WittenJson {
            w_r: self.w_r,
            w_s: self.w_s,
            error: self.extrapolation_error,
            status: self.status,
            curves: Curves {
                lambda,
                delta_r,
                t,
                delta_s,
            },
            warnings: self.warnings.clone(),
        }
        .serialize(s)
    }
}

impl WittenEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    /// The available value: `w_r` if present, else `w_s`.
    pub fn value(&self) -> Option<f64> {
        self.w_r.or(self.w_s)
    }

    pub fn is_converged(&self) -> bool {
        self.status != Status::NonConverged
    }

    /// Joins a resolvent and a semigroup estimate. Converged only if both
    /// are and they agree within their combined errors.
    pub fn combine(r: WittenEstimate, s: WittenEstimate) -> WittenEstimate {
        let error = r.extrapolation_error + s.extrapolation_error;
        let mut warnings = r.warnings;
        for w in s.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        let agree = match (r.w_r, s.w_s) {
            (Some(a), Some(b)) => (a - b).abs() <= error,
            _ => false,
        };
        let status = if r.status == Status::NonConverged || s.status == Status::NonConverged || !agree {
            Status::NonConverged
        } else if warnings.is_empty() {
            Status::Converged
        } else {
            Status::Warned
        };
        WittenEstimate {
            w_r: r.w_r,
            w_s: s.w_s,
            delta_r_curve: r.delta_r_curve,
            delta_s_curve: s.delta_s_curve,
            extrapolation_error: error,
            status,
            warnings,
        }
    }
}

fn settle(converged: bool, warnings: &[Warning]) -> Status {
    match (converged, warnings.is_empty()) {
        (false, _) => Status::NonConverged,
        (true, true) => Status::Converged,
        (true, false) => Status::Warned,
    }
}

/// Zero eigenvalues of the asymptotes, reported as non-Fredholm warnings.
pub fn fredholm_warnings(path: &OperatorPath) -> Vec<Warning> {
    let mut out = Vec::new();
    for (side, a) in [("minus", path.a_minus()), ("plus", path.a_plus())] {
        let tol = SIGNATURE_TOL * a.norm().max(1.0);
        for &e in a.eigenvalues() {
            if e.abs() <= tol {
                out.push(Warning::NonFredholm {
                    side: side.into(),
                    eigenvalue: e,
                });
            }
        }
    }
    out
}

/// `Delta_r(lambda)`, which tends to `xi(0+; |D*|^2, |D|^2)`.
pub fn delta_r(d: &DiscretizedDA, lambda: f64) -> Result<f64> {
    if !(lambda < 0.0) {
        return Err(Error::Domain(format!("lambda must be negative, got {lambda}")));
    }
    Ok(lambda * d.line().resolvent_trace_diff(Complex64::new(lambda, 0.0))?.re)
}

/// `Delta_s(t) = tr(exp(-t |D|^2) - exp(-t |D*|^2))`.
pub fn delta_s(d: &DiscretizedDA, t: f64) -> Result<f64> {
    Ok(d.semigroup_trace_diff(t)?.value)
}

/// Limit at 0 of `a + b sqrt(x) + c x` through three points.
fn sqrt_fit(pts: &[(f64, f64)]) -> Option<f64> {
    let m = nalgebra::Matrix3::from_fn(|i, j| match j {
        0 => 1.0,
        1 => pts[i].0.sqrt(),
        _ => pts[i].0,
    });
    let rhs = nalgebra::Vector3::new(pts[0].1, pts[1].1, pts[2].1);
    m.lu().solve(&rhs).map(|c| c[0])
}

/// `W_r` from `Delta_r` on `lambda_k = lambda0 ratio^k`, extrapolated with
/// the square-root model `a + b sqrt|lambda| + c |lambda|`.
pub fn witten_resolvent(d: &DiscretizedDA, lambda0: f64, ratio: f64, tol: f64) -> Result<WittenEstimate> {
    if !(lambda0 < 0.0) {
        return Err(Error::Domain(format!("lambda0 must be negative, got {lambda0}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("need ratio in (0,1) and tol > 0, got {ratio}, {tol}")));
    }
    let warnings = fredholm_warnings(d.path());
    let floor = 1e-12 * d.line().spectral_bound().max(1.0);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut limits: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut lambda = lambda0;
    for _ in 0..MAX_RESOLVENT_STEPS {
        if lambda.abs() < floor {
            break;
        }
        pts.push((-lambda, delta_r(d, lambda)?));
        let n = pts.len();
        if n >= 3 {
            if let Some(l) = sqrt_fit(&pts[n - 3..]) {
                limits.push(l);
            }
        }
        let m = limits.len();
        if m >= 3 {
            let last = &limits[m - 3..];
            let spread = last.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - last.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            if spread < tol {
                converged = true;
                break;
            }
        }
        lambda *= ratio;
    }
    let (value, error) = match limits.len() {
        0 => (pts.last().map(|p| p.1).unwrap_or(f64::NAN), f64::INFINITY),
        1 => (limits[0], f64::INFINITY),
        m => (limits[m - 1], (limits[m - 1] - limits[m - 2]).abs()),
    };
    let mut curve: Vec<(f64, f64)> = pts.iter().map(|&(x, v)| (-x, v)).collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sample = SpectralSample::new(
        curve.iter().map(|p| p.0).collect(),
        curve.iter().map(|p| p.1).collect(),
        SampleMeta {
            method: "resolvent".into(),
            tolerance: tol,
        },
    )?;
    Ok(WittenEstimate {
        w_r: Some(value),
        w_s: None,
        delta_r_curve: Some(sample),
        delta_s_curve: None,
        extrapolation_error: error,
        status: settle(converged, &warnings),
        warnings,
    })
}

/// Samples per octave of `t` in [`witten_semigroup`].
const SEMIGROUP_PER_OCTAVE: usize = 2;

/// `W_s` as the mean of `Delta_s` over the widest plateau in `[t_lo, t_hi]`
/// (total variation below `tol`). Converged iff the plateau spans a factor 4.
pub fn witten_semigroup(d: &DiscretizedDA, t_lo: f64, t_hi: f64, tol: f64) -> Result<WittenEstimate> {
    if !(t_lo > 0.0 && t_hi > t_lo) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("need 0 < t_lo < t_hi and tol > 0, got [{t_lo}, {t_hi}], {tol}")));
    }
    let mut warnings = fredholm_warnings(d.path());
    let horizon = d.trust_horizon();
    if t_hi > horizon {
        warnings.push(Warning::TrustHorizon { t: t_hi, horizon });
    }
    let octaves = (t_hi / t_lo).log2();
    let n = ((octaves * SEMIGROUP_PER_OCTAVE as f64).ceil() as usize).max(2) + 1;
    let ts: Vec<f64> = (0..n)
        .map(|k| t_lo * (t_hi / t_lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let vals = ts
        .iter()
        .map(|&t| d.line().semigroup_trace_diff(t, 32))
        .collect::<Result<Vec<f64>>>()?;
    // widest window [i, j] with total variation < tol, preferring late windows
    let mut best = (n - 1, n - 1);
    for i in 0..n {
        let mut tv = 0.0;
        for j in i + 1..n {
            tv += (vals[j] - vals[j - 1]).abs();
            if tv >= tol {
                break;
            }
            let span = ts[j] / ts[i];
            if span >= ts[best.1] / ts[best.0] {
                best = (i, j);
            }
        }
    }
    let (i, j) = best;
    let plateau = &vals[i..=j];
    let mean = plateau.iter().sum::<f64>() / plateau.len() as f64;
    let tv: f64 = plateau.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let converged = ts[j] / ts[i] >= 4.0 * (1.0 - 1e-12);
    let sample = SpectralSample::new(
        ts,
        vals,
        SampleMeta {
            method: "semigroup".into(),
            tolerance: tol,
        },
    )?;
    Ok(WittenEstimate {
        w_r: None,
        w_s: Some(mean),
        delta_r_curve: None,
        delta_s_curve: Some(sample),
        extrapolation_error: if converged { tv.max(1e-12) } else { f64::INFINITY },
        status: settle(converged, &warnings),
        warnings,
    })
}

/// A number of the form `k/2`, stored as `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfInteger {
    pub twice: i64,
}

impl HalfInteger {
    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: HalfInteger,
    pub warnings: Vec<Warning>,
}

/// `(1/2)[#>(A+) - #>(A-)] - (1/2)[#<(A+) - #<(A-)]`, with eigenvalues within
/// `1e-10 ||A||` of zero counted on neither side.
pub fn witten_closed_form(a_plus: &HermitianOperator, a_minus: &HermitianOperator) -> Result<ClosedForm> {
    if a_plus.dim() != a_minus.dim() {
        return Err(Error::DimensionMismatch {
            left: a_plus.dim(),
            right: a_minus.dim(),
        });
    }
    let mut warnings = Vec::new();
    let mut signature = |a: &HermitianOperator| -> (i64, i64) {
        let threshold = SIGNATURE_TOL * a.norm();
        let (mut pos, mut neg) = (0, 0);
        for &e in a.eigenvalues() {
            if e.abs() <= threshold {
                warnings.push(Warning::BoundaryKernel {
                    eigenvalue: e,
                    threshold,
                });
            } else if e > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        (pos, neg)
    };
    let (pp, np) = signature(a_plus);
    let (pm, nm) = signature(a_minus);
    Ok(ClosedForm {
        value: HalfInteger {
            twice: (pp - pm) - (np - nm),
        },
        warnings,
    })
}

/// `[xi_L(0+) + xi_L(0-)] / 2` for `xi = xi(.; A+, A-)`.
pub fn witten_from_ssf(xi: Integrand, estimator: &LebesguePointEstimator) -> Result<f64> {
    let right = estimator.value(xi, 0.0, Side::Right)?;
    let left = estimator.value(xi, 0.0, Side::Left)?;
    Ok(0.5 * (right + left))
}

/// The Fredholm index as the value of `xi(.; A+, A-)` on the segment around 0.
pub fn fredholm_index_via_ssf(
    xi: &StepFunction,
    a_plus: &HermitianOperator,
    a_minus: &HermitianOperator,
    tol: f64,
) -> Result<i64> {
    for (name, a) in [("A+", a_plus), ("A-", a_minus)] {
        if a.min_abs_eigenvalue() <= tol {
            return Err(Error::InvalidInput(format!(
                "{name} has eigenvalue {} within {tol} of zero",
                a.min_abs_eigenvalue()
            )));
        }
    }
    if xi.is_breakpoint(0.0) {
        return Err(Error::Inconsistent("0 is a breakpoint of xi for invertible endpoints".into()));
    }
    let v = xi.eval(0.0);
    if v.fract() != 0.0 {
        return Err(Error::Inconsistent(format!("xi(0) = {v} is not an integer")));
    }
    Ok(v as i64)
}
