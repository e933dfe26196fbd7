//! Abel-type transform `S`, the limit operator `T`, Lebesgue points, and the
//! check of Pushnitski's formula
//!
//! ```text
//! xi(lambda; |D*|^2, |D|^2) = (1/pi) int_{-sqrt(lambda)}^{sqrt(lambda)} xi(nu; A+, A-) (lambda - nu^2)^{-1/2} dnu.
//! ```
//!
//! [`abel_transform`] is the two-sided integral above. [`s_transform`] is the
//! one-sided `S` acting on `f(nu)` for `nu > 0`; the two agree when `S` is fed
//! the symmetrized integrand `f(nu) + f(-nu)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscretizedDA, BOUNDARY_EPSILON};
use crate::operator::{SampleMeta, SpectralSample};
use crate::path::OperatorPath;
use crate::quad::{gauss_legendre, integrate_adaptive, integrate_budget};
use crate::ssf::ssf_count;
use crate::step::StepFunction;

/// Default Gauss–Legendre order for the sine-substituted integrals.
pub const DEFAULT_NODES: usize = 64;
/// Dyadic levels used by [`lebesgue_point`].
pub const LEBESGUE_LEVELS: usize = 24;
const QUAD_INTERVALS: usize = 4000;

/// A function handle or a step function. Step functions are integrated
/// exactly.
#[derive(Clone, Copy)]
pub enum Integrand<'a> {
    Step(&'a StepFunction),
    Fn(&'a dyn Fn(f64) -> f64),
}

impl<'a> From<&'a StepFunction> for Integrand<'a> {
    fn from(s: &'a StepFunction) -> Self {
        Integrand::Step(s)
    }
}

impl Integrand<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Integrand::Step(s) => s.eval(x),
            Integrand::Fn(f) => f(x),
        }
    }

    /// `int_a^b f`.
    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Integrand::Step(s) => Ok(s.integral_over(a, b)),
            Integrand::Fn(f) => {
                let scale = (b - a).abs();
                Ok(integrate_budget(f, a, b, 1e-11, 1e-15 * scale, QUAD_INTERVALS)?.value)
            }
        }
    }

    /// `int_a^b |f - alpha|`.
    fn deviation(&self, a: f64, b: f64, alpha: f64) -> Result<f64> {
        match self {
            Integrand::Step(s) => {
                let mut cuts = vec![a];
                cuts.extend(s.breakpoints().iter().copied().filter(|&x| x > a && x < b));
                cuts.push(b);
                Ok(cuts
                    .windows(2)
                    .map(|w| (s.eval(0.5 * (w[0] + w[1])) - alpha).abs() * (w[1] - w[0]))
                    .sum())
            }
            Integrand::Fn(f) => {
                let scale = (b - a).abs();
                let g = |x: f64| (f(x) - alpha).abs();
                Ok(integrate_budget(g, a, b, 1e-11, 1e-15 * scale, QUAD_INTERVALS)?.value)
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(lambda.sqrt())
    } else {
        Err(Error::Domain(format!("lambda must be positive, got {lambda}")))
    }
}

/// `(1/pi) int_{theta_a}^{theta_b} f(sqrt(lambda) sin theta) dtheta`, exactly
/// for step functions and with `nodes`-point Gauss–Legendre otherwise.
fn sine_substituted(f: Integrand, root: f64, lo: f64, hi: f64, nodes: usize) -> Result<f64> {
    match f {
        Integrand::Step(s) => {
            let angle = |v: f64| (v / root).clamp(-1.0, 1.0).asin().clamp(lo, hi);
            Ok(s
                .segments()
                .map(|(a, b, level)| level * (angle(b) - angle(a)))
                .sum::<f64>()
                / PI)
        }
        Integrand::Fn(g) => {
            if nodes == 0 {
                return Err(Error::InvalidInput("quadrature needs at least one node".into()));
            }
            let (x, w) = gauss_legendre(nodes);
            let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let v = g(root * (c + r * xi).sin());
                if !v.is_finite() {
                    return Err(Error::Domain(format!("integrand not finite at {}", root * (c + r * xi).sin())));
                }
                acc += wi * v;
            }
            Ok(acc * r / PI)
        }
    }
}

/// `(1/pi) int_{-sqrt(lambda)}^{sqrt(lambda)} f(nu) (lambda - nu^2)^{-1/2} dnu`,
/// evaluated as `(1/pi) int_{-pi/2}^{pi/2} f(sqrt(lambda) sin theta) dtheta`.
pub fn abel_transform(f: Integrand, lambda: f64, nodes: usize) -> Result<f64> {
    let root = check_lambda(lambda)?;
    sine_substituted(f, root, -FRAC_PI_2, FRAC_PI_2, nodes)
}

/// One-sided `(Sf)(lambda) = (1/pi) int_0^{sqrt(lambda)} f(nu) (lambda - nu^2)^{-1/2} dnu`.
pub fn s_transform(f: Integrand, lambda: f64, nodes: usize) -> Result<f64> {
    let root = check_lambda(lambda)?;
    sine_substituted(f, root, 0.0, FRAC_PI_2, nodes)
}

/// `(Tf)(z) = -z int f(nu) (nu^2 - z)^{-3/2} dnu` for `z < 0`.
///
/// With `nu = sqrt(-z) tan(phi)` this is `int_{-pi/2}^{pi/2} cos(phi) f(sqrt(-z) tan phi) dphi`.
pub fn t_transform(f: Integrand, z: f64) -> Result<f64> {
    if !(z < 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("z must be negative, got {z}")));
    }
    let root = (-z).sqrt();
    match f {
        Integrand::Step(s) => {
            let sine = |v: f64| v / (v * v + root * root).sqrt();
            Ok(s.segments().map(|(a, b, l)| l * (sine(b) - sine(a))).sum())
        }
        Integrand::Fn(g) => {
            let h = |phi: f64| {
                let c = phi.cos();
                if c <= 0.0 {
                    0.0
                } else {
                    c * g(root * phi.tan())
                }
            };
            let (left, _) = integrate_adaptive(h, -FRAC_PI_2, 0.0, 1e-9, 1e-14)?;
            let (right, _) = integrate_adaptive(h, 0.0, FRAC_PI_2, 1e-9, 1e-14)?;
            Ok(left + right)
        }
    }
}

/// Limit of `(Tf)(z)` as `z -> 0-` with its error estimate.
///
/// For integrands with one-sided limits at 0, `Tf(z)` approaches its limit at
/// rate `sqrt(|z|)`; `z` is divided by 4 per step and the sequence is
/// Richardson-extrapolated with that rate.
pub fn t_limit(f: Integrand, z0: f64, tol: f64) -> Result<(f64, f64)> {
    let mut z = z0;
    let mut prev = t_transform(f, z)?;
    let mut last_extrap: Option<f64> = None;
    let mut error = f64::INFINITY;
    for _ in 0..30 {
        z /= 4.0;
        let cur = t_transform(f, z)?;
        let extrap = 2.0 * cur - prev;
        if let Some(e) = last_extrap {
            error = (extrap - e).abs();
            if error < tol {
                return Ok((extrap, error));
            }
        }
        last_extrap = Some(extrap);
        prev = cur;
    }
    Ok((last_extrap.unwrap_or(prev), error))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Both,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Both => "both",
        }
    }

    fn window(self, x: f64, h: f64) -> (f64, f64) {
        match self {
            Side::Left => (x - h, x),
            Side::Right => (x, x + h),
            Side::Both => (x - h, x + h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesguePointEstimate {
    pub side: Side,
    pub value: f64,
    pub h_sequence: Vec<f64>,
    /// `(1/|I_h|) int_{I_h} |f - value|` for each radius.
    pub deviations: Vec<f64>,
    pub converged: bool,
}

impl LebesguePointEstimate {
    pub fn final_deviation(&self) -> f64 {
        *self.deviations.last().expect("at least one radius")
    }
}

/// Estimates the one-sided (or two-sided) Lebesgue value of `f` at `x`.
///
/// The candidate is the average over the smallest radius `h0 2^-24`;
/// convergence means the last four mean deviations from it decrease strictly
/// (or all vanish) and the last one is below `tol`.
pub fn lebesgue_point(f: Integrand, x: f64, side: Side, h0: f64, tol: f64) -> Result<LebesguePointEstimate> {
    if !(h0 > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("need h0 > 0 and tol > 0, got {h0}, {tol}")));
    }
    let h_sequence: Vec<f64> = (0..=LEBESGUE_LEVELS).map(|k| h0 * 0.5f64.powi(k as i32)).collect();
    let h_min = *h_sequence.last().unwrap();
    let (a, b) = side.window(x, h_min);
    let value = f.integral(a, b)? / (b - a);
    let mut deviations = Vec::with_capacity(h_sequence.len());
    for &h in &h_sequence {
        let (a, b) = side.window(x, h);
        deviations.push(f.deviation(a, b, value)? / (b - a));
    }
    let tail = &deviations[deviations.len() - 4..];
    let settled = tail.iter().all(|&d| d <= 1e-14) || tail.windows(2).all(|w| w[1] < w[0]);
    let converged = settled && tail[3] < tol;
    Ok(LebesguePointEstimate {
        side,
        value,
        h_sequence,
        deviations,
        converged,
    })
}

/// Settings shared by routes that read values at Lebesgue points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LebesguePointEstimator {
    pub h0: f64,
    pub tol: f64,
}

impl Default for LebesguePointEstimator {
    fn default() -> Self {
        LebesguePointEstimator { h0: 0.25, tol: 1e-6 }
    }
}

impl LebesguePointEstimator {
    pub fn estimate(&self, f: Integrand, x: f64, side: Side) -> Result<LebesguePointEstimate> {
        lebesgue_point(f, x, side, self.h0, self.tol)
    }

    /// Converged one-sided value, or the Lebesgue-point failure error.
    pub fn value(&self, f: Integrand, x: f64, side: Side) -> Result<f64> {
        let e = self.estimate(f, x, side)?;
        if e.converged {
            Ok(e.value)
        } else {
            Err(Error::LebesguePointFailure { x, side: side.name() })
        }
    }
}

/// `((Sf)_L(0+), f_L(0+) / 2)` with the one-sided `S` of [`s_transform`];
/// the two agree whenever 0 is a right Lebesgue point of `f`.
pub fn lemma3_check(f: Integrand, estimator: &LebesguePointEstimator) -> Result<(f64, f64)> {
    let f_right = estimator.value(f, 0.0, Side::Right)?;
    let sf = |lambda: f64| {
        if lambda <= 0.0 {
            0.0
        } else {
            s_transform(f, lambda, DEFAULT_NODES).unwrap_or(f64::NAN)
        }
    };
    let est = estimator.estimate(Integrand::Fn(&sf), 0.0, Side::Right)?;
    if !est.value.is_finite() {
        return Err(Error::Domain("S f is not finite near 0".into()));
    }
    Ok((est.value, 0.5 * f_right))
}

/// `lim_{z -> 0-} (Tf)(z)` next to `f_L(0+) + f_L(0-)`.
pub fn lemma4_check(f: Integrand, estimator: &LebesguePointEstimator) -> Result<(f64, f64)> {
    let right = estimator.value(f, 0.0, Side::Right)?;
    let left = estimator.value(f, 0.0, Side::Left)?;
    let (limit, _) = t_limit(f, -1.0, 1e-10)?;
    Ok((limit, right + left))
}

/// Both sides of Pushnitski's formula on a grid of positive `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushnitskiReport {
    pub lambda: Vec<f64>,
    /// `xi(lambda; |D*|^2, |D|^2)` from the discretization.
    pub lhs: Vec<f64>,
    /// Abel transform of `xi(.; A+, A-)`.
    pub rhs: Vec<f64>,
    pub residual: Vec<f64>,
    /// `xi(.; A+, A-)` by eigenvalue counting.
    pub endpoint_ssf: StepFunction,
}

impl PushnitskiReport {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, &r| m.max(r))
    }

    /// Max residual over grid points farther than `radius` from every `lambda`
    /// with `sqrt(lambda)` at a breakpoint of the endpoint SSF.
    pub fn max_residual_excluding(&self, radius: f64) -> f64 {
        self.lambda
            .iter()
            .zip(&self.residual)
            .filter(|(&l, _)| !near_breakpoint(&self.endpoint_ssf, l, radius))
            .fold(0.0, |m, (_, &r)| m.max(r))
    }

    pub fn residual_sample(&self) -> Result<SpectralSample> {
        SpectralSample::new(
            self.lambda.clone(),
            self.residual.clone(),
            SampleMeta {
                method: "pushnitski".into(),
                tolerance: BOUNDARY_EPSILON,
            },
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,lhs,rhs,residual\n");
        for k in 0..self.lambda.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.lambda[k], self.lhs[k], self.rhs[k], self.residual[k]
            ));
        }
        out
    }
}

/// Whether `lambda` lies within `radius` of some `b^2` with `b` a breakpoint
/// of `xi`, where the Abel transform has a square-root cusp.
pub fn near_breakpoint(xi: &StepFunction, lambda: f64, radius: f64) -> bool {
    xi.breakpoints().iter().any(|&b| (lambda - b * b).abs() < radius)
}

/// Evaluates both sides of Pushnitski's formula on `lambda_grid`.
pub fn pushnitski_check(path: &OperatorPath, d: &DiscretizedDA, lambda_grid: &[f64]) -> Result<PushnitskiReport> {
    if let Some(&bad) = lambda_grid.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::Domain(format!("lambda grid must be positive, got {bad}")));
    }
    let xi = ssf_count(path.a_minus(), path.a_plus())?;
    let mut report = PushnitskiReport {
        lambda: lambda_grid.to_vec(),
        lhs: Vec::with_capacity(lambda_grid.len()),
        rhs: Vec::with_capacity(lambda_grid.len()),
        residual: Vec::with_capacity(lambda_grid.len()),
        endpoint_ssf: xi.clone(),
    };
    for &lambda in lambda_grid {
        let rhs = abel_transform(Integrand::Step(&xi), lambda, DEFAULT_NODES)?;
        let lhs = if path.delta().frobenius_norm() == 0.0 {
            0.0
        } else {
            d.ssf_boundary_value(lambda, BOUNDARY_EPSILON)?
        };
        report.lhs.push(lhs);
        report.rhs.push(rhs);
        report.residual.push((lhs - rhs).abs());
    }
    Ok(report)
}
