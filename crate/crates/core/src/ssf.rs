//! Spectral shift functions of finite-dimensional pairs.
//!
//! The primary representative is the counting step function
//! `xi(.; H, H0) = N_H - N_H0`; the perturbation determinant route recovers
//! the same values from boundary values of a branch-tracked logarithm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::operator::HermitianOperator;
use crate::quad::gauss_legendre;
use crate::step::StepFunction;

/// Default step budget of [`log_det_tracked`].
pub const STEP_BUDGET: usize = 1_000_000;

fn check_dims(h0: &HermitianOperator, h: &HermitianOperator) -> Result<()> {
    if h0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: h0.dim(),
            right: h.dim(),
        });
    }
    Ok(())
}

fn union_spectrum(h0: &HermitianOperator, h: &HermitianOperator) -> Vec<f64> {
    let mut pts: Vec<f64> = h0.eigenvalues().iter().chain(h.eigenvalues()).copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `lambda -> N_H(lambda) - N_H0(lambda)` as an exact integer step function.
pub fn ssf_count(h0: &HermitianOperator, h: &HermitianOperator) -> Result<StepFunction> {
    check_dims(h0, h)?;
    let grid = union_spectrum(h0, h);
    let mut levels = vec![0.0];
    for &x in &grid {
        levels.push(h.counting_function(x) as f64 - h0.counting_function(x) as f64);
    }
    StepFunction::new(grid, levels)
}

/// Pairs each eigenvalue of `h` with the nearest unconsumed eigenvalue of `h0`.
fn paired_eigenvalues(h0: &HermitianOperator, h: &HermitianOperator) -> Vec<(f64, f64)> {
    let mut free: Vec<f64> = h0.eigenvalues().to_vec();
    let mut pairs = Vec::with_capacity(free.len());
    for &l in h.eigenvalues() {
        let (k, _) = free
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - l).abs().total_cmp(&(b.1 - l).abs()))
            .expect("dimensions match");
        pairs.push((l, free.remove(k)));
    }
    pairs
}

/// `det((H - z)(H0 - z)^{-1})` as a product of paired eigenvalue ratios.
pub fn perturbation_determinant(
    h0: &HermitianOperator,
    h: &HermitianOperator,
    z: Complex64,
) -> Result<Complex64> {
    check_dims(h0, h)?;
    if z.im == 0.0 {
        return Err(Error::Domain(format!(
            "perturbation determinant needs Im z != 0, got {z}"
        )));
    }
    Ok(paired_eigenvalues(h0, h)
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &(l, m)| {
            acc * ((l - z) / (m - z))
        }))
}

/// Branch-tracked `ln Delta(lambda + i epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterminantTrace {
    pub lambda: f64,
    pub epsilon: f64,
    pub value: Complex64,
    pub path_steps: usize,
}

/// Continues a logarithm `L(lambda + i y)` from `y = start` down to
/// `y = epsilon`, bisecting steps until consecutive arguments differ by less
/// than pi/2. `log_f` may return any branch; increments are reduced modulo
/// `2 pi i` and accumulated from the value at the start height.
pub fn track_log_vertical<F>(
    log_f: F,
    lambda: f64,
    epsilon: f64,
    start: f64,
    budget: usize,
) -> Result<DeterminantTrace>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};
    if !(epsilon > 0.0) || !(start > 0.0) {
        return Err(Error::Domain("heights must be positive".into()));
    }
    let mut y = start.max(epsilon);
    let mut current = log_f(Complex64::new(lambda, y))?;
    let mut log = current;
    log.im -= TAU * (log.im / TAU).round();
    let mut steps = 0usize;
    // log-height step; at most a factor 2 per accepted step
    let mut ratio = LN_2;
    while y > epsilon {
        if steps >= budget {
            return Err(Error::NonConvergence(format!(
                "branch continuation at lambda = {lambda} exceeded {budget} steps"
            )));
        }
        steps += 1;
        let y_next = (y * (-ratio).exp()).max(epsilon);
        let next = log_f(Complex64::new(lambda, y_next))?;
        let mut dlog = next - current;
        if !dlog.re.is_finite() || !dlog.im.is_finite() {
            return Err(Error::NonConvergence(format!(
                "determinant vanished near {lambda} + {y_next}i"
            )));
        }
        dlog.im -= TAU * (dlog.im / TAU).round();
        debug_assert!(dlog.im.abs() <= PI + 1e-12);
        if dlog.im.abs() < FRAC_PI_2 {
            log += dlog;
            current = next;
            y = y_next;
            ratio = (ratio * 2.0).min(LN_2);
        } else {
            ratio /= 2.0;
        }
    }
    Ok(DeterminantTrace {
        lambda,
        epsilon,
        value: log,
        path_steps: steps,
    })
}

/// Branch-tracked logarithm of the perturbation determinant along the
/// vertical segment from `lambda + iY` to `lambda + i epsilon`.
pub fn log_det_tracked(
    h0: &HermitianOperator,
    h: &HermitianOperator,
    lambda: f64,
    epsilon: f64,
    start: f64,
) -> Result<DeterminantTrace> {
    check_dims(h0, h)?;
    track_log_vertical(
        |z| Ok(perturbation_determinant(h0, h, z)?.ln()),
        lambda,
        epsilon,
        start,
        STEP_BUDGET,
    )
}

/// Smallest positive distance between distinct points of the union spectrum.
fn min_gap(h0: &HermitianOperator, h: &HermitianOperator) -> f64 {
    let pts = union_spectrum(h0, h);
    pts.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// `1e-6` times the minimal spectral gap, floored at `1e-12`.
pub fn default_epsilon(h0: &HermitianOperator, h: &HermitianOperator) -> f64 {
    let gap = min_gap(h0, h);
    if gap.is_finite() {
        (1e-6 * gap).max(1e-12)
    } else {
        1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsfDetValue {
    pub value: f64,
    pub trace: DeterminantTrace,
    pub warnings: Vec<Warning>,
}

/// `(1/pi) Im ln Delta(lambda + i epsilon)`; `epsilon = None` selects
/// [`default_epsilon`].
pub fn ssf_det(
    h0: &HermitianOperator,
    h: &HermitianOperator,
    lambda: f64,
    epsilon: Option<f64>,
) -> Result<SsfDetValue> {
    check_dims(h0, h)?;
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(h0, h));
    let radius = h0.norm().max(h.norm()).max(lambda.abs()).max(1.0);
    let trace = log_det_tracked(h0, h, lambda, epsilon, 10.0 * radius)?;
    let mut warnings = Vec::new();
    let distance = h0
        .eigenvalues()
        .iter()
        .chain(h.eigenvalues())
        .map(|&e| (e - lambda).abs())
        .fold(f64::INFINITY, f64::min);
    if distance < 10.0 * epsilon {
        warnings.push(Warning::GuardBand { lambda, distance });
    }
    Ok(SsfDetValue {
        value: trace.value.im / std::f64::consts::PI,
        trace,
        warnings,
    })
}

/// `|tr(f(H) - f(H0)) - integral of f' xi|` with the integral evaluated
/// exactly against the counting SSF.
pub fn trace_formula_residual<F>(h0: &HermitianOperator, h: &HermitianOperator, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let xi = ssf_count(h0, h)?;
    let lhs: f64 = h.eigenvalues().iter().map(|&x| f(x)).sum::<f64>()
        - h0.eigenvalues().iter().map(|&x| f(x)).sum::<f64>();
    let rhs = xi.integrate_derivative(&f);
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::Domain("f is not finite on the spectral hull".into()));
    }
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingResult {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
    pub warnings: Vec<Warning>,
}

/// Target accuracy of [`spectral_averaging`].
pub const AVERAGING_TARGET: f64 = 1e-6;
const MAX_AVERAGING_NODES: usize = 1 << 10;

/// Birman–Solomyak measure `Xi(X) = int_0^1 tr(V E_{H_s}(X)) ds` of a finite
/// union of open intervals, with `H_s = H0 + sV`.
///
/// The integrand jumps where eigenvalues of `H_s` cross endpoints of `X`;
/// the `s` axis is split there and each piece is integrated by
/// Gauss–Legendre, doubling the order from `s_nodes` until two successive
/// totals agree to the target.
pub fn spectral_averaging(
    h0: &HermitianOperator,
    h: &HermitianOperator,
    x: &[(f64, f64)],
    s_nodes: usize,
) -> Result<AveragingResult> {
    check_dims(h0, h)?;
    if s_nodes < 2 {
        return Err(Error::InvalidInput("s_nodes must be at least 2".into()));
    }
    if x.iter().any(|&(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
        return Err(Error::InvalidInput("X must be a union of bounded intervals".into()));
    }
    let v = h.matrix() - h0.matrix();
    if v.norm() == 0.0 {
        return Ok(AveragingResult {
            value: 0.0,
            error_estimate: 0.0,
            nodes_used: 0,
            warnings: vec![],
        });
    }
    let endpoints: Vec<f64> = x.iter().flat_map(|&(a, b)| [a, b]).collect();
    let h_at = |s: f64| HermitianOperator::new(h0.matrix() + v.scale(s));
    let integrand = |s: f64| -> Result<f64> {
        let hs = h_at(s)?;
        let u = hs.eigenvectors();
        let mut total = 0.0;
        for (k, &lam) in hs.eigenvalues().iter().enumerate() {
            if x.iter().any(|&(a, b)| lam > a && lam < b) {
                let col = u.column(k);
                total += (col.adjoint() * &v * col)[(0, 0)].re;
            }
        }
        Ok(total)
    };
    // counts of eigenvalues above each endpoint, as a function of s
    let counts = |s: f64| -> Result<Vec<usize>> {
        let hs = h_at(s)?;
        Ok(endpoints.iter().map(|&e| hs.counting_function(e)).collect())
    };

    let mut warnings = Vec::new();
    let scan = 128;
    let mut cuts = vec![0.0];
    let mut prev = counts(0.0)?;
    for j in 1..=scan {
        let s = j as f64 / scan as f64;
        let cur = counts(s)?;
        if cur != prev {
            let (mut lo, mut hi) = ((j - 1) as f64 / scan as f64, s);
            let base = prev.clone();
            while hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                if counts(mid)? == base {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    cuts.push(1.0);
    cuts.dedup();

    for &s in &[0.0, 1.0] {
        let hs = h_at(s)?;
        for &e in &endpoints {
            if hs.eigenvalues().iter().any(|&l| (l - e).abs() < 1e-12) {
                warnings.push(Warning::EndpointCollision { s, endpoint: e });
            }
        }
    }

    let piecewise = |n: usize| -> Result<f64> {
        let (nodes, weights) = gauss_legendre(n);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (c, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (xn, wn) in nodes.iter().zip(&weights) {
                total += wn * r * integrand(c + r * xn)?;
            }
        }
        Ok(total)
    };
    let mut n = s_nodes;
    let mut value = piecewise(n)?;
    loop {
        let next_n = 2 * n;
        if next_n > MAX_AVERAGING_NODES {
            warnings.push(Warning::Unconverged {
                detail: format!("spectral averaging stopped at {n} nodes"),
            });
            return Ok(AveragingResult {
                value,
                error_estimate: f64::NAN,
                nodes_used: n,
                warnings,
            });
        }
        let next = piecewise(next_n)?;
        let err = (next - value).abs();
        n = next_n;
        value = next;
        if err <= AVERAGING_TARGET {
            return Ok(AveragingResult {
                value,
                error_estimate: err,
                nodes_used: n,
                warnings,
            });
        }
    }
}

/// Returns the integer constant `xi(l; H, H0) - sgn(phi') xi(phi(l); phi(H), phi(H0))`
/// after checking it is the same on every segment.
pub fn invariance_check<F, G>(
    h0: &HermitianOperator,
    h: &HermitianOperator,
    phi: F,
    dphi: G,
) -> Result<i64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_dims(h0, h)?;
    let grid = union_spectrum(h0, h);
    let lo = grid[0] - 1.0;
    let hi = grid[grid.len() - 1] + 1.0;
    let mut probes = vec![lo];
    probes.extend(grid.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.push(hi);

    let signs: Vec<f64> = probes.iter().chain(&grid).map(|&x| dphi(x).signum()).collect();
    let sgn = signs[0];
    if sgn == 0.0 || signs.iter().any(|&s| s != sgn) {
        return Err(Error::InvalidInput(
            "phi must be strictly monotone on the spectral hull".into(),
        ));
    }
    let inner = ssf_count(&h0.apply_real(&phi)?, &h.apply_real(&phi)?)?;
    let outer = ssf_count(h0, h)?;
    let mut constant = None;
    for &x in &probes {
        let d = outer.eval(x) - sgn * inner.eval(phi(x));
        let d = d.round() as i64;
        match constant {
            None => constant = Some(d),
            Some(c) if c != d => {
                return Err(Error::InvariantViolation(format!(
                    "invariance constant changes from {c} to {d} at {x}"
                )))
            }
            _ => {}
        }
    }
    Ok(constant.unwrap_or(0))
}
