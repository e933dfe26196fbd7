//! Gauss–Legendre and adaptive Gauss–Kronrod quadrature on finite intervals.

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Fixed-order Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
    x.iter().zip(&w).map(|(&x, &w)| w * f(c + r * x)).sum::<f64>() * r
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - r * XGK[j]) + f(c + r * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

/// Adaptive 15-point Gauss–Kronrod integration. Returns the integral and an
/// error estimate.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    let mut stack = vec![(a, b, 0usize)];
    let (mut total, mut error) = (0.0, 0.0);
    let (whole, _) = kronrod(&f, a, b);
    let scale = whole.abs();
    let width = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = kronrod(&f, lo, hi);
        if !v.is_finite() {
            return Err(Error::Domain(format!("integrand not finite on [{lo}, {hi}]")));
        }
        let share = (hi - lo).abs() / width;
        let local_tol = (rel_tol * scale).max(abs_tol) * share;
        // a jump leaves an error proportional to the width; once it is at
        // rounding level the piece is as good as it gets
        let negligible = e <= f64::EPSILON * scale.max(abs_tol)
            || (hi - lo).abs() <= 1e3 * f64::EPSILON * lo.abs().max(hi.abs());
        if e <= local_tol || negligible || depth >= 50 {
            if depth >= 50 && e > local_tol {
                return Err(Error::NonConvergence(format!(
                    "adaptive quadrature stalled on [{lo}, {hi}] with error {e:.3e}"
                )));
            }
            total += v;
            error += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok((total, error))
}

/// Outcome of [`integrate_budget`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgeted {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// Globally adaptive Gauss–Kronrod that always returns its best estimate.
/// The interval with the largest error is bisected until the summed error
/// meets the tolerance or `max_intervals` pieces are in use. Meant for
/// integrands such as `sin(1/x)` that no finite rule resolves.
pub fn integrate_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Budgeted> {
    let eval = |lo: f64, hi: f64| -> Result<Piece> {
        let (value, error) = kronrod(&f, lo, hi);
        if !value.is_finite() {
            return Err(Error::Domain(format!("integrand not finite on [{lo}, {hi}]")));
        }
        Ok(Piece { lo, hi, value, error })
    };
    let mut pieces = vec![eval(a, b)?];
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let target = (rel_tol * value.abs()).max(abs_tol);
        if error <= target || pieces.len() >= max_intervals {
            return Ok(Budgeted {
                value,
                error,
                converged: error <= target,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(k, _)| k)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            return Ok(Budgeted {
                value,
                error,
                converged: false,
            });
        }
        pieces.push(eval(p.lo, mid)?);
        pieces.push(eval(mid, p.hi)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64, 200] {
            let (x, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_abs_diff_eq!(got, exact, epsilon = 1e-12);
            let even = 2 * (n - 1);
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(even as i32)).sum();
            assert_abs_diff_eq!(got, 2.0 / (even as f64 + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let (v, _) = integrate_adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0 / 1e-2f64).atan();
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn budgeted_quadrature_reports_best_effort() {
        let r = integrate_budget(|x| x.exp(), 0.0, 1.0, 1e-13, 0.0, 100).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.value, std::f64::consts::E - 1.0, epsilon = 1e-13);
        // mean of |sin(1/x)| over (0, 1e-3) is close to 2/pi
        let h = 1e-3;
        let r = integrate_budget(|x| (1.0 / x).sin().abs(), 0.0, h, 1e-12, 0.0, 3000).unwrap();
        assert!(!r.converged);
        assert!((r.value / h - 2.0 / std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn fixed_rule_matches_sine() {
        let v = integrate_gl(f64::sin, 0.0, std::f64::consts::PI, 20);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-14);
    }
}
