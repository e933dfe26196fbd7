use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{SampleMeta, SpectralSample};

/// Compactly supported piecewise-constant function.
///
/// `levels[k]` is the value on `(b_{k-1}, b_k)` with `b_{-1} = -inf` and
/// `b_m = +inf`; the two outer levels are zero. At a breakpoint the function
/// takes its right-hand value, matching the strict counting convention.
/// The representation is canonical: adjacent levels always differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep", into = "RawStep")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawStep {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = Error;
    fn try_from(raw: RawStep) -> Result<Self> {
        StepFunction::new(raw.breakpoints, raw.levels)
    }
}

impl From<StepFunction> for RawStep {
    fn from(s: StepFunction) -> Self {
        RawStep {
            breakpoints: s.breakpoints,
            levels: s.levels,
        }
    }
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        if breakpoints.iter().chain(&levels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("step function has non-finite data".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if levels[0] != 0.0 || levels[levels.len() - 1] != 0.0 {
            return Err(Error::InvalidInput(
                "outermost levels must be zero (compact support)".into(),
            ));
        }
        Ok(Self::canonical(breakpoints, levels))
    }

    /// Builds the function from segment values on a sorted grid, dropping
    /// breakpoints where the value does not change.
    fn canonical(breakpoints: Vec<f64>, levels: Vec<f64>) -> Self {
        let mut b = Vec::with_capacity(breakpoints.len());
        let mut l = vec![levels[0]];
        for (k, &x) in breakpoints.iter().enumerate() {
            let next = levels[k + 1];
            if next != *l.last().unwrap() {
                b.push(x);
                l.push(next);
            }
        }
        StepFunction {
            breakpoints: b,
            levels: l,
        }
    }

    pub fn zero() -> Self {
        StepFunction {
            breakpoints: vec![],
            levels: vec![0.0],
        }
    }

    /// Indicator-weighted segment `value` on `(a, b)`.
    pub fn segment(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![0.0, value, 0.0])
    }

    /// Samples `f` at the midpoints of an arbitrary sorted grid. Grid points
    /// are deduplicated; `f` is expected to vanish outside the grid.
    pub fn from_midpoints<F: Fn(f64) -> f64>(grid: &[f64], f: F) -> Result<Self> {
        let mut pts: Vec<f64> = grid.to_vec();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut levels = vec![0.0];
        for w in pts.windows(2) {
            levels.push(f(0.5 * (w[0] + w[1])));
        }
        levels.push(0.0);
        Self::new(pts, levels)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn is_integer_valued(&self) -> bool {
        self.levels.iter().all(|v| v.fract() == 0.0)
    }

    /// Interior segments `(lo, hi, level)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.levels[1..])
            .map(|(w, &l)| (w[0], w[1], l))
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    /// Value at `x`; right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        self.levels[self.breakpoints.partition_point(|&b| b <= x)]
    }

    pub fn right_limit(&self, x: f64) -> f64 {
        self.eval(x)
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        self.levels[self.breakpoints.partition_point(|&b| b < x)]
    }

    pub fn is_breakpoint(&self, x: f64) -> bool {
        self.breakpoints.binary_search_by(|b| b.total_cmp(&x)).is_ok()
    }

    pub fn integral(&self) -> f64 {
        self.segments().map(|(a, b, l)| l * (b - a)).sum()
    }

    pub fn integral_abs(&self) -> f64 {
        self.segments().map(|(a, b, l)| l.abs() * (b - a)).sum()
    }

    /// Exact integral over `(a, b)`.
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.segments()
            .map(|(lo, hi, l)| l * (hi.min(b) - lo.max(a)).max(0.0))
            .sum()
    }

    /// `sum_k level_k (f(b_{k+1}) - f(b_k))`, i.e. the exact value of
    /// `integral of f' * self`.
    pub fn integrate_derivative<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let values: Vec<f64> = self.breakpoints.iter().map(|&b| f(b)).collect();
        values
            .windows(2)
            .zip(&self.levels[1..])
            .map(|(w, &l)| l * (w[1] - w[0]))
            .sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Pointwise combination `a * self + b * other` on the union grid.
    pub fn combine(&self, other: &StepFunction, a: f64, b: f64) -> StepFunction {
        let mut grid: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut levels = vec![0.0];
        for &x in &grid {
            levels.push(a * self.eval(x) + b * other.eval(x));
        }
        Self::canonical(grid, levels)
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, 1.0, 1.0)
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, 1.0, -1.0)
    }

    pub fn neg(&self) -> StepFunction {
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            levels: self.levels.iter().map(|v| -v).collect(),
        }
    }

    /// Samples the function on `grid` as a `lambda,xi` curve.
    pub fn sample(&self, grid: &[f64], method: &str) -> Result<SpectralSample> {
        SpectralSample::new(
            grid.to_vec(),
            grid.iter().map(|&x| self.eval(x)).collect(),
            SampleMeta {
                method: method.into(),
                tolerance: 0.0,
            },
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("step function serializes")
    }
}
