//! `-i d/dx` on a circle of circumference `L`, perturbed by multiplication by
//! a real function `f`, in the Fourier basis `e^{2 pi i k x / L}`, `|k| <= N`.
//!
//! On the full circle the gauge transform `e^{i phi}` with
//! `phi' = f - mean(f)` conjugates `-i d/dx + f` to `-i d/dx + mean(f)`, so
//! away from the truncation edges the spectral shift function is the constant
//! `(1/2 pi) int f`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DiscretizedDA;
use crate::operator::{CMatrix, HermitianOperator, SampleMeta, SpectralSample};
use crate::path::{OperatorPath, Profile};
use crate::ssf::ssf_count;
use crate::witten::{delta_r, fredholm_warnings, Status, WittenEstimate};

/// Oversampling of `f` relative to the number of modes.
const OVERSAMPLE: usize = 8;
/// Spectral parameters at which [`witten_dirac`] reads `Delta_r`.
pub const DIRAC_PLATEAU: [f64; 2] = [-0.5, -0.25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// `amp exp(-(x - center)^2 / (2 width^2))`, periodized.
    Gaussian { amp: f64, width: f64, center: f64 },
    /// Equispaced values on `[0, L)`.
    Samples { values: Vec<f64> },
}

/// JSON form of a [`PeriodicDiracModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(rename = "L")]
    pub l: f64,
    pub modes: usize,
    pub f: Perturbation,
}

#[derive(Debug, Clone)]
pub struct PeriodicDiracModel {
    l: f64,
    modes: usize,
    f: Perturbation,
    samples: Vec<f64>,
    /// `fhat[m]` for `m = 0..`; negative indices by conjugation.
    fhat: Vec<Complex64>,
}

impl PeriodicDiracModel {
    pub fn new(l: f64, modes: usize, f: Perturbation) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!("circumference must be positive, got {l}")));
        }
        if modes == 0 {
            return Err(Error::InvalidInput("need at least one mode".into()));
        }
        let samples = match &f {
            Perturbation::Gaussian { amp, width, center } => {
                if !(*width > 0.0) || !amp.is_finite() || !center.is_finite() {
                    return Err(Error::InvalidInput(format!("bad gaussian amp {amp}, width {width}")));
                }
                let m = OVERSAMPLE * modes;
                let images = (8.0 * width / l).ceil() as i64 + 1;
                (0..m)
                    .map(|j| {
                        let x = l * j as f64 / m as f64;
                        (-images..=images)
                            .map(|r| {
                                let u = (x - center - r as f64 * l) / width;
                                amp * (-0.5 * u * u).exp()
                            })
                            .sum()
                    })
                    .collect()
            }
            Perturbation::Samples { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("samples must be finite and non-empty".into()));
                }
                values.clone()
            }
        };
        let m = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        // coefficients beyond the Nyquist index are not resolved by the samples
        let keep = (m - 1) / 2;
        let fhat = (0..=2 * modes)
            .map(|k| if k <= keep { buf[k] / m as f64 } else { Complex64::new(0.0, 0.0) })
            .collect();
        Ok(PeriodicDiracModel {
            l,
            modes,
            f,
            samples,
            fhat,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(spec.l, spec.modes, spec.f.clone())
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            l: self.l,
            modes: self.modes,
            f: self.f.clone(),
        }
    }

    pub fn circumference(&self) -> f64 {
        self.l
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    /// Fourier coefficient `(1/L) int f(x) e^{-2 pi i m x / L} dx`, `|m| <= 2N`.
    pub fn fourier_coefficient(&self, m: i64) -> Complex64 {
        let c = self.fhat.get(m.unsigned_abs() as usize).copied().unwrap_or_default();
        if m < 0 {
            c.conj()
        } else {
            c
        }
    }

    pub fn max_abs_f(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Mode spacing `2 pi / L`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// `(-N, N)` times the spacing.
    pub fn band_edge(&self) -> f64 {
        self.spacing() * self.modes as f64
    }

    /// The central half of the truncated band.
    pub fn default_window(&self) -> (f64, f64) {
        let half = 0.5 * self.band_edge();
        (-half, half)
    }

    pub fn momentum_eigs(&self) -> Vec<f64> {
        let n = self.modes as i64;
        (-n..=n).map(|k| self.spacing() * k as f64).collect()
    }

    pub fn momentum_operator(&self) -> HermitianOperator {
        HermitianOperator::from_diag(&self.momentum_eigs()).expect("finite momenta")
    }

    /// Matrix of multiplication by `f`, `fhat_{k - m}`.
    pub fn multiplication_matrix(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| self.fourier_coefficient(i as i64 - j as i64))
    }

    pub fn perturbed_operator(&self) -> Result<HermitianOperator> {
        let mut m = self.multiplication_matrix();
        for (k, p) in self.momentum_eigs().iter().enumerate() {
            m[(k, k)] += p;
        }
        HermitianOperator::new(m)
    }

    pub fn perturbed_eigs(&self) -> Result<Vec<f64>> {
        Ok(self.perturbed_operator()?.eigenvalues().to_vec())
    }

    /// `(1/2 pi) int_0^L f`, by the trapezoidal rule on the samples.
    pub fn mean_formula(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.l / self.samples.len() as f64 / (2.0 * PI)
    }
}

/// Window average of `N_{A+} - N_{A-}` over `[a, b]`.
pub fn ssf_dirac(model: &PeriodicDiracModel, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    if !(b > a) {
        return Err(Error::InvalidInput(format!("empty window [{a}, {b}]")));
    }
    let (lo, hi) = model.default_window();
    if a < lo - 1e-12 || b > hi + 1e-12 {
        return Err(Error::Domain(format!(
            "window [{a}, {b}] leaves the central band [{lo}, {hi}]; truncation artifacts"
        )));
    }
    let xi = ssf_count(&model.momentum_operator(), &model.perturbed_operator()?)?;
    Ok(xi.integral_over(a, b) / (b - a))
}

/// `W_r` of `d/dt + A(t)` with `A- = -i d/dx` and `delta = M_f`, read off
/// `Delta_r` at the spectral parameters [`DIRAC_PLATEAU`].
///
/// The truncated asymptotes are matrices, so the `lambda -> 0` limit of
/// `Delta_r` is their signature difference. The continuum value shows at
/// `lambda` where `sqrt|lambda|` is well above the mode spacing and well below
/// the band edge.
pub fn witten_dirac(model: &PeriodicDiracModel, profile: Profile, horizon: f64, nt: usize) -> Result<WittenEstimate> {
    let path = OperatorPath::new(
        model.momentum_operator(),
        HermitianOperator::new(model.multiplication_matrix())?,
        profile,
    )?;
    let d = DiscretizedDA::assemble(&path, horizon, nt)?;
    let values = DIRAC_PLATEAU
        .iter()
        .map(|&l| delta_r(&d, l))
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().fold(0.0, |m: f64, v| m.max((v - mean).abs()));
    let warnings = fredholm_warnings(&path);
    Ok(WittenEstimate {
        w_r: Some(mean),
        w_s: None,
        delta_r_curve: Some(SpectralSample::new(
            DIRAC_PLATEAU.to_vec(),
            values,
            SampleMeta {
                method: "resolvent_plateau".into(),
                tolerance: 0.1,
            },
        )?),
        delta_s_curve: None,
        extrapolation_error: spread,
        status: if warnings.is_empty() { Status::Converged } else { Status::Warned },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian(amp: f64, width: f64, center: f64) -> Perturbation {
        Perturbation::Gaussian { amp, width, center }
    }

    #[test]
    fn momentum_spectrum() {
        let m = PeriodicDiracModel::new(2.0 * PI, 2, gaussian(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(m.momentum_eigs(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let m = PeriodicDiracModel::new(64.0, 7, gaussian(0.0, 1.0, 0.0)).unwrap();
        let e = m.momentum_eigs();
        assert_eq!(e.len(), 15);
        assert!(e.windows(2).all(|w| (w[1] - w[0] - 2.0 * PI / 64.0).abs() < 1e-14));
    }

    #[test]
    fn constant_perturbation_shifts_exactly() {
        let c = 0.3;
        let m = PeriodicDiracModel::new(10.0, 6, Perturbation::Samples { values: vec![c; 48] }).unwrap();
        let shifted: Vec<f64> = m.momentum_eigs().iter().map(|x| x + c).collect();
        for (a, b) in m.perturbed_eigs().unwrap().iter().zip(&shifted) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let zero = PeriodicDiracModel::new(10.0, 6, gaussian(0.0, 1.0, 3.0)).unwrap();
        assert_eq!(zero.perturbed_eigs().unwrap(), zero.momentum_eigs());
    }

    #[test]
    fn mean_formula_examples() {
        let l = 64.0;
        let m = PeriodicDiracModel::new(l, 16, Perturbation::Samples { values: vec![2.0 * PI / l; 128] }).unwrap();
        assert_abs_diff_eq!(m.mean_formula(), 1.0, epsilon = 1e-14);
        let (a, w) = (1.3, 1.5);
        let m = PeriodicDiracModel::new(l, 32, gaussian(a, w, 20.0)).unwrap();
        assert_abs_diff_eq!(m.mean_formula(), a * w * (2.0 * PI).sqrt() / (2.0 * PI), epsilon = 1e-8);
    }

    #[test]
    fn fourier_coefficients_are_hermitian() {
        let m = PeriodicDiracModel::new(20.0, 8, gaussian(1.0, 0.7, 4.0)).unwrap();
        for k in 0..=16 {
            assert_abs_diff_eq!((m.fourier_coefficient(-k) - m.fourier_coefficient(k).conj()).norm(), 0.0);
        }
        assert_abs_diff_eq!(
            m.fourier_coefficient(0).re * 20.0,
            0.7 * (2.0 * PI).sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn window_rule() {
        let m = PeriodicDiracModel::new(64.0, 32, gaussian(1.0, 1.0, 0.0)).unwrap();
        let (lo, hi) = m.default_window();
        assert!(ssf_dirac(&m, (lo, hi)).is_ok());
        assert!(ssf_dirac(&m, (lo, hi + 0.5)).is_err());
    }

    #[test]
    fn json_spec_roundtrip() {
        let text = r#"{"L": 64.0, "modes": 16, "f": {"kind": "gaussian", "amp": 1.0, "width": 2.0, "center": 3.0}}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let m = PeriodicDiracModel::from_spec(&spec).unwrap();
        assert_eq!(m.to_spec(), spec);
        let spec: ModelSpec = serde_json::from_str(r#"{"L": 8.0, "modes": 4, "f": {"kind": "samples", "values": [1, 0, 0, 0]}}"#).unwrap();
        assert!(PeriodicDiracModel::from_spec(&spec).is_ok());
    }
}
