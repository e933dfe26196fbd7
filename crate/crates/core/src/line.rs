//! Whole-line discretization of `D = d/dt + A(t)` with exact tails.
//!
//! On the infinite grid `t_k = -T + k h` the scheme
//! `(D f)_{k+1/2} = (f_{k+1} - f_k)/h + A_{k+1/2} (f_{k+1} + f_k)/2`
//! maps nodes to midpoints, with `A` frozen at `A(-T)` and `A(T)` outside
//! `[-T, T]`. Writing `alpha = I/h + A/2` and `beta = I/h - A/2`:
//!
//! * `H_- = D*D` on nodes: diagonal `alpha_{k-1/2}^2 + beta_{k+1/2}^2`,
//!   coupling `-beta_{k+1/2} alpha_{k+1/2}`;
//! * `H_+ = DD*` on midpoints: diagonal `alpha_m^2 + beta_m^2`,
//!   coupling `-alpha_m beta_{m+1}`.
//!
//! Outside a finite window both operators are the same uniform block chain,
//! which is eliminated exactly through its surface self-energy. The relative
//! determinant `det(H_+ - z)/det(H_- - z)` and the trace of the resolvent
//! difference therefore reduce to block-tridiagonal sweeps over the window.
//! Nodes and midpoints are interleaved, so the node window is chosen in two
//! ways (shifted by one node) and the results averaged; this cancels the
//! `O(h)` ambiguity of identifying the two grids.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{CMatrix, HermitianOperator};
use crate::path::OperatorPath;

#[derive(Debug, Clone)]
struct Chain {
    diag: Vec<CMatrix>,
    /// `upper[k]` couples block `k` to block `k + 1`; the lower coupling is
    /// its adjoint.
    upper: Vec<CMatrix>,
}

#[derive(Debug, Clone)]
struct Tail {
    vectors: CMatrix,
    /// Per-channel diagonal and coupling of the uniform chain.
    d: Vec<f64>,
    o: Vec<f64>,
}

impl Tail {
    fn new(a: &HermitianOperator, h: f64) -> Self {
        let d = a
            .eigenvalues()
            .iter()
            .map(|&x| 2.0 / (h * h) + x * x / 2.0)
            .collect();
        let o = a
            .eigenvalues()
            .iter()
            .map(|&x| -(1.0 / (h * h) - x * x / 4.0))
            .collect();
        Tail {
            vectors: a.eigenvectors().clone(),
            d,
            o,
        }
    }

    /// Self-energy and its `z`-derivative in the original basis.
    fn self_energy(&self, z: Complex64) -> (CMatrix, CMatrix) {
        let n = self.d.len();
        let mut s = Vec::with_capacity(n);
        let mut ds = Vec::with_capacity(n);
        for (&d, &o) in self.d.iter().zip(&self.o) {
            let (a, b) = channel_self_energy(d, o, z);
            s.push(a);
            ds.push(b);
        }
        let u = &self.vectors;
        let rebuild = |v: &[Complex64]| {
            let mut m = u.clone();
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] *= v[j];
                }
            }
            m * u.adjoint()
        };
        (rebuild(&s), rebuild(&ds))
    }
}

/// Surface self-energy `Sigma(z)` of the semi-infinite chain with diagonal
/// `d` and coupling `o`, and `dSigma/dz`. The decaying root is selected;
/// on the band itself the limit from the upper half-plane is used.
fn channel_self_energy(d: f64, o: f64, z: Complex64) -> (Complex64, Complex64) {
    let w = Complex64::from(d) - z;
    let s = (w * w - 4.0 * o * o).sqrt();
    let c1 = (w - s) / 2.0;
    let c2 = (w + s) / 2.0;
    let (n1, n2) = (c1.norm(), c2.norm());
    let sigma = if (n1 - n2).abs() > 1e-12 * o.abs() {
        if n1 < n2 {
            c1
        } else {
            c2
        }
    } else {
        let upper = z.im >= 0.0;
        if (c1.im >= 0.0) == upper {
            c1
        } else {
            c2
        }
    };
    let root = w - 2.0 * sigma;
    (sigma, (w / root - 1.0) / 2.0)
}

/// Precomputed block chains of `H_+` and the two node windows of `H_-`.
#[derive(Debug, Clone)]
pub struct FullLine {
    n: usize,
    h: f64,
    horizon: f64,
    nt: usize,
    plus: Chain,
    minus: [Chain; 2],
    left: Tail,
    right: Tail,
}

impl FullLine {
    pub fn new(path: &OperatorPath, horizon: f64, nt: usize) -> Result<Self> {
        if nt < 2 || !(horizon > 0.0) {
            return Err(Error::InvalidInput("need T > 0 and at least two nodes".into()));
        }
        let n = path.dim();
        let h = 2.0 * horizon / (nt as f64 - 1.0);
        let a_left = path.at(-horizon);
        let a_right = path.at(horizon);
        let amax = a_left.norm().max(a_right.norm());
        if amax * h >= 2.0 {
            return Err(Error::InvalidInput(format!(
                "grid too coarse: h = {h:.4} needs h * max|A(+-T)| < 2"
            )));
        }
        let eye = CMatrix::identity(n, n);
        // midpoint j - 1/2 for j = -1 ..= nt + 1, stored at index j + 1
        let mids: Vec<(CMatrix, CMatrix)> = (-1..=nt as i64 + 1)
            .map(|j| {
                let t = (-horizon + (j as f64 - 0.5) * h).clamp(-horizon, horizon);
                let a = path.matrix_at(t).scale(0.5);
                (eye.scale(1.0 / h) + &a, eye.scale(1.0 / h) - a)
            })
            .collect();
        let mid = |j: i64| &mids[(j + 1) as usize];

        let plus = Chain {
            diag: (0..=nt as i64)
                .map(|j| {
                    let (a, b) = mid(j);
                    a * a + b * b
                })
                .collect(),
            upper: (0..nt as i64)
                .map(|j| -(&mid(j).0 * &mid(j + 1).1))
                .collect(),
        };
        // node k sits between midpoints j = k and j = k + 1
        let node_chain = |first: i64| Chain {
            diag: (first..=first + nt as i64)
                .map(|k| {
                    let a = &mid(k).0;
                    let b = &mid(k + 1).1;
                    a * a + b * b
                })
                .collect(),
            upper: (first..first + nt as i64)
                .map(|k| {
                    let (a, b) = mid(k + 1);
                    -(b * a)
                })
                .collect(),
        };
        Ok(FullLine {
            n,
            h,
            horizon,
            nt,
            plus,
            minus: [node_chain(-1), node_chain(0)],
            left: Tail::new(&a_left, h),
            right: Tail::new(&a_right, h),
        })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> usize {
        self.nt
    }

    /// Upper edge of the tail bands; both operators have spectrum in
    /// `[0, spectral_bound]` up to the window's contribution.
    pub fn spectral_bound(&self) -> f64 {
        let window = self
            .plus
            .diag
            .iter()
            .chain(&self.minus[0].diag)
            .map(|d| d.norm())
            .fold(0.0_f64, f64::max);
        let edge = self
            .left
            .d
            .iter()
            .chain(&self.right.d)
            .zip(self.left.o.iter().chain(&self.right.o))
            .map(|(d, o)| d + 2.0 * o.abs())
            .fold(0.0_f64, f64::max);
        (2.0 * window).max(edge)
    }

    fn sweep(&self, chain: &Chain, z: Complex64, trace: bool) -> Result<(Complex64, Complex64)> {
        let n = self.n;
        let nb = chain.diag.len();
        let (sl, dsl) = self.left.self_energy(z);
        let (sr, dsr) = self.right.self_energy(z);
        let zi = CMatrix::identity(n, n).scale(1.0) * z;
        let mut log_det = Complex64::new(0.0, 0.0);
        let mut inverses: Vec<CMatrix> = Vec::with_capacity(if trace { nb } else { 0 });
        let mut prev_inv: Option<CMatrix> = None;
        for k in 0..nb {
            let mut s = &chain.diag[k] - &zi;
            if k == 0 {
                s -= &sl;
            }
            if k == nb - 1 {
                s -= &sr;
            }
            if let Some(pinv) = &prev_inv {
                let u = &chain.upper[k - 1];
                s -= u.adjoint() * pinv * u;
            }
            let lu = s.lu();
            let det = lu.determinant();
            if det == Complex64::new(0.0, 0.0) || !det.re.is_finite() {
                return Err(Error::Domain(format!("z = {z} is in the spectrum")));
            }
            log_det += det.ln();
            let inv = lu
                .try_inverse()
                .ok_or_else(|| Error::Domain(format!("z = {z} is in the spectrum")))?;
            if trace {
                inverses.push(inv.clone());
            }
            prev_inv = Some(inv);
        }
        if !trace {
            return Ok((log_det, Complex64::new(0.0, 0.0)));
        }
        let mut g = inverses[nb - 1].clone();
        let mut tr = g.trace() + (&g * &dsr).trace();
        for k in (0..nb - 1).rev() {
            let u = &chain.upper[k];
            let right = u.adjoint() * &inverses[k];
            g = &inverses[k] + &inverses[k] * u * g * right;
            tr += g.trace();
        }
        tr += (&g * &dsl).trace();
        Ok((log_det, tr))
    }

    /// `ln det(H_+ - z) - ln det(H_- - z)` for each of the two node windows
    /// (any branch).
    pub fn log_det_ratio_variants(&self, z: Complex64) -> Result<[Complex64; 2]> {
        let (lp, _) = self.sweep(&self.plus, z, false)?;
        let (la, _) = self.sweep(&self.minus[0], z, false)?;
        let (lb, _) = self.sweep(&self.minus[1], z, false)?;
        Ok([lp - la, lp - lb])
    }

    /// `tr((H_+ - z)^{-1} - (H_- - z)^{-1})`, averaged over the node windows.
    pub fn resolvent_trace_diff(&self, z: Complex64) -> Result<Complex64> {
        let (_, tp) = self.sweep(&self.plus, z, true)?;
        let (_, ta) = self.sweep(&self.minus[0], z, true)?;
        let (_, tb) = self.sweep(&self.minus[1], z, true)?;
        Ok(tp - 0.5 * (ta + tb))
    }

    /// `tr(exp(-t H_-) - exp(-t H_+))` by trapezoidal quadrature of the
    /// inverse Laplace integral on a parabolic contour.
    pub fn semigroup_trace_diff(&self, t: f64, points: usize) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("semigroup time must be positive, got {t}")));
        }
        let n = points as f64;
        let mu = std::f64::consts::PI * n / (12.0 * t);
        let k = 3.0 / n;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=points {
            let u = j as f64 * k;
            let iu = Complex64::new(1.0, u);
            let s = mu * iu * iu;
            let term = (t * s).exp() * self.resolvent_trace_diff(-s)? * iu;
            acc += if j == 0 { term } else { 2.0 * term };
        }
        Ok(-mu * k / std::f64::consts::PI * acc.re)
    }

    /// Dense `H_+` and `H_-` on the window padded with `pad` tail blocks on
    /// each side and cut off there. Used to validate the sweeps.
    pub fn dense_padded(&self, pad: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let tail_block = |tail: &Tail, diag: bool| {
            let vals: Vec<Complex64> = if diag {
                tail.d.iter().map(|&v| v.into()).collect()
            } else {
                tail.o.iter().map(|&v| v.into()).collect()
            };
            let mut m = tail.vectors.clone();
            for j in 0..self.n {
                for i in 0..self.n {
                    m[(i, j)] *= vals[j];
                }
            }
            m * tail.vectors.adjoint()
        };
        let build = |chain: &Chain| {
            let mut diag = vec![tail_block(&self.left, true); pad];
            let mut upper = vec![tail_block(&self.left, false); pad];
            diag.extend(chain.diag.iter().cloned());
            upper.extend(chain.upper.iter().cloned());
            upper.extend(vec![tail_block(&self.right, false); pad]);
            diag.extend(vec![tail_block(&self.right, true); pad]);
            let nb = diag.len();
            let n = self.n;
            let mut m = DMatrix::zeros(nb * n, nb * n);
            for k in 0..nb {
                m.view_mut((k * n, k * n), (n, n)).copy_from(&diag[k]);
                if k + 1 < nb {
                    m.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(&upper[k]);
                    m.view_mut(((k + 1) * n, k * n), (n, n))
                        .copy_from(&upper[k].adjoint());
                }
            }
            m
        };
        (build(&self.plus), build(&self.minus[1]))
    }
}
