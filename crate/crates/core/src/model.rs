//! Discretized model operator `D_A = d/dt + A(t)`.
//!
//! [`DiscretizedDA`] carries two realizations of the same difference
//! scheme. The rectangular matrix on `[-T, T]` with APS-type spectral
//! boundary constraints carries the Fredholm index through its kernel and
//! cokernel. Trace functionals (resolvent and semigroup differences, the
//! boundary values of the spectral shift function) need the whole line,
//! since on any finite matrix `D*D` and `DD*` share their nonzero spectrum;
//! they come from [`FullLine`], which continues the scheme to `t = +-inf`
//! with the coefficients frozen at `A(+-T)`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bidiag::BlockBidiagonal;
use crate::error::{Error, Result, Warning};
use crate::line::FullLine;
use crate::operator::{g_z, CMatrix, CVector, HermitianOperator, Interval};
use crate::path::OperatorPath;
use crate::ssf::track_log_vertical;

/// Largest `|theta'(+-T)|` accepted by [`DiscretizedDA::assemble`].
pub const FLATNESS_TOL: f64 = 1e-8;
/// Boundary eigenvalues closer than this (relative) to zero trigger a warning.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Default lower height for boundary values `lambda + i epsilon`.
pub const BOUNDARY_EPSILON: f64 = 1e-8;
/// Contour points used for semigroup traces.
const CONTOUR_POINTS: usize = 32;
/// Power iterations behind [`DiscretizedDA::norm_estimate`].
const NORM_ITERATIONS: usize = 40;
/// Below this fraction of `||D||` the dilation inertia is no longer trusted.
const SMALL_SINGULAR_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Kill `E_{A(-T)}([0, inf))` at `-T` and `E_{A(T)}((-inf, 0))` at `T`.
    Aps,
}

#[derive(Debug)]
pub struct DiscretizedDA {
    path: OperatorPath,
    horizon: f64,
    nt: usize,
    h: f64,
    bc: BoundaryCondition,
    /// Orthonormal bases of the admissible values at the two ends.
    left_kept: CMatrix,
    right_kept: CMatrix,
    line: FullLine,
    coarse: OnceLock<Option<FullLine>>,
    matrix: OnceLock<CMatrix>,
    singular_values: OnceLock<Vec<f64>>,
    row_blocks: OnceLock<Vec<(CMatrix, CMatrix)>>,
    norm: OnceLock<f64>,
    warnings: Vec<Warning>,
}

/// Kernel and cokernel dimensions of the assembled matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDims {
    pub kernel: usize,
    pub cokernel: usize,
    pub threshold: f64,
    pub warnings: Vec<Warning>,
}

impl KernelDims {
    pub fn index(&self) -> i64 {
        self.kernel as i64 - self.cokernel as i64
    }
}

/// A numerical value with a discretization error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub warnings: Vec<Warning>,
}

impl DiscretizedDA {
    /// Discretizes `path` on `[-T, T]` with `nt` nodes.
    pub fn assemble(path: &OperatorPath, horizon: f64, nt: usize) -> Result<Self> {
        if nt < 16 {
            return Err(Error::InvalidInput(format!("need at least 16 nodes, got {nt}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        let p = path.profile();
        let slope = p.theta_prime(horizon).max(p.theta_prime(-horizon));
        if slope >= FLATNESS_TOL {
            return Err(Error::Truncation { horizon, slope });
        }
        let line = FullLine::new(path, horizon, nt)?;
        let a_left = path.at(-horizon);
        let a_right = path.at(horizon);
        let mut warnings = Vec::new();
        for (side, a) in [("-T", &a_left), ("+T", &a_right)] {
            let tol = BOUNDARY_TOL * a.norm().max(1.0);
            for &e in a.eigenvalues() {
                if e.abs() <= tol {
                    warnings.push(Warning::BoundaryDegeneracy {
                        side: side.into(),
                        eigenvalue: e,
                    });
                }
            }
        }
        Ok(DiscretizedDA {
            path: path.clone(),
            horizon,
            nt,
            h: 2.0 * horizon / (nt as f64 - 1.0),
            bc: BoundaryCondition::Aps,
            left_kept: a_left.spectral_subspace(&Interval::below(0.0)),
            right_kept: a_right.spectral_subspace(&Interval::at_or_above(0.0)),
            line,
            coarse: OnceLock::new(),
            matrix: OnceLock::new(),
            singular_values: OnceLock::new(),
            row_blocks: OnceLock::new(),
            norm: OnceLock::new(),
            warnings,
        })
    }

    pub fn path(&self) -> &OperatorPath {
        &self.path
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> usize {
        self.nt
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn line(&self) -> &FullLine {
        &self.line
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// `(rows, cols)` of the constrained matrix.
    pub fn shape(&self) -> (usize, usize) {
        let n = self.path.dim();
        let cols = n * (self.nt - 2) + self.left_kept.ncols() + self.right_kept.ncols();
        (n * (self.nt - 1), cols)
    }

    /// Index read off the boundary constraints, `#neg A(-T) - #neg A(T)`.
    pub fn boundary_index(&self) -> i64 {
        let (rows, cols) = self.shape();
        cols as i64 - rows as i64
    }

    fn node_time(&self, k: usize) -> f64 {
        -self.horizon + k as f64 * self.h
    }

    /// Unconstrained scheme, `n (nt - 1)` by `n nt`.
    fn full_matrix(&self) -> CMatrix {
        let n = self.path.dim();
        let mut d = CMatrix::zeros(n * (self.nt - 1), n * self.nt);
        let eye = CMatrix::identity(n, n).scale(1.0 / self.h);
        for k in 0..self.nt - 1 {
            let a = self.path.matrix_at(self.node_time(k) + 0.5 * self.h).scale(0.5);
            d.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(&(&eye + &a));
            d.view_mut((k * n, k * n), (n, n)).copy_from(&(-(&eye - &a)));
        }
        d
    }

    /// Isometry from admissible coefficient vectors to node values.
    fn column_basis(&self) -> CMatrix {
        let n = self.path.dim();
        let (_, cols) = self.shape();
        let mut v = CMatrix::zeros(n * self.nt, cols);
        let nl = self.left_kept.ncols();
        v.view_mut((0, 0), (n, nl)).copy_from(&self.left_kept);
        for k in 1..self.nt - 1 {
            let c = nl + (k - 1) * n;
            v.view_mut((k * n, c), (n, n)).fill_with_identity();
        }
        let c = nl + (self.nt - 2) * n;
        v.view_mut(((self.nt - 1) * n, c), (n, self.right_kept.ncols()))
            .copy_from(&self.right_kept);
        v
    }

    /// The constrained rectangular matrix.
    pub fn matrix(&self) -> &CMatrix {
        self.matrix
            .get_or_init(|| self.full_matrix() * self.column_basis())
    }

    /// The scheme for `-d/dt + A(t)` mapping midpoints to nodes, restricted
    /// to the admissible node values. Equals the adjoint of [`Self::matrix`].
    pub fn assemble_adjoint(&self) -> CMatrix {
        let n = self.path.dim();
        let mut g = CMatrix::zeros(n * self.nt, n * (self.nt - 1));
        let eye = CMatrix::identity(n, n).scale(1.0 / self.h);
        for m in 0..self.nt - 1 {
            let a = self.path.matrix_at(self.node_time(m) + 0.5 * self.h).scale(0.5);
            // node m receives -(g_{m+1/2} - g_{m-1/2})/h + A g: from midpoint m
            // with weight -(1/h - A/2), node m + 1 with weight (1/h + A/2)
            g.view_mut((m * n, m * n), (n, n)).copy_from(&(-(&eye - &a)));
            g.view_mut(((m + 1) * n, m * n), (n, n)).copy_from(&(&eye + &a));
        }
        self.column_basis().adjoint() * g
    }

    pub fn singular_values(&self) -> &[f64] {
        self.singular_values.get_or_init(|| {
            let mut s: Vec<f64> = self.matrix().clone().singular_values().iter().copied().collect();
            s.sort_by(f64::total_cmp);
            s
        })
    }

    /// Row block `k` of the constrained matrix as its two nonzero pieces,
    /// acting on column blocks `k` and `k + 1`.
    fn row_blocks(&self) -> &[(CMatrix, CMatrix)] {
        self.row_blocks.get_or_init(|| {
            let n = self.path.dim();
            let eye = CMatrix::identity(n, n).scale(1.0 / self.h);
            let last = self.nt - 2;
            (0..=last)
                .map(|k| {
                    let a = self.path.matrix_at(self.node_time(k) + 0.5 * self.h).scale(0.5);
                    let mut left = -(&eye - &a);
                    let mut right = &eye + &a;
                    if k == 0 {
                        left *= &self.left_kept;
                    }
                    if k == last {
                        right *= &self.right_kept;
                    }
                    (left, right)
                })
                .collect()
        })
    }

    /// `||D||` by power iteration on `D*D` through the row blocks.
    pub fn norm_estimate(&self) -> f64 {
        *self.norm.get_or_init(|| {
            let blocks = self.row_blocks();
            let sizes: Vec<usize> = std::iter::once(blocks[0].0.ncols())
                .chain(blocks.iter().map(|(_, r)| r.ncols()))
                .collect();
            // alternating, irregular start: the top singular vectors oscillate
            // from node to node
            let mut x: Vec<CVector> = sizes
                .iter()
                .enumerate()
                .map(|(k, &m)| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    CVector::from_fn(m, |i, _| Complex64::new(sign * (1.0 + 0.5 * ((k * 7 + i * 3) as f64).sin()), 0.0))
                })
                .collect();
            let mut sigma = 0.0;
            for _ in 0..NORM_ITERATIONS {
                let len = x.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
                if len == 0.0 {
                    return 0.0;
                }
                x.iter_mut().for_each(|v| *v /= Complex64::new(len, 0.0));
                let y: Vec<CVector> = blocks.iter().enumerate().map(|(k, (l, r))| l * &x[k] + r * &x[k + 1]).collect();
                sigma = y.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
                let mut z: Vec<CVector> = sizes.iter().map(|&m| CVector::zeros(m)).collect();
                for (k, (l, r)) in blocks.iter().enumerate() {
                    z[k] += l.adjoint() * &y[k];
                    z[k + 1] += r.adjoint() * &y[k];
                }
                x = z;
            }
            sigma
        })
    }

    /// `100 eps ||D|| max(rows, cols)`.
    pub fn default_threshold(&self) -> f64 {
        let (rows, cols) = self.shape();
        100.0 * f64::EPSILON * self.norm_estimate() * rows.max(cols) as f64
    }

    /// Number of singular values of `D` above `sigma`, without forming `D`.
    ///
    /// The Hermitian dilation `[[0, D], [D*, 0]]` has eigenvalues `+-s_i`
    /// and zeros, so the count is the negative inertia of the dilation
    /// shifted by `sigma`. Ordering the unknowns as column block 0, row
    /// block 0, column block 1, ... makes the dilation block tridiagonal,
    /// and the inertia follows from a block LDL* sweep (Sylvester).
    pub fn count_singular_above(&self, sigma: f64) -> usize {
        let blocks = self.row_blocks();
        let floor = f64::EPSILON * self.norm_estimate().max(1.0);
        let shifted = |m: usize| CMatrix::identity(m, m).scale(sigma);
        let mut negatives = 0;
        let mut pivot = shifted(blocks[0].0.ncols());
        for (left, right) in blocks {
            // column block k meets row block k through left*, row block k
            // meets column block k + 1 through right
            let (neg, schur) = eliminate(&pivot, &left.adjoint(), floor);
            negatives += neg;
            let row_pivot = shifted(left.nrows()) - schur;
            let (neg, schur) = eliminate(&row_pivot, right, floor);
            negatives += neg;
            pivot = shifted(right.ncols()) - schur;
        }
        negatives + eliminate(&pivot, &CMatrix::zeros(pivot.nrows(), 0), floor).0
    }

    /// `D` (or `D*` when `D` is wide) as a tall block bidiagonal matrix.
    fn tall_blocks(&self) -> BlockBidiagonal {
        let blocks = self.row_blocks();
        let (rows, cols) = self.shape();
        let empty = |r: usize, c: usize| CMatrix::zeros(r, c);
        if rows >= cols {
            let last = blocks.len();
            let top = (0..=last)
                .map(|j| match j {
                    0 => empty(0, blocks[0].0.ncols()),
                    _ => blocks[j - 1].1.clone(),
                })
                .collect();
            let bottom = (0..=last)
                .map(|j| match j {
                    j if j == last => empty(0, blocks[last - 1].1.ncols()),
                    _ => blocks[j].0.clone(),
                })
                .collect();
            BlockBidiagonal { top, bottom }
        } else {
            BlockBidiagonal {
                top: blocks.iter().map(|(l, _)| l.adjoint()).collect(),
                bottom: blocks.iter().map(|(_, r)| r.adjoint()).collect(),
            }
        }
    }

    /// Singular values of `D` below `SMALL_SINGULAR_REL * ||D||`, ascending,
    /// counted on the smaller side (`min(rows, cols)` values in all).
    ///
    /// The dilation count bounds how many there are; they are then resolved
    /// by inverse subspace iteration on the triangular factor of a block QR
    /// sweep, which is accurate to `O(eps ||D||)` like a dense SVD.
    pub fn small_singular_values(&self) -> Vec<f64> {
        let (rows, cols) = self.shape();
        let p = rows.min(cols);
        let norm = self.norm_estimate();
        let cutoff = SMALL_SINGULAR_REL * norm;
        let small = p - self.count_singular_above(cutoff).min(p);
        let factor = self.tall_blocks().triangular_factor(f64::EPSILON * norm.max(1.0));
        let mut values = match factor {
            Some(r) => r.small_singular_values(small + 2),
            None => self.singular_values()[..(small + 2).min(p)].to_vec(),
        };
        values.retain(|&s| s < cutoff);
        values
    }

    /// Dimensions of `ker D` and `ker D*` from singular values below `tau`.
    pub fn kernel_dims(&self, tau: Option<f64>) -> Result<KernelDims> {
        let threshold = match tau {
            Some(t) if t > 0.0 => t,
            Some(t) => return Err(Error::InvalidInput(format!("threshold must be positive, got {t}"))),
            None => self.default_threshold(),
        };
        let (rows, cols) = self.shape();
        let p = rows.min(cols);
        let (lo, hi) = (threshold / 10.0, threshold * 10.0);
        let mut warnings = Vec::new();
        let rank = if hi < SMALL_SINGULAR_REL * self.norm_estimate() {
            let small = self.small_singular_values();
            let rank = p - small.iter().filter(|&&s| s < threshold).count();
            if let Some(&nearest) = small.iter().find(|&&s| s >= lo && s <= hi) {
                warnings.push(Warning::IllSeparatedKernel { threshold, nearest });
            }
            rank
        } else {
            let rank = self.count_singular_above(threshold).min(p);
            let below = self.count_singular_above(lo);
            if below > self.count_singular_above(hi) {
                // locate the smallest singular value above lo to a factor 1.1
                let (mut a, mut b) = (lo, hi);
                while b / a > 1.1 {
                    let m = (a * b).sqrt();
                    if self.count_singular_above(m) == below {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                warnings.push(Warning::IllSeparatedKernel {
                    threshold,
                    nearest: (a * b).sqrt(),
                });
            }
            rank
        };
        Ok(KernelDims {
            kernel: cols - rank,
            cokernel: rows - rank,
            threshold,
            warnings,
        })
    }

    fn coarse(&self) -> Option<&FullLine> {
        self.coarse
            .get_or_init(|| FullLine::new(&self.path, self.horizon, self.nt.div_ceil(2)).ok())
            .as_ref()
    }

    /// `tr((|D*|^2 - z)^{-1} - (|D|^2 - z)^{-1})`, with a Richardson error
    /// estimate from the grid with half as many nodes.
    pub fn resolvent_trace_diff(&self, z: Complex64) -> Result<Estimate<Complex64>> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::Domain(format!("z must lie off [0, inf), got {z}")));
        }
        let value = self.line.resolvent_trace_diff(z)?;
        let error = match self.coarse() {
            Some(c) => (value - c.resolvent_trace_diff(z)?).norm() / 3.0,
            None => f64::NAN,
        };
        Ok(Estimate {
            value,
            error,
            warnings: self.warnings.clone(),
        })
    }

    /// Horizon beyond which semigroup values are flagged, `(2T/pi)^2`.
    pub fn trust_horizon(&self) -> f64 {
        (2.0 * self.horizon / std::f64::consts::PI).powi(2)
    }

    /// `tr(exp(-t D*D) - exp(-t DD*))`, which tends to the index.
    pub fn semigroup_trace_diff(&self, t: f64) -> Result<Estimate<f64>> {
        let value = self.line.semigroup_trace_diff(t, CONTOUR_POINTS)?;
        let error = match self.coarse() {
            Some(c) => (value - c.semigroup_trace_diff(t, CONTOUR_POINTS)?).abs() / 3.0,
            None => f64::NAN,
        };
        let mut warnings = self.warnings.clone();
        let horizon = self.trust_horizon();
        if t > horizon {
            warnings.push(Warning::TrustHorizon { t, horizon });
        }
        Ok(Estimate {
            value,
            error,
            warnings,
        })
    }

    /// `xi(lambda; |D*|^2, |D|^2)` from the boundary value
    /// `(1/pi) Im ln det((|D*|^2 - z)(|D|^2 - z)^{-1})` at `z = lambda + i epsilon`.
    /// Vanishes for `lambda < 0`.
    pub fn ssf_boundary_value(&self, lambda: f64, epsilon: f64) -> Result<f64> {
        if lambda < 0.0 {
            return Ok(0.0);
        }
        let start = 10.0 * self.line.spectral_bound().max(lambda);
        let mut total = 0.0;
        for k in 0..2 {
            let trace = track_log_vertical(
                |z| Ok(self.line.log_det_ratio_variants(z)?[k]),
                lambda,
                epsilon,
                start,
                crate::ssf::STEP_BUDGET,
            )?;
            total += trace.value.im;
        }
        Ok(0.5 * total / std::f64::consts::PI)
    }
}

/// One step of a block LDL* sweep: the negative inertia of the Hermitian
/// pivot `p` and the Schur update `u* p^-1 u`. Pivot eigenvalues below
/// `floor` in magnitude are moved to `+-floor`.
fn eliminate(p: &CMatrix, u: &CMatrix, floor: f64) -> (usize, CMatrix) {
    if p.nrows() == 0 {
        return (0, CMatrix::zeros(u.ncols(), u.ncols()));
    }
    let eig = ((p + p.adjoint()).scale(0.5)).symmetric_eigen();
    let negatives = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    let w = eig.eigenvectors.adjoint() * u;
    let scaled = CMatrix::from_fn(w.nrows(), w.ncols(), |i, j| {
        let l = eig.eigenvalues[i];
        let l = if l.abs() < floor { floor.copysign(l) } else { l };
        w[(i, j)] / l
    });
    (negatives, w.adjoint() * scaled)
}

/// `(1/2z) tr(g_z(A_+) - g_z(A_-))`.
pub fn ptf_rhs(path: &OperatorPath, z: Complex64) -> Result<Complex64> {
    let sum = |a: &HermitianOperator| -> Result<Complex64> {
        a.eigenvalues().iter().map(|&x| g_z(x, z)).sum()
    };
    Ok((sum(path.a_plus())? - sum(path.a_minus())?) / (2.0 * z))
}

/// `|resolvent_trace_diff(D, z) - (1/2z) tr(g_z(A_+) - g_z(A_-))|`.
pub fn ptf_residual(path: &OperatorPath, d: &DiscretizedDA, z: Complex64) -> Result<f64> {
    let rhs = ptf_rhs(path, z)?;
    let lhs = d.resolvent_trace_diff(z)?.value;
    Ok((lhs - rhs).norm())
}
