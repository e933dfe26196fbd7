//! Finite-dimensional self-adjoint operators with a cached spectral
//! decomposition.
//!
//! Every other module works through [`HermitianOperator`]: the unperturbed
//! and perturbed operators of a spectral shift pair, the asymptotes of a
//! path `A(t)`, and the truncated momentum operators of the periodic Dirac
//! model. Eigenvalues are stored in ascending order together with an
//! orthonormal eigenvector frame, so counting functions, spectral
//! projections and matrix functions never re-diagonalize.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative Hermiticity tolerance accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity, symmetrizes and diagonalizes.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("operator dimension must be positive".into()));
        }
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let tolerance = HERMITIAN_TOL * matrix.norm().max(1.0);
        let (mut worst, mut row, mut col) = (0.0_f64, 0, 0);
        for i in 0..n {
            for j in i..n {
                let r = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if r > worst {
                    (worst, row, col) = (r, i, j);
                }
            }
        }
        if worst > tolerance {
            return Err(Error::NotHermitian {
                row,
                col,
                residual: worst,
                tolerance,
            });
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Ok(Self::decompose(matrix))
    }

    fn decompose(matrix: CMatrix) -> Self {
        let n = matrix.nrows();
        if n == 1 {
            return HermitianOperator {
                eigenvalues: vec![matrix[(0, 0)].re],
                eigenvectors: CMatrix::identity(1, 1),
                matrix,
            };
        }
        let eig = matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    /// Builds the operator `U diag(values) U*` from a known eigenframe.
    pub(crate) fn from_eigen(values: Vec<f64>, vectors: CMatrix) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
        let matrix = reconstruct(&eigenvectors, eigenvalues.iter().map(|&v| Complex64::from(v)));
        HermitianOperator {
            matrix,
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("operator dimension must be positive".into()));
        }
        if diag.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("diagonal has non-finite entries".into()));
        }
        let n = diag.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::from(diag[i])
            } else {
                Complex64::default()
            }
        });
        Ok(Self::decompose(matrix))
    }

    pub fn scalar(value: f64) -> Self {
        Self::decompose(CMatrix::from_element(1, 1, Complex64::from(value)))
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(Complex64::from))
    }

    pub fn zeros(n: usize) -> Self {
        Self::decompose(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self::decompose(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Operator norm, i.e. the spectral radius for a self-adjoint operator.
    pub fn norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Trace norm `sum |lambda_i|`.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
    }

    /// Number of eigenvalues strictly greater than `t`, with multiplicity.
    pub fn counting_function(&self, t: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > t).count()
    }

    pub fn count_in(&self, interval: &Interval) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&v| interval.contains(v))
            .count()
    }

    /// Orthogonal projection onto the eigenvectors whose eigenvalue lies in
    /// `interval`.
    pub fn spectral_projection(&self, interval: &Interval) -> HermitianOperator {
        let values: Vec<f64> = self
            .eigenvalues
            .iter()
            .map(|&v| if interval.contains(v) { 1.0 } else { 0.0 })
            .collect();
        HermitianOperator::from_eigen(values, self.eigenvectors.clone())
    }

    /// Orthonormal basis (as columns) of the range of the spectral projection.
    pub fn spectral_subspace(&self, interval: &Interval) -> CMatrix {
        let cols: Vec<usize> = (0..self.dim())
            .filter(|&k| interval.contains(self.eigenvalues[k]))
            .collect();
        CMatrix::from_fn(self.dim(), cols.len(), |i, j| self.eigenvectors[(i, cols[j])])
    }

    /// `U f(Lambda) U*` for a scalar map `f`.
    pub fn apply_function<F>(&self, f: F) -> Result<CMatrix>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut values = Vec::with_capacity(self.dim());
        for &v in &self.eigenvalues {
            let fv = f(v);
            if !fv.re.is_finite() || !fv.im.is_finite() {
                return Err(Error::Domain(format!(
                    "function is not finite at eigenvalue {v}"
                )));
            }
            values.push(fv);
        }
        Ok(reconstruct(&self.eigenvectors, values.into_iter()))
    }

    /// Real-valued functional calculus; the result stays self-adjoint and
    /// reuses this eigenframe.
    pub fn apply_real<F>(&self, f: F) -> Result<HermitianOperator>
    where
        F: Fn(f64) -> f64,
    {
        let mut values = Vec::with_capacity(self.dim());
        for &v in &self.eigenvalues {
            let fv = f(v);
            if !fv.is_finite() {
                return Err(Error::Domain(format!(
                    "function is not finite at eigenvalue {v}"
                )));
            }
            values.push(fv);
        }
        Ok(HermitianOperator::from_eigen(values, self.eigenvectors.clone()))
    }

    /// `self + c * other`, re-diagonalized.
    pub fn add_scaled(&self, other: &HermitianOperator, c: f64) -> Result<HermitianOperator> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self::decompose(
            &self.matrix + other.matrix.scale(c),
        ))
    }

    pub fn scale(&self, c: f64) -> HermitianOperator {
        let values = self.eigenvalues.iter().map(|v| v * c).collect();
        HermitianOperator::from_eigen(values, self.eigenvectors.clone())
    }

    /// Residual `||H U - U Lambda||_F`.
    pub fn decomposition_residual(&self) -> f64 {
        let lambda = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&v| Complex64::from(v)),
        ));
        (&self.matrix * &self.eigenvectors - &self.eigenvectors * lambda).norm()
    }

    /// Deviation of the eigenvector frame from orthonormality.
    pub fn orthonormality_residual(&self) -> f64 {
        (self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(self.dim(), self.dim()))
            .norm()
    }

    pub fn to_matrix_file(&self) -> MatrixFile {
        let n = self.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)].re).collect())
            .collect();
        let has_im = self.matrix.iter().any(|z| z.im != 0.0);
        let im = has_im.then(|| {
            (0..n)
                .map(|i| (0..n).map(|j| self.matrix[(i, j)].im).collect())
                .collect()
        });
        MatrixFile { n, re, im }
    }
}

fn reconstruct<I>(vectors: &CMatrix, values: I) -> CMatrix
where
    I: Iterator<Item = Complex64>,
{
    let mut scaled = vectors.clone();
    for (j, v) in values.enumerate() {
        scaled.column_mut(j).scale_mut(1.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= v;
        }
    }
    scaled * vectors.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Unbounded,
    Open(f64),
    Closed(f64),
}

/// Real interval with independently open, closed or infinite ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Bound,
    pub upper: Bound,
}

impl Interval {
    pub fn new(lower: Bound, upper: Bound) -> Self {
        Interval { lower, upper }
    }

    pub fn real_line() -> Self {
        Self::new(Bound::Unbounded, Bound::Unbounded)
    }

    /// `(a, b)`
    pub fn open(a: f64, b: f64) -> Self {
        Self::new(Bound::Open(a), Bound::Open(b))
    }

    /// `[a, b)`
    pub fn half_open(a: f64, b: f64) -> Self {
        Self::new(Bound::Closed(a), Bound::Open(b))
    }

    /// `(-inf, x)`
    pub fn below(x: f64) -> Self {
        Self::new(Bound::Unbounded, Bound::Open(x))
    }

    /// `[x, inf)`
    pub fn at_or_above(x: f64) -> Self {
        Self::new(Bound::Closed(x), Bound::Unbounded)
    }

    /// `(x, inf)`
    pub fn above(x: f64) -> Self {
        Self::new(Bound::Open(x), Bound::Unbounded)
    }

    pub fn contains(&self, x: f64) -> bool {
        let lower_ok = match self.lower {
            Bound::Unbounded => true,
            Bound::Open(a) => x > a,
            Bound::Closed(a) => x >= a,
        };
        let upper_ok = match self.upper {
            Bound::Unbounded => true,
            Bound::Open(b) => x < b,
            Bound::Closed(b) => x <= b,
        };
        lower_ok && upper_ok
    }

    /// Finite endpoints, lower first.
    pub fn endpoints(&self) -> Vec<f64> {
        [self.lower, self.upper]
            .iter()
            .filter_map(|b| match *b {
                Bound::Open(x) | Bound::Closed(x) => Some(x),
                Bound::Unbounded => None,
            })
            .collect()
    }
}

/// `g_z(x) = x (x^2 - z)^{-1/2}` on the principal square-root branch.
pub fn g_z(x: f64, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::Domain(format!("g_z requires z off [0, inf), got {z}")));
    }
    Ok(Complex64::from(x) / (Complex64::from(x * x) - z).sqrt())
}

/// Child seed for stream `stream` of a parent seed.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(parent);
    rng.set_stream(stream);
    rng.next_u64()
}

/// `scale * (M + M*) / 2` with standard-normal real and imaginary parts.
pub fn random_hermitian(seed: u64, n: usize, scale: f64) -> HermitianOperator {
    assert!(n >= 1 && scale > 0.0, "random_hermitian requires n >= 1 and scale > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let h = (&m + m.adjoint()).scale(0.5 * scale);
    HermitianOperator::decompose(h)
}

/// Matrix document `{"n": .., "re": [[..]], "im": [[..]]}`; `im` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        let n = self.n;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !shape_ok(&self.re) {
            return Err(Error::InvalidInput(format!(
                "\"re\" must be an {n}x{n} array of rows"
            )));
        }
        if let Some(im) = &self.im {
            if !shape_ok(im) {
                return Err(Error::InvalidInput(format!(
                    "\"im\" must be an {n}x{n} array of rows"
                )));
            }
        }
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(self.re[i][j], im)
        });
        HermitianOperator::new(matrix)
    }
}

/// Either a dense matrix document or the `{"diag": [..]}` shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diag { diag: Vec<f64> },
    Dense(MatrixFile),
}

impl MatrixSpec {
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        match self {
            MatrixSpec::Diag { diag } => HermitianOperator::from_diag(diag),
            MatrixSpec::Dense(m) => m.to_operator(),
        }
    }
}

impl From<&HermitianOperator> for MatrixSpec {
    fn from(h: &HermitianOperator) -> Self {
        MatrixSpec::Dense(h.to_matrix_file())
    }
}

pub fn parse_matrix(json: &str) -> Result<HermitianOperator> {
    let spec: MatrixSpec = serde_json::from_str(json)?;
    spec.to_operator()
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<HermitianOperator> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

/// Method tag and tolerance of a [`SpectralSample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub method: String,
    pub tolerance: f64,
}

/// A sampled real curve on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    grid: Vec<f64>,
    values: Vec<f64>,
    meta: SampleMeta,
}

impl SpectralSample {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("sample grid must be strictly increasing".into()));
        }
        if values.iter().chain(grid.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample contains non-finite values".into()));
        }
        Ok(SpectralSample { grid, values, meta })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Piecewise-linear interpolant, constant beyond the end points.
    pub fn interpolate(&self, x: f64) -> f64 {
        let k = self.grid.partition_point(|&g| g <= x);
        if k == 0 {
            return self.values.first().copied().unwrap_or(0.0);
        }
        if k == self.grid.len() {
            return self.values[k - 1];
        }
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let s = (x - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - s) + self.values[k] * s
    }

    /// Two-column CSV with the given header names.
    pub fn to_csv(&self, x_name: &str, y_name: &str) -> String {
        let mut out = format!("{x_name},{y_name}\n");
        for (x, y) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}
