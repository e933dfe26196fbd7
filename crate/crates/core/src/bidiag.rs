//! Block bidiagonal matrices: QR by block sweeps and the smallest singular
//! values by inverse subspace iteration on the triangular factor.

use nalgebra::{SymmetricEigen, QR};
use num_complex::Complex64;

use crate::operator::CMatrix;

/// Inverse iteration sweeps for [`BlockBidiagonal::small_singular_values`].
const INVERSE_SWEEPS: usize = 12;

/// Column block `j` holds `top[j]` in row block `j` and `bottom[j]` in row
/// block `j + 1`. Empty blocks are allowed.
pub(crate) struct BlockBidiagonal {
    pub top: Vec<CMatrix>,
    pub bottom: Vec<CMatrix>,
}

/// Upper block bidiagonal triangular factor.
pub(crate) struct Triangular {
    diag: Vec<CMatrix>,
    sup: Vec<CMatrix>,
}

impl BlockBidiagonal {
    fn widths(&self) -> Vec<usize> {
        self.top.iter().map(|t| t.ncols()).collect()
    }

    /// `R` of `M = QR`, or `None` if some panel has fewer rows than columns.
    /// Diagonal entries of `R` smaller than `floor` are raised to `floor`.
    pub fn triangular_factor(&self, floor: f64) -> Option<Triangular> {
        let widths = self.widths();
        let count = widths.len();
        let mut carry = self.top[0].clone();
        let mut diag = Vec::with_capacity(count);
        let mut sup = Vec::with_capacity(count);
        for j in 0..count {
            let s = widths[j];
            let (m, b) = (carry.nrows(), self.bottom[j].nrows());
            if m + b < s {
                return None;
            }
            let mut left = CMatrix::zeros(m + b, s);
            left.view_mut((0, 0), (m, s)).copy_from(&carry);
            left.view_mut((m, 0), (b, s)).copy_from(&self.bottom[j]);
            let next = widths.get(j + 1).copied().unwrap_or(0);
            let mut right = CMatrix::zeros(m + b, next);
            if j + 1 < count {
                right.view_mut((m, 0), (b, next)).copy_from(&self.top[j + 1]);
            }
            let qr = QR::new(left);
            qr.q_tr_mul(&mut right);
            let mut r = qr.r().rows(0, s).into_owned();
            for i in 0..s {
                if r[(i, i)].norm() < floor {
                    r[(i, i)] = Complex64::new(floor, 0.0);
                }
            }
            diag.push(r);
            sup.push(right.rows(0, s).into_owned());
            carry = right.rows(s, m + b - s).into_owned();
        }
        Some(Triangular { diag, sup })
    }
}

impl Triangular {
    fn split(&self, x: &CMatrix) -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(self.diag.len());
        let mut row = 0;
        for d in &self.diag {
            out.push(x.rows(row, d.nrows()).into_owned());
            row += d.nrows();
        }
        out
    }

    fn join(&self, blocks: Vec<CMatrix>, k: usize) -> CMatrix {
        let n: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut x = CMatrix::zeros(n, k);
        let mut row = 0;
        for b in blocks {
            x.view_mut((row, 0), (b.nrows(), k)).copy_from(&b);
            row += b.nrows();
        }
        x
    }

    fn dim(&self) -> usize {
        self.diag.iter().map(|d| d.nrows()).sum()
    }

    fn mul(&self, x: &CMatrix) -> CMatrix {
        let xs = self.split(x);
        let last = self.diag.len() - 1;
        let out = (0..=last)
            .map(|j| {
                let mut y = &self.diag[j] * &xs[j];
                if j < last {
                    y += &self.sup[j] * &xs[j + 1];
                }
                y
            })
            .collect();
        self.join(out, x.ncols())
    }

    /// `R^-1 x` by block back substitution.
    fn solve(&self, x: &CMatrix) -> CMatrix {
        let mut xs = self.split(x);
        for j in (0..self.diag.len()).rev() {
            if j + 1 < self.diag.len() {
                let rhs = &xs[j] - &self.sup[j] * &xs[j + 1];
                xs[j] = rhs;
            }
            xs[j] = self.diag[j].solve_upper_triangular(&xs[j]).expect("diagonal is floored");
        }
        self.join(xs, x.ncols())
    }

    /// `R^-* x` by block forward substitution.
    fn solve_adjoint(&self, x: &CMatrix) -> CMatrix {
        let mut xs = self.split(x);
        for j in 0..self.diag.len() {
            if j > 0 {
                let rhs = &xs[j] - self.sup[j - 1].adjoint() * &xs[j - 1];
                xs[j] = rhs;
            }
            xs[j] = self.diag[j]
                .ad_solve_upper_triangular(&xs[j])
                .expect("diagonal is floored");
        }
        self.join(xs, x.ncols())
    }

    /// Ritz approximations, ascending, to the `k` smallest singular values.
    pub fn small_singular_values(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        let k = k.min(n);
        if k == 0 {
            return Vec::new();
        }
        let mut x = CMatrix::from_fn(n, k, |i, j| Complex64::new(((i * 31 + j * 17 + 1) as f64).sin(), 0.0));
        for _ in 0..INVERSE_SWEEPS {
            x = QR::new(x).q();
            x = self.solve(&self.solve_adjoint(&x));
        }
        let x = QR::new(x).q();
        // Rayleigh-Ritz: singular values of R X from the k x k Gram matrix
        let rx = self.mul(&x);
        let gram = rx.adjoint() * &rx;
        let eig = SymmetricEigen::new((&gram + gram.adjoint()).scale(0.5));
        let mut s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        s.sort_by(f64::total_cmp);
        s
    }
}
