#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specshift::operator::{derive_seed, random_hermitian};
use specshift::{HermitianOperator, OperatorPath, Profile, ProfileKind};

pub fn tanh() -> Profile {
    Profile::new(ProfileKind::Tanh, 1.0).unwrap()
}

pub fn diag(v: &[f64]) -> HermitianOperator {
    HermitianOperator::from_diag(v).unwrap()
}

/// `U diag(eigs) U*` with `U` the eigenbasis of a seeded random matrix.
pub fn rotated(seed: u64, eigs: &[f64]) -> HermitianOperator {
    let u = random_hermitian(seed, eigs.len(), 1.0).eigenvectors().clone();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eigs.len(),
        eigs.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    let m = &u * d * u.adjoint();
    HermitianOperator::new((&m + m.adjoint()).scale(0.5)).unwrap()
}

/// Random eigenvalues with `|e| >= gap`.
pub fn gapped_eigs(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = rng.random_range(gap..2.0);
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect()
}

/// A tanh path between invertible endpoints whose eigenvalues are at least
/// `gap` away from zero.
pub fn fredholm_path(seed: u64, n: usize, gap: f64) -> OperatorPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let em = gapped_eigs(&mut rng, n, gap);
    let ep = gapped_eigs(&mut rng, n, gap);
    let a_minus = rotated(derive_seed(seed, 1), &em);
    let a_plus = rotated(derive_seed(seed, 2), &ep);
    OperatorPath::between(a_minus, &a_plus, tanh()).unwrap()
}

/// Like [`fredholm_path`] but with one zero eigenvalue at `A+`.
pub fn singular_endpoint_path(seed: u64, n: usize) -> OperatorPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let em = gapped_eigs(&mut rng, n, 0.5);
    let mut ep = gapped_eigs(&mut rng, n, 0.5);
    ep[0] = 0.0;
    let a_minus = rotated(derive_seed(seed, 1), &em);
    let a_plus = rotated(derive_seed(seed, 2), &ep);
    OperatorPath::between(a_minus, &a_plus, tanh()).unwrap()
}

/// Negative eigenvalue count: the index oracle for invertible endpoints.
pub fn negatives(a: &HermitianOperator) -> i64 {
    a.eigenvalues().iter().filter(|&&e| e < 0.0).count() as i64
}

pub fn index_oracle(path: &OperatorPath) -> i64 {
    negatives(path.a_minus()) - negatives(path.a_plus())
}

/// `(H0, H0 + V)` with independent seeded `H0` and `V`.
pub fn random_pair(seed: u64, n: usize) -> (HermitianOperator, HermitianOperator) {
    let h0 = random_hermitian(derive_seed(seed, 0), n, 1.0);
    let v = random_hermitian(derive_seed(seed, 1), n, 0.7);
    let h = h0.add_scaled(&v, 1.0).unwrap();
    (h0, h)
}
