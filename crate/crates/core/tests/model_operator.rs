mod common;

use common::{diag, fredholm_path, index_oracle, tanh};
use num_complex::Complex64;
use proptest::prelude::*;
use specshift::model::ptf_residual;
use specshift::{DiscretizedDA, HermitianOperator, OperatorPath};

fn bggss() -> OperatorPath {
    OperatorPath::scalar(-1.0, 2.0, tanh())
}

#[test]
fn adjoint_is_conjugate_transpose() {
    for seed in 0..4 {
        let d = DiscretizedDA::assemble(&fredholm_path(seed, 2, 0.5), 12.0, 120).unwrap();
        let diff = (d.assemble_adjoint() - d.matrix().adjoint()).norm();
        assert!(diff < 1e-12 * d.matrix().norm(), "seed {seed}: {diff}");
    }
}

#[test]
fn bggss_index_is_stable_in_the_grid() {
    for nt in [200, 400, 800] {
        let d = DiscretizedDA::assemble(&bggss(), 12.0, nt).unwrap();
        let k = d.kernel_dims(None).unwrap();
        assert_eq!(k.index(), 1, "Nt = {nt}");
        assert_eq!((k.kernel, k.cokernel), (1, 0));
    }
}

#[test]
fn kernel_plus_cokernel_survives_refinement() {
    for seed in 0..4 {
        let path = fredholm_path(seed, 2, 0.5);
        let total = |nt| {
            let k = DiscretizedDA::assemble(&path, 12.0, nt).unwrap().kernel_dims(None).unwrap();
            (k.kernel + k.cokernel, k.index())
        };
        let (a, ia) = total(150);
        let (b, ib) = total(300);
        assert_eq!(a, b, "seed {seed}");
        assert_eq!(ia, ib);
        assert_eq!(ia, index_oracle(&path));
    }
}

#[test]
fn reversal_negates_index() {
    for seed in 0..4 {
        let path = fredholm_path(seed, 3, 0.5);
        let fwd = DiscretizedDA::assemble(&path, 12.0, 150).unwrap();
        let bwd = DiscretizedDA::assemble(&path.reversed(), 12.0, 150).unwrap();
        assert_eq!(fwd.kernel_dims(None).unwrap().index(), -bwd.kernel_dims(None).unwrap().index());
        assert_eq!(fwd.boundary_index(), -bwd.boundary_index());
    }
}

#[test]
fn squares_share_nonzero_spectrum() {
    for seed in 0..3 {
        let d = DiscretizedDA::assemble(&fredholm_path(seed, 2, 0.5), 12.0, 80).unwrap();
        let m = d.matrix();
        let dd = HermitianOperator::new(m * m.adjoint()).unwrap();
        let ddt = HermitianOperator::new(m.adjoint() * m).unwrap();
        let nonzero = |h: &HermitianOperator| -> Vec<f64> {
            h.eigenvalues().iter().copied().filter(|&e| e > 1e-8).collect()
        };
        let (a, b) = (nonzero(&dd), nonzero(&ddt));
        assert_eq!(a.len(), b.len());
        let scale = a.last().copied().unwrap_or(1.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * scale, "seed {seed}: {x} vs {y}");
        }
    }
}

#[test]
fn principal_trace_formula_converges_under_refinement() {
    for seed in 0..3 {
        let path = fredholm_path(seed, 2, 0.5);
        for z in [-0.25, -1.0, -4.0] {
            let z = Complex64::new(z, 0.0);
            let r: Vec<f64> = [301, 601, 1201]
                .iter()
                .map(|&nt| ptf_residual(&path, &DiscretizedDA::assemble(&path, 12.0, nt).unwrap(), z).unwrap())
                .collect();
            for w in r.windows(2) {
                assert!(w[1] <= 0.75 * w[0] || w[1] < 1e-10, "seed {seed}, z {z}: {r:?}");
            }
        }
    }
}

#[test]
fn trivial_path_has_no_residual() {
    let path = OperatorPath::between(diag(&[-1.0, 2.0]), &diag(&[-1.0, 2.0]), tanh()).unwrap();
    let d = DiscretizedDA::assemble(&path, 12.0, 200).unwrap();
    assert!(ptf_residual(&path, &d, Complex64::new(-1.0, 0.0)).unwrap() < 1e-12);
    assert_eq!(d.kernel_dims(None).unwrap().index(), 0);
}

#[test]
fn essential_spectrum_lines_are_endpoint_eigenvalues() {
    let mut lines = bggss().essential_spectrum_lines();
    lines.sort_by(f64::total_cmp);
    assert_eq!(lines, vec![-1.0, 1.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn path_interpolates_its_endpoints(seed in any::<u64>(), n in 1usize..4, t in -30.0f64..30.0) {
        let p = fredholm_path(seed, n, 0.5);
        let a = p.matrix_at(t);
        prop_assert!((&a - a.adjoint()).norm() < 1e-12);
        prop_assert!((p.matrix_at(40.0) - p.a_plus().matrix()).norm() < 1e-10);
        prop_assert!((p.matrix_at(-40.0) - p.a_minus().matrix()).norm() < 1e-10);
        let r = p.reversed();
        prop_assert!((r.matrix_at(-t) - a).norm() < 1e-10);
    }

    #[test]
    fn boundary_index_matches_oracle(seed in any::<u64>(), n in 1usize..4) {
        let p = fredholm_path(seed, n, 0.5);
        let d = DiscretizedDA::assemble(&p, 12.0, 40).unwrap();
        prop_assert_eq!(d.boundary_index(), index_oracle(&p));
    }
}

#[test]
fn structured_kernel_count_matches_dense_svd() {
    for seed in 0..6 {
        let path = fredholm_path(300 + seed, 2 + (seed % 2) as usize, 0.3);
        let d = DiscretizedDA::assemble(&path, 12.0, 120).unwrap();
        let k = d.kernel_dims(None).unwrap();
        let tau = k.threshold;
        let dense_rank = d.singular_values().iter().filter(|&&s| s >= tau).count();
        let (rows, cols) = d.shape();
        assert_eq!((k.kernel, k.cokernel), (cols - dense_rank, rows - dense_rank), "seed {seed}");
    }
}
