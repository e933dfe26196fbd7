mod common;

use common::{diag, fredholm_path, index_oracle, tanh};
use proptest::prelude::*;
use specshift::flow::{flow_identity_check, flow_report, spectral_flow, DEFAULT_DELTA};
use specshift::{DiscretizedDA, OperatorPath, Profile, ProfileKind};

const SPAN: f64 = 40.0;

fn flow(path: &OperatorPath, a: f64, b: f64, delta: f64) -> i64 {
    spectral_flow(path, a, b, delta).unwrap().flow
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn endpoint_formula(seed in any::<u64>(), n in 1usize..5) {
        let p = fredholm_path(seed, n, 0.3);
        prop_assert_eq!(flow(&p, -SPAN, SPAN, DEFAULT_DELTA), index_oracle(&p));
    }

    #[test]
    fn finer_certificates_do_not_change_the_flow(seed in any::<u64>(), n in 1usize..4) {
        let p = fredholm_path(seed, n, 0.3);
        let coarse = spectral_flow(&p, -SPAN, SPAN, 0.25).unwrap();
        let fine = spectral_flow(&p, -SPAN, SPAN, 0.125).unwrap();
        prop_assert!(fine.partition.len() >= coarse.partition.len());
        prop_assert!(fine.partition.max_increment() < 0.125);
        prop_assert_eq!(coarse.flow, fine.flow);
    }

    #[test]
    fn concatenation(seed in any::<u64>(), n in 1usize..4, mid in -3.0f64..3.0) {
        let p = fredholm_path(seed, n, 0.3);
        let whole = flow(&p, -SPAN, SPAN, DEFAULT_DELTA);
        let parts = flow(&p, -SPAN, mid, DEFAULT_DELTA) + flow(&p, mid, SPAN, DEFAULT_DELTA);
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn reversal_negates(seed in any::<u64>(), n in 1usize..4) {
        let p = fredholm_path(seed, n, 0.3);
        prop_assert_eq!(flow(&p, -SPAN, SPAN, DEFAULT_DELTA), -flow(&p.reversed(), -SPAN, SPAN, DEFAULT_DELTA));
    }

    #[test]
    fn slower_profile_same_flow(seed in any::<u64>(), n in 1usize..4) {
        let p = fredholm_path(seed, n, 0.3);
        let slow = OperatorPath::new(
            p.a_minus().clone(),
            p.delta().clone(),
            Profile::new(ProfileKind::Tanh, 2.0).unwrap(),
        ).unwrap();
        prop_assert_eq!(flow(&p, -SPAN, SPAN, DEFAULT_DELTA), flow(&slow, -2.0 * SPAN, 2.0 * SPAN, DEFAULT_DELTA));
    }
}

#[test]
fn identity_chain_on_fredholm_scenarios() {
    for seed in 0..20 {
        let n = 2 + (seed % 2) as usize;
        let path = fredholm_path(6000 + seed, n, 0.5);
        let d = DiscretizedDA::assemble(&path, 12.0, 100).unwrap();
        let ids = flow_identity_check(&path, &d, 0.0).unwrap();
        assert!(ids.all_equal(), "seed {seed}: {ids:?}");
        assert_eq!(ids.spectral_flow, index_oracle(&path));
    }
}

#[test]
fn identity_chain_examples() {
    let cases = [
        (diag(&[-1.0]), diag(&[1.0]), 1),
        (diag(&[-1.0, 2.0]), diag(&[1.0, 3.0]), 1),
        (diag(&[-1.0, 2.0]), diag(&[-1.0, 2.0]), 0),
        (diag(&[1.0, 2.0]), diag(&[-1.0, -2.0]), -2),
    ];
    for (am, ap, k) in cases {
        let path = OperatorPath::between(am, &ap, tanh()).unwrap();
        let d = DiscretizedDA::assemble(&path, 12.0, 200).unwrap();
        let report = flow_report(&path, &d, 0.0).unwrap();
        assert_eq!(report.identities.as_array(), [k; 5]);
        assert!(report.max_gap < DEFAULT_DELTA);
    }
}
