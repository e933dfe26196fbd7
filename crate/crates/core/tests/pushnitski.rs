mod common;

use common::{fredholm_path, tanh};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specshift::pushnitski::{
    abel_transform, lemma3_check, lemma4_check, near_breakpoint, pushnitski_check, s_transform, t_limit,
    t_transform, Integrand, LebesguePointEstimator, DEFAULT_NODES,
};
use specshift::{DiscretizedDA, OperatorPath, StepFunction};

fn random_step(seed: u64, lo: f64, nonneg: bool) -> StepFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..6);
    let mut bps = vec![lo];
    for _ in 0..k {
        let last = *bps.last().unwrap();
        bps.push(last + rng.random_range(0.05..1.0));
    }
    let mut levels = vec![0.0];
    levels.extend((0..k).map(|_| if nonneg { rng.random_range(0.0..3.0) } else { rng.random_range(-3.0..3.0) }));
    levels.push(0.0);
    StepFunction::new(bps, levels).unwrap()
}

/// `x -> f(-x)`.
fn reflect(f: &StepFunction) -> StepFunction {
    let bps = f.breakpoints().iter().rev().map(|b| -b).collect();
    let levels = f.levels().iter().rev().copied().collect();
    StepFunction::new(bps, levels).unwrap()
}

/// Oracle: trapezoid in theta with many nodes, independent of the exact
/// arcsine antiderivatives.
fn abel_oracle(f: &StepFunction, lambda: f64) -> f64 {
    let n = 200_000;
    let h = std::f64::consts::PI / n as f64;
    let s: f64 = (0..n)
        .map(|i| f.eval(lambda.sqrt() * (-std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h).sin()))
        .sum();
    s * h / std::f64::consts::PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn s_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, lambda in 0.01f64..6.0) {
        let f = random_step(seed, -1.5, false);
        let g = random_step(seed ^ 1, -0.5, false);
        let mix = f.combine(&g, a, b);
        let lhs = abel_transform(Integrand::Step(&mix), lambda, DEFAULT_NODES).unwrap();
        let rhs = a * abel_transform(Integrand::Step(&f), lambda, DEFAULT_NODES).unwrap()
            + b * abel_transform(Integrand::Step(&g), lambda, DEFAULT_NODES).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn s_preserves_positivity(seed in any::<u64>(), lambda in 0.01f64..6.0) {
        let f = random_step(seed, -1.0, true);
        prop_assert!(abel_transform(Integrand::Step(&f), lambda, DEFAULT_NODES).unwrap() >= 0.0);
        prop_assert!(s_transform(Integrand::Step(&f), lambda, DEFAULT_NODES).unwrap() >= 0.0);
    }

    #[test]
    fn exact_step_integration_matches_oracle(seed in any::<u64>(), lambda in 0.05f64..5.0) {
        let f = random_step(seed, -1.2, false);
        let exact = abel_transform(Integrand::Step(&f), lambda, DEFAULT_NODES).unwrap();
        prop_assert!((exact - abel_oracle(&f, lambda)).abs() < 1e-4);
    }

    #[test]
    fn s_of_one_is_one(lambda in 1e-6f64..1e3) {
        let one = |_: f64| 1.0;
        prop_assert!((abel_transform(Integrand::Fn(&one), lambda, DEFAULT_NODES).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lemma3_on_random_one_sided_steps() {
    let est = LebesguePointEstimator::default();
    for seed in 0..20 {
        let f = random_step(seed, 0.0, false);
        let (s, half) = lemma3_check(Integrand::Step(&f), &est).unwrap();
        assert_eq!(half, 0.5 * f.levels()[1]);
        assert!((s - half).abs() <= 2e-3, "seed {seed}: {s} vs {half}");
    }
}

#[test]
fn lemma4_on_random_steps_with_a_jump_at_zero() {
    let est = LebesguePointEstimator::default();
    for seed in 0..10 {
        let right = random_step(seed, 0.0, false);
        let left = reflect(&random_step(seed + 100, 0.0, false));
        let f = right.add(&left);
        let (limit, expected) = lemma4_check(Integrand::Step(&f), &est).unwrap();
        assert_eq!(expected, f.right_limit(0.0) + f.left_limit(0.0));
        assert!((limit - expected).abs() <= 1e-4, "seed {seed}: {limit} vs {expected}");
    }
}

#[test]
fn t_transform_of_constants() {
    for c in [-2.0, 0.5, 3.0] {
        let f = move |_: f64| c;
        for z in [-3.0, -0.5, -1e-4] {
            assert!((t_transform(Integrand::Fn(&f), z).unwrap() - 2.0 * c).abs() < 1e-8);
        }
        let (limit, _) = t_limit(Integrand::Fn(&f), -1.0, 1e-10).unwrap();
        assert!((limit - 2.0 * c).abs() < 1e-4);
    }
}

fn contract(path: &OperatorPath) -> f64 {
    let d = DiscretizedDA::assemble(path, 12.0, 1200).unwrap();
    let grid: Vec<f64> = (1..=16).map(|k| 0.25 * k as f64).collect();
    let report = pushnitski_check(path, &d, &grid).unwrap();
    for (i, &l) in grid.iter().enumerate() {
        if !near_breakpoint(&report.endpoint_ssf, l, 1e-2) {
            assert!(report.residual[i].is_finite());
        }
    }
    report.max_residual_excluding(1e-2)
}

#[test]
fn pushnitski_formula_on_bggss() {
    assert!(contract(&OperatorPath::scalar(-1.0, 2.0, tanh())) <= 0.1);
}

#[test]
fn pushnitski_formula_on_random_paths() {
    for seed in 0..2 {
        let r = contract(&fredholm_path(5000 + seed, 2, 0.5));
        assert!(r <= 0.1, "seed {seed}: {r}");
    }
}

#[test]
fn pushnitski_trivial_path() {
    let path = OperatorPath::scalar(-1.0, 0.0, tanh());
    let d = DiscretizedDA::assemble(&path, 12.0, 100).unwrap();
    let r = pushnitski_check(&path, &d, &[0.5, 1.0, 2.0]).unwrap();
    assert_eq!(r.max_residual(), 0.0);
}
