mod common;

use common::{wilcoxon_case, wilcoxon_case_20, wilcoxon_oracle};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatial_ssl::stats::{r_squared, wilcoxon_signed_rank, wilcoxon_signed_rank_with, Alternative, PValueMethod};

#[test]
fn exact_p_values_match_tabulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        let (a, b) = wilcoxon_case(&mut rng);
        let Some((less, greater, two)) = wilcoxon_oracle(&a, &b) else {
            assert!(wilcoxon_signed_rank(&a, &b, Alternative::TwoSided).is_err());
            continue;
        };
        for (alt, want) in [(Alternative::Less, less), (Alternative::Greater, greater), (Alternative::TwoSided, two)] {
            let got = wilcoxon_signed_rank(&a, &b, alt).unwrap();
            assert!(got.exact);
            assert!((got.p_value - want).abs() < 1e-12, "{a:?} {b:?} {alt:?}: {} vs {want}", got.p_value);
        }
        checked += 1;
    }
}

#[test]
fn normal_approximation_is_close_to_exact_at_twenty() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let (a, b) = wilcoxon_case_20(&mut rng);
        for alt in [Alternative::Less, Alternative::Greater, Alternative::TwoSided] {
            let exact = wilcoxon_signed_rank_with(&a, &b, alt, PValueMethod::Exact).unwrap();
            let normal = wilcoxon_signed_rank_with(&a, &b, alt, PValueMethod::Normal).unwrap();
            assert!(exact.exact && !normal.exact);
            let gap = (exact.p_value - normal.p_value).abs();
            assert!(gap < 0.01, "case {case} {alt:?}: exact {} normal {}", exact.p_value, normal.p_value);
        }
    }
}

#[test]
fn large_samples_use_the_normal_branch() {
    let a: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let b: Vec<f64> = (0..40).map(|i| i as f64 + if i % 3 == 0 { -0.5 } else { 1.0 + i as f64 * 0.01 }).collect();
    let r = wilcoxon_signed_rank(&a, &b, Alternative::Less).unwrap();
    assert!(!r.exact && r.p_value < 1e-3);
}

#[test]
fn known_small_sample_value() {
    // all five differences negative: W+ = 0, p = 1/32
    let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0], Alternative::Less).unwrap();
    assert_eq!(r.p_value, 1.0 / 32.0);
}

proptest! {
    #[test]
    fn wilcoxon_is_scale_invariant(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..15),
        scale in 0.01..100.0f64,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let sa: Vec<f64> = a.iter().map(|v| v * scale).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * scale).collect();
        let r = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided).unwrap();
        let s = wilcoxon_signed_rank(&sa, &sb, Alternative::TwoSided).unwrap();
        prop_assert_eq!(r.statistic, s.statistic);
        prop_assert!((r.p_value - s.p_value).abs() < 1e-12);
    }

    #[test]
    fn swapping_samples_mirrors_the_alternative(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..15),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let less = wilcoxon_signed_rank(&a, &b, Alternative::Less).unwrap();
        let greater = wilcoxon_signed_rank(&b, &a, Alternative::Greater).unwrap();
        prop_assert!((less.p_value - greater.p_value).abs() < 1e-12);
    }

    #[test]
    fn r_squared_is_shift_invariant(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..40),
        shift in -1e3..1e3f64,
    ) {
        let target: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<f64> = pairs.iter().map(|p| p.0 + 0.3 * p.1).collect();
        prop_assume!(target.iter().any(|t| (t - target[0]).abs() > 1e-3));
        let r = r_squared(&pred, &target).unwrap();
        let st: Vec<f64> = target.iter().map(|v| v + shift).collect();
        let sp: Vec<f64> = pred.iter().map(|v| v + shift).collect();
        let s = r_squared(&sp, &st).unwrap();
        prop_assert!((r - s).abs() < 1e-6 * (1.0 + r.abs()));
    }

    #[test]
    fn predicting_the_mean_gives_zero_r_squared(target in prop::collection::vec(-10.0..10.0f64, 3..40)) {
        prop_assume!(target.iter().any(|t| (t - target[0]).abs() > 1e-3));
        let mean = target.iter().sum::<f64>() / target.len() as f64;
        let r = r_squared(&vec![mean; target.len()], &target).unwrap();
        prop_assert!(r.abs() < 1e-9);
    }
}
