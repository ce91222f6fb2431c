mod common;

use common::{homogeneous, matmul, max_abs_diff, pose_oracle_max_error, random_pose};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatial_ssl::pose::{quat_dist, se_dist, Pose, Quaternion};

#[test]
fn ten_thousand_ops_match_homogeneous_matrices() {
    let start = std::time::Instant::now();
    let worst = pose_oracle_max_error(10_000, 17);
    let elapsed = start.elapsed();
    assert!(worst < 1e-9, "max abs error {worst:e}");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
}

#[test]
fn chained_compositions_stay_on_the_manifold() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut acc = Pose::identity();
    let mut m = homogeneous(&acc);
    for _ in 0..200 {
        let step = random_pose(&mut rng, 5.0);
        acc = acc.compose(&step);
        m = matmul(&m, &homogeneous(&step));
    }
    assert!(acc.orientation.is_unit(1e-12));
    let rel = max_abs_diff(&homogeneous(&acc), &m) / m.iter().flatten().fold(1.0, |a: f64, v| a.max(v.abs()));
    assert!(rel < 1e-9, "relative drift {rel:e}");
}

fn arb_pose() -> impl Strategy<Value = Pose<f64>> {
    (prop::array::uniform3(-3.0..3.0f64), prop::array::uniform4(-1.0..1.0f64))
        .prop_filter("non-degenerate quaternion", |(_, q)| q.iter().map(|v| v * v).sum::<f64>() > 1e-2)
        .prop_map(|(o, q)| {
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            Pose::new(o, Quaternion::from_array(q.map(|v| v / n)))
        })
}

proptest! {
    #[test]
    fn se_dist_is_metric_like(a in arb_pose(), b in arb_pose(), c in arb_pose(), lambda in 0.0..20.0f64) {
        let ab = se_dist(&a, &b, lambda);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - se_dist(&b, &a, lambda)).abs() < 1e-12);
        prop_assert!(se_dist(&a, &a, lambda) < 1e-6);
        prop_assert!(ab <= se_dist(&a, &c, lambda) + se_dist(&c, &b, lambda) + 1e-9);
    }

    #[test]
    fn quat_dist_ignores_sign(a in arb_pose(), b in arb_pose()) {
        let q = a.orientation;
        let neg = Quaternion::new(-q.w, -q.x, -q.y, -q.z);
        prop_assert!((quat_dist(q, b.orientation) - quat_dist(neg, b.orientation)).abs() < 1e-12);
    }

    #[test]
    fn inverse_cancels(a in arb_pose()) {
        prop_assert!(a.compose(&a.invert()).approx_eq(&Pose::identity(), 1e-12));
    }

    #[test]
    fn se_dist_is_left_invariant(a in arb_pose(), b in arb_pose(), g in arb_pose()) {
        let direct = se_dist(&a, &b, 1.0);
        let moved = se_dist(&g.compose(&a), &g.compose(&b), 1.0);
        prop_assert!((direct - moved).abs() < 1e-7);
    }
}
