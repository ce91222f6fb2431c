mod common;

use common::{label_error, mc_degeneracy_gap, short_docking, short_wall};
use spatial_ssl::train::episode_realizations;

#[test]
fn uncertain_loss_degenerates_to_pointwise_without_noise() {
    for episode in [short_wall(1, 12.0), short_docking(2, 40.0)] {
        for n_mc in [1, 10, 50] {
            let gap = mc_degeneracy_gap(&episode, n_mc);
            assert!(gap <= 1e-12, "{} n_mc={n_mc}: gap {gap:e}", episode.id());
        }
    }
}

#[test]
fn exact_odometry_labels_equal_ground_truth() {
    for seed in 0..3 {
        for episode in [short_wall(seed, 12.0), short_docking(seed, 40.0)] {
            let err = label_error(&episode);
            assert!(err < 1e-9, "{}: {err:e}", episode.id());
        }
    }
}

#[test]
fn realization_spread_grows_along_the_episode() {
    for episode in [short_wall(4, 12.0), short_docking(4, 40.0)] {
        let real = episode_realizations(&episode, 30, 9).unwrap();
        assert_eq!(real.spread(0), 0.0);
        let n = episode.len();
        let (early, mid, late) = (real.spread(n / 10), real.spread(n / 2), real.spread(n - 1));
        assert!(early < mid && mid < late, "{}: {early} {mid} {late}", episode.id());
    }
}

#[test]
fn realizations_are_unbiased_around_the_measured_odometry() {
    let episode = short_docking(6, 40.0);
    let real = episode_realizations(&episode, 200, 1).unwrap();
    let last = episode.len() - 1;
    let m = real.measured()[last];
    let mean_x = (0..200).map(|k| real.draw(k)[last].x).sum::<f64>() / 200.0;
    let mean_y = (0..200).map(|k| real.draw(k)[last].y).sum::<f64>() / 200.0;
    let offset = ((mean_x - m.x).powi(2) + (mean_y - m.y).powi(2)).sqrt();
    assert!(offset < 0.5 * real.spread(last), "mean offset {offset} vs spread {}", real.spread(last));
}
