use spatial_ssl::data::{make_folds, Episode, FoldScheme};
use spatial_ssl::losses::LossConfig;
use spatial_ssl::pose::{wrap_angle, Pose, Quaternion};
use spatial_ssl::sim::{
    simulate_docking_episode, simulate_wall_episode, DockingScenarioConfig, OdometrySource, WallScenarioConfig,
};
use spatial_ssl::train::{evaluate_with, train_fold, TrainConfig};

fn wall_episodes(n: usize, duration_s: f64) -> Vec<Episode> {
    let config = WallScenarioConfig { duration_s, ..Default::default() };
    (0..n).map(|i| simulate_wall_episode(&config, &format!("wall-{i:02}"), 1000 + i as u64).unwrap()).collect()
}

fn docking_episodes(n: usize, first_seed: u64) -> Vec<Episode> {
    let config = DockingScenarioConfig { duration_s: 20.0, ..Default::default() };
    (0..n)
        .map(|i| simulate_docking_episode(&config, &format!("docking-{i:02}"), first_seed + i as u64).unwrap())
        .collect()
}

fn quick(mode: OdometrySource) -> TrainConfig {
    TrainConfig {
        loss: LossConfig { mode, n_mc: 5, pairs_per_batch: 8, ..Default::default() },
        batches_per_epoch: 5,
        max_epochs: 3,
        validation_batches: 2,
        seed: 42,
        ..Default::default()
    }
}

#[test]
fn training_is_deterministic_given_the_seed() {
    let episodes = wall_episodes(4, 6.0);
    let plan = make_folds(episodes.len(), FoldScheme::LeaveOneOut).unwrap();
    let config = quick(OdometrySource::Uncertain);
    let a = train_fold(&episodes, &plan.folds[1], 1, &config).unwrap();
    let b = train_fold(&episodes, &plan.folds[1], 1, &config).unwrap();
    assert_eq!(a.model.to_checkpoint(42, None).to_bytes(), b.model.to_checkpoint(42, None).to_bytes());
    assert_eq!(a.curve, b.curve);
    let other = train_fold(&episodes, &plan.folds[1], 1, &TrainConfig { seed: 43, ..config }).unwrap();
    assert_ne!(a.model.params.values(), other.model.params.values());
}

#[test]
fn zero_patience_trains_exactly_one_epoch() {
    let episodes = wall_episodes(3, 5.0);
    let plan = make_folds(episodes.len(), FoldScheme::LeaveOneOut).unwrap();
    let config = TrainConfig { patience: 0, max_epochs: 50, ..quick(OdometrySource::Pointwise) };
    let r = train_fold(&episodes, &plan.folds[0], 0, &config).unwrap();
    assert_eq!(r.curve.len(), 1);
    assert_eq!(r.best_epoch, 0);
}

#[test]
fn held_out_episodes_never_reach_training_batches() {
    let episodes = docking_episodes(6, 500);
    let scheme = FoldScheme::FixedSplit { train: 3, validation: 2, test: 1 };
    let plan = make_folds(episodes.len(), scheme).unwrap();
    let fold = &plan.folds[0];
    let config = quick(OdometrySource::Uncertain);
    let reference = train_fold(&episodes, fold, 0, &config).unwrap();
    assert!(reference.episodes_seen.iter().all(|i| fold.train.contains(i)));
    assert_eq!(reference.episodes_seen.len(), fold.train.len());

    // swapping the test episode for unrelated data must not change a single byte of the model
    let mut swapped = episodes.clone();
    swapped[fold.test[0]] = docking_episodes(1, 9_999).remove(0);
    let retrained = train_fold(&swapped, fold, 0, &config).unwrap();
    assert_eq!(
        reference.model.to_checkpoint(0, None).to_bytes(),
        retrained.model.to_checkpoint(0, None).to_bytes()
    );
    assert_ne!(reference.report, retrained.report);

    let plan = make_folds(4, FoldScheme::LeaveOneOut).unwrap();
    let wall = wall_episodes(4, 5.0);
    for (k, fold) in plan.folds.iter().enumerate() {
        let r = train_fold(&wall, fold, k, &config).unwrap();
        assert!(!r.episodes_seen.contains(&fold.validation[0]), "fold {k}");
    }
}

#[test]
fn heading_is_recoverable_from_clean_readings() {
    let config = WallScenarioConfig::default();
    let episodes = wall_episodes(10, 34.0);
    let in_range = |e: &Episode, i: usize| {
        let p = e.samples[i].p_true.to_se2();
        config.sensor_hits(&p).iter().any(Option::is_some)
    };
    let heading = |e: &Episode, i: usize| e.target_in_robot(i).orientation.yaw();
    let mut bank: Vec<(Vec<f64>, f64)> = Vec::new();
    for e in &episodes[..8] {
        for i in (0..e.len()).filter(|&i| in_range(e, i)) {
            bank.push((config.clean_readings(&e.samples[i].p_true.to_se2()), heading(e, i)));
        }
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for e in &episodes[8..] {
        for i in (0..e.len()).filter(|&i| in_range(e, i)) {
            let x = config.clean_readings(&e.samples[i].p_true.to_se2());
            let nearest = bank
                .iter()
                .min_by(|a, b| {
                    let da: f64 = a.0.iter().zip(&x).map(|(u, v)| (u - v).powi(2)).sum();
                    let db: f64 = b.0.iter().zip(&x).map(|(u, v)| (u - v).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            sum += wrap_angle(nearest.1 - heading(e, i)).abs().to_degrees();
            n += 1;
        }
    }
    let mae = sum / n as f64;
    assert!(n > 300, "only {n} in-range samples");
    assert!(mae < 5.0, "nearest-neighbour heading MAE {mae:.2}°");
}

#[test]
fn mean_pose_predictor_has_zero_r_squared() {
    let episodes = docking_episodes(3, 77);
    let refs: Vec<&Episode> = episodes.iter().collect();
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for e in &episodes {
        for i in 0..e.len() {
            let y = e.target_in_robot(i);
            sx += y.position[0];
            sy += y.position[1];
            n += 1.0;
        }
    }
    let mean = Pose::new([sx / n, sy / n, 0.0], Quaternion::identity());
    let report = evaluate_with(&refs, |_, _| Ok(mean)).unwrap();
    assert!(report.r2[0].unwrap().abs() < 1e-9);
    assert!(report.r2[1].unwrap().abs() < 1e-9);
    assert!(report.r2[2].is_none());
}
