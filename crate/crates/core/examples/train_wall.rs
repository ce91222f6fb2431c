//! Trains the wall-heading regressor on one leave-one-out fold with
//! uncertainty-aware odometry, saves the checkpoint and evaluates it.
//!
//! ```text
//! cargo run --release --example train_wall
//! ```

use spatial_ssl::autodiff::Checkpoint;
use spatial_ssl::cli::{simulate_episodes, ExperimentConfig};
use spatial_ssl::data::{make_folds, Episode, FoldScheme};
use spatial_ssl::sim::OdometrySource;
use spatial_ssl::train::{evaluate, evaluate_odometry, train_fold, variant, TrainedModel};

fn main() -> Result<(), spatial_ssl::Error> {
    let mut config = ExperimentConfig::wall();
    config.episodes = 8;
    let episodes = simulate_episodes(&config)?;
    let plan = make_folds(episodes.len(), FoldScheme::LeaveOneOut)?;
    let fold = &plan.folds[0];

    let mut train = variant(&config.train, OdometrySource::Uncertain, 1.0);
    train.max_epochs = 25;
    train.batches_per_epoch = 60;
    train.seed = 1;
    println!(
        "training on {} episodes, validating on {:?}, {} MC draws per pair",
        fold.train.len(),
        fold.validation,
        train.loss.n_mc
    );
    let result = train_fold(&episodes, fold, 0, &train)?;
    for r in result.curve.iter().step_by(5) {
        println!("epoch {:>3}  train {:.4}  validation {:.4}", r.epoch, r.train_loss, r.validation_loss);
    }
    println!("best epoch {}", result.best_epoch);

    let path = std::env::temp_dir().join("spatial-ssl-train-wall.ckpt");
    std::fs::write(&path, result.model.to_checkpoint(train.seed, None).to_bytes())?;
    let model = TrainedModel::from_checkpoint(Checkpoint::read_from(std::fs::File::open(&path)?)?);

    let held_out: Vec<&Episode> = fold.evaluation().iter().map(|&i| &episodes[i]).collect();
    let report = evaluate(&model, &held_out)?;
    let odometry = evaluate_odometry(&held_out)?;
    println!("held-out heading MAE: model {:.2}°, raw odometry {:.2}°", report.heading_mae_deg, odometry.heading_mae_deg);
    println!("checkpoint written to {}", path.display());
    Ok(())
}
