//! Docking benchmark on the fixed 10/5/5 split: how far from the true final
//! pose each model places the robot, compared with raw odometry.
//!
//! ```text
//! cargo run --release --example docking_localization
//! ```

use spatial_ssl::cli::{run_variants, simulate_episodes, ExperimentConfig, VariantSpec};
use spatial_ssl::data::Episode;
use spatial_ssl::sim::OdometrySource;
use spatial_ssl::train::evaluate_odometry;

fn main() -> Result<(), spatial_ssl::Error> {
    let mut config = ExperimentConfig::docking();
    config.repeats = 1;
    config.train.max_epochs = 25;
    let variants = [VariantSpec::new(OdometrySource::Pointwise, 0.0), VariantSpec::new(OdometrySource::Uncertain, 1.0)];
    let episodes = simulate_episodes(&config)?;
    let results = run_variants(&config, &episodes, &variants, 1)?;

    let test = &results.plan.folds[0].test;
    let test_eps: Vec<&Episode> = test.iter().map(|&i| &episodes[i]).collect();
    let odometry = evaluate_odometry(&test_eps)?;
    println!("{:<24} {:>18} {:>14} {:>8} {:>8}", "", "final pos err (mm)", "RMSE (mm)", "R² x", "R² y");
    let r2 = |r: [Option<f64>; 3], k: usize| r[k].map_or("-".to_string(), |v| format!("{v:.3}"));
    println!(
        "{:<24} {:>18.1} {:>14.1} {:>8} {:>8}",
        "odometry",
        odometry.median_odometry_final_position_error_mm().unwrap_or(f64::NAN),
        odometry.position_rmse_mm,
        r2(odometry.r2, 0),
        r2(odometry.r2, 1)
    );
    for v in &variants {
        for run in results.of(v) {
            let Ok(f) = &run.result else {
                println!("{:<24} diverged", v.label());
                continue;
            };
            println!(
                "{:<24} {:>18.1} {:>14.1} {:>8} {:>8}",
                v.label(),
                f.report.median_final_position_error_mm().unwrap_or(f64::NAN),
                f.report.position_rmse_mm,
                r2(f.report.r2, 0),
                r2(f.report.r2, 1)
            );
        }
    }
    Ok(())
}
