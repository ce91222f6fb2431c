//! Leave-one-episode-out comparison of pointwise and uncertainty-aware
//! odometry on a reduced wall benchmark, with a paired Wilcoxon test.
//!
//! ```text
//! cargo run --release --example crossval_wilcoxon
//! ```

use spatial_ssl::cli::{compare, metric_values, run_variants, simulate_episodes, stars, Comparison, ExperimentConfig, Metric, VariantSpec};
use spatial_ssl::sim::OdometrySource;
use spatial_ssl::stats::median;

fn main() -> Result<(), spatial_ssl::Error> {
    let mut config = ExperimentConfig::wall();
    config.episodes = 8;
    config.train.max_epochs = 20;
    config.train.batches_per_epoch = 50;
    let pointwise = VariantSpec::new(OdometrySource::Pointwise, 1.0);
    let uncertain = VariantSpec::new(OdometrySource::Uncertain, 1.0);
    config.variants = vec![pointwise, uncertain];
    config.comparisons = vec![Comparison { a: uncertain, b: pointwise }];

    let episodes = simulate_episodes(&config)?;
    let results = run_variants(&config, &episodes, &config.variants, 1)?;
    for v in &config.variants {
        let values: Vec<f64> = metric_values(&results, v, Metric::HeadingMaeDeg).into_iter().map(|x| x.1).collect();
        let shown: Vec<String> = values.iter().map(|x| format!("{x:.1}")).collect();
        println!("{:<22} median {:.2}°  per fold [{}]", v.label(), median(&values).unwrap_or(f64::NAN), shown.join(", "));
    }
    for c in compare(&config, &config.variants, &results) {
        match c.test {
            Ok(t) => println!(
                "{} < {}: W = {}, n = {}, one-sided p = {:.4} {}",
                c.a.label(),
                c.b.label(),
                t.statistic,
                t.n,
                t.p_value,
                stars(t.p_value)
            ),
            Err(e) => println!("{} vs {}: {e}", c.a.label(), c.b.label()),
        }
    }
    Ok(())
}
