//! Simulates both scenarios, saves the episodes and prints how far raw
//! odometry drifts from the truth.
//!
//! ```text
//! cargo run --release --example simulate_dataset [out_dir]
//! ```

use spatial_ssl::cli::{simulate_episodes, ExperimentConfig};
use spatial_ssl::data::{load_episode, save_episode, ScenarioKind};
use spatial_ssl::pose::wrap_angle;

fn main() -> Result<(), spatial_ssl::Error> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example-episodes".into());
    for kind in [ScenarioKind::Wall, ScenarioKind::Docking] {
        let config = ExperimentConfig::preset(kind);
        let episodes = simulate_episodes(&config)?;
        let dir = std::path::Path::new(&out).join(kind.name());
        std::fs::create_dir_all(&dir)?;
        let mut drift_m = Vec::new();
        let mut drift_deg = Vec::new();
        let mut samples = 0;
        for e in &episodes {
            let path = dir.join(format!("{}.episode", e.id()));
            save_episode(e, &path)?;
            assert_eq!(&load_episode(&path)?, e);
            let last = e.samples.last().expect("non-empty episode");
            drift_m.push(last.p_odom.position_distance(&last.p_true));
            let (o, t) = (last.p_odom.to_se2(), last.p_true.to_se2());
            drift_deg.push(wrap_angle(o.theta - t.theta).abs().to_degrees());
            samples += e.len();
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "{:<8} {} episodes, {samples} samples, {} sensor channels; final odometry drift {:.3} m / {:.1}° on average",
            kind.name(),
            episodes.len(),
            episodes[0].input_dim(),
            mean(&drift_m),
            mean(&drift_deg),
        );
        println!("         written to {}", dir.display());
    }
    Ok(())
}
