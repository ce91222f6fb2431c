//! Monte Carlo odometry realizations of one docking episode: how their
//! spread grows with time and how well it covers the true trajectory.
//!
//! ```text
//! cargo run --release --example odometry_realizations
//! ```

use spatial_ssl::sim::{simulate_docking_episode, DockingScenarioConfig, OdometrySource};
use spatial_ssl::train::episode_realizations;

fn main() -> Result<(), spatial_ssl::Error> {
    let config = DockingScenarioConfig::default();
    let episode = simulate_docking_episode(&config, "docking-demo", 3)?;
    let n_mc = 50;
    let real = episode_realizations(&episode, n_mc, 0)?;

    println!("{:>8} {:>12} {:>16} {:>14}", "time (s)", "spread (m)", "odometry err (m)", "|z| truth");
    let last = episode.len() - 1;
    for t in (0..=10).map(|k| k * last / 10) {
        let truth = real.exact()[t];
        // distance of the truth from the cloud mean, in units of cloud std
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n_mc).map(|k| (real.draw(k)[t].x, real.draw(k)[t].y)).unzip();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&xs), mean(&ys));
        let var = xs.iter().zip(&ys).map(|(x, y)| (x - mx).powi(2) + (y - my).powi(2)).sum::<f64>() / (n_mc - 1) as f64;
        let z = if var > 0.0 {
            ((truth.position[0] - mx).powi(2) + (truth.position[1] - my).powi(2)).sqrt() / var.sqrt()
        } else {
            0.0
        };
        let m = real.measured()[t];
        let err = ((m.x - truth.position[0]).powi(2) + (m.y - truth.position[1]).powi(2)).sqrt();
        println!("{:>8.1} {:>12.4} {:>16.4} {:>14.2}", episode.samples[t].time, real.spread(t), err, z);
    }

    // relative poses between nearby timesteps stay tight even when absolute drift is large
    let (t, u) = (last - 30, last);
    let rel: Vec<f64> = (0..n_mc)
        .map(|k| real.relative(OdometrySource::Uncertain, k, t, u).position_distance(&real.relative(OdometrySource::Exact, 0, t, u)))
        .collect();
    println!("relative pose over the last 2 s: mean error {:.4} m across draws", rel.iter().sum::<f64>() / n_mc as f64);
    Ok(())
}
