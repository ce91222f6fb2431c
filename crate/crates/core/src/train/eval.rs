use crate::data::Episode;
use crate::error::Error;
use crate::pose::{quat_dist, Pose};
use crate::stats::{angle_error_deg, median, r_squared};

use super::TrainedModel;

/// Metrics of one evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeEval {
    pub id: String,
    pub samples: usize,
    pub heading_mae_deg: f64,
    /// Robot position implied by the last prediction vs. ground truth.
    pub final_position_error_mm: f64,
    pub final_heading_error_deg: f64,
    /// Raw odometry at the last sample vs. ground truth.
    pub odometry_final_position_error_mm: f64,
    pub odometry_final_heading_error_deg: f64,
}

/// Metrics of per-sample predictions of the object pose in the robot frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub samples: usize,
    pub heading_mae_deg: f64,
    pub position_rmse_mm: f64,
    /// R² of each position axis; `None` where the target does not vary.
    pub r2: [Option<f64>; 3],
    pub mean_quat_dist: f64,
    pub episodes: Vec<EpisodeEval>,
}

impl EvalReport {
    pub fn median_final_position_error_mm(&self) -> Option<f64> {
        median(&self.episodes.iter().map(|e| e.final_position_error_mm).collect::<Vec<_>>())
    }

    pub fn median_odometry_final_position_error_mm(&self) -> Option<f64> {
        median(&self.episodes.iter().map(|e| e.odometry_final_position_error_mm).collect::<Vec<_>>())
    }
}

fn heading_deg(p: &Pose<f64>) -> f64 {
    p.orientation.yaw().to_degrees()
}

/// Evaluates stateless per-sample predictions against ground truth.
pub fn evaluate(model: &TrainedModel, episodes: &[&Episode]) -> Result<EvalReport, Error> {
    evaluate_with(episodes, |e, i| model.predict(&e.samples[i].x))
}

/// Scores raw odometry as if it were a predictor: the target seen from the
/// odometric robot pose.
pub fn evaluate_odometry(episodes: &[&Episode]) -> Result<EvalReport, Error> {
    evaluate_with(episodes, |e, i| Ok(e.samples[i].p_odom.relative(&e.header.target)))
}

/// Evaluates an arbitrary predictor of sample `i` of an episode.
pub fn evaluate_with<F>(episodes: &[&Episode], mut predict: F) -> Result<EvalReport, Error>
where
    F: FnMut(&Episode, usize) -> Result<Pose<f64>, Error>,
{
    let mut pred_axes: [Vec<f64>; 3] = Default::default();
    let mut true_axes: [Vec<f64>; 3] = Default::default();
    let mut heading_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut qd_sum = 0.0;
    let mut n = 0usize;
    let mut per_episode = Vec::with_capacity(episodes.len());
    for e in episodes {
        let mut ep_heading = 0.0;
        let mut last = None;
        for i in 0..e.samples.len() {
            let y = e.target_in_robot(i);
            let y_hat = predict(e, i)?;
            let h = angle_error_deg(heading_deg(&y_hat), heading_deg(&y));
            ep_heading += h;
            sq_sum += (0..3).map(|k| (y_hat.position[k] - y.position[k]).powi(2)).sum::<f64>();
            qd_sum += quat_dist(y_hat.orientation, y.orientation);
            for k in 0..3 {
                pred_axes[k].push(y_hat.position[k]);
                true_axes[k].push(y.position[k]);
            }
            last = Some(y_hat);
        }
        heading_sum += ep_heading;
        n += e.samples.len();
        let (Some(y_hat), Some(s)) = (last, e.samples.last()) else {
            continue;
        };
        // robot pose implied by the prediction: target ⊕ ⊖ŷ
        let p_hat = e.header.target.compose(&y_hat.invert());
        per_episode.push(EpisodeEval {
            id: e.id().to_string(),
            samples: e.samples.len(),
            heading_mae_deg: ep_heading / e.samples.len() as f64,
            final_position_error_mm: 1e3 * p_hat.position_distance(&s.p_true),
            final_heading_error_deg: angle_error_deg(heading_deg(&p_hat), heading_deg(&s.p_true)),
            odometry_final_position_error_mm: 1e3 * s.p_odom.position_distance(&s.p_true),
            odometry_final_heading_error_deg: angle_error_deg(heading_deg(&s.p_odom), heading_deg(&s.p_true)),
        });
    }
    if n == 0 {
        return Err(Error::UndefinedMetric("no evaluation samples".into()));
    }
    let nf = n as f64;
    let r2 = [0, 1, 2].map(|k| r_squared(&pred_axes[k], &true_axes[k]).ok());
    Ok(EvalReport {
        samples: n,
        heading_mae_deg: heading_sum / nf,
        position_rmse_mm: 1e3 * (sq_sum / nf).sqrt(),
        r2,
        mean_quat_dist: qd_sum / nf,
        episodes: per_episode,
    })
}
