//! Episodes, their on-disk format, and cross-validation folds.

mod folds;
mod io;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pose::Pose;
use crate::sim::{DetectorNoise, Kinematics, MotionLog, WheelNoiseModel};

pub use folds::{make_folds, Fold, FoldPlan, FoldScheme};
pub use io::{load_episode, parse_episode, save_episode, write_episode, EPISODE_FORMAT_VERSION};

/// Tolerance used by the load-time invariant checks.
pub const VALIDATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Wall,
    Docking,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Wall => "wall",
            ScenarioKind::Docking => "docking",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wall" => Some(Self::Wall),
            "docking" => Some(Self::Docking),
            _ => None,
        }
    }
}

/// One timestep: sensor readings, true and odometric robot pose in F_0, and
/// the detector output (pose of the object frame in the robot frame) when
/// available.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: usize,
    pub time: f64,
    pub x: Vec<f64>,
    pub p_true: Pose<f64>,
    pub p_odom: Pose<f64>,
    pub d: Option<Pose<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeHeader {
    pub id: String,
    pub scenario: ScenarioKind,
    pub rate_hz: f64,
    pub seed: u64,
    pub kinematics: Kinematics,
    pub odometry_noise: WheelNoiseModel,
    pub detector_noise: DetectorNoise,
    /// Pose of the object frame in F_0; constant over the episode.
    pub target: Pose<f64>,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub header: EpisodeHeader,
    pub samples: Vec<Sample>,
}

impl Episode {
    pub fn id(&self) -> &str {
        &self.header.id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    /// Timesteps carrying a detector output.
    pub fn detector_steps(&self) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.d.map(|_| i))
            .collect()
    }

    /// Ground-truth target: pose of the object frame in the robot frame.
    pub fn target_in_robot(&self, i: usize) -> Pose<f64> {
        self.samples[i].p_true.relative(&self.header.target)
    }

    /// Wheel readings implied by the measured odometry.
    pub fn measured_motion(&self) -> MotionLog {
        let poses: Vec<_> = self.samples.iter().map(|s| s.p_odom.to_se2()).collect();
        MotionLog::from_trajectory(self.header.kinematics, &poses)
    }

    pub fn exact_trajectory(&self) -> Vec<Pose<f64>> {
        self.samples.iter().map(|s| s.p_true).collect()
    }

    /// Checks the structural invariants of an episode.
    pub fn validate(&self) -> Result<(), Error> {
        let fail = |invariant: &'static str, detail: String| Err(Error::Validation { invariant, detail });
        let h = &self.header;
        if !(h.rate_hz > 0.0 && h.rate_hz.is_finite()) {
            return fail("positive rate", format!("rate {}", h.rate_hz));
        }
        h.kinematics.validate()?;
        h.odometry_noise.validate()?;
        if !h.target.orientation.is_unit(VALIDATION_TOL) {
            return fail("unit quaternion", "target orientation".into());
        }
        let Some(first) = self.samples.first() else {
            return fail("non-empty episode", "no samples".into());
        };
        if first.t != 0 {
            return fail("first timestep is 0", format!("first t = {}", first.t));
        }
        let dim = first.x.len();
        let mut prev: Option<usize> = None;
        for s in &self.samples {
            if let Some(p) = prev {
                if s.t <= p {
                    return fail("strictly increasing timesteps", format!("t = {} after {}", s.t, p));
                }
            }
            prev = Some(s.t);
            if s.x.len() != dim {
                return fail("constant sensor dimension", format!("t = {}: {} vs {}", s.t, s.x.len(), dim));
            }
            let expected_time = s.t as f64 / h.rate_hz;
            if (s.time - expected_time).abs() > VALIDATION_TOL * expected_time.max(1.0) {
                return fail("time = t / rate", format!("t = {}: time {}", s.t, s.time));
            }
            for (name, p) in [("p_true", Some(&s.p_true)), ("p_odom", Some(&s.p_odom)), ("d", s.d.as_ref())] {
                if let Some(p) = p {
                    if !p.orientation.is_unit(VALIDATION_TOL) {
                        return fail("unit quaternion", format!("{name} at t = {}", s.t));
                    }
                    if p.position.iter().any(|c| !c.is_finite()) {
                        return fail("finite position", format!("{name} at t = {}", s.t));
                    }
                }
            }
            // With a noise-free detector, every detection must place the
            // object at the same pose in F_0.
            if let (Some(d), true) = (s.d, h.detector_noise.is_noiseless()) {
                let implied = s.p_true.compose(&d);
                if !implied.approx_eq(&h.target, VALIDATION_TOL) {
                    return fail(
                        "static target",
                        format!("detection at t = {} implies {:?}, header says {:?}", s.t, implied, h.target),
                    );
                }
            }
        }
        Ok(())
    }
}
