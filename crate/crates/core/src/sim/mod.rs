//! Seeded 2D simulators producing training episodes.
//!
//! Two scenarios are provided: a differential-drive robot with seven infrared
//! proximity sensors moving near a straight wall ([`wall`]), and an
//! omnidirectional robot that leaves a docking station and returns to it
//! while observing fixed beacons ([`docking`]). In both, the detector is the
//! known initial configuration and fires only at `t = 0`.

pub mod controller;
pub mod docking;
pub mod odometry;
pub mod wall;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Episode, EpisodeHeader, Sample, ScenarioKind};
use crate::error::Error;
use crate::pose::{Pose, Se2Pose};
use crate::seed;

pub use docking::{simulate_docking_episode, DockingScenarioConfig};
pub use odometry::{
    integrate, integrate_odometry, sample_realizations, Kinematics, MotionLog, OdometryRealizations,
    OdometrySource, WheelNoiseModel, WheelStep,
};
pub use wall::{ir_response, simulate_wall_episode, IrSensorModel, SensorMount, WallScenarioConfig};

/// Planar noise of the detector output, applied in the detector's frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectorNoise {
    pub position_std: f64,
    pub angle_std: f64,
}

impl DetectorNoise {
    pub fn is_noiseless(&self) -> bool {
        self.position_std == 0.0 && self.angle_std == 0.0
    }

    /// One draw from the detector distribution centred on `d`.
    pub fn sample<R: Rng + ?Sized>(&self, d: &Pose<f64>, rng: &mut R) -> Pose<f64> {
        if self.is_noiseless() {
            return *d;
        }
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let za: f64 = rng.sample(StandardNormal);
        let e = Se2Pose::new(self.position_std * zx, self.position_std * zy, self.angle_std * za);
        d.compose(&e.lift())
    }
}

/// Header fields shared by both scenarios.
pub(crate) struct EpisodeParts<'a> {
    pub id: &'a str,
    pub scenario: ScenarioKind,
    pub rate_hz: f64,
    pub seed: u64,
    pub kinematics: Kinematics,
    pub odometry_noise: WheelNoiseModel,
    pub detector_noise: DetectorNoise,
    pub target: Pose<f64>,
}

/// Integrates true and measured odometry from the commanded wheel steps and
/// packs everything into an episode with the detector firing at `t = 0`.
pub(crate) fn assemble_episode(parts: EpisodeParts<'_>, steps: &[WheelStep], readings: Vec<Vec<f64>>) -> Result<Episode, Error> {
    let kin = parts.kinematics;
    let truth = integrate(&kin, steps);
    let log = MotionLog { kinematics: kin, steps: steps.to_vec() };
    let measured = integrate_odometry(&log, &parts.odometry_noise, &mut seed::rng(parts.seed, "odometry", 0));
    let mut det_rng = seed::rng(parts.seed, "detector", 0);
    let samples = readings
        .into_iter()
        .enumerate()
        .map(|(t, x)| {
            let p_true = truth[t].lift();
            let d = (t == 0).then(|| parts.detector_noise.sample(&p_true.relative(&parts.target), &mut det_rng));
            Sample { t, time: t as f64 / parts.rate_hz, x, p_true, p_odom: measured[t].lift(), d }
        })
        .collect();
    let episode = Episode {
        header: EpisodeHeader {
            id: parts.id.to_string(),
            scenario: parts.scenario,
            rate_hz: parts.rate_hz,
            seed: parts.seed,
            kinematics: kin,
            odometry_noise: parts.odometry_noise,
            detector_noise: parts.detector_noise,
            target: parts.target,
            config_hash: None,
        },
        samples,
    };
    episode.validate()?;
    Ok(episode)
}
