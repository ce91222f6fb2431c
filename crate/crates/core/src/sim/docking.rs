//! Omnidirectional robot that undocks, explores an arena and returns to its
//! docking station, sensing fixed beacons.
//!
//! The docking station frame is F_0 and the object frame, so the target is
//! `y(t) = ⊖p(t)` and `d(0)` is the identity. The sensor reports range and
//! bearing to each beacon in the robot frame.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::controller::{OuChannel, OuController};
use super::{DetectorNoise, Kinematics, WheelNoiseModel};
use crate::data::{Episode, ScenarioKind};
use crate::error::Error;
use crate::pose::{wrap_angle, Pose, Se2Pose};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DockingScenarioConfig {
    pub duration_s: f64,
    pub rate_hz: f64,
    /// The robot stays inside `[-half_extent, half_extent]²`.
    pub arena_half_extent: f64,
    pub beacons: Vec<[f64; 2]>,
    pub range_noise_std: f64,
    pub bearing_noise_std: f64,
    pub wheel_radius: f64,
    pub arm: f64,
    pub forward: OuChannel,
    pub lateral: OuChannel,
    pub turn_rate: OuChannel,
    /// Fraction of the episode, at its end, spent driving back to the dock.
    pub homing_fraction: f64,
    pub homing_gain: f64,
    pub odometry_noise: WheelNoiseModel,
    pub detector_noise: DetectorNoise,
}

impl Default for DockingScenarioConfig {
    fn default() -> Self {
        Self {
            duration_s: 240.0,
            rate_hz: 15.0,
            arena_half_extent: 2.5,
            beacons: vec![[3.0, 1.5], [-1.0, 3.2], [-2.8, -1.2], [1.2, -3.0]],
            range_noise_std: 0.03,
            bearing_noise_std: 0.02,
            wheel_radius: 0.05,
            arm: 0.2,
            forward: OuChannel { mean: 0.0, std: 0.25, tau: 3.0, limit: 0.4 },
            lateral: OuChannel { mean: 0.0, std: 0.15, tau: 3.0, limit: 0.3 },
            turn_rate: OuChannel { mean: 0.0, std: 0.6, tau: 2.0, limit: 1.0 },
            homing_fraction: 0.2,
            homing_gain: 0.5,
            odometry_noise: WheelNoiseModel { encoder_std: 0.035, slip_std: 0.018 },
            detector_noise: DetectorNoise::default(),
        }
    }
}

impl DockingScenarioConfig {
    pub fn kinematics(&self) -> Kinematics {
        Kinematics::Mecanum { wheel_radius: self.wheel_radius, arm: self.arm }
    }

    pub fn steps(&self) -> usize {
        (self.duration_s * self.rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.duration_s > 0.0 && self.rate_hz > 0.0) || self.steps() == 0 {
            return Err(Error::InvalidConfig("duration and rate must be positive".into()));
        }
        if self.beacons.len() < 3 {
            return Err(Error::InvalidConfig("docking scenario needs at least 3 beacons".into()));
        }
        if !(self.arena_half_extent > 0.0
            && self.range_noise_std >= 0.0
            && self.bearing_noise_std >= 0.0
            && (0.0..=1.0).contains(&self.homing_fraction)
            && self.homing_gain > 0.0)
        {
            return Err(Error::InvalidConfig("docking scenario parameters out of range".into()));
        }
        if !(self.forward.is_valid() && self.lateral.is_valid() && self.turn_rate.is_valid()) {
            return Err(Error::InvalidConfig("invalid velocity process".into()));
        }
        self.kinematics().validate()?;
        self.odometry_noise.validate()
    }

    /// Noise-free `(range, bearing)` of every beacon, flattened.
    pub fn clean_readings(&self, p: &Se2Pose) -> Vec<f64> {
        let (s, c) = p.theta.sin_cos();
        let mut out = Vec::with_capacity(2 * self.beacons.len());
        for b in &self.beacons {
            let (dx, dy) = (b[0] - p.x, b[1] - p.y);
            let (bx, by) = (c * dx + s * dy, -s * dx + c * dy);
            out.push(bx.hypot(by));
            out.push(by.atan2(bx));
        }
        out
    }

    fn noisy_readings<R: Rng + ?Sized>(&self, p: &Se2Pose, rng: &mut R) -> Vec<f64> {
        let mut x = self.clean_readings(p);
        for pair in x.chunks_mut(2) {
            let zr: f64 = rng.sample(StandardNormal);
            let zb: f64 = rng.sample(StandardNormal);
            pair[0] = (pair[0] + self.range_noise_std * zr).max(0.0);
            pair[1] = wrap_angle(pair[1] + self.bearing_noise_std * zb);
        }
        x
    }

    fn inside(&self, p: &Se2Pose) -> bool {
        p.x.abs() <= self.arena_half_extent && p.y.abs() <= self.arena_half_extent
    }

    /// Body-frame velocity command driving the robot back to the dock.
    fn homing_command(&self, p: &Se2Pose) -> [f64; 3] {
        let k = self.homing_gain;
        let (s, c) = p.theta.sin_cos();
        let (ex, ey) = (-p.x, -p.y);
        let mut vx = k * (c * ex + s * ey);
        let mut vy = k * (-s * ex + c * ey);
        let speed = vx.hypot(vy);
        if speed > self.forward.limit {
            vx *= self.forward.limit / speed;
            vy *= self.forward.limit / speed;
        }
        let w = (-k * 2.0 * p.theta).clamp(-self.turn_rate.limit, self.turn_rate.limit);
        [vx, vy, w]
    }
}

/// Simulates one episode. All randomness derives from `seed`.
pub fn simulate_docking_episode(config: &DockingScenarioConfig, id: &str, seed: u64) -> Result<Episode, Error> {
    config.validate()?;
    let kin = config.kinematics();
    let dt = 1.0 / config.rate_hz;
    let n = config.steps();
    let homing_start = ((1.0 - config.homing_fraction) * n as f64).round() as usize;
    let mut ctl = OuController::new([config.forward, config.lateral, config.turn_rate]);
    let mut ctl_rng = seed::rng(seed, "controller", 0);
    let mut pose = Se2Pose::identity();
    let mut truth = vec![pose];
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let [vx, vy, w] = if i >= homing_start {
            config.homing_command(&pose)
        } else {
            ctl.step(dt, &mut ctl_rng)
        };
        // bounce off the arena boundary by reversing the translation
        let mut chosen = [0.0, 0.0, w];
        for cand in [[vx, vy, w], [-vx, -vy, w]] {
            let wheels = kin.wheel_increments(cand[0] * dt, cand[1] * dt, cand[2] * dt);
            let (dx, dy, dth) = kin.body_increment(&wheels);
            if config.inside(&pose.compose(&Se2Pose::exp(dx, dy, dth))) {
                chosen = cand;
                break;
            }
        }
        if i < homing_start {
            *ctl.state_mut() = chosen;
        }
        let wheels = kin.wheel_increments(chosen[0] * dt, chosen[1] * dt, chosen[2] * dt);
        let (dx, dy, dth) = kin.body_increment(&wheels);
        pose = pose.compose(&Se2Pose::exp(dx, dy, dth));
        steps.push(wheels);
        truth.push(pose);
    }
    let mut sensor_rng = seed::rng(seed, "sensor", 0);
    let readings = truth.iter().map(|p| config.noisy_readings(p, &mut sensor_rng)).collect();
    super::assemble_episode(
        super::EpisodeParts {
            id,
            scenario: ScenarioKind::Docking,
            rate_hz: config.rate_hz,
            seed,
            kinematics: kin,
            odometry_noise: config.odometry_noise,
            detector_noise: config.detector_noise,
            target: Pose::identity(),
        },
        &steps,
        readings,
    )
}
