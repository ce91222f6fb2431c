//! Differential-drive robot with infrared proximity sensors near a wall.
//!
//! F_0 is the robot frame at `t = 0`, when the robot's rear side touches the
//! wall and the robot faces away from it. The wall is the plane
//! `x = wall_x` of F_0, with `wall_x` the x coordinate of the robot's rear
//! face. The object frame coincides with F_0, so `d(0)` is the identity and
//! the target `y(t) = ⊖p(t)` carries the robot heading relative to the wall.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::controller::{OuChannel, OuController};
use super::{DetectorNoise, Kinematics, WheelNoiseModel};
use crate::data::{Episode, ScenarioKind};
use crate::error::Error;
use crate::pose::{Pose, Se2Pose};
use crate::seed;

/// Infrared proximity response:
/// `ambient + gain · cos(incidence)^falloff / (1 + distance / distance_scale)²`
/// within `max_range`, `ambient` beyond it, plus read noise, clipped to
/// `[0, saturation]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrSensorModel {
    pub gain: f64,
    pub distance_scale: f64,
    pub falloff: f64,
    pub max_range: f64,
    pub ambient: f64,
    pub saturation: f64,
    pub noise_std: f64,
}

impl Default for IrSensorModel {
    fn default() -> Self {
        Self {
            gain: 1.0,
            distance_scale: 0.05,
            falloff: 1.0,
            max_range: 0.25,
            ambient: 0.0,
            saturation: 1.0,
            noise_std: 0.01,
        }
    }
}

impl IrSensorModel {
    fn validate(&self) -> Result<(), Error> {
        let ok = self.gain >= 0.0
            && self.distance_scale > 0.0
            && self.falloff >= 0.0
            && self.max_range > 0.0
            && self.ambient >= 0.0
            && self.saturation > 0.0
            && self.noise_std >= 0.0;
        if !ok {
            return Err(Error::InvalidConfig("infrared sensor model parameters out of range".into()));
        }
        Ok(())
    }

    /// A noisy reading; `None` means the ray does not hit the wall.
    pub fn read<R: Rng + ?Sized>(&self, hit: Option<(f64, f64)>, rng: &mut R) -> f64 {
        let clean = match hit {
            Some((distance, incidence)) => ir_response(distance, incidence, self),
            None => self.ambient,
        };
        let z: f64 = rng.sample(StandardNormal);
        (clean + self.noise_std * z).clamp(0.0, self.saturation)
    }
}

/// Noise-free reading for a wall at `distance` (m) along the ray, hit at
/// `incidence` (rad) from the wall normal.
pub fn ir_response(distance: f64, incidence: f64, model: &IrSensorModel) -> f64 {
    if !(distance <= model.max_range) || incidence.abs() >= std::f64::consts::FRAC_PI_2 {
        return model.ambient.min(model.saturation);
    }
    let c = incidence.cos();
    let r = 1.0 + distance / model.distance_scale;
    (model.ambient + model.gain * c.powf(model.falloff) / (r * r)).clamp(0.0, model.saturation)
}

/// Mount pose of one sensor in the robot frame; `angle` is the ray direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMount {
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallScenarioConfig {
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Five front sensors (left to right) then two rear sensors.
    pub sensors: Vec<SensorMount>,
    pub ir: IrSensorModel,
    /// Outline of the robot body in the robot frame, used for the wall test.
    pub body: Vec<[f64; 2]>,
    /// Largest allowed distance of the robot origin from the wall (m).
    pub max_wall_distance: f64,
    pub wheel_radius: f64,
    pub half_track: f64,
    pub speed: OuChannel,
    pub turn_rate: OuChannel,
    pub odometry_noise: WheelNoiseModel,
    pub detector_noise: DetectorNoise,
}

const REAR: f64 = -0.03;

impl Default for WallScenarioConfig {
    fn default() -> Self {
        let front = [40.0f64, 20.0, 0.0, -20.0, -40.0].map(|deg| {
            let a = deg.to_radians();
            SensorMount { x: 0.08 * a.cos(), y: 0.08 * a.sin(), angle: a }
        });
        let splay = 15f64.to_radians();
        let rear = [
            SensorMount { x: REAR, y: 0.03, angle: std::f64::consts::PI - splay },
            SensorMount { x: REAR, y: -0.03, angle: -std::f64::consts::PI + splay },
        ];
        let mut body: Vec<[f64; 2]> = (-6..=6)
            .map(|i| {
                let a = (i as f64 * 10.0).to_radians();
                [0.08 * a.cos(), 0.08 * a.sin()]
            })
            .collect();
        body.extend([[0.0, 0.075], [REAR, 0.055], [REAR, -0.055], [0.0, -0.075]]);
        Self {
            duration_s: 34.0,
            rate_hz: 10.0,
            sensors: front.into_iter().chain(rear).collect(),
            ir: IrSensorModel::default(),
            body,
            max_wall_distance: 0.10,
            wheel_radius: 0.022,
            half_track: 0.0475,
            speed: OuChannel { mean: 0.0, std: 0.06, tau: 1.5, limit: 0.12 },
            turn_rate: OuChannel { mean: 0.0, std: 0.9, tau: 1.0, limit: 2.0 },
            odometry_noise: WheelNoiseModel { encoder_std: 0.15, slip_std: 0.08 },
            detector_noise: DetectorNoise::default(),
        }
    }
}

impl WallScenarioConfig {
    pub fn kinematics(&self) -> Kinematics {
        Kinematics::DifferentialDrive { wheel_radius: self.wheel_radius, half_track: self.half_track }
    }

    /// x coordinate of the wall plane in F_0: the rearmost body point.
    pub fn wall_x(&self) -> f64 {
        self.body.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn steps(&self) -> usize {
        (self.duration_s * self.rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.duration_s > 0.0 && self.rate_hz > 0.0) || self.steps() == 0 {
            return Err(Error::InvalidConfig("duration and rate must be positive".into()));
        }
        if self.sensors.is_empty() || self.body.is_empty() {
            return Err(Error::InvalidConfig("wall scenario needs sensors and a body outline".into()));
        }
        if !(self.max_wall_distance > -self.wall_x()) {
            return Err(Error::InvalidConfig("max_wall_distance leaves no room to move".into()));
        }
        if !(self.speed.is_valid() && self.turn_rate.is_valid()) {
            return Err(Error::InvalidConfig("invalid velocity process".into()));
        }
        self.ir.validate()?;
        self.kinematics().validate()?;
        self.odometry_noise.validate()
    }

    fn admissible(&self, p: &Se2Pose) -> bool {
        let wall = self.wall_x();
        let (s, c) = p.theta.sin_cos();
        p.x - wall <= self.max_wall_distance + 1e-12
            && self.body.iter().all(|b| p.x + c * b[0] - s * b[1] >= wall - 1e-12)
    }

    /// Ray hit `(distance, incidence)` of every sensor at robot pose `p`.
    pub fn sensor_hits(&self, p: &Se2Pose) -> Vec<Option<(f64, f64)>> {
        let wall = self.wall_x();
        let (s, c) = p.theta.sin_cos();
        self.sensors
            .iter()
            .map(|m| {
                let mx = p.x + c * m.x - s * m.y;
                let dir = (p.theta + m.angle).cos();
                // the wall normal points along +x, so the ray must travel along -x
                if dir >= 0.0 || mx < wall {
                    return None;
                }
                let distance = (mx - wall) / -dir;
                Some((distance, (-dir).acos()))
            })
            .collect()
    }

    /// Noise-free readings at robot pose `p`.
    pub fn clean_readings(&self, p: &Se2Pose) -> Vec<f64> {
        self.sensor_hits(p)
            .into_iter()
            .map(|h| match h {
                Some((d, i)) => ir_response(d, i, &self.ir),
                None => self.ir.ambient.min(self.ir.saturation),
            })
            .collect()
    }
}

/// Simulates one episode. All randomness derives from `seed`.
pub fn simulate_wall_episode(config: &WallScenarioConfig, id: &str, seed: u64) -> Result<Episode, Error> {
    config.validate()?;
    let kin = config.kinematics();
    let dt = 1.0 / config.rate_hz;
    let mut ctl = OuController::new([config.speed, config.turn_rate]);
    let mut ctl_rng = seed::rng(seed, "controller", 0);
    let mut pose = Se2Pose::identity();
    let mut truth = vec![pose];
    let mut steps = Vec::with_capacity(config.steps());
    for _ in 0..config.steps() {
        let [v, w] = ctl.step(dt, &mut ctl_rng);
        // reflect off the band boundaries, falling back to standing still
        let candidates = [(v, w), (-v, w), (-v, -w), (0.0, -w), (0.0, 0.0)];
        let mut chosen = (0.0, 0.0);
        let mut next = pose;
        for (cv, cw) in candidates {
            let wheels = kin.wheel_increments(cv * dt, 0.0, cw * dt);
            let (dx, dy, dth) = kin.body_increment(&wheels);
            let cand = pose.compose(&Se2Pose::exp(dx, dy, dth));
            if config.admissible(&cand) {
                chosen = (cv, cw);
                next = cand;
                break;
            }
        }
        *ctl.state_mut() = [chosen.0, chosen.1];
        steps.push(kin.wheel_increments(chosen.0 * dt, 0.0, chosen.1 * dt));
        pose = next;
        truth.push(pose);
    }
    let mut sensor_rng = seed::rng(seed, "sensor", 0);
    let readings = truth
        .iter()
        .map(|p| config.sensor_hits(p).into_iter().map(|h| config.ir.read(h, &mut sensor_rng)).collect())
        .collect();
    super::assemble_episode(
        super::EpisodeParts {
            id,
            scenario: ScenarioKind::Wall,
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
