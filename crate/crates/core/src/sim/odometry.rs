//! Wheel odometry: kinematics, encoder noise, dead reckoning and Monte Carlo
//! re-integration.
//!
//! A motion is logged as per-step wheel rotations. Ground truth, measured
//! odometry and every Monte Carlo realization are produced by the same
//! integrator, so a noise-free run reproduces the input trajectory exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pose::{Pose, Se2Pose};
use crate::seed;

/// Wheel rotations (rad) for one integration step. Unused entries are zero.
pub type WheelStep = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kinematics {
    /// Two wheels on a common axle; `half_track` is half the wheel separation.
    DifferentialDrive { wheel_radius: f64, half_track: f64 },
    /// Four mecanum wheels; `arm` is the sum of half wheelbase and half track.
    Mecanum { wheel_radius: f64, arm: f64 },
}

impl Kinematics {
    pub fn wheel_count(&self) -> usize {
        match self {
            Kinematics::DifferentialDrive { .. } => 2,
            Kinematics::Mecanum { .. } => 4,
        }
    }

    /// Body-frame displacement `(dx, dy, dθ)` produced by wheel rotations.
    pub fn body_increment(&self, w: &WheelStep) -> (f64, f64, f64) {
        match *self {
            Kinematics::DifferentialDrive { wheel_radius: r, half_track: b } => {
                // wheel 0 = left, wheel 1 = right
                let ds = r * (w[1] + w[0]) / 2.0;
                let dth = r * (w[1] - w[0]) / (2.0 * b);
                (ds, 0.0, dth)
            }
            Kinematics::Mecanum { wheel_radius: r, arm: k } => {
                let dx = r / 4.0 * (w[0] + w[1] + w[2] + w[3]);
                let dy = r / 4.0 * (-w[0] + w[1] + w[2] - w[3]);
                let dth = r / (4.0 * k) * (-w[0] + w[1] - w[2] + w[3]);
                (dx, dy, dth)
            }
        }
    }

    /// Wheel rotations producing the body displacement. Lateral motion is
    /// dropped for a differential drive.
    pub fn wheel_increments(&self, dx: f64, dy: f64, dth: f64) -> WheelStep {
        match *self {
            Kinematics::DifferentialDrive { wheel_radius: r, half_track: b } => {
                let _ = dy;
                [(dx - b * dth) / r, (dx + b * dth) / r, 0.0, 0.0]
            }
            Kinematics::Mecanum { wheel_radius: r, arm: k } => [
                (dx - dy - k * dth) / r,
                (dx + dy + k * dth) / r,
                (dx + dy - k * dth) / r,
                (dx - dy + k * dth) / r,
            ],
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let (r, other) = match *self {
            Kinematics::DifferentialDrive { wheel_radius, half_track } => (wheel_radius, half_track),
            Kinematics::Mecanum { wheel_radius, arm } => (wheel_radius, arm),
        };
        if !(r > 0.0 && other > 0.0 && r.is_finite() && other.is_finite()) {
            return Err(Error::InvalidConfig("kinematic dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Encoder noise: every wheel reading is scaled by a per-trajectory factor
/// `1 + slip` with `slip ~ N(0, slip_std²)`, then perturbed by white noise
/// `N(0, encoder_std²)` (rad) at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelNoiseModel {
    pub encoder_std: f64,
    pub slip_std: f64,
}

impl WheelNoiseModel {
    pub const NONE: WheelNoiseModel = WheelNoiseModel { encoder_std: 0.0, slip_std: 0.0 };

    pub fn is_noiseless(&self) -> bool {
        self.encoder_std == 0.0 && self.slip_std == 0.0
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.encoder_std >= 0.0 && self.slip_std >= 0.0)
            || !self.encoder_std.is_finite()
            || !self.slip_std.is_finite()
        {
            return Err(Error::InvalidConfig("noise standard deviations must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    /// Noisy readings of `steps`.
    pub fn corrupt<R: Rng + ?Sized>(&self, kin: &Kinematics, steps: &[WheelStep], rng: &mut R) -> Vec<WheelStep> {
        let n = kin.wheel_count();
        let mut slip = [0.0; 4];
        for s in slip.iter_mut().take(n) {
            let z: f64 = rng.sample(StandardNormal);
            *s = self.slip_std * z;
        }
        steps
            .iter()
            .map(|w| {
                let mut out = [0.0; 4];
                for i in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    out[i] = w[i] * (1.0 + slip[i]) + self.encoder_std * z;
                }
                out
            })
            .collect()
    }
}

/// Wheel rotations of one episode, one entry per step between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionLog {
    pub kinematics: Kinematics,
    pub steps: Vec<WheelStep>,
}

impl MotionLog {
    /// Recovers per-step wheel rotations from a planar trajectory.
    pub fn from_trajectory(kinematics: Kinematics, poses: &[Se2Pose]) -> Self {
        let steps = poses
            .windows(2)
            .map(|w| {
                let (dx, dy, dth) = w[0].relative(&w[1]).log();
                kinematics.wheel_increments(dx, dy, dth)
            })
            .collect();
        Self { kinematics, steps }
    }
}

/// Dead reckoning from the origin: returns `steps.len() + 1` poses.
pub fn integrate(kin: &Kinematics, steps: &[WheelStep]) -> Vec<Se2Pose> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let mut p = Se2Pose::identity();
    out.push(p);
    for w in steps {
        let (dx, dy, dth) = kin.body_increment(w);
        p = p.compose(&Se2Pose::exp(dx, dy, dth));
        out.push(p);
    }
    out
}

/// Integrates noise-corrupted readings of `log`.
pub fn integrate_odometry<R: Rng + ?Sized>(log: &MotionLog, noise: &WheelNoiseModel, rng: &mut R) -> Vec<Se2Pose> {
    let readings = noise.corrupt(&log.kinematics, &log.steps, rng);
    integrate(&log.kinematics, &readings)
}

/// Where relative poses are read from when building training labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdometrySource {
    /// Ground-truth poses.
    Exact,
    /// The measured odometry, taken at face value.
    Pointwise,
    /// Monte Carlo re-integrations of the measured readings.
    Uncertain,
}

impl OdometrySource {
    pub fn name(self) -> &'static str {
        match self {
            OdometrySource::Exact => "exact",
            OdometrySource::Pointwise => "pointwise",
            OdometrySource::Uncertain => "uncertain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Self::Exact),
            "pointwise" => Some(Self::Pointwise),
            "uncertain" => Some(Self::Uncertain),
            _ => None,
        }
    }
}

/// Exact, measured and Monte Carlo trajectories of one episode, all in F_0.
#[derive(Debug, Clone)]
pub struct OdometryRealizations {
    exact: Vec<Pose<f64>>,
    measured: Vec<Se2Pose>,
    draws: Vec<Vec<Se2Pose>>,
}

/// Re-integrates the measured readings `n_mc` times with fresh noise.
///
/// `measured` is the noise-free re-integration of the same readings; it
/// coincides with every draw when `noise` is zero.
pub fn sample_realizations(
    measured_log: &MotionLog,
    exact: Vec<Pose<f64>>,
    noise: &WheelNoiseModel,
    n_mc: usize,
    seed: u64,
) -> Result<OdometryRealizations, Error> {
    if n_mc == 0 {
        return Err(Error::InvalidConfig("n_mc must be at least 1".into()));
    }
    if exact.len() != measured_log.steps.len() + 1 {
        return Err(Error::DimensionMismatch {
            what: "exact trajectory",
            expected: measured_log.steps.len() + 1,
            got: exact.len(),
        });
    }
    let kin = &measured_log.kinematics;
    let measured = integrate(kin, &measured_log.steps);
    let draws = (0..n_mc)
        .map(|k| {
            let mut rng = seed::rng(seed, "realization", k as u64);
            integrate_odometry(measured_log, noise, &mut rng)
        })
        .collect();
    Ok(OdometryRealizations { exact, measured, draws })
}

impl OdometryRealizations {
    pub fn n_mc(&self) -> usize {
        self.draws.len()
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn exact(&self) -> &[Pose<f64>] {
        &self.exact
    }

    pub fn measured(&self) -> &[Se2Pose] {
        &self.measured
    }

    pub fn draw(&self, k: usize) -> &[Se2Pose] {
        &self.draws[k]
    }

    /// Pose at `u` relative to the pose at `t`, i.e. `⊖p(t) ⊕ p(u)`, for
    /// draw `k` (ignored unless `source` is `Uncertain`).
    pub fn relative(&self, source: OdometrySource, k: usize, t: usize, u: usize) -> Pose<f64> {
        match source {
            OdometrySource::Exact => self.exact[t].relative(&self.exact[u]),
            OdometrySource::Pointwise => self.measured[t].relative(&self.measured[u]).lift(),
            OdometrySource::Uncertain => self.draws[k][t].relative(&self.draws[k][u]).lift(),
        }
    }

    /// Mean pairwise planar distance between draws at timestep `t`.
    pub fn spread(&self, t: usize) -> f64 {
        let n = self.draws.len();
        if n < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.draws[i][t], self.draws[j][t]);
                acc += ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            }
        }
        acc / (n * (n - 1) / 2) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diff() -> Kinematics {
        Kinematics::DifferentialDrive { wheel_radius: 0.022, half_track: 0.0475 }
    }

    fn mecanum() -> Kinematics {
        Kinematics::Mecanum { wheel_radius: 0.05, arm: 0.2 }
    }

    fn wiggly_log(kin: Kinematics, n: usize) -> MotionLog {
        let steps = (0..n)
            .map(|i| {
                let t = i as f64 * 0.1;
                kin.wheel_increments(0.01 * (1.0 + t.sin()), 0.004 * t.cos(), 0.05 * (0.7 * t).sin())
            })
            .collect();
        MotionLog { kinematics: kin, steps }
    }

    #[test]
    fn kinematics_roundtrip() {
        for kin in [diff(), mecanum()] {
            let w = kin.wheel_increments(0.03, if kin.wheel_count() == 4 { -0.01 } else { 0.0 }, 0.2);
            let (dx, dy, dth) = kin.body_increment(&w);
            assert!((dx - 0.03).abs() < 1e-15);
            assert!((dth - 0.2).abs() < 1e-15);
            if kin.wheel_count() == 4 {
                assert!((dy + 0.01).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_noise_reproduces_ground_truth() {
        for kin in [diff(), mecanum()] {
            let log = wiggly_log(kin, 300);
            let truth = integrate(&kin, &log.steps);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let odo = integrate_odometry(&log, &WheelNoiseModel::NONE, &mut rng);
            assert_eq!(truth, odo);
        }
    }

    #[test]
    fn zero_motion_stays_put() {
        let log = MotionLog { kinematics: diff(), steps: vec![[0.0; 4]; 50] };
        let poses = integrate_odometry(&log, &WheelNoiseModel::NONE, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(poses.iter().all(|p| *p == Se2Pose::identity()));
    }

    #[test]
    fn log_recovery_from_trajectory() {
        for kin in [diff(), mecanum()] {
            let log = wiggly_log(kin, 200);
            let truth = integrate(&kin, &log.steps);
            let back = MotionLog::from_trajectory(kin, &truth);
            let again = integrate(&kin, &back.steps);
            for (a, b) in truth.iter().zip(&again) {
                assert!((a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_realizations_equal_measured() {
        let log = wiggly_log(mecanum(), 100);
        let exact: Vec<Pose<f64>> = integrate(&log.kinematics, &log.steps).iter().map(|p| p.lift()).collect();
        let r = sample_realizations(&log, exact, &WheelNoiseModel::NONE, 5, 3).unwrap();
        for k in 0..5 {
            assert_eq!(r.draw(k), r.measured());
        }
        assert_eq!(
            r.relative(OdometrySource::Uncertain, 2, 10, 70),
            r.relative(OdometrySource::Pointwise, 0, 10, 70)
        );
    }

    #[test]
    fn realizations_share_origin_and_fan_out() {
        let log = wiggly_log(diff(), 400);
        let exact: Vec<Pose<f64>> = integrate(&log.kinematics, &log.steps).iter().map(|p| p.lift()).collect();
        let noise = WheelNoiseModel { encoder_std: 0.02, slip_std: 0.02 };
        let r = sample_realizations(&log, exact, &noise, 20, 11).unwrap();
        for k in 0..20 {
            assert_eq!(r.draw(k)[0], Se2Pose::identity());
        }
        assert_eq!(r.spread(0), 0.0);
        assert!(r.spread(400) > r.spread(40));
        assert!(sample_realizations(&log, vec![], &noise, 1, 0).is_err());
    }
}
