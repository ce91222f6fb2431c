//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatial_ssl::autodiff::{Activation, MlpSpec, Tape};
use spatial_ssl::data::{parse_episode, write_episode, Episode, EpisodeHeader, Sample, ScenarioKind};
use spatial_ssl::losses::{sc_loss, task_loss, ConsistencyPair, LossConfig, SupervisionPair, QUAT_NORM_EPS};
use spatial_ssl::pose::{Pose, Quaternion};
use spatial_ssl::scalar::Scalar;
use spatial_ssl::sim::{
    simulate_docking_episode, simulate_wall_episode, DetectorNoise, DockingScenarioConfig, Kinematics,
    OdometrySource, WallScenarioConfig, WheelNoiseModel,
};
use spatial_ssl::train::{batch_loss, episode_realizations, sample_batch, PreparedEpisode};
use spatial_ssl::Error;

// ---- pose algebra ----

pub type Mat4 = [[f64; 4]; 4];

/// Rotation matrix of a unit quaternion, written out from the textbook formula.
pub fn quat_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn homogeneous(p: &Pose<f64>) -> Mat4 {
    let r = quat_matrix(p.orientation.to_array());
    let mut m = [[0.0; 4]; 4];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&r[i]);
        m[i][3] = p.position[i];
    }
    m[3][3] = 1.0;
    m
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub fn rigid_inverse(a: &Mat4) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i];
        }
        m[i][3] = -(0..3).map(|k| a[k][i] * a[k][3]).sum::<f64>();
    }
    m[3][3] = 1.0;
    m
}

pub fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Uniformly oriented pose with position in `[-spread, spread]³`.
pub fn random_pose(rng: &mut impl Rng, spread: f64) -> Pose<f64> {
    loop {
        let q = [(); 4].map(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = q.iter().map(|v| v * v).sum();
        if n2 > 1e-2 && n2 <= 1.0 {
            let n = n2.sqrt();
            return Pose::new(
                [(); 3].map(|_| rng.random_range(-spread..spread)),
                Quaternion::from_array(q.map(|v| v / n)),
            );
        }
    }
}

/// Largest entry-wise deviation between the pose operations and the matrix
/// oracle over `ops` random compose, invert and relative operations.
pub fn pose_oracle_max_error(ops: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..ops {
        let a = random_pose(&mut rng, 5.0);
        let b = random_pose(&mut rng, 5.0);
        let (ma, mb) = (homogeneous(&a), homogeneous(&b));
        let (got, want) = match rng.random_range(0..3) {
            0 => (a.compose(&b), matmul(&ma, &mb)),
            1 => (a.invert(), rigid_inverse(&ma)),
            _ => (a.relative(&b), matmul(&rigid_inverse(&ma), &mb)),
        };
        worst = worst.max(max_abs_diff(&homogeneous(&got), &want));
    }
    worst
}

// ---- gradients ----

pub const FD_STEP: f64 = 1e-5;
pub const FD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub enum LossPath {
    TaskPointwise,
    ConsistencyPointwise,
    TaskUncertain,
    ConsistencyUncertain,
}

pub const LOSS_PATHS: [LossPath; 4] =
    [LossPath::TaskPointwise, LossPath::ConsistencyPointwise, LossPath::TaskUncertain, LossPath::ConsistencyUncertain];

struct Problem {
    spec: MlpSpec,
    inputs: Vec<Vec<f64>>,
    supervision: Vec<SupervisionPair>,
    consistency: Vec<ConsistencyPair>,
}

impl Problem {
    fn new(path: LossPath, rng: &mut ChaCha8Rng) -> Self {
        let spec = MlpSpec::new(vec![7, 16, 8, 7], Activation::Tanh).unwrap();
        let inputs: Vec<Vec<f64>> = (0..6).map(|_| (0..7).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let samples = match path {
            LossPath::TaskPointwise | LossPath::ConsistencyPointwise => 1,
            LossPath::TaskUncertain | LossPath::ConsistencyUncertain => 5,
        };
        let mut supervision = Vec::new();
        let mut consistency = Vec::new();
        for i in 0..4 {
            let relative: Vec<_> = (0..samples).map(|_| random_pose(rng, 1.0)).collect();
            match path {
                LossPath::TaskPointwise | LossPath::TaskUncertain => {
                    let detections = (0..samples).map(|_| random_pose(rng, 0.5)).collect();
                    supervision.push(SupervisionPair::new(0, i, i + 1, relative, detections));
                }
                LossPath::ConsistencyPointwise | LossPath::ConsistencyUncertain => {
                    consistency.push(ConsistencyPair { episode: 0, t: i, u: i + 2, relative });
                }
            }
        }
        Self { spec, inputs, supervision, consistency }
    }

    fn loss<S: Scalar>(&self, theta: &[S], lambda_o: f64) -> S {
        let like = theta[0];
        let predict = |t: usize| {
            let x: Vec<S> = self.inputs[t].iter().map(|v| like.lift(*v)).collect();
            Pose::from_output(&self.spec.forward(theta, &x).unwrap(), QUAT_NORM_EPS)
        };
        if self.consistency.is_empty() {
            let preds: Vec<_> = self.supervision.iter().map(|p| predict(p.u)).collect();
            task_loss(&self.supervision, &preds, lambda_o).unwrap()
        } else {
            let pt: Vec<_> = self.consistency.iter().map(|p| predict(p.t)).collect();
            let pu: Vec<_> = self.consistency.iter().map(|p| predict(p.u)).collect();
            sc_loss(&self.consistency, &pt, &pu, lambda_o).unwrap()
        }
    }
}

/// Worst relative deviation between the tape gradient and central finite
/// differences over every network parameter.
pub fn gradient_check_worst(path: LossPath, seed: u64, lambda_o: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = Problem::new(path, &mut rng);
    let params = problem.spec.init(&mut rng).into_values();

    let tape = Tape::new();
    let theta = tape.vars(&params);
    let loss = problem.loss(&theta, lambda_o);
    assert_eq!(loss.value(), problem.loss(&params, lambda_o), "tape and plain forward differ");
    let grad = tape.gradient(loss, &theta);

    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for i in 0..params.len() {
        probe[i] = params[i] + FD_STEP;
        let up = problem.loss(&probe, lambda_o);
        probe[i] = params[i] - FD_STEP;
        let down = problem.loss(&probe, lambda_o);
        probe[i] = params[i];
        let fd = (up - down) / (2.0 * FD_STEP);
        worst = worst.max((grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(FD_FLOOR));
    }
    worst
}

// ---- simulated data ----

pub fn short_wall(seed: u64, duration_s: f64) -> Episode {
    let config = WallScenarioConfig { duration_s, ..Default::default() };
    simulate_wall_episode(&config, &format!("wall-{seed:02}"), seed).unwrap()
}

pub fn short_docking(seed: u64, duration_s: f64) -> Episode {
    let config = DockingScenarioConfig { duration_s, ..Default::default() };
    simulate_docking_episode(&config, &format!("docking-{seed:02}"), seed).unwrap()
}

fn prepare(episode: &Episode, n_mc: usize) -> PreparedEpisode<'_> {
    PreparedEpisode {
        index: 0,
        episode,
        realizations: episode_realizations(episode, n_mc, 11).unwrap(),
        detector_steps: episode.detector_steps(),
        inputs: episode.samples.iter().map(|s| s.x.clone()).collect(),
    }
}

/// Largest gap between uncertain and pointwise batch losses once odometry
/// noise is removed from `episode`, over a few batches.
pub fn mc_degeneracy_gap(episode: &Episode, n_mc: usize) -> f64 {
    let mut quiet = episode.clone();
    quiet.header.odometry_noise = WheelNoiseModel::NONE;
    assert!(quiet.header.detector_noise.is_noiseless());
    let spec = MlpSpec::new(vec![quiet.input_dim(), 16, 8, 7], Activation::Tanh).unwrap();
    let theta = spec.init(&mut ChaCha8Rng::seed_from_u64(5)).into_values();
    let pointwise = LossConfig { mode: OdometrySource::Pointwise, n_mc, lambda_o: 10.0, ..Default::default() };
    let uncertain = LossConfig { mode: OdometrySource::Uncertain, ..pointwise };
    let prep_p = [prepare(&quiet, 1)];
    let prep_u = [prepare(&quiet, n_mc)];
    let mut gap = 0.0f64;
    for draw in 0..5 {
        let bp = sample_batch(&prep_p, &pointwise, &mut ChaCha8Rng::seed_from_u64(draw));
        let bu = sample_batch(&prep_u, &uncertain, &mut ChaCha8Rng::seed_from_u64(draw));
        let lp = batch_loss(&spec, &theta, &prep_p, &bp, &pointwise).unwrap().unwrap();
        let lu = batch_loss(&spec, &theta, &prep_u, &bu, &uncertain).unwrap().unwrap();
        gap = gap.max((lp - lu).abs());
    }
    gap
}

/// Largest deviation between exact-odometry labels `p̃(u, s) ⊕ d(s)` and
/// ground truth, over every sample `u` paired with two detector steps.
pub fn label_error(episode: &Episode) -> f64 {
    let real = episode_realizations(episode, 1, 0).unwrap();
    let steps = episode.detector_steps();
    assert!(!steps.is_empty(), "{} has no detections", episode.id());
    let mut worst = 0.0f64;
    for u in 0..episode.len() {
        let truth = episode.target_in_robot(u).to_array();
        for s in [steps[0], steps[u % steps.len()]] {
            let d = episode.samples[s].d.unwrap();
            let mut label = real.relative(OdometrySource::Exact, 0, u, s).compose(&d);
            if label.orientation.dot(episode.target_in_robot(u).orientation) < 0.0 {
                let q = label.orientation;
                label.orientation = Quaternion::new(-q.w, -q.x, -q.y, -q.z);
            }
            let err = label.to_array().iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    worst
}

// ---- Wilcoxon ----

/// Midranks of `|d|`, computed by counting.
fn midranks(abs: &[f64]) -> Vec<f64> {
    abs.iter()
        .map(|x| {
            let below = abs.iter().filter(|y| *y < x).count() as f64;
            let equal = abs.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Null distribution of twice the positive rank sum, by dynamic programming
/// over the ranks (generating-function product).
fn tabulate(doubled: &[usize]) -> Vec<f64> {
    let total: usize = doubled.iter().sum();
    let mut ways = vec![0.0f64; total + 1];
    ways[0] = 1.0;
    for &r in doubled {
        for w in (r..=total).rev() {
            ways[w] += ways[w - r];
        }
    }
    ways
}

/// Exact `(less, greater, two-sided)` p-values, or `None` when every
/// difference is zero.
pub fn wilcoxon_oracle(a: &[f64], b: &[f64]) -> Option<(f64, f64, f64)> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return None;
    }
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let w: usize = d.iter().zip(&doubled).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let ways = tabulate(&doubled);
    let total = 2f64.powi(d.len() as i32);
    let less = ways[..=w].iter().sum::<f64>() / total;
    let greater = ways[w..].iter().sum::<f64>() / total;
    Some((less, greater, (2.0 * less.min(greater)).min(1.0)))
}

/// Paired sample of size 1..=12, on a coarse grid half of the time so that
/// ties and zero differences occur.
pub fn wilcoxon_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(1..=12);
    let grid = rng.random_bool(0.5);
    let draw = |rng: &mut ChaCha8Rng| {
        let v: f64 = rng.random_range(-3.0..3.0);
        if grid { (v * 2.0).round() / 2.0 } else { v }
    };
    let a: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    let b: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    (a, b)
}

/// Paired sample of size 20 with a random shift.
pub fn wilcoxon_case_20(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let shift = rng.random_range(-1.0..1.0);
    let a: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..2.0)).collect();
    let b: Vec<f64> = a.iter().map(|x| x + shift + rng.random_range(-1.5..1.5)).collect();
    (a, b)
}

// ---- persistence ----

pub fn episode_text(e: &Episode) -> String {
    let mut v = Vec::new();
    write_episode(e, &mut v).unwrap();
    String::from_utf8(v).unwrap()
}

fn awkward(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..6) {
        0 => -0.0,
        1 => f64::MIN_POSITIVE * rng.random_range(1.0..4.0),
        2 => rng.random_range(-1e300..1e300),
        3 => 0.1 + 0.2,
        _ => rng.random_range(-5.0..5.0),
    }
}

/// A valid episode with random header, gaps in `t`, extreme readings and
/// detections consistent with its target.
pub fn random_episode(i: usize, rng: &mut ChaCha8Rng) -> Episode {
    let rate_hz = [10.0, 15.0, 7.3][i % 3];
    let target = random_pose(rng, 20.0);
    let x_dim = rng.random_range(0..12);
    let mut t = 0;
    let samples = (0..rng.random_range(1..60))
        .map(|_| {
            let p_true = random_pose(rng, 20.0);
            let s = Sample {
                t,
                time: t as f64 / rate_hz,
                x: (0..x_dim).map(|_| awkward(rng)).collect(),
                p_true,
                p_odom: random_pose(rng, 20.0),
                d: rng.random_bool(0.3).then(|| p_true.relative(&target)),
            };
            t += rng.random_range(1..4);
            s
        })
        .collect();
    let kinematics = if rng.random_bool(0.5) {
        Kinematics::DifferentialDrive { wheel_radius: rng.random_range(0.01..0.1), half_track: rng.random_range(0.02..0.3) }
    } else {
        Kinematics::Mecanum { wheel_radius: rng.random_range(0.01..0.1), arm: rng.random_range(0.05..0.5) }
    };
    Episode {
        header: EpisodeHeader {
            id: format!("random-{i:03}"),
            scenario: if i % 2 == 0 { ScenarioKind::Wall } else { ScenarioKind::Docking },
            rate_hz,
            seed: rng.random(),
            kinematics,
            odometry_noise: WheelNoiseModel { encoder_std: rng.random_range(0.0..0.3), slip_std: rng.random_range(0.0..0.1) },
            detector_noise: DetectorNoise::default(),
            target,
            config_hash: rng.random_bool(0.5).then(|| format!("{:016x}", rng.random::<u64>())),
        },
        samples,
    }
}

/// Every floating point field as raw bits, so that `-0.0` and `0.0` differ.
pub fn episode_bits(e: &Episode) -> Vec<u64> {
    let mut v = vec![e.header.rate_hz.to_bits(), e.header.seed];
    v.extend(e.header.target.to_array().map(f64::to_bits));
    for s in &e.samples {
        v.push(s.t as u64);
        v.push(s.time.to_bits());
        v.extend(s.x.iter().map(|x| x.to_bits()));
        v.extend(s.p_true.to_array().map(f64::to_bits));
        v.extend(s.p_odom.to_array().map(f64::to_bits));
        if let Some(d) = s.d {
            v.extend(d.to_array().map(f64::to_bits));
        }
    }
    v
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// Expected rejection of a corrupted file.
#[derive(Debug, Clone, Copy)]
pub enum Rejection {
    Parse,
    Validation(&'static str),
}

/// Replaces field `col` of file line `line` (1-based).
fn edit_field(text: &str, line: usize, col: usize, f: impl Fn(&str) -> String) -> String {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| {
            if i + 1 != line {
                return l.to_string();
            }
            let mut cols: Vec<String> = l.split('\t').map(str::to_string).collect();
            cols[col] = f(&cols[col]);
            cols.join("\t")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Corrupted variants of a valid wall episode file with identity target.
pub fn corruptions(good: &str) -> Vec<(&'static str, String, Rejection)> {
    let moved = {
        let start = good.find("target=").unwrap() + "target=".len();
        let end = start + good[start..].find(',').unwrap();
        format!("{}0.25{}", &good[..start], &good[end..])
    };
    vec![
        ("truncated", good[..good.len() * 2 / 3].to_string(), Rejection::Parse),
        ("missing end", good.trim_end().strip_suffix("end").unwrap().to_string(), Rejection::Parse),
        ("wrong x_dim", good.replacen("x_dim=7", "x_dim=6", 1), Rejection::Parse),
        ("unsupported version", good.replacen("v=1", "v=9", 1), Rejection::Parse),
        ("unknown header field", good.replacen("episode v=1", "episode v=1 colour=red", 1), Rejection::Parse),
        ("non-finite reading", edit_field(good, 3, 2, |x| format!("NaN{}", &x[x.find(',').unwrap()..])), Rejection::Parse),
        ("short pose", edit_field(good, 4, 3, |p| p.rsplit_once(',').unwrap().0.to_string()), Rejection::Parse),
        ("trailing content", format!("{good}junk\n"), Rejection::Parse),
        (
            "bad quaternion",
            edit_field(good, 5, 4, |p| {
                let mut v: Vec<&str> = p.split(',').collect();
                v[3] = "0.5";
                v.join(",")
            }),
            Rejection::Validation("unit quaternion"),
        ),
        ("non-monotonic t", edit_field(good, 6, 0, |_| "3".into()), Rejection::Validation("strictly increasing timesteps")),
        ("time mismatch", edit_field(good, 6, 1, |_| "99.0".into()), Rejection::Validation("time = t / rate")),
        ("moved target", moved, Rejection::Validation("static target")),
    ]
}

/// Whether parsing `text` fails with the expected error kind.
pub fn rejected_as(text: &str, expected: Rejection) -> Result<(), String> {
    match (parse_episode(text), expected) {
        (Err(Error::Parse { .. }), Rejection::Parse) => Ok(()),
        (Err(Error::Validation { invariant, .. }), Rejection::Validation(want)) if invariant == want => Ok(()),
        (Ok(_), _) => Err("accepted".into()),
        (Err(e), _) => Err(format!("wrong error: {e}")),
    }
}
