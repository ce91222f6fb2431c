//! Line-oriented episode files.
//!
//! ```text
//! episode v=1 id=<id> scenario=<wall|docking> rate=<hz> seed=<u64>
//!         kinematics=<differential_drive|mecanum>:<radius>:<half_track|arm>
//!         encoder_std=<f> slip_std=<f> detector_position_std=<f> detector_angle_std=<f>
//!         target=<pose> x_dim=<n> samples=<n> [config=<hex>]
//! <t> TAB <time> TAB <x,...> TAB <p_true> TAB <p_odom> TAB <d|->     (one line per sample)
//! end
//! ```
//!
//! The header is a single line (wrapped above). Poses are
//! `x,y,z,qw,qx,qy,qz`, written as stored. Floats use the shortest decimal that
//! round-trips, so saving a loaded file reproduces it byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Episode, EpisodeHeader, Sample, ScenarioKind};
use crate::error::Error;
use crate::pose::Pose;
use crate::sim::{DetectorNoise, Kinematics, WheelNoiseModel};

pub const EPISODE_FORMAT_VERSION: u32 = 1;

fn push_floats(out: &mut String, xs: &[f64]) {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{x:?}");
    }
}

fn push_pose(out: &mut String, p: &Pose<f64>) {
    push_floats(out, &p.to_array());
}

fn kinematics_field(k: &Kinematics) -> String {
    match *k {
        Kinematics::DifferentialDrive { wheel_radius, half_track } => {
            format!("differential_drive:{wheel_radius:?}:{half_track:?}")
        }
        Kinematics::Mecanum { wheel_radius, arm } => format!("mecanum:{wheel_radius:?}:{arm:?}"),
    }
}

/// Writes `e` in the episode file format.
pub fn write_episode<W: Write>(e: &Episode, w: &mut W) -> Result<(), Error> {
    let h = &e.header;
    if h.id.is_empty() || h.id.chars().any(|c| c.is_whitespace() || c == '=') {
        return Err(Error::InvalidConfig(format!("episode id {:?} must be non-empty without spaces or '='", h.id)));
    }
    let mut line = String::new();
    let _ = write!(
        line,
        "episode v={EPISODE_FORMAT_VERSION} id={} scenario={} rate={:?} seed={} kinematics={} encoder_std={:?} slip_std={:?} detector_position_std={:?} detector_angle_std={:?} target=",
        h.id,
        h.scenario.name(),
        h.rate_hz,
        h.seed,
        kinematics_field(&h.kinematics),
        h.odometry_noise.encoder_std,
        h.odometry_noise.slip_std,
        h.detector_noise.position_std,
        h.detector_noise.angle_std,
    );
    push_pose(&mut line, &h.target);
    let _ = write!(line, " x_dim={} samples={}", e.input_dim(), e.samples.len());
    if let Some(hash) = &h.config_hash {
        let _ = write!(line, " config={hash}");
    }
    line.push('\n');
    w.write_all(line.as_bytes())?;
    for s in &e.samples {
        line.clear();
        let _ = write!(line, "{}\t{:?}\t", s.t, s.time);
        push_floats(&mut line, &s.x);
        line.push('\t');
        push_pose(&mut line, &s.p_true);
        line.push('\t');
        push_pose(&mut line, &s.p_odom);
        line.push('\t');
        match &s.d {
            Some(d) => push_pose(&mut line, d),
            None => line.push('-'),
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.write_all(b"end\n")?;
    Ok(())
}

/// Validates and writes `e` to `path`.
pub fn save_episode(e: &Episode, path: &Path) -> Result<(), Error> {
    e.validate()?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_episode(e, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_episode(path: &Path) -> Result<Episode, Error> {
    parse_episode(&fs::read_to_string(path)?)
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64, Error> {
    let v: f64 = s.parse().map_err(|_| perr(line, format!("{what}: invalid number {s:?}")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("{what}: non-finite value")));
    }
    Ok(v)
}

fn parse_list(s: &str, line: usize, what: &str) -> Result<Vec<f64>, Error> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| parse_f64(p, line, what)).collect()
}

fn parse_pose(s: &str, line: usize, what: &str) -> Result<Pose<f64>, Error> {
    let v = parse_list(s, line, what)?;
    let a: [f64; 7] = v
        .try_into()
        .map_err(|v: Vec<f64>| perr(line, format!("{what}: expected 7 values, got {}", v.len())))?;
    Ok(Pose::from_array(a))
}

fn parse_kinematics(s: &str, line: usize) -> Result<Kinematics, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(perr(line, format!("kinematics: malformed {s:?}")));
    }
    let a = parse_f64(parts[1], line, "kinematics")?;
    let b = parse_f64(parts[2], line, "kinematics")?;
    match parts[0] {
        "differential_drive" => Ok(Kinematics::DifferentialDrive { wheel_radius: a, half_track: b }),
        "mecanum" => Ok(Kinematics::Mecanum { wheel_radius: a, arm: b }),
        other => Err(perr(line, format!("kinematics: unknown model {other:?}"))),
    }
}

struct Header {
    header: EpisodeHeader,
    x_dim: usize,
    samples: usize,
}

fn parse_header(text: &str) -> Result<Header, Error> {
    let mut fields = text.split(' ');
    if fields.next() != Some("episode") {
        return Err(perr(1, "expected `episode` header"));
    }
    let mut kv = std::collections::BTreeMap::new();
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| perr(1, format!("malformed header field {f:?}")))?;
        if kv.insert(k, v).is_some() {
            return Err(perr(1, format!("duplicate header field {k:?}")));
        }
    }
    let mut take = |k: &str| kv.remove(k).ok_or_else(|| perr(1, format!("missing header field {k:?}")));
    let version = take("v")?;
    if version != EPISODE_FORMAT_VERSION.to_string() {
        return Err(perr(1, format!("unsupported format version {version}")));
    }
    let id = take("id")?.to_string();
    let scenario = take("scenario")?;
    let scenario = ScenarioKind::parse(scenario).ok_or_else(|| perr(1, format!("unknown scenario {scenario:?}")))?;
    let rate_hz = parse_f64(take("rate")?, 1, "rate")?;
    let seed = take("seed")?.parse().map_err(|_| perr(1, "seed: invalid integer"))?;
    let kinematics = parse_kinematics(take("kinematics")?, 1)?;
    let odometry_noise = WheelNoiseModel {
        encoder_std: parse_f64(take("encoder_std")?, 1, "encoder_std")?,
        slip_std: parse_f64(take("slip_std")?, 1, "slip_std")?,
    };
    let detector_noise = DetectorNoise {
        position_std: parse_f64(take("detector_position_std")?, 1, "detector_position_std")?,
        angle_std: parse_f64(take("detector_angle_std")?, 1, "detector_angle_std")?,
    };
    let target = parse_pose(take("target")?, 1, "target")?;
    let x_dim = take("x_dim")?.parse().map_err(|_| perr(1, "x_dim: invalid integer"))?;
    let samples = take("samples")?.parse().map_err(|_| perr(1, "samples: invalid integer"))?;
    let config_hash = kv.remove("config").map(str::to_string);
    if let Some(k) = kv.keys().next() {
        return Err(perr(1, format!("unknown header field {k:?}")));
    }
    Ok(Header {
        header: EpisodeHeader {
            id,
            scenario,
            rate_hz,
            seed,
            kinematics,
            odometry_noise,
            detector_noise,
            target,
            config_hash,
        },
        x_dim,
        samples,
    })
}

fn parse_sample(text: &str, line: usize, x_dim: usize) -> Result<Sample, Error> {
    let cols: Vec<&str> = text.split('\t').collect();
    if cols.len() != 6 {
        return Err(perr(line, format!("expected 6 tab-separated fields, got {}", cols.len())));
    }
    let t = cols[0].parse().map_err(|_| perr(line, format!("t: invalid index {:?}", cols[0])))?;
    let time = parse_f64(cols[1], line, "time")?;
    let x = parse_list(cols[2], line, "x")?;
    if x.len() != x_dim {
        return Err(perr(line, format!("x: expected {x_dim} values, got {}", x.len())));
    }
    let p_true = parse_pose(cols[3], line, "p_true")?;
    let p_odom = parse_pose(cols[4], line, "p_odom")?;
    let d = match cols[5] {
        "-" => None,
        s => Some(parse_pose(s, line, "d")?),
    };
    Ok(Sample { t, time, x, p_true, p_odom, d })
}

/// Parses and validates an episode file's contents.
pub fn parse_episode(text: &str) -> Result<Episode, Error> {
    let mut lines = text.split('\n');
    let header = parse_header(lines.next().unwrap_or(""))?;
    let mut samples = Vec::with_capacity(header.samples);
    let mut ended = false;
    let mut lineno = 1;
    for l in lines.by_ref() {
        lineno += 1;
        if l == "end" {
            ended = true;
            break;
        }
        if samples.len() == header.samples {
            return Err(perr(lineno, "more samples than declared"));
        }
        samples.push(parse_sample(l, lineno, header.x_dim)?);
    }
    if !ended {
        return Err(perr(lineno, "truncated file: missing `end`"));
    }
    if samples.len() != header.samples {
        return Err(perr(lineno, format!("declared {} samples, found {}", header.samples, samples.len())));
    }
    if lines.any(|l| !l.is_empty()) {
        return Err(perr(lineno + 1, "content after `end`"));
    }
    let episode = Episode { header: header.header, samples };
    episode.validate()?;
    Ok(episode)
}
