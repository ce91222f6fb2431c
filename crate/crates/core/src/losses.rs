//! Task, state-consistency and combined losses, pointwise and Monte Carlo.
//!
//! A supervision pair ties the prediction at `u` to the detection at `s`
//! through the relative pose `p̃(u, s)`: its label is `p̃(u, s) ⊕ d(s)`. A
//! consistency pair ties the predictions at `t` and `u` through `p̃(t, u)`,
//! comparing `p̃(t, u) ⊕ m(x(u))` with `m(x(t))`. Every pair carries a list of
//! relative-pose samples (one for exact or pointwise odometry, `n_mc` for
//! uncertain odometry) and the loss averages the distance over them.
//!
//! The per-pair Monte Carlo averages are evaluated by hand-derived kernels
//! that record a single graph node each. [`reference`] holds the same
//! quantities written directly with the pose algebra; tests check that both
//! agree in value and gradient.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Episode;
use crate::error::Error;
use crate::pose::{Pose, Quaternion};
use crate::scalar::{acos_unit_slope, Scalar};
use crate::sim::{OdometryRealizations, OdometrySource};

/// Norm floor used when normalizing the network's quaternion head.
pub const QUAT_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_sc: f64,
    pub lambda_o: f64,
    pub n_mc: usize,
    pub sc_pair_window: usize,
    pub pairs_per_batch: usize,
    pub mode: OdometrySource,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_sc: 1.0,
            lambda_o: 10.0,
            n_mc: 50,
            sc_pair_window: 50,
            pairs_per_batch: 32,
            mode: OdometrySource::Uncertain,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.lambda_sc >= 0.0 && self.lambda_o >= 0.0) || !self.lambda_sc.is_finite() || !self.lambda_o.is_finite() {
            return Err(Error::InvalidConfig("lambda_sc and lambda_o must be finite and ≥ 0".into()));
        }
        if self.n_mc == 0 || self.sc_pair_window == 0 || self.pairs_per_batch == 0 {
            return Err(Error::InvalidConfig("n_mc, sc_pair_window and pairs_per_batch must be positive".into()));
        }
        Ok(())
    }

    /// Number of relative-pose samples per pair under the configured mode.
    pub fn samples_per_pair(&self) -> usize {
        match self.mode {
            OdometrySource::Uncertain => self.n_mc,
            OdometrySource::Exact | OdometrySource::Pointwise => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisionPair {
    pub episode: usize,
    pub u: usize,
    pub s: usize,
    /// Samples of `p̃(u, s)`.
    pub relative: Vec<Pose<f64>>,
    /// Samples of the detection at `s`.
    pub detections: Vec<Pose<f64>>,
    /// `relative[k] ⊕ detections[k]`.
    pub labels: Vec<Pose<f64>>,
}

impl SupervisionPair {
    pub fn new(episode: usize, u: usize, s: usize, relative: Vec<Pose<f64>>, detections: Vec<Pose<f64>>) -> Self {
        assert_eq!(relative.len(), detections.len());
        assert!(!relative.is_empty());
        let labels = relative.iter().zip(&detections).map(|(r, d)| r.compose(d)).collect();
        Self { episode, u, s, relative, detections, labels }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyPair {
    pub episode: usize,
    pub t: usize,
    pub u: usize,
    /// Samples of `p̃(t, u)`.
    pub relative: Vec<Pose<f64>>,
}

/// Mean over samples of `SEDIST(label_k, pred)`, recorded as one node.
pub fn supervision_term<S: Scalar>(labels: &[Pose<f64>], pred: &Pose<S>, lambda_o: f64) -> S {
    let o = pred.position.map(|c| c.value());
    let q = pred.orientation.to_array().map(|c| c.value());
    let mut value = 0.0;
    let mut g_o = [0.0; 3];
    let mut g_q = [0.0; 4];
    for l in labels {
        if lambda_o != 0.0 {
            let e = [o[0] - l.position[0], o[1] - l.position[1], o[2] - l.position[2]];
            let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
            value += lambda_o * n;
            if n > 0.0 {
                for i in 0..3 {
                    g_o[i] += lambda_o * e[i] / n;
                }
            }
        }
        let lq = l.orientation.to_array();
        let c = dot4(&lq, &q);
        let a = c.abs();
        value += 2.0 * a.min(1.0).acos() / PI;
        let dc = 2.0 / PI * acos_unit_slope(a) * if c < 0.0 { -1.0 } else { 1.0 };
        for i in 0..4 {
            g_q[i] += dc * lq[i];
        }
    }
    let inv = 1.0 / labels.len() as f64;
    finish(value * inv, pred, None, &g_o, &g_q, None, lambda_o != 0.0, inv)
}

/// Mean over samples of `SEDIST(relative_k ⊕ pred_u, pred_t)`, recorded as
/// one node.
pub fn consistency_term<S: Scalar>(relative: &[Pose<f64>], pred_t: &Pose<S>, pred_u: &Pose<S>, lambda_o: f64) -> S {
    let ot = pred_t.position.map(|c| c.value());
    let ou = pred_u.position.map(|c| c.value());
    let qt = pred_t.orientation.to_array().map(|c| c.value());
    let qu = pred_u.orientation.to_array().map(|c| c.value());
    let qu_norm = dot4(&qu, &qu).sqrt();
    let mut value = 0.0;
    let (mut g_ot, mut g_ou) = ([0.0; 3], [0.0; 3]);
    let (mut g_qt, mut g_qu) = ([0.0; 4], [0.0; 4]);
    for r in relative {
        if lambda_o != 0.0 {
            let rot = rotation_matrix(r.orientation);
            let mut e = [0.0; 3];
            for i in 0..3 {
                e[i] = r.position[i] + rot[i][0] * ou[0] + rot[i][1] * ou[1] + rot[i][2] * ou[2] - ot[i];
            }
            let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
            value += lambda_o * n;
            if n > 0.0 {
                for i in 0..3 {
                    g_ot[i] -= lambda_o * e[i] / n;
                    for j in 0..3 {
                        g_ou[j] += lambda_o * rot[i][j] * e[i] / n;
                    }
                }
            }
        }
        // ⟨normalize(q_k ⊗ q_u), q_t⟩ = qtᵀ L(q_k) q_u / (‖q_k‖ ‖q_u‖)
        let l = left_mul_matrix(r.orientation);
        let prod = mat4_vec(&l, &qu);
        let norm = dot4(&prod, &prod).sqrt();
        let c = dot4(&prod, &qt) / norm;
        let a = c.abs();
        value += 2.0 * a.min(1.0).acos() / PI;
        let dc = 2.0 / PI * acos_unit_slope(a) * if c < 0.0 { -1.0 } else { 1.0 };
        let lt_qt = mat4t_vec(&l, &qt);
        for i in 0..4 {
            g_qt[i] += dc * prod[i] / norm;
            g_qu[i] += dc * (lt_qt[i] / norm - c * qu[i] / (qu_norm * qu_norm));
        }
    }
    let inv = 1.0 / relative.len() as f64;
    finish(
        value * inv,
        pred_t,
        Some(pred_u),
        &g_ot,
        &g_qt,
        Some((&g_ou, &g_qu)),
        lambda_o != 0.0,
        inv,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish<S: Scalar>(
    value: f64,
    a: &Pose<S>,
    b: Option<&Pose<S>>,
    g_oa: &[f64; 3],
    g_qa: &[f64; 4],
    g_b: Option<(&[f64; 3], &[f64; 4])>,
    with_position: bool,
    scale: f64,
) -> S {
    let mut parents = Vec::with_capacity(14);
    let mut partials = Vec::with_capacity(14);
    let mut push = |p: &Pose<S>, go: &[f64; 3], gq: &[f64; 4]| {
        if with_position {
            for i in 0..3 {
                parents.push(p.position[i]);
                partials.push(go[i] * scale);
            }
        }
        for (v, g) in p.orientation.to_array().into_iter().zip(gq) {
            parents.push(v);
            partials.push(g * scale);
        }
    };
    push(a, g_oa, g_qa);
    if let (Some(b), Some((go, gq))) = (b, g_b) {
        push(b, go, gq);
    }
    S::fused(value, &parents, &partials)
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Matrix of `v ↦ q · v` on `[w, x, y, z]`.
fn left_mul_matrix(q: Quaternion<f64>) -> [[f64; 4]; 4] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [[w, -x, -y, -z], [x, w, -z, y], [y, z, w, -x], [z, -y, x, w]]
}

fn mat4_vec(m: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    [0, 1, 2, 3].map(|i| dot4(&m[i], v))
}

fn mat4t_vec(m: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    [0, 1, 2, 3].map(|j| m[0][j] * v[0] + m[1][j] * v[1] + m[2][j] * v[2] + m[3][j] * v[3])
}

/// The linear map applied by [`Quaternion::rotate`].
fn rotation_matrix(q: Quaternion<f64>) -> [[f64; 3]; 3] {
    let cols = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(|e| q.rotate(e));
    [0, 1, 2].map(|i| [cols[0][i], cols[1][i], cols[2][i]])
}

/// Task loss: mean of [`supervision_term`] over pairs, `preds[i]` being the
/// prediction at `pairs[i].u`. `None` when there are no pairs.
pub fn task_loss<S: Scalar>(pairs: &[SupervisionPair], preds: &[Pose<S>], lambda_o: f64) -> Option<S> {
    assert_eq!(pairs.len(), preds.len());
    mean(pairs.iter().zip(preds).map(|(p, m)| supervision_term(&p.labels, m, lambda_o)))
}

/// State-consistency loss: mean of [`consistency_term`] over pairs.
/// `None` when there are no pairs.
pub fn sc_loss<S: Scalar>(
    pairs: &[ConsistencyPair],
    preds_t: &[Pose<S>],
    preds_u: &[Pose<S>],
    lambda_o: f64,
) -> Option<S> {
    assert_eq!(pairs.len(), preds_t.len());
    assert_eq!(pairs.len(), preds_u.len());
    mean(
        pairs
            .iter()
            .zip(preds_t.iter().zip(preds_u))
            .map(|(p, (mt, mu))| consistency_term(&p.relative, mt, mu, lambda_o)),
    )
}

pub fn total_loss<S: Scalar>(task: S, sc: S, lambda_sc: f64) -> S {
    if lambda_sc == 0.0 {
        return task;
    }
    task + sc * lambda_sc
}

fn mean<S: Scalar>(mut terms: impl ExactSizeIterator<Item = S>) -> Option<S> {
    let n = terms.len();
    let first = terms.next()?;
    let sum = terms.fold(first, |acc, t| acc + t);
    Some(sum * (1.0 / n as f64))
}

/// Pose-algebra formulations of the per-pair terms.
pub mod reference {
    use super::*;
    use crate::pose::se_dist;

    pub fn supervision_term<S: Scalar>(labels: &[Pose<f64>], pred: &Pose<S>, lambda_o: f64) -> S {
        let like = pred.position[0];
        let sum = labels
            .iter()
            .map(|l| se_dist(&l.lift(like), pred, lambda_o))
            .reduce(|a, b| a + b)
            .expect("at least one label");
        sum * (1.0 / labels.len() as f64)
    }

    pub fn consistency_term<S: Scalar>(relative: &[Pose<f64>], pred_t: &Pose<S>, pred_u: &Pose<S>, lambda_o: f64) -> S {
        let like = pred_t.position[0];
        let sum = relative
            .iter()
            .map(|r| se_dist(&r.lift(like).compose(pred_u), pred_t, lambda_o))
            .reduce(|a, b| a + b)
            .expect("at least one sample");
        sum * (1.0 / relative.len() as f64)
    }
}

/// Pairs drawn for one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSet {
    pub supervision: Vec<SupervisionPair>,
    pub consistency: Vec<ConsistencyPair>,
    /// The episode has no detector timesteps, so no supervision pairs exist.
    pub no_supervision: bool,
}

/// Draws one supervision pair: `u` uniform over the episode, `s` uniform over
/// its detector timesteps. `None` without detections.
pub fn sample_supervision_pair<R: Rng + ?Sized>(
    episode_index: usize,
    episode: &Episode,
    detector_steps: &[usize],
    realizations: &OdometryRealizations,
    config: &LossConfig,
    rng: &mut R,
) -> Option<SupervisionPair> {
    if detector_steps.is_empty() {
        return None;
    }
    let u = rng.random_range(0..episode.len());
    let s = detector_steps[rng.random_range(0..detector_steps.len())];
    let d = episode.samples[s].d.expect("detector step carries a detection");
    let n = config.samples_per_pair();
    let relative = (0..n).map(|k| realizations.relative(config.mode, k, u, s)).collect();
    let detections = (0..n)
        .map(|_| match config.mode {
            OdometrySource::Uncertain => episode.header.detector_noise.sample(&d, rng),
            OdometrySource::Exact | OdometrySource::Pointwise => d,
        })
        .collect();
    Some(SupervisionPair::new(episode_index, u, s, relative, detections))
}

/// Draws one consistency pair: `t` uniform over the episode, `u` uniform over
/// the other timesteps within the window. `None` for single-sample episodes.
pub fn sample_consistency_pair<R: Rng + ?Sized>(
    episode_index: usize,
    episode: &Episode,
    realizations: &OdometryRealizations,
    config: &LossConfig,
    rng: &mut R,
) -> Option<ConsistencyPair> {
    let len = episode.len();
    if len < 2 {
        return None;
    }
    let t = rng.random_range(0..len);
    let lo = t.saturating_sub(config.sc_pair_window);
    let hi = (t + config.sc_pair_window).min(len - 1);
    // uniform over [lo, hi] \ {t}
    let mut u = rng.random_range(lo..hi);
    if u >= t {
        u += 1;
    }
    let relative = (0..config.samples_per_pair())
        .map(|k| realizations.relative(config.mode, k, t, u))
        .collect();
    Some(ConsistencyPair { episode: episode_index, t, u, relative })
}

/// `pairs_per_batch` supervision and consistency pairs from one episode.
pub fn sample_pairs<R: Rng + ?Sized>(
    episode: &Episode,
    realizations: &OdometryRealizations,
    config: &LossConfig,
    rng: &mut R,
) -> Result<PairSet, Error> {
    config.validate()?;
    if episode.is_empty() {
        return Err(Error::Validation { invariant: "non-empty episode", detail: episode.id().to_string() });
    }
    if config.mode == OdometrySource::Uncertain && realizations.n_mc() < config.n_mc {
        return Err(Error::InvalidConfig(format!(
            "uncertain mode needs {} realizations, episode has {}",
            config.n_mc,
            realizations.n_mc()
        )));
    }
    let steps = episode.detector_steps();
    let mut set = PairSet { no_supervision: steps.is_empty(), ..Default::default() };
    for _ in 0..config.pairs_per_batch {
        if let Some(p) = sample_supervision_pair(0, episode, &steps, realizations, config, rng) {
            set.supervision.push(p);
        }
    }
    for _ in 0..config.pairs_per_batch {
        if let Some(p) = sample_consistency_pair(0, episode, realizations, config, rng) {
            set.consistency.push(p);
        }
    }
    Ok(set)
}
