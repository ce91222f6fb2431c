//! Mini-batch Adam training with early stopping, and evaluation.

mod eval;

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, AdamState, Checkpoint, MlpSpec, Parameters, Tape, POSE_OUTPUT_DIM};
use crate::data::{Episode, Fold, FoldPlan};
use crate::error::Error;
use crate::losses::{
    sample_consistency_pair, sample_supervision_pair, sc_loss, task_loss, total_loss, ConsistencyPair, LossConfig,
    SupervisionPair, QUAT_NORM_EPS,
};
use crate::pose::Pose;
use crate::scalar::Scalar;
use crate::seed;
use crate::sim::{sample_realizations, OdometryRealizations, OdometrySource};

pub use eval::{evaluate, evaluate_odometry, evaluate_with, EpisodeEval, EvalReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossConfig,
    pub learning_rate: f64,
    /// Hidden layer widths; input and output widths follow from the data.
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    /// Mini-batches per epoch.
    pub batches_per_epoch: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Fixed mini-batches drawn once from the validation episodes.
    pub validation_batches: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossConfig::default(),
            learning_rate: 1e-3,
            hidden_widths: vec![20, 20, 16],
            activation: Activation::Tanh,
            batches_per_epoch: 200,
            max_epochs: 100,
            patience: 10,
            validation_batches: 40,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.loss.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batches_per_epoch == 0 || self.max_epochs == 0 || self.validation_batches == 0 {
            return Err(Error::InvalidConfig(
                "batches_per_epoch, max_epochs and validation_batches must be positive".into(),
            ));
        }
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        Ok(())
    }

    pub fn mlp_spec(&self, input_dim: usize) -> Result<MlpSpec, Error> {
        let mut widths = vec![input_dim];
        widths.extend(&self.hidden_widths);
        widths.push(POSE_OUTPUT_DIM);
        MlpSpec::new(widths, self.activation)
    }
}

/// Per-feature affine input normalization fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(samples: impl Iterator<Item = &'a [f64]>) -> Self {
        let mut n = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        for x in samples {
            if sum.is_empty() {
                sum = vec![0.0; x.len()];
                sq = vec![0.0; x.len()];
            }
            for (i, v) in x.iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
            n += 1;
        }
        let nf = n.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let v = (s / nf - m * m).max(0.0).sqrt();
                if v > 1e-12 {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }
}

/// A trained network with its input normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: MlpSpec,
    pub params: Parameters,
    pub input: Standardizer,
}

impl TrainedModel {
    /// Predicted pose of the object in the robot frame.
    pub fn predict(&self, x: &[f64]) -> Result<Pose<f64>, Error> {
        let out = self.spec.forward(self.params.values(), &self.input.apply(x))?;
        Ok(Pose::from_output(&out, QUAT_NORM_EPS))
    }

    pub fn to_checkpoint(&self, seed: u64, config_hash: Option<String>) -> Checkpoint {
        Checkpoint {
            spec: self.spec.clone(),
            params: self.params.clone(),
            seed,
            input_mean: Some(self.input.mean.clone()),
            input_std: Some(self.input.std.clone()),
            config_hash,
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Self {
        let n = c.spec.input_dim();
        let input = Standardizer {
            mean: c.input_mean.unwrap_or_else(|| vec![0.0; n]),
            std: c.input_std.unwrap_or_else(|| vec![1.0; n]),
        };
        Self { spec: c.spec, params: c.params, input }
    }
}

/// An episode with everything needed to draw training pairs.
pub struct PreparedEpisode<'a> {
    pub index: usize,
    pub episode: &'a Episode,
    pub realizations: OdometryRealizations,
    pub detector_steps: Vec<usize>,
    pub inputs: Vec<Vec<f64>>,
}

/// Odometry realizations of `episode`, seeded by the master seed and the
/// episode's own seed so every fold and variant sees the same draws.
pub fn episode_realizations(episode: &Episode, n_mc: usize, master_seed: u64) -> Result<OdometryRealizations, Error> {
    sample_realizations(
        &episode.measured_motion(),
        episode.exact_trajectory(),
        &episode.header.odometry_noise,
        n_mc,
        seed::derive(master_seed, "realizations", episode.header.seed),
    )
}

fn prepare<'a>(
    episodes: &'a [Episode],
    indices: &[usize],
    config: &TrainConfig,
    input: &Standardizer,
) -> Result<Vec<PreparedEpisode<'a>>, Error> {
    indices
        .iter()
        .map(|&i| {
            let episode = &episodes[i];
            Ok(PreparedEpisode {
                index: i,
                episode,
                realizations: episode_realizations(episode, config.loss.samples_per_pair(), config.seed)?,
                detector_steps: episode.detector_steps(),
                inputs: episode.samples.iter().map(|s| input.apply(&s.x)).collect(),
            })
        })
        .collect()
}

/// Pairs of one mini-batch. Indices refer to the slice of prepared episodes.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub supervision: Vec<SupervisionPair>,
    pub consistency: Vec<ConsistencyPair>,
}

fn pick_episode<R: Rng + ?Sized>(cumulative: &[usize], rng: &mut R) -> usize {
    let total = *cumulative.last().expect("at least one episode");
    let g = rng.random_range(0..total);
    cumulative.partition_point(|&c| c <= g)
}

/// Draws a mini-batch; each pair's episode is chosen with probability
/// proportional to its length, so timesteps are uniform over the data.
pub fn sample_batch<R: Rng + ?Sized>(prepared: &[PreparedEpisode<'_>], loss: &LossConfig, rng: &mut R) -> Batch {
    let cumulative: Vec<usize> = prepared
        .iter()
        .scan(0, |acc, p| {
            *acc += p.episode.len();
            Some(*acc)
        })
        .collect();
    let mut batch = Batch::default();
    for _ in 0..loss.pairs_per_batch {
        let e = pick_episode(&cumulative, rng);
        let p = &prepared[e];
        if let Some(pair) = sample_supervision_pair(e, p.episode, &p.detector_steps, &p.realizations, loss, rng) {
            batch.supervision.push(pair);
        }
    }
    if loss.lambda_sc > 0.0 {
        for _ in 0..loss.pairs_per_batch {
            let e = pick_episode(&cumulative, rng);
            let p = &prepared[e];
            if let Some(pair) = sample_consistency_pair(e, p.episode, &p.realizations, loss, rng) {
                batch.consistency.push(pair);
            }
        }
    }
    batch
}

/// Combined loss of a batch under parameters `theta`.
pub fn batch_loss<S: Scalar>(
    spec: &MlpSpec,
    theta: &[S],
    prepared: &[PreparedEpisode<'_>],
    batch: &Batch,
    loss: &LossConfig,
) -> Result<Option<S>, Error> {
    let like = theta[0];
    let mut cache: HashMap<(usize, usize), Pose<S>> = HashMap::new();
    let mut predict = |e: usize, t: usize| -> Result<Pose<S>, Error> {
        if let Some(p) = cache.get(&(e, t)) {
            return Ok(*p);
        }
        let x: Vec<S> = prepared[e].inputs[t].iter().map(|v| like.lift(*v)).collect();
        let p = Pose::from_output(&spec.forward(theta, &x)?, QUAT_NORM_EPS);
        cache.insert((e, t), p);
        Ok(p)
    };
    let preds: Vec<Pose<S>> = batch.supervision.iter().map(|p| predict(p.episode, p.u)).collect::<Result<_, _>>()?;
    let task = task_loss(&batch.supervision, &preds, loss.lambda_o);
    let sc = if loss.lambda_sc > 0.0 {
        let mut pt = Vec::with_capacity(batch.consistency.len());
        let mut pu = Vec::with_capacity(batch.consistency.len());
        for p in &batch.consistency {
            pt.push(predict(p.episode, p.t)?);
            pu.push(predict(p.episode, p.u)?);
        }
        sc_loss(&batch.consistency, &pt, &pu, loss.lambda_o)
    } else {
        None
    };
    Ok(match (task, sc) {
        (Some(t), Some(s)) => Some(total_loss(t, s, loss.lambda_sc)),
        (Some(t), None) => Some(t),
        (None, Some(s)) => Some(s * loss.lambda_sc),
        (None, None) => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub model: TrainedModel,
    pub curve: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Dataset indices of every episode that contributed a training pair.
    pub episodes_seen: BTreeSet<usize>,
    pub report: EvalReport,
    pub warnings: Vec<String>,
}

/// Trains on one fold and evaluates on its evaluation episodes.
pub fn train_fold(episodes: &[Episode], fold: &Fold, fold_index: usize, config: &TrainConfig) -> Result<FoldResult, Error> {
    config.validate()?;
    if fold.train.is_empty() || fold.validation.is_empty() {
        return Err(Error::InsufficientEpisodes { needed: 2, got: fold.train.len() + fold.validation.len() });
    }
    let input_dim = episodes[fold.train[0]].input_dim();
    if let Some(bad) = fold.train.iter().chain(&fold.validation).chain(&fold.test).find(|&&i| episodes[i].input_dim() != input_dim) {
        return Err(Error::DimensionMismatch { what: "episode sensor dimension", expected: input_dim, got: episodes[*bad].input_dim() });
    }
    let input = Standardizer::fit(fold.train.iter().flat_map(|&i| episodes[i].samples.iter().map(|s| s.x.as_slice())));
    let train = prepare(episodes, &fold.train, config, &input)?;
    let validation = prepare(episodes, &fold.validation, config, &input)?;
    let mut warnings = Vec::new();
    if train.iter().all(|p| p.detector_steps.is_empty()) {
        warnings.push("no detections in the training episodes: task loss is empty".to_string());
    }

    let spec = config.mlp_spec(input_dim)?;
    let mut params = spec.init(&mut seed::rng(config.seed, "init", fold_index as u64));
    let mut adam = AdamState::new(params.len(), config.learning_rate);
    let mut batch_rng = seed::rng(config.seed, "batches", fold_index as u64);
    let mut val_rng = seed::rng(config.seed, "validation", fold_index as u64);
    let val_batches: Vec<Batch> = (0..config.validation_batches).map(|_| sample_batch(&validation, &config.loss, &mut val_rng)).collect();

    let mut episodes_seen = BTreeSet::new();
    let mut curve = Vec::new();
    let mut best: Option<(f64, usize, Parameters)> = None;
    let mut tape = Tape::new();
    for epoch in 0..config.max_epochs {
        let mut train_sum = 0.0;
        let mut train_n = 0usize;
        for _ in 0..config.batches_per_epoch {
            let batch = sample_batch(&train, &config.loss, &mut batch_rng);
            for p in &batch.supervision {
                episodes_seen.insert(train[p.episode].index);
            }
            for p in &batch.consistency {
                episodes_seen.insert(train[p.episode].index);
            }
            tape.reset();
            let theta = tape.vars(params.values());
            let Some(loss) = batch_loss(&spec, &theta, &train, &batch, &config.loss)? else {
                continue;
            };
            let value = loss.value();
            if !value.is_finite() {
                return Err(Error::Divergence { fold: fold_index, epoch, detail: format!("training loss {value}") });
            }
            let grad = tape.gradient(loss, &theta);
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { fold: fold_index, epoch, detail: "non-finite gradient".into() });
            }
            drop(theta);
            adam.step(params.values_mut(), &grad);
            train_sum += value;
            train_n += 1;
        }
        let mut val_sum = 0.0;
        let mut val_n = 0usize;
        for b in &val_batches {
            if let Some(v) = batch_loss(&spec, params.values(), &validation, b, &config.loss)? {
                val_sum += v;
                val_n += 1;
            }
        }
        let validation_loss = if val_n > 0 { val_sum / val_n as f64 } else { f64::NAN };
        if val_n > 0 && !validation_loss.is_finite() {
            return Err(Error::Divergence { fold: fold_index, epoch, detail: format!("validation loss {validation_loss}") });
        }
        curve.push(EpochRecord { epoch, train_loss: train_sum / train_n.max(1) as f64, validation_loss });
        let improved = match &best {
            None => true,
            Some((b, _, _)) => validation_loss < *b,
        };
        if improved {
            best = Some((validation_loss, epoch, params.clone()));
        }
        let best_epoch = best.as_ref().map_or(0, |b| b.1);
        if epoch - best_epoch >= config.patience {
            break;
        }
    }
    let (_, best_epoch, best_params) = best.expect("at least one epoch");
    let model = TrainedModel { spec, params: best_params, input };
    let eval_eps: Vec<&Episode> = fold.evaluation().iter().map(|&i| &episodes[i]).collect();
    let report = evaluate(&model, &eval_eps)?;
    Ok(FoldResult { fold: fold_index, model, curve, best_epoch, episodes_seen, report, warnings })
}

/// Trains every fold of `plan`, running up to `jobs` folds concurrently.
/// Results are returned in fold order.
pub fn train_folds(
    episodes: &[Episode],
    plan: &FoldPlan,
    config: &TrainConfig,
    jobs: usize,
) -> Result<Vec<Result<FoldResult, Error>>, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        plan.folds
            .par_iter()
            .enumerate()
            .map(|(i, f)| train_fold(episodes, f, i, config))
            .collect()
    }))
}

/// Convenience: a config for `source` and `lambda_sc` derived from `base`.
pub fn variant(base: &TrainConfig, source: OdometrySource, lambda_sc: f64) -> TrainConfig {
    let mut c = base.clone();
    c.loss.mode = source;
    c.loss.lambda_sc = lambda_sc;
    c
}
