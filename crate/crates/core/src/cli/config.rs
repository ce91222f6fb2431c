use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::FoldScheme;
use crate::data::ScenarioKind;
use crate::error::Error;
use crate::sim::{DockingScenarioConfig, OdometrySource, WallScenarioConfig};
use crate::stats::Alternative;
use crate::train::TrainConfig;

/// One trained model configuration of the comparison matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub source: OdometrySource,
    pub lambda_sc: f64,
}

impl VariantSpec {
    pub const fn new(source: OdometrySource, lambda_sc: f64) -> Self {
        Self { source, lambda_sc }
    }

    /// Stable identifier used for directory and column names, e.g. `uncertain_sc1`.
    pub fn name(&self) -> String {
        format!("{}_sc{}", self.source.name(), self.lambda_sc)
    }

    pub fn label(&self) -> String {
        format!("{} (λ_sc={})", self.source.name(), self.lambda_sc)
    }
}

/// A paired comparison `a` vs `b` tested on matched folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub a: VariantSpec,
    pub b: VariantSpec,
}

/// Everything that determines the artifacts of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    /// Master seed; episode and training seeds are derived from it.
    pub seed: u64,
    /// Output directory; not part of the config hash.
    pub out: PathBuf,
    /// Number of simulated episodes.
    pub episodes: usize,
    /// Training runs per variant and fold, each with its own derived seed.
    pub repeats: usize,
    pub folds: FoldScheme,
    pub variants: Vec<VariantSpec>,
    pub comparisons: Vec<Comparison>,
    pub alternative: Alternative,
    /// `train.seed` is ignored: every run's seed derives from `seed`.
    pub train: TrainConfig,
    pub wall: WallScenarioConfig,
    pub docking: DockingScenarioConfig,
}

const fn v(source: OdometrySource, lambda_sc: f64) -> VariantSpec {
    VariantSpec::new(source, lambda_sc)
}

impl ExperimentConfig {
    /// Heading-only wall benchmark: 16 episodes, leave-one-out, six variants.
    pub fn wall() -> Self {
        use OdometrySource::*;
        let mut train = TrainConfig::default();
        train.loss.lambda_o = 0.0;
        train.batches_per_epoch = 100;
        train.max_epochs = 60;
        train.patience = 20;
        Self {
            scenario: ScenarioKind::Wall,
            seed: 0,
            out: PathBuf::from("runs/wall"),
            episodes: 16,
            repeats: 1,
            folds: FoldScheme::LeaveOneOut,
            variants: vec![
                v(Exact, 0.0),
                v(Exact, 1.0),
                v(Pointwise, 0.0),
                v(Pointwise, 1.0),
                v(Uncertain, 0.0),
                v(Uncertain, 1.0),
            ],
            comparisons: vec![
                Comparison { a: v(Uncertain, 0.0), b: v(Pointwise, 0.0) },
                Comparison { a: v(Uncertain, 1.0), b: v(Pointwise, 1.0) },
                Comparison { a: v(Pointwise, 1.0), b: v(Pointwise, 0.0) },
                Comparison { a: v(Uncertain, 1.0), b: v(Uncertain, 0.0) },
            ],
            alternative: Alternative::Less,
            train,
            wall: WallScenarioConfig::default(),
            docking: DockingScenarioConfig::default(),
        }
    }

    /// Docking benchmark: 20 episodes on a 10/5/5 split, three training seeds.
    pub fn docking() -> Self {
        use OdometrySource::*;
        let mut train = TrainConfig::default();
        train.batches_per_epoch = 100;
        train.max_epochs = 60;
        train.patience = 20;
        Self {
            scenario: ScenarioKind::Docking,
            seed: 0,
            out: PathBuf::from("runs/docking"),
            episodes: 20,
            repeats: 3,
            folds: FoldScheme::FixedSplit { train: 10, validation: 5, test: 5 },
            variants: vec![v(Pointwise, 0.0), v(Pointwise, 1.0), v(Uncertain, 0.0), v(Uncertain, 1.0)],
            comparisons: vec![Comparison { a: v(Uncertain, 1.0), b: v(Pointwise, 0.0) }],
            alternative: Alternative::Less,
            train,
            wall: WallScenarioConfig::default(),
            docking: DockingScenarioConfig::default(),
        }
    }

    pub fn preset(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Wall => Self::wall(),
            ScenarioKind::Docking => Self::docking(),
        }
    }

    /// Parses a TOML document layered over the preset of its `scenario`.
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(&e))?;
        let kind = match user.get("scenario") {
            None => ScenarioKind::Wall,
            Some(toml::Value::String(s)) => ScenarioKind::parse(s)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario `{s}`")))?,
            Some(other) => return Err(Error::InvalidConfig(format!("scenario must be a string, got {other}"))),
        };
        let mut merged = toml::Table::try_from(Self::preset(kind))
            .map_err(|e| Error::InvalidConfig(format!("serializing preset: {e}")))?;
        merge(&mut merged, user);
        let config: Self = merged.try_into().map_err(|e: toml::de::Error| config_error(&e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// SHA-256 of the canonical TOML with `out` cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.train.validate()?;
        match self.scenario {
            ScenarioKind::Wall => self.wall.validate()?,
            ScenarioKind::Docking => self.docking.validate()?,
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig("the variant matrix is empty".into()));
        }
        for (i, a) in self.variants.iter().enumerate() {
            if !(a.lambda_sc >= 0.0 && a.lambda_sc.is_finite()) {
                return Err(Error::InvalidConfig(format!("variant {}: lambda_sc must be finite and ≥ 0", a.name())));
            }
            if self.variants[..i].iter().any(|b| b.name() == a.name()) {
                return Err(Error::InvalidConfig(format!("duplicate variant {}", a.name())));
            }
        }
        for c in &self.comparisons {
            for s in [c.a, c.b] {
                if !self.variants.iter().any(|v| v.name() == s.name()) {
                    return Err(Error::InvalidConfig(format!("comparison refers to unknown variant {}", s.name())));
                }
            }
        }
        crate::data::make_folds(self.episodes, self.folds).map_err(|e| Error::InvalidConfig(format!("folds: {e}")))?;
        Ok(())
    }

    /// Training config of `variant` for repeat `repeat`.
    pub fn train_config(&self, variant: &VariantSpec, repeat: usize) -> TrainConfig {
        let mut c = crate::train::variant(&self.train, variant.source, variant.lambda_sc);
        c.seed = crate::seed::derive(self.seed, "train", repeat as u64);
        c
    }

    pub fn episode_seed(&self, index: usize) -> u64 {
        crate::seed::derive(self.seed, "episode", index as u64)
    }

    pub fn episode_id(&self, index: usize) -> String {
        format!("{}-{index:02}", self.scenario.name())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::wall()
    }
}

fn config_error(e: &toml::de::Error) -> Error {
    Error::InvalidConfig(e.to_string().trim_end().to_string())
}

/// Recursively overlays `top` onto `base`; arrays and scalars replace.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
