use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::autodiff::Checkpoint;
use crate::data::{load_episode, make_folds, save_episode, Episode, FoldPlan, ScenarioKind};
use crate::error::Error;
use crate::sim::{simulate_docking_episode, simulate_wall_episode};
use crate::train::{train_folds, FoldResult, TrainedModel};

use super::config::{ExperimentConfig, VariantSpec};

/// Paths of the artifacts in a run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn episodes_dir(&self) -> PathBuf {
        self.root.join("episodes")
    }

    pub fn manifest(&self) -> PathBuf {
        self.episodes_dir().join("manifest.csv")
    }

    pub fn episode(&self, id: &str) -> PathBuf {
        self.episodes_dir().join(format!("{id}.episode"))
    }

    /// Directory of a training stage: `crossval` or `train`.
    pub fn stage(&self, stage: &str) -> PathBuf {
        self.root.join(stage)
    }

    pub fn checkpoint(&self, stage: &str, variant: &VariantSpec, repeat: usize, fold: usize) -> PathBuf {
        self.stage(stage).join(variant.name()).join(format!("r{repeat}_fold{fold:02}.ckpt"))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

/// Creates a CSV writer whose first line names the config hash.
pub fn csv_writer(path: &Path, config_hash: &str) -> Result<csv::Writer<BufWriter<fs::File>>, Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# config_hash={config_hash}")?;
    Ok(csv::Writer::from_writer(f))
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv: {other:?}")),
    }
}

/// Writes `text` with a leading `# config_hash=` line.
pub fn write_text(path: &Path, config_hash: &str, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, format!("# config_hash={config_hash}\n{text}"))?;
    Ok(())
}

fn refuse_overwrite(path: &Path, force: bool) -> Result<(), Error> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite(path.display().to_string()));
    }
    Ok(())
}

/// Simulates every episode of the experiment, in index order.
pub fn simulate_episodes(config: &ExperimentConfig) -> Result<Vec<Episode>, Error> {
    let hash = config.hash();
    (0..config.episodes)
        .map(|i| {
            let id = config.episode_id(i);
            let seed = config.episode_seed(i);
            let mut e = match config.scenario {
                ScenarioKind::Wall => simulate_wall_episode(&config.wall, &id, seed)?,
                ScenarioKind::Docking => simulate_docking_episode(&config.docking, &id, seed)?,
            };
            e.header.config_hash = Some(hash.clone());
            Ok(e)
        })
        .collect()
}

/// Simulates the dataset and writes the episode files, a manifest and the
/// resolved config. Returns the episodes.
pub fn cmd_simulate(config: &ExperimentConfig, layout: &RunLayout, force: bool) -> Result<Vec<Episode>, Error> {
    refuse_overwrite(&layout.manifest(), force)?;
    let episodes = simulate_episodes(config)?;
    let hash = config.hash();
    fs::create_dir_all(layout.episodes_dir())?;
    write_config(config, layout)?;
    let mut w = csv_writer(&layout.manifest(), &hash)?;
    w.write_record(["index", "id", "seed", "samples", "file"]).map_err(csv_error)?;
    for (i, e) in episodes.iter().enumerate() {
        let path = layout.episode(e.id());
        save_episode(e, &path)?;
        let file = format!("{}.episode", e.id());
        w.write_record([i.to_string(), e.id().to_string(), e.header.seed.to_string(), e.len().to_string(), file])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(episodes)
}

fn write_config(config: &ExperimentConfig, layout: &RunLayout) -> Result<(), Error> {
    fs::create_dir_all(&layout.root)?;
    let path = layout.config();
    let text = format!("# config_hash={}\n{}", config.hash(), config.to_toml());
    // a rerun with an identical config leaves the file untouched
    if fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
        fs::write(&path, text)?;
    }
    Ok(())
}

/// Loads the episodes of a simulated run, listing every missing file.
pub fn load_episodes(config: &ExperimentConfig, layout: &RunLayout) -> Result<Vec<Episode>, Error> {
    let paths: Vec<(String, PathBuf)> = (0..config.episodes)
        .map(|i| {
            let id = config.episode_id(i);
            let p = layout.episode(&id);
            (id, p)
        })
        .collect();
    let missing: Vec<String> = paths.iter().filter(|(_, p)| !p.exists()).map(|(_, p)| p.display().to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let episodes: Vec<Episode> = paths.iter().map(|(_, p)| load_episode(p)).collect::<Result<_, _>>()?;
    for (i, e) in episodes.iter().enumerate() {
        if e.header.seed != config.episode_seed(i) || e.header.scenario != config.scenario {
            return Err(Error::Validation {
                invariant: "episodes match config",
                detail: format!("{} was simulated with another scenario or seed; rerun `simulate`", e.id()),
            });
        }
    }
    Ok(episodes)
}

/// One training run: a variant on one fold with one repeat seed.
#[derive(Debug)]
pub struct RunOutcome {
    pub variant: VariantSpec,
    pub repeat: usize,
    pub fold: usize,
    /// `Err` holds the divergence diagnostic; the run is skipped downstream.
    pub result: Result<FoldResult, String>,
}

#[derive(Debug)]
pub struct CrossvalResults {
    pub plan: FoldPlan,
    pub runs: Vec<RunOutcome>,
}

impl CrossvalResults {
    pub fn of<'a>(&'a self, variant: &'a VariantSpec) -> impl Iterator<Item = &'a RunOutcome> + 'a {
        self.runs.iter().filter(move |r| r.variant.name() == variant.name())
    }

    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.result.is_err()).count()
    }
}

/// Trains `variants` on every fold and repeat. Divergent folds are recorded
/// and skipped; any other error aborts.
pub fn run_variants(
    config: &ExperimentConfig,
    episodes: &[Episode],
    variants: &[VariantSpec],
    jobs: usize,
) -> Result<CrossvalResults, Error> {
    if episodes.len() != config.episodes {
        return Err(Error::InsufficientEpisodes { needed: config.episodes, got: episodes.len() });
    }
    let plan = make_folds(episodes.len(), config.folds)?;
    let mut runs = Vec::new();
    for variant in variants {
        for repeat in 0..config.repeats {
            let tc = config.train_config(variant, repeat);
            for (fold, r) in train_folds(episodes, &plan, &tc, jobs)?.into_iter().enumerate() {
                let result = match r {
                    Ok(f) => Ok(f),
                    Err(e @ Error::Divergence { .. }) => Err(e.to_string()),
                    Err(e) => return Err(e),
                };
                runs.push(RunOutcome { variant: *variant, repeat, fold, result });
            }
        }
    }
    Ok(CrossvalResults { plan, runs })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes checkpoints, loss curves and per-fold and per-episode metrics of
/// `results` under `stage`.
pub fn write_runs(
    config: &ExperimentConfig,
    layout: &RunLayout,
    stage: &str,
    results: &CrossvalResults,
) -> Result<(), Error> {
    let hash = config.hash();
    let dir = layout.stage(stage);
    fs::create_dir_all(&dir)?;
    let mut curves = csv_writer(&dir.join("curves.csv"), &hash)?;
    curves
        .write_record(["variant", "repeat", "fold", "epoch", "train_loss", "validation_loss"])
        .map_err(csv_error)?;
    let mut folds = csv_writer(&dir.join("folds.csv"), &hash)?;
    folds
        .write_record([
            "variant",
            "repeat",
            "fold",
            "status",
            "best_epoch",
            "samples",
            "heading_mae_deg",
            "position_rmse_mm",
            "r2_x",
            "r2_y",
            "r2_z",
            "mean_quat_dist",
            "median_final_position_error_mm",
            "median_odometry_final_position_error_mm",
        ])
        .map_err(csv_error)?;
    let mut per_episode = csv_writer(&dir.join("episodes.csv"), &hash)?;
    per_episode
        .write_record([
            "variant",
            "repeat",
            "fold",
            "episode",
            "samples",
            "heading_mae_deg",
            "final_position_error_mm",
            "final_heading_error_deg",
            "odometry_final_position_error_mm",
            "odometry_final_heading_error_deg",
        ])
        .map_err(csv_error)?;
    for run in &results.runs {
        let key = [run.variant.name(), run.repeat.to_string(), run.fold.to_string()];
        let f = match &run.result {
            Ok(f) => f,
            Err(msg) => {
                let mut row = key.to_vec();
                row.push(format!("diverged: {msg}"));
                row.extend(std::iter::repeat_n(String::new(), 10));
                folds.write_record(&row).map_err(csv_error)?;
                continue;
            }
        };
        let ckpt = layout.checkpoint(stage, &run.variant, run.repeat, run.fold);
        fs::create_dir_all(ckpt.parent().expect("checkpoint has a parent"))?;
        let seed = config.train_config(&run.variant, run.repeat).seed;
        fs::write(&ckpt, f.model.to_checkpoint(seed, Some(hash.clone())).to_bytes())?;
        for c in &f.curve {
            let mut row = key.to_vec();
            row.extend([c.epoch.to_string(), c.train_loss.to_string(), c.validation_loss.to_string()]);
            curves.write_record(&row).map_err(csv_error)?;
        }
        let r = &f.report;
        let mut row = key.to_vec();
        row.extend([
            "ok".to_string(),
            f.best_epoch.to_string(),
            r.samples.to_string(),
            r.heading_mae_deg.to_string(),
            r.position_rmse_mm.to_string(),
            fmt_opt(r.r2[0]),
            fmt_opt(r.r2[1]),
            fmt_opt(r.r2[2]),
            r.mean_quat_dist.to_string(),
            fmt_opt(r.median_final_position_error_mm()),
            fmt_opt(r.median_odometry_final_position_error_mm()),
        ]);
        folds.write_record(&row).map_err(csv_error)?;
        for e in &r.episodes {
            let mut row = key.to_vec();
            row.extend([
                e.id.clone(),
                e.samples.to_string(),
                e.heading_mae_deg.to_string(),
                e.final_position_error_mm.to_string(),
                e.final_heading_error_deg.to_string(),
                e.odometry_final_position_error_mm.to_string(),
                e.odometry_final_heading_error_deg.to_string(),
            ]);
            per_episode.write_record(&row).map_err(csv_error)?;
        }
    }
    curves.flush()?;
    folds.flush()?;
    per_episode.flush()?;
    Ok(())
}

/// Loads the trained model of one run from its checkpoint.
pub fn load_model(path: &Path) -> Result<TrainedModel, Error> {
    let bytes = fs::read(path)?;
    Ok(TrainedModel::from_checkpoint(Checkpoint::read_from(bytes.as_slice())?))
}

/// Fails with [`Error::MissingArtifacts`] unless every path exists.
pub fn require(paths: &[PathBuf]) -> Result<(), Error> {
    let missing: Vec<String> = paths.iter().filter(|p| !p.exists()).map(|p| p.display().to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingArtifacts(missing))
    }
}

/// Refuses to start a training stage over existing results unless forced.
pub fn prepare_stage(layout: &RunLayout, stage: &str, force: bool) -> Result<(), Error> {
    refuse_overwrite(&layout.stage(stage).join("folds.csv"), force)?;
    Ok(())
}

pub(crate) fn store_config(config: &ExperimentConfig, layout: &RunLayout) -> Result<(), Error> {
    write_config(config, layout)
}
