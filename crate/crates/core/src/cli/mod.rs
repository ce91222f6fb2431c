//! The experiment pipeline behind the `spatial-ssl` binary: simulate a
//! dataset, train the variant matrix, compare variants and export plots.
//!
//! Every command reads an [`ExperimentConfig`] (TOML, layered over the
//! scenario preset) and works inside its output directory:
//!
//! ```text
//! <out>/config.toml                 resolved config
//! <out>/episodes/manifest.csv       one row per episode file
//! <out>/episodes/<id>.episode
//! <out>/crossval/<variant>/r<repeat>_fold<k>.ckpt
//! <out>/crossval/{folds,episodes,curves,boxplot,tests}.csv, summary.txt
//! <out>/report/trajectories/<variant>/r<repeat>_<id>.csv
//! <out>/report/realizations/<id>.csv
//! <out>/report/plots/*.svg
//! ```

mod config;
mod report;
mod run;
mod svg;
mod tables;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::data::Episode;
use crate::error::Error;
use crate::train::evaluate;

pub use config::{Comparison, ExperimentConfig, VariantSpec};
pub use report::{cmd_report, ReportFiles};
pub use run::{
    cmd_simulate, csv_writer, load_episodes, load_model, run_variants, simulate_episodes, write_runs, CrossvalResults,
    RunLayout, RunOutcome,
};
pub use tables::{compare, metric_values, stars, write_comparison, ComparisonOutcome, Metric};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const DIVERGENCE: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "spatial-ssl", version, about = "Self-supervised spatial perception from drifting odometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (TOML). Defaults to `<out>/config.toml`, then the wall preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing results.
    #[arg(long)]
    pub force: bool,
    /// Folds trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the episodes of the configured scenario.
    Simulate(Common),
    /// Train one variant on every fold.
    Train {
        #[command(flatten)]
        common: Common,
        /// Variant name such as `uncertain_sc1`; defaults to the first configured.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Train the whole variant matrix and compare variants on matched folds.
    Crossval(Common),
    /// Evaluate a checkpoint on episodes of the run.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Episode ids to evaluate on; all episodes when omitted.
        #[arg(long = "episode")]
        episodes: Vec<String>,
    },
    /// Export trajectories, realizations and plots of a finished crossval run.
    Report(Common),
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::WouldOverwrite(_) => exit::USAGE,
        Error::Divergence { .. } => exit::DIVERGENCE,
        _ => exit::DATA,
    }
}

/// Resolves the config and run directory of a command.
pub fn resolve(common: &Common) -> Result<(ExperimentConfig, RunLayout), Error> {
    let mut config = match (&common.config, &common.out) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(out)) if RunLayout::new(out).config().exists() => ExperimentConfig::load(&RunLayout::new(out).config())?,
        _ => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    config.validate()?;
    let layout = RunLayout::new(config.out.clone());
    Ok((config, layout))
}

fn train_stage(common: &Common, stage: &str, variants: Option<Vec<VariantSpec>>) -> Result<u8, Error> {
    let (config, layout) = resolve(common)?;
    let variants = variants.unwrap_or_else(|| config.variants.clone());
    run::prepare_stage(&layout, stage, common.force)?;
    let episodes = load_episodes(&config, &layout)?;
    run::store_config(&config, &layout)?;
    let results = run_variants(&config, &episodes, &variants, common.jobs)?;
    write_runs(&config, &layout, stage, &results)?;
    let summary = write_comparison(&config, &layout, stage, &episodes, &variants, &results)?;
    print!("{summary}");
    for r in results.runs.iter().filter(|r| r.result.is_err()) {
        eprintln!("{} repeat {} fold {}: {}", r.variant.name(), r.repeat, r.fold, r.result.as_ref().unwrap_err());
    }
    Ok(if results.diverged() > 0 { exit::DIVERGENCE } else { exit::SUCCESS })
}

fn cmd_eval(common: &Common, checkpoint: &PathBuf, ids: &[String]) -> Result<u8, Error> {
    let (config, layout) = resolve(common)?;
    let episodes = load_episodes(&config, &layout)?;
    let selected: Vec<&Episode> = if ids.is_empty() {
        episodes.iter().collect()
    } else {
        ids.iter()
            .map(|id| {
                episodes
                    .iter()
                    .find(|e| e.id() == id)
                    .ok_or_else(|| Error::MissingArtifacts(vec![layout.episode(id).display().to_string()]))
            })
            .collect::<Result<_, _>>()?
    };
    let model = load_model(checkpoint)?;
    let report = evaluate(&model, &selected)?;
    let stem = checkpoint.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    let mut w = csv_writer(&layout.root.join("eval").join(format!("{stem}.csv")), &config.hash())?;
    w.write_record(["episode", "samples", "heading_mae_deg", "final_position_error_mm", "odometry_final_position_error_mm"])
        .map_err(run::csv_error)?;
    for e in &report.episodes {
        w.write_record([
            e.id.clone(),
            e.samples.to_string(),
            e.heading_mae_deg.to_string(),
            e.final_position_error_mm.to_string(),
            e.odometry_final_position_error_mm.to_string(),
        ])
        .map_err(run::csv_error)?;
    }
    w.flush()?;
    println!("samples            {}", report.samples);
    println!("heading MAE (deg)  {:.3}", report.heading_mae_deg);
    println!("position RMSE (mm) {:.1}", report.position_rmse_mm);
    for (axis, r2) in ["x", "y", "z"].iter().zip(report.r2) {
        println!("R² {axis}               {}", r2.map_or("undefined".to_string(), |v| format!("{v:.4}")));
    }
    println!("mean QUATDIST (rad) {:.4}", report.mean_quat_dist);
    Ok(exit::SUCCESS)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Simulate(c) => resolve(c).and_then(|(config, layout)| {
            let eps = cmd_simulate(&config, &layout, c.force)?;
            println!("wrote {} episodes to {}", eps.len(), layout.episodes_dir().display());
            Ok(exit::SUCCESS)
        }),
        Command::Train { common, variant } => resolve(common).and_then(|(config, _)| {
            let v = match variant {
                None => config.variants[0],
                Some(name) => *config
                    .variants
                    .iter()
                    .find(|v| &v.name() == name)
                    .ok_or_else(|| Error::InvalidConfig(format!("no variant named `{name}`")))?,
            };
            train_stage(common, "train", Some(vec![v]))
        }),
        Command::Crossval(c) => train_stage(c, "crossval", None),
        Command::Eval { common, checkpoint, episodes } => cmd_eval(common, checkpoint, episodes),
        Command::Report(c) => resolve(c).and_then(|(_, layout)| {
            let files = cmd_report(&layout)?;
            println!(
                "wrote {} trajectory files, {} realization files and {} plots under {}",
                files.trajectories.len(),
                files.realizations.len(),
                files.plots.len(),
                layout.report_dir().display()
            );
            Ok(exit::SUCCESS)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point of the binary.
pub fn main() -> u8 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            }
        }
    }
}
