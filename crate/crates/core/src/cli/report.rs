use std::fs;
use std::path::PathBuf;

use crate::data::{make_folds, Episode};
use crate::error::Error;
use crate::pose::Se2Pose;
use crate::stats::median;
use crate::train::{episode_realizations, evaluate};

use super::config::ExperimentConfig;
use super::run::{csv_error, csv_writer, load_episodes, load_model, require, RunLayout};
use super::svg::{self, Series};
use super::tables::Metric;

const STAGE: &str = "crossval";

/// Files written by [`cmd_report`].
#[derive(Debug, Clone, Default)]
pub struct ReportFiles {
    pub trajectories: Vec<PathBuf>,
    pub realizations: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

fn xyt(p: &Se2Pose) -> [String; 3] {
    [p.x.to_string(), p.y.to_string(), p.theta.to_string()]
}

/// Trajectory CSVs, realization data and SVG plots of a completed crossval run.
pub fn cmd_report(layout: &RunLayout) -> Result<ReportFiles, Error> {
    require(&[layout.config()])?;
    let config = ExperimentConfig::load(&layout.config())?;
    let plan = make_folds(config.episodes, config.folds)?;
    let mut expected = vec![layout.stage(STAGE).join("folds.csv")];
    for v in &config.variants {
        for r in 0..config.repeats {
            for f in 0..plan.folds.len() {
                expected.push(layout.checkpoint(STAGE, v, r, f));
            }
        }
    }
    expected.extend((0..config.episodes).map(|i| layout.episode(&config.episode_id(i))));
    require(&expected)?;
    let episodes = load_episodes(&config, layout)?;
    let hash = config.hash();
    let out = layout.report_dir();
    let mut files = ReportFiles::default();
    let metric = Metric::for_scenario(config.scenario);
    let mut groups = Vec::new();

    let first_eval = plan.folds[0].evaluation()[0];
    for v in &config.variants {
        let mut values = Vec::new();
        for r in 0..config.repeats {
            for (f, fold) in plan.folds.iter().enumerate() {
                let model = load_model(&layout.checkpoint(STAGE, v, r, f))?;
                let eval_eps: Vec<&Episode> = fold.evaluation().iter().map(|&i| &episodes[i]).collect();
                let report = evaluate(&model, &eval_eps)?;
                values.extend(report.episodes.iter().map(|e| match metric {
                    Metric::HeadingMaeDeg => e.heading_mae_deg,
                    Metric::FinalPositionErrorMm => e.final_position_error_mm,
                }));
                for &i in fold.evaluation() {
                    let e = &episodes[i];
                    let path = out.join("trajectories").join(v.name()).join(format!("r{r}_{}.csv", e.id()));
                    let mut w = csv_writer(&path, &hash)?;
                    w.write_record([
                        "t", "true_x", "true_y", "true_theta", "odom_x", "odom_y", "odom_theta", "pred_x", "pred_y",
                        "pred_theta",
                    ])
                    .map_err(csv_error)?;
                    let mut pred_path = Vec::with_capacity(e.len());
                    for s in &e.samples {
                        let y_hat = model.predict(&s.x)?;
                        let pred = e.header.target.compose(&y_hat.invert()).to_se2();
                        let mut row = vec![s.t.to_string()];
                        row.extend(xyt(&s.p_true.to_se2()));
                        row.extend(xyt(&s.p_odom.to_se2()));
                        row.extend(xyt(&pred));
                        w.write_record(&row).map_err(csv_error)?;
                        pred_path.push((pred.x, pred.y));
                    }
                    w.flush()?;
                    files.trajectories.push(path);
                    if r == 0 && f == 0 && i == first_eval {
                        let svg = svg::paths(
                            &format!("{}: {}", v.label(), e.id()),
                            &hash,
                            &[
                                Series {
                                    label: "true",
                                    color: "black",
                                    width: 1.5,
                                    opacity: 1.0,
                                    points: e.samples.iter().map(|s| (s.p_true.position[0], s.p_true.position[1])).collect(),
                                },
                                Series {
                                    label: "odometry",
                                    color: "#d62728",
                                    width: 1.5,
                                    opacity: 1.0,
                                    points: e.samples.iter().map(|s| (s.p_odom.position[0], s.p_odom.position[1])).collect(),
                                },
                                Series { label: "predicted", color: "#1f77b4", width: 1.0, opacity: 0.6, points: pred_path },
                            ],
                        );
                        let path = out.join("plots").join(format!("trajectory_{}_{}.svg", v.name(), e.id()));
                        write_file(&path, &svg)?;
                        files.plots.push(path);
                    }
                }
            }
        }
        groups.push((v.name(), values));
    }

    let path = out.join("plots").join("comparison.svg");
    write_file(&path, &svg::boxes(metric.title(), &hash, &groups))?;
    files.plots.push(path);
    let path = out.join("comparison_medians.csv");
    let mut w = csv_writer(&path, &hash)?;
    w.write_record(["variant", "n", &format!("median_{}", metric.name())]).map_err(csv_error)?;
    for (name, values) in &groups {
        let m = median(values).map(|m| m.to_string()).unwrap_or_default();
        w.write_record([name.clone(), values.len().to_string(), m]).map_err(csv_error)?;
    }
    w.flush()?;

    // realizations of the first evaluation episode
    let e = &episodes[first_eval];
    let seed = config.train_config(&config.variants[0], 0).seed;
    let real = episode_realizations(e, config.train.loss.n_mc, seed)?;
    let path = out.join("realizations").join(format!("{}.csv", e.id()));
    let mut w = csv_writer(&path, &hash)?;
    w.write_record(["trajectory", "t", "x", "y", "theta"]).map_err(csv_error)?;
    let exact: Vec<Se2Pose> = real.exact().iter().map(|p| p.to_se2()).collect();
    let mut named: Vec<(String, &[Se2Pose])> = vec![("exact".into(), &exact), ("measured".into(), real.measured())];
    for k in 0..real.n_mc() {
        named.push((format!("mc{k}"), real.draw(k)));
    }
    for (name, traj) in &named {
        for (t, p) in traj.iter().enumerate() {
            let mut row = vec![name.clone(), t.to_string()];
            row.extend(xyt(p));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush()?;
    files.realizations.push(path);
    let mut series: Vec<Series> = (0..real.n_mc())
        .map(|k| Series {
            label: "realizations",
            color: "#7f7f7f",
            width: 0.7,
            opacity: 0.35,
            points: real.draw(k).iter().map(|p| (p.x, p.y)).collect(),
        })
        .collect();
    series.push(Series { label: "measured", color: "#d62728", width: 1.5, opacity: 1.0, points: real.measured().iter().map(|p| (p.x, p.y)).collect() });
    series.push(Series { label: "exact", color: "black", width: 1.5, opacity: 1.0, points: exact.iter().map(|p| (p.x, p.y)).collect() });
    let path = out.join("plots").join(format!("realizations_{}.svg", e.id()));
    write_file(&path, &svg::paths(&format!("{} odometry realizations: {}", real.n_mc(), e.id()), &hash, &series))?;
    files.plots.push(path);
    Ok(files)
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}
