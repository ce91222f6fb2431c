use std::fmt::Write as _;

use crate::data::{Episode, FoldPlan, ScenarioKind};
use crate::error::Error;
use crate::stats::{median, wilcoxon_signed_rank, Alternative, WilcoxonResult, MIN_PAIRED_LEN};
use crate::train::{evaluate_odometry, EvalReport};

use super::config::{ExperimentConfig, VariantSpec};
use super::run::{csv_error, csv_writer, write_text, CrossvalResults, RunLayout};

/// The metric compared across variants, one value per evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    HeadingMaeDeg,
    FinalPositionErrorMm,
}

impl Metric {
    pub fn for_scenario(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Wall => Metric::HeadingMaeDeg,
            ScenarioKind::Docking => Metric::FinalPositionErrorMm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::HeadingMaeDeg => "heading_mae_deg",
            Metric::FinalPositionErrorMm => "final_position_error_mm",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::HeadingMaeDeg => "Mean absolute heading error (deg), lower is better",
            Metric::FinalPositionErrorMm => "Final position error (mm), lower is better",
        }
    }
}

/// Per-episode metric values of one variant, keyed by (repeat, fold, episode).
pub fn metric_values(results: &CrossvalResults, variant: &VariantSpec, metric: Metric) -> Vec<((usize, usize, String), f64)> {
    let mut out = Vec::new();
    for run in results.of(variant) {
        let Ok(f) = &run.result else { continue };
        for e in &f.report.episodes {
            let v = match metric {
                Metric::HeadingMaeDeg => e.heading_mae_deg,
                Metric::FinalPositionErrorMm => e.final_position_error_mm,
            };
            out.push(((run.repeat, run.fold, e.id.clone()), v));
        }
    }
    out
}

/// Significance stars in the usual three levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "n.s."
    }
}

/// Linear-interpolation quantile of a non-empty sample.
fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Outcome of one configured paired comparison.
#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub a: VariantSpec,
    pub b: VariantSpec,
    pub pairs: usize,
    pub test: Result<WilcoxonResult, String>,
}

/// Runs the configured comparisons between `variants` on runs matched by
/// repeat, fold and episode.
pub fn compare(config: &ExperimentConfig, variants: &[VariantSpec], results: &CrossvalResults) -> Vec<ComparisonOutcome> {
    let metric = Metric::for_scenario(config.scenario);
    let known = |s: &VariantSpec| variants.iter().any(|v| v.name() == s.name());
    config
        .comparisons
        .iter()
        .filter(|c| known(&c.a) && known(&c.b))
        .map(|c| {
            let a = metric_values(results, &c.a, metric);
            let b = metric_values(results, &c.b, metric);
            let (mut xa, mut xb) = (Vec::new(), Vec::new());
            for (key, va) in &a {
                if let Some((_, vb)) = b.iter().find(|(k, _)| k == key) {
                    xa.push(*va);
                    xb.push(*vb);
                }
            }
            let test = if xa.len() < MIN_PAIRED_LEN {
                Err(format!("only {} matched pairs, need {MIN_PAIRED_LEN}", xa.len()))
            } else {
                wilcoxon_signed_rank(&xa, &xb, config.alternative).map_err(|e| e.to_string())
            };
            ComparisonOutcome { a: c.a, b: c.b, pairs: xa.len(), test }
        })
        .collect()
}

fn alternative_phrase(alt: Alternative) -> &'static str {
    match alt {
        Alternative::Less => "one-sided, H1: a < b",
        Alternative::Greater => "one-sided, H1: a > b",
        Alternative::TwoSided => "two-sided",
    }
}

/// Box-plot summary table of the per-episode metric of every variant.
fn distribution_table(config: &ExperimentConfig, variants: &[VariantSpec], results: &CrossvalResults, out: &mut String) {
    let metric = Metric::for_scenario(config.scenario);
    let _ = writeln!(out, "{}", metric.title());
    let _ = writeln!(
        out,
        "{:<24} {:>4} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "variant", "n", "median", "q1", "q3", "min", "max"
    );
    for v in variants {
        let xs: Vec<f64> = metric_values(results, v, metric).into_iter().map(|(_, x)| x).collect();
        if xs.is_empty() {
            let _ = writeln!(out, "{:<24} {:>4} {:>9}", v.label(), 0, "-");
            continue;
        }
        let _ = writeln!(
            out,
            "{:<24} {:>4} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            v.label(),
            xs.len(),
            quantile(&xs, 0.5),
            quantile(&xs, 0.25),
            quantile(&xs, 0.75),
            quantile(&xs, 0.0),
            quantile(&xs, 1.0)
        );
    }
}

fn tests_table(config: &ExperimentConfig, outcomes: &[ComparisonOutcome], out: &mut String) {
    if outcomes.is_empty() {
        return;
    }
    let _ = writeln!(out, "\nWilcoxon signed-rank tests on matched runs ({})", alternative_phrase(config.alternative));
    for c in outcomes {
        let name = format!("{} vs {}", c.a.label(), c.b.label());
        match &c.test {
            Ok(t) => {
                let _ = writeln!(
                    out,
                    "{name:<52} n={:<3} W={:<7} p={:.6} {}{}",
                    t.n,
                    t.statistic,
                    t.p_value,
                    stars(t.p_value),
                    if t.exact { "" } else { " (normal approx.)" }
                );
            }
            Err(msg) => {
                let _ = writeln!(out, "{name:<52} untested: {msg}");
            }
        }
    }
    let _ = writeln!(out, "* p<0.05  ** p<0.01  *** p<0.001");
}

/// Docking summary: odometry baseline plus one row per variant, pooled over
/// repeats of the evaluation episodes.
fn localization_table(variants: &[VariantSpec], episodes: &[Episode], plan: &FoldPlan, results: &CrossvalResults, out: &mut String) -> Result<(), Error> {
    let _ = writeln!(out, "Localization on evaluation episodes (medians over episodes and repeats)");
    let _ = writeln!(
        out,
        "{:<24} {:>12} {:>12} {:>12} {:>8} {:>8} {:>12}",
        "model", "final_pos_mm", "final_hdg_deg", "pos_rmse_mm", "R2_x", "R2_y", "hdg_mae_deg"
    );
    let mut eval_ids: Vec<usize> = plan.folds.iter().flat_map(|f| f.evaluation().iter().copied()).collect();
    eval_ids.sort_unstable();
    eval_ids.dedup();
    let eval_eps: Vec<&Episode> = eval_ids.iter().map(|&i| &episodes[i]).collect();
    let odo = evaluate_odometry(&eval_eps)?;
    write_localization_row(out, "odometry", &[&odo]);
    for v in variants {
        let reports: Vec<&EvalReport> = results.of(v).filter_map(|r| r.result.as_ref().ok()).map(|f| &f.report).collect();
        write_localization_row(out, &v.label(), &reports);
    }
    Ok(())
}

fn write_localization_row(out: &mut String, name: &str, reports: &[&EvalReport]) {
    let eps: Vec<_> = reports.iter().flat_map(|r| r.episodes.iter()).collect();
    let m = |f: &dyn Fn(&crate::train::EpisodeEval) -> f64| median(&eps.iter().map(|e| f(e)).collect::<Vec<_>>());
    let agg = |f: &dyn Fn(&EvalReport) -> Option<f64>| median(&reports.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
    let show = |x: Option<f64>, prec: usize| x.map_or("-".to_string(), |v| format!("{v:.prec$}"));
    let _ = writeln!(
        out,
        "{:<24} {:>12} {:>12} {:>12} {:>8} {:>8} {:>12}",
        name,
        show(m(&|e| e.final_position_error_mm), 1),
        show(m(&|e| e.final_heading_error_deg), 2),
        show(agg(&|r| Some(r.position_rmse_mm)), 1),
        show(agg(&|r| r.r2[0]), 3),
        show(agg(&|r| r.r2[1]), 3),
        show(agg(&|r| Some(r.heading_mae_deg)), 2),
    );
}

/// Per-run metrics when there is nothing to compare.
fn runs_table(results: &CrossvalResults, out: &mut String) {
    let _ = writeln!(
        out,
        "\n{:<24} {:>6} {:>4} {:>10} {:>10} {:>8} {:>8} {:>8} {:>10}",
        "variant", "repeat", "fold", "hdg_mae", "rmse_mm", "R2_x", "R2_y", "R2_z", "quat_dist"
    );
    for run in &results.runs {
        let Ok(f) = &run.result else { continue };
        let r = &f.report;
        let r2 = |i: usize| r.r2[i].map_or("-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            out,
            "{:<24} {:>6} {:>4} {:>10.3} {:>10.1} {:>8} {:>8} {:>8} {:>10.4}",
            run.variant.label(),
            run.repeat,
            run.fold,
            r.heading_mae_deg,
            r.position_rmse_mm,
            r2(0),
            r2(1),
            r2(2),
            r.mean_quat_dist
        );
    }
}

/// Writes `summary.txt`, `boxplot.csv` and `tests.csv` for a training stage
/// over `variants`.
pub fn write_comparison(
    config: &ExperimentConfig,
    layout: &RunLayout,
    stage: &str,
    episodes: &[Episode],
    variants: &[VariantSpec],
    results: &CrossvalResults,
) -> Result<String, Error> {
    let hash = config.hash();
    let dir = layout.stage(stage);
    let metric = Metric::for_scenario(config.scenario);
    let outcomes = compare(config, variants, results);

    let mut summary = String::new();
    let _ = writeln!(summary, "scenario={} seed={} repeats={}", config.scenario.name(), config.seed, config.repeats);
    if results.diverged() > 0 {
        let _ = writeln!(summary, "diverged runs: {} (excluded)", results.diverged());
    }
    distribution_table(config, variants, results, &mut summary);
    if variants.len() > 1 {
        tests_table(config, &outcomes, &mut summary);
    } else {
        runs_table(results, &mut summary);
    }
    if config.scenario == ScenarioKind::Docking {
        summary.push('\n');
        localization_table(variants, episodes, &results.plan, results, &mut summary)?;
    }
    write_text(&dir.join("summary.txt"), &hash, &summary)?;

    // one column per variant, one row per matched (repeat, fold, episode)
    let columns: Vec<Vec<((usize, usize, String), f64)>> =
        variants.iter().map(|v| metric_values(results, v, metric)).collect();
    let mut keys: Vec<(usize, usize, String)> = columns.iter().flat_map(|c| c.iter().map(|(k, _)| k.clone())).collect();
    keys.sort();
    keys.dedup();
    let mut w = csv_writer(&dir.join("boxplot.csv"), &hash)?;
    let mut header = vec!["repeat".to_string(), "fold".to_string(), "episode".to_string()];
    header.extend(variants.iter().map(|v| v.name()));
    w.write_record(&header).map_err(csv_error)?;
    for k in &keys {
        let mut row = vec![k.0.to_string(), k.1.to_string(), k.2.clone()];
        for c in &columns {
            row.push(c.iter().find(|(kk, _)| kk == k).map(|(_, v)| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("tests.csv"), &hash)?;
    w.write_record(["a", "b", "metric", "alternative", "pairs", "n", "zeros_dropped", "statistic", "p_value", "exact", "stars"])
        .map_err(csv_error)?;
    for c in &outcomes {
        let mut row = vec![c.a.name(), c.b.name(), metric.name().to_string(), config.alternative.name().to_string(), c.pairs.to_string()];
        match &c.test {
            Ok(t) => row.extend([
                t.n.to_string(),
                t.zeros_dropped.to_string(),
                t.statistic.to_string(),
                t.p_value.to_string(),
                t.exact.to_string(),
                stars(t.p_value).to_string(),
            ]),
            Err(msg) => row.extend([String::new(), String::new(), String::new(), String::new(), String::new(), format!("untested: {msg}")]),
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(summary)
}
