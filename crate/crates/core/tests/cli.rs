use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
scenario = \"wall\"
episodes = 6
[wall]
duration_s = 8.0
[train]
max_epochs = 2
batches_per_epoch = 4
validation_batches = 2
[train.loss]
n_mc = 4
pairs_per_batch = 8
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-ssl")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn setup(dir: &Path) -> String {
    let config = dir.join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    config.to_str().unwrap().to_string()
}

#[test]
fn pipeline_runs_and_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();

    let report = run(&["report", "--out", out_s]);
    assert_eq!(code(&report), 2, "report before simulate: {}", String::from_utf8_lossy(&report.stderr));
    assert!(String::from_utf8_lossy(&report.stderr).contains("missing"));

    assert_eq!(code(&run(&["simulate", "--config", &config, "--out", out_s])), 0);
    assert!(out.join("episodes/wall-05.episode").exists());
    assert!(out.join("config.toml").exists());
    assert_eq!(code(&run(&["simulate", "--config", &config, "--out", out_s])), 1, "overwrite without --force");
    assert_eq!(code(&run(&["simulate", "--out", out_s, "--force"])), 0, "config taken from the run directory");

    let missing = run(&["report", "--out", out_s]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("crossval"));

    let cv = run(&["crossval", "--out", out_s]);
    assert_eq!(code(&cv), 0, "{}", String::from_utf8_lossy(&cv.stderr));
    let summary = String::from_utf8_lossy(&cv.stdout);
    assert!(summary.contains("uncertain (λ_sc=1)") && summary.contains("Wilcoxon"), "{summary}");

    assert_eq!(code(&run(&["report", "--out", out_s])), 0);
    for f in ["report/comparison_medians.csv", "report/plots/comparison.svg", "crossval/tests.csv", "crossval/folds.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(text.contains("config_hash="), "{f}");
    }
    let realizations = std::fs::read_to_string(out.join("report/realizations/wall-00.csv")).unwrap();
    assert!(realizations.contains("\nmc3,") && realizations.contains("\nmeasured,"));

    let ckpt = out.join("crossval/uncertain_sc1/r0_fold00.ckpt");
    let eval = run(&["eval", "--out", out_s, "--checkpoint", ckpt.to_str().unwrap(), "--episode", "wall-00"]);
    assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));
    assert!(out.join("eval/r0_fold00.csv").exists());
    let eval = run(&["eval", "--out", out_s, "--checkpoint", ckpt.to_str().unwrap(), "--episode", "nope"]);
    assert_eq!(code(&eval), 2);

    assert_eq!(code(&run(&["train", "--out", out_s, "--variant", "bogus"])), 1);
}

#[test]
fn invalid_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "episodes = 6\ncolour = \"red\"\n").unwrap();
    let out = dir.path().join("run");
    let o = run(&["simulate", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
    std::fs::write(&bad, "episodes = 1\n").unwrap();
    assert_eq!(code(&run(&["simulate", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn episodes_from_another_config_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&run(&["simulate", "--config", &config, "--out", out_s])), 0);
    let o = run(&["crossval", "--config", &config, "--out", out_s, "--seed", "5"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}
