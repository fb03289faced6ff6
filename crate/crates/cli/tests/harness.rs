use std::collections::HashSet;
use std::path::Path;
use std::process::Command;

use arm_core::sbn::{Checkpoint, LayerStack};
use arm_harness::config::SyntheticSpec;
use arm_harness::data::{generate_synthetic, load_plaintext_binary_images, write_plaintext_binary_images};
use arm_harness::toy::run_toy;
use arm_harness::train::run_train_vae;
use arm_harness::variance::run_variance_report;
use arm_harness::{ConfigOverrides, DatasetSpec, Experiment, ExperimentConfig, GradientSource, ToyOptimizer};

fn arm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_arm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path, experiment: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{experiment}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"seed": 7, "p0": 0.3, "iterations": 20, "estimators": ["arm"]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = arm(&[
        "toy",
        "--config",
        cfg_path.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out, "toy");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["p0"], 0.3);
    assert_eq!(m["config"]["iterations"], 20);
    assert_eq!(m["config"]["estimators"], serde_json::json!(["arm"]));
    assert_eq!(m["config"]["stepsize"], 0.1);
    assert_eq!(m["experiment"], "toy");
}

#[test]
fn invalid_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        arm(&["toy", "--estimators", "bogus", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(arm(&["toy", "--p0", "1.5", "--out", out]).status.code(), Some(2));
    assert_eq!(
        arm(&["train-vae", "--estimators", "reinforce", "--out", out])
            .status
            .code(),
        Some(2)
    );
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(
        arm(&["toy", "--config", cfg_path.to_str().unwrap(), "--out", out])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_dataset_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = format!("file:{}", dir.path().join("missing.txt").display());
    let o = arm(&[
        "train-vae",
        "--dataset",
        &missing,
        "--iters",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let corrupt = dir.path().join("corrupt.txt");
    std::fs::write(&corrupt, "0 1 0 1\n0 1 2 1\n").unwrap();
    let spec = format!("file:{}", corrupt.display());
    let o = arm(&[
        "train-vae",
        "--dataset",
        &spec,
        "--iters",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn plaintext_images_round_trip_and_train_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
    let images: Vec<_> = data.all().cloned().collect();
    let path = dir.path().join("images.txt");
    write_plaintext_binary_images(&path, &images).unwrap();
    assert_eq!(load_plaintext_binary_images(&path, Some(36)).unwrap(), images);

    let mut cfg = ExperimentConfig::defaults(Experiment::TrainVae);
    cfg.dataset = DatasetSpec::File(path);
    cfg.iterations = 20;
    cfg.eval_every = 10;
    cfg.smoothing_window = 10;
    cfg.k = 2;
    let outcome = run_train_vae(&cfg).unwrap();
    assert_eq!(outcome.summary.steps, 20);
    assert!(outcome.summary.final_test.is_finite());
}

#[test]
fn synthetic_dataset_is_deterministic_and_splits_are_disjoint() {
    let spec = SyntheticSpec::default();
    let a = generate_synthetic(&spec).unwrap();
    let b = generate_synthetic(&spec).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    assert_eq!((a.train.len(), a.valid.len(), a.test.len()), (86, 20, 20));
    let all: HashSet<_> = a.all().cloned().collect();
    assert_eq!(all.len(), 126);
    let train: HashSet<_> = a.train.iter().collect();
    assert!(a.valid.iter().chain(&a.test).all(|x| !train.contains(x)));
    let other = generate_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
    assert_ne!(other.train, a.train);
}

#[test]
fn exact_gradient_trace_decreases_the_objective_monotonically() {
    let mut cfg = ExperimentConfig::defaults(Experiment::Toy);
    cfg.p0 = 0.51;
    cfg.iterations = 300;
    cfg.estimators = vec![GradientSource::True];
    let trace = &run_toy(&cfg).unwrap()[0];
    let sigmas: Vec<f64> = trace.rows.iter().map(|r| r.sigma).collect();
    assert_eq!(sigmas.len(), 301);
    assert!(
        sigmas[10..].windows(2).all(|w| w[1] <= w[0]),
        "sigma must keep falling toward 0"
    );
    assert!(trace.final_sigma < 0.01);
}

#[test]
fn toy_variance_column_matches_closed_form_near_the_origin() {
    let mut cfg = ExperimentConfig::defaults(Experiment::Toy);
    cfg.optimizer = ToyOptimizer::Sgd;
    cfg.iterations = 400;
    cfg.variance_every = 50;
    cfg.variance_samples = 20_000;
    cfg.estimators = vec![GradientSource::Estimator(arm_core::EstimatorKind::Arm)];
    let trace = &run_toy(&cfg).unwrap()[0];
    let mut checked = 0;
    for r in trace.rows.iter().filter(|r| r.grad_variance.is_some()) {
        let (est, exact) = (r.grad_variance.unwrap(), r.analytic_variance.unwrap());
        assert!(r.phi.abs() <= 1.0);
        assert!(
            (est - exact).abs() <= 0.1 * exact,
            "phi {} est {est} exact {exact}",
            r.phi
        );
        checked += 1;
    }
    assert!(checked >= 8);
}

#[test]
fn reinforce_spread_at_zero_logit_matches_closed_form() {
    let mut cfg = ExperimentConfig::defaults(Experiment::VarianceReport);
    cfg.k = 200_000;
    cfg.grid.lo = 0.0;
    cfg.grid.hi = 0.0;
    cfg.estimators = vec![GradientSource::Estimator(arm_core::EstimatorKind::Reinforce)];
    let rows = run_variance_report(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let (f0, f1) = (cfg.p0 * cfg.p0, (1.0 - cfg.p0) * (1.0 - cfg.p0));
    let expected = (f1 + f0).abs() / 4.0;
    assert!(
        (rows[0].std - expected).abs() <= 0.05 * expected,
        "{} vs {expected}",
        rows[0].std
    );
}

#[test]
fn training_on_blank_images_reduces_the_loss_and_checkpoints_reload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.txt");
    write_plaintext_binary_images(&path, &vec![vec![0u8; 16]; 40]).unwrap();
    let mut cfg = ExperimentConfig::defaults(Experiment::TrainVae);
    cfg.out = dir.path().join("out");
    cfg.dataset = DatasetSpec::File(path);
    cfg.latent = vec![4];
    cfg.iterations = 300;
    cfg.eval_every = 100;
    cfg.stepsize = 1e-2;
    cfg.k = 5;
    let outputs = arm_harness::execute(&cfg).unwrap();
    assert_eq!(outputs.len(), 3);

    let (header, rows) = read_csv(&cfg.out.join("train_vae.csv"));
    assert_eq!(header, arm_harness::train::TRAIN_HEADER);
    let tests: Vec<f64> = rows
        .iter()
        .filter(|r| !r[5].is_empty())
        .map(|r| r[5].parse().unwrap())
        .collect();
    assert!(tests.last().unwrap() < &(0.5 * tests[0]), "{tests:?}");
    for cell in rows.iter().flat_map(|r| r[3..].iter()).filter(|c| !c.is_empty()) {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{cell}");
    }

    let ck = Checkpoint::load(&cfg.out.join("train_vae.checkpoint.json")).unwrap();
    let m = manifest(&cfg.out, "train_vae");
    let mut init = arm_core::RngStream::new(99, 0).sampler();
    let mut stack =
        LayerStack::with_architecture(cfg.arch, 16, 4, arm_core::sbn::DEFAULT_LEAKY_SLOPE, &mut init).unwrap();
    ck.restore(&mut stack).unwrap();
    assert_eq!(m["summary"]["steps"], 300);
    assert!(m["version"].as_str().unwrap().contains('+'));
}

#[test]
fn config_file_round_trips_through_the_resolved_form() {
    let cfg = ExperimentConfig::defaults(Experiment::TrainMle);
    let text = serde_json::to_string(&cfg).unwrap();
    let file = ConfigOverrides::from_json(&text).unwrap();
    let back = ExperimentConfig::resolve(Experiment::TrainMle, file, ConfigOverrides::default()).unwrap();
    assert_eq!(back, cfg);
}
