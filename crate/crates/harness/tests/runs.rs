use std::path::Path;
use std::process::Command;

use neuralbayes_harness::config::{Experiment, ExperimentConfig};
use neuralbayes_harness::experiments::charts_for;
use neuralbayes_harness::manifest::{execute, manifest_path, reproduce, Manifest};
use neuralbayes_harness::table::Table;
use neuralbayes_harness::HarnessError;

fn small_linear() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("linear").unwrap();
    if let Experiment::Linear(c) = &mut cfg.experiment {
        c.m_values = vec![1, 4, 12];
        c.n_test = 400;
        c.erm_m_values = vec![2];
        c.erm_n_values = vec![100];
        c.sweep_m = 3;
        c.sweep_n = vec![100, 300];
        c.min_updates = 300;
    }
    cfg
}

fn small_figure4() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("fig4").unwrap();
    if let Experiment::Figure4(c) = &mut cfg.experiment {
        c.m_values = vec![3];
        c.n_train = 200;
        c.n_validation = 100;
        c.n_test = 100;
        c.grid.hidden = vec![vec![6]];
        c.training.epochs = 3;
        c.mcmc.chain_len = 1_500;
        c.mcmc.burn_in = 500;
    }
    cfg
}

#[test]
fn charts_are_regenerated_from_their_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = execute(&small_linear(), dir.path()).unwrap();
    let mut charts = 0;
    for file in manifest.csv_files() {
        let table = Table::from_csv(&std::fs::read(dir.path().join(&file.path)).unwrap()).unwrap();
        for (name, chart) in charts_for(&file.path, &table).unwrap() {
            assert_eq!(
                chart.render().into_bytes(),
                std::fs::read(dir.path().join(&name)).unwrap(),
                "{name}"
            );
            charts += 1;
        }
    }
    assert!(charts >= 3);
    assert_eq!(
        Manifest::load(&manifest_path(dir.path())).unwrap().files,
        manifest.files
    );
}

#[test]
fn figure4_tables_have_one_row_per_test_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = execute(&small_figure4(), dir.path()).unwrap();
    let rows = Table::from_csv(&std::fs::read(dir.path().join("figure4_m3.csv")).unwrap()).unwrap();
    assert_eq!(
        rows.header,
        ["theta", "bayes_estimate", "mcmc_estimate", "neural_estimate"]
    );
    assert_eq!(rows.rows.len(), 100);
    for column in ["theta", "bayes_estimate", "mcmc_estimate", "neural_estimate"] {
        assert!(rows.floats(column).unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
    }
    assert!(manifest.files.iter().any(|f| f.path == "figure4_m3.ckpt"));
    assert!(manifest.seeds.contains_key("figure4-train-m3"));
}

#[test]
fn missing_checkpoints_are_an_orchestration_error() {
    let mut cfg = small_figure4();
    if let Experiment::Figure4(c) = &mut cfg.experiment {
        c.checkpoints = Some("/nonexistent/checkpoints".into());
    }
    let err = execute(&cfg, tempfile::tempdir().unwrap().path()).unwrap_err();
    assert!(matches!(err, HarnessError::Orchestration(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn saved_checkpoints_reproduce_the_trained_estimates() {
    let first = tempfile::tempdir().unwrap();
    execute(&small_figure4(), first.path()).unwrap();
    let mut cfg = small_figure4();
    if let Experiment::Figure4(c) = &mut cfg.experiment {
        c.checkpoints = Some(first.path().to_path_buf());
    }
    let second = tempfile::tempdir().unwrap();
    execute(&cfg, second.path()).unwrap();
    let read = |dir: &Path| Table::from_csv(&std::fs::read(dir.join("figure4_m3.csv")).unwrap()).unwrap();
    assert_eq!(read(first.path()), read(second.path()));
}

#[test]
fn tampered_manifests_fail_to_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = execute(&ExperimentConfig::preset("bounds").unwrap(), dir.path()).unwrap();
    let again = tempfile::tempdir().unwrap();
    assert!(!reproduce(&manifest, again.path()).unwrap().checked.is_empty());
    manifest.files[0].sha256 = "0".repeat(64);
    let err = reproduce(&manifest, again.path()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let mut edited = Manifest::load(&manifest_path(dir.path())).unwrap();
    edited.config_toml = edited.config_toml.replace("delta = 0.05", "delta = 0.1");
    assert!(matches!(
        reproduce(&edited, again.path()),
        Err(HarnessError::Reproduction(_))
    ));
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_neuralbayes");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "id = \"x\"\n[experiment]\nkind = \"linear\"\nm_values = []\n").unwrap();
    let status = Command::new(bin)
        .args([
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "--config",
            bad.to_str().unwrap(),
            "reproduce",
            "linear",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let out = dir.path().join("bounds");
    let status = Command::new(bin)
        .args(["--out", out.to_str().unwrap(), "bounds"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(bin)
        .args([
            "--out",
            dir.path().join("again").to_str().unwrap(),
            "reproduce",
            "bounds",
            "--manifest",
        ])
        .arg(manifest_path(&out))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let printed = Command::new(bin).args(["config", "fig4"]).output().unwrap();
    let cfg = ExperimentConfig::from_toml(&String::from_utf8(printed.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::preset("fig4").unwrap());
}
