use std::fs;
use std::process::Command;

use pme_lab::field_io::{read_field, write_field};
use pme_lab::harness::{run_experiment, ExperimentConfig};
use pme_lab::{GridField, PeriodicGrid};

fn small_rate_config(dir: &std::path::Path) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "experiment": "rate1d",
            "dimension": 1,
            "n": 256,
            "kernel": {{ "family": "laplace" }},
            "epsilons": [0.2, 0.1, 0.05],
            "horizon": 0.05,
            "referenceN": 128,
            "snapshots": 3,
            "outputDir": {:?}
        }}"#,
        dir
    );
    serde_json::from_str(&text).unwrap()
}

#[test]
fn identical_configs_give_identical_rows() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = run_experiment(&small_rate_config(a.path())).unwrap();
    let ob = run_experiment(&small_rate_config(b.path())).unwrap();
    assert_eq!(oa.checks, ob.checks);
    let ra = fs::read(a.path().join("rows.csv")).unwrap();
    let rb = fs::read(b.path().join("rows.csv")).unwrap();
    assert!(!ra.is_empty());
    assert_eq!(ra, rb);
    assert!(a.path().join("summary.json").exists());
}

#[test]
fn rejects_unknown_experiment() {
    let bad = r#"{"experiment":"nope","dimension":1,"n":64,"kernel":{"family":"laplace"},"epsilons":[0.1],"horizon":0.1,"outputDir":"x"}"#;
    assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
}

fn pme() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pme"))
}

#[test]
fn cli_w2_between_shifted_bumps() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PeriodicGrid::new(1, 128).unwrap();
    let bump = |c: f64| {
        let v: Vec<f64> = (0..128)
            .map(|j| {
                let x = j as f64 / 128.0;
                (-(x - c).powi(2) / 0.002).exp() + 1e-3
            })
            .collect();
        let total: f64 = v.iter().sum::<f64>() / 128.0;
        GridField::density(grid, v.into_iter().map(|x| x / total).collect()).unwrap()
    };
    let (pa, pb) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    write_field(&pa, &bump(0.4)).unwrap();
    write_field(&pb, &bump(0.5)).unwrap();
    assert_eq!(read_field(&pa).unwrap(), bump(0.4));
    let out = pme().arg("w2").arg(&pa).arg(&pb).output().unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let d = json["distance"].as_f64().unwrap();
    assert!((d - 0.1).abs() < 5e-3, "{d}");
}

#[test]
fn cli_validate_kernel_exit_codes() {
    let ok = pme()
        .args([
            "validate-kernel",
            "--family",
            "matern",
            "--s",
            "2",
            "--n",
            "256",
        ])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let missing = pme()
        .args(["run", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
