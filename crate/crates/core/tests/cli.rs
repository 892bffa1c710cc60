use std::fs;
use std::path::Path;
use std::process::Command;

use nucmv::cli::{main_with, run, ExperimentConfig, Task};

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        m: 16,
        words_per_length: 4,
        bloch_samples: 32,
        grid: Some(16),
        walk_steps: 6,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn certify_bundle_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ca = small(a.path());
    let cb = ExperimentConfig { out: b.path().to_path_buf(), ..ca.clone() };
    run(Task::Certify, &ca).unwrap();
    run(Task::Certify, &cb).unwrap();
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa.len(), 7);
    let without_out = |bytes: &[u8]| {
        let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na == "report.json" {
            assert_eq!(without_out(da), without_out(db));
        } else {
            assert_eq!(da, db, "{na} differs");
        }
    }
}

#[test]
fn certify_report_carries_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    run(Task::Certify, &small(dir.path())).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["splits"], true);
    assert!((report["r_v"].as_f64().unwrap() - 0.7898).abs() < 1e-3);
    assert_eq!(report["spectra"]["certified_violations"], 0);
    assert!(report["certificate"]["regions"].as_array().unwrap().len() >= 3);
}

#[test]
fn figures_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(Task::Figures, &small(a.path())).unwrap();
    run(Task::Figures, &small(b.path())).unwrap();
    assert_eq!(read_all(a.path()), read_all(b.path()));
    let svg = fs::read_to_string(a.path().join("form_region.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("red"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    let body = serde_json::json!({
        "coin": { "family": "g0", "xi": 0.3, "eta": 0.9 },
        "phases": { "kind": "torus" },
        "M": 12, "words_per_length": 2, "bloch_samples": 16, "walk_steps": 4,
        "out": out,
    });
    fs::write(&cfg, body.to_string()).unwrap();
    let code = main_with(["nucmv", "run", "certify", "--family", "drift", "--M", "64", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["M"], 12);
    assert_eq!(report["g"], 0.0);
    assert_eq!(report["config"]["phases"]["kind"], "torus");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(main_with(["nucmv", "run", "certify", "--xi", "7", "--out", out]), 2);
    assert_eq!(main_with(["nucmv", "run", "certify", "--coin", "{\"alpha\": [1, 0]}", "--out", out]), 2);
    assert_eq!(main_with(["nucmv", "run", "figures", "--theta", "4", "--out", out]), 2);
    assert_eq!(main_with(["nucmv", "run", "nonsense"]), 2);
}

#[test]
fn binary_runs_figures() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_nucmv"))
        .args(["run", "figures", "--theta", "0.8", "--g", "0.3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("cubic_boundary.csv").is_file());
}
