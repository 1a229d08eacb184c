use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn facetflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facetflow")).args(args).output().unwrap()
}

fn run_mode(sub: &str, file: &str, out: &Path) -> Output {
    let sc = scenario(file);
    facetflow(&[sub, "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
}

fn validate(report: &Path) {
    let schema: Value = serde_json::from_str(
        &fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json")).unwrap(),
    )
    .unwrap();
    let instance: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", report.display());
}

#[test]
fn every_subcommand_succeeds_and_reports_valid_json() {
    for (sub, file) in [
        ("classify", "classify_ball.json"),
        ("classify", "classify_annulus.json"),
        ("evolve", "evolve_1d.json"),
        ("pde", "pde_annulus.json"),
        ("compare", "compare_1d.json"),
        ("onset", "onset_annulus.json"),
        ("sweep", "sweep_threshold.json"),
    ] {
        let out = tempfile::tempdir().unwrap();
        let o = run_mode(sub, file, out.path());
        assert_eq!(o.status.code(), Some(0), "{sub} {file}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "--quiet printed output");
        validate(&out.path().join("report.json"));
        assert!(out.path().join("metadata.json").exists());
    }
}

#[test]
fn mode_mismatch_and_parse_errors_exit_1() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_mode("pde", "classify_ball.json", out.path()).status.code(), Some(1));
    let bad = out.path().join("bad.json");
    fs::write(&bad, "{\"mode\": \"classify\",").unwrap();
    let o = facetflow(&["classify", "--scenario", bad.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at line"));
    let o = facetflow(&["evolve", "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_an_error() {
    let out = tempfile::tempdir().unwrap();
    let sc = scenario("sweep_threshold.json");
    let o = Command::new(env!("CARGO_BIN_EXE_facetflow"))
        .args(["sweep", "--scenario", sc.to_str().unwrap(), "--out", out.path().to_str().unwrap()])
        .env("FACETFLOW_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_output_does_not_depend_on_threads() {
    let sc = scenario("sweep_threshold.json");
    let mut tables = Vec::new();
    for threads in ["1", "4"] {
        let out = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_facetflow"))
            .args(["sweep", "--scenario", sc.to_str().unwrap(), "--out", out.path().to_str().unwrap()])
            .env("FACETFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        tables.push(fs::read(out.path().join("phase.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn energy_increase_maps_to_exit_2() {
    assert_eq!(facetflow::scenario::exit_code(&facetflow::Error::EnergyIncrease { step: 3, increase: 1e-3 }), 2);
    assert_eq!(facetflow::scenario::exit_code(&facetflow::Error::Validation("x".into())), 1);
}

#[test]
fn selftest_reports_every_criterion() {
    let out = tempfile::tempdir().unwrap();
    let o = facetflow(&["selftest", "--out", out.path().to_str().unwrap(), "--seed", "7"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("criterion")).count(), 11, "{stdout}");
    validate(&out.path().join("report.json"));
    let r: Value = serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    let passed = r["passed"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if passed { 0 } else { 2 }));
}
