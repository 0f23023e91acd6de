use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vzsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vzsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn compile_prints_time_ordered_gates() {
    let dir = tempfile::tempdir().unwrap();
    let asym = vzsim(&["compile", "Y", "--strategy", "asym"], dir.path());
    assert!(asym.status.success());
    assert_eq!(stdout(&asym).trim(), "Rz(-pi), X");
    let sym = vzsim(&["compile", "Y", "--strategy", "sym"], dir.path());
    assert_eq!(stdout(&sym).trim(), "Rz(-pi/2), X, Rz(pi/2)");
    let xbar = vzsim(&["compile", "xbar"], dir.path());
    assert_eq!(stdout(&xbar).trim(), "Rz(pi), X, Rz(-pi)");
    let minus = vzsim(&["compile", "Xbar", "--xbar-variant", "minus-first"], dir.path());
    assert_eq!(stdout(&minus).trim(), "Rz(-pi), X, Rz(pi)");
}

#[test]
fn compile_unknown_gate_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = vzsim(&["compile", "Q"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Q"));
}

#[test]
fn equiv_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = vzsim(&["equiv", "XY4:asym", "UR4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("EQUIVALENT (global phase -1)"), "{}", stdout(&o));
    let o = vzsim(&["equiv", "XY4:sym", "UR4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("NOT EQUIVALENT"));
    let o = vzsim(&["equiv", "YY:sym", "YY:sym"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = vzsim(&["equiv", "XY4:asym@2", "UR4@2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = vzsim(&["equiv", "XY4:asym", "UR4@2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn equiv_bad_spec_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    for args in [["equiv", "XY5", "UR4"], ["equiv", "XY4:sideways", "UR4"], ["equiv", "UR4:asym", "UR4"]] {
        let o = vzsim(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn fold_json_has_phases_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let o = vzsim(&["fold", "XY4:asym", "--json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let phases: Vec<f64> = v["pulses"].as_array().unwrap().iter().map(|p| p["phase_rad"].as_f64().unwrap()).collect();
    assert_eq!(phases, vec![0.0, std::f64::consts::PI, std::f64::consts::PI, 0.0]);
    assert_eq!(v["total_duration_ns"].as_f64().unwrap(), 227.2);
}

#[test]
fn simulate_noiseless_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let o = vzsim(&["simulate", "XY4:sym", "--cycles", "3", "--initial", "plus_i", "--noiseless", "--shots", "0"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().find(|l| l.starts_with("fidelity_exact")).unwrap().to_string();
    let f: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(f > 1.0 - 1e-7, "{line}");
}

#[test]
fn simulate_reports_sampled_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "YY:asym", "--cycles", "4", "--initial", "minus_i", "--t1-us", "5", "--seed", "9"];
    let a = vzsim(&args, dir.path());
    let b = vzsim(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("800 shots, seed 9"));
}

#[test]
fn simulate_exports_drive_field() {
    let dir = tempfile::tempdir().unwrap();
    for envelope in ["gaussian", "cosine-ramp"] {
        let args = ["simulate", "XY4", "--shots", "0", "--envelope", envelope, "--drive-csv", "drive.csv"];
        assert!(vzsim(&args, dir.path()).status.success());
        let text = fs::read_to_string(dir.path().join("drive.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_ns,re,im");
        assert_eq!(lines.len(), 2 + 2272);
        assert!(lines.last().unwrap().starts_with("227.200000,"));
    }
}

#[test]
fn help_documents_units_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["compile", "fold", "equiv", "simulate", "sweep", "fit"] {
        let o = vzsim(&[sub, "--help"], dir.path());
        assert!(o.status.success(), "{sub}");
    }
    let help = stdout(&vzsim(&["simulate", "--help"], dir.path()));
    for needle in ["in ns", "in us", "rad/ns", "experimental value", "assumed"] {
        assert!(help.contains(needle), "simulate --help lacks `{needle}`");
    }
}

const SMALL_CONFIG: &str = r#"{
  "sequences": [{"name": "XY4", "strategy": "asym"}, {"name": "UR4"}, {"name": "YY", "strategy": "sym"}],
  "cycle_counts": [1, 2, 3, 4, 5, 6, 7, 8],
  "noise": {"quasistatic_sigma_rad_per_ns": 0},
  "seed": 17,
  "output_path": "out/small.csv"
}"#;

#[test]
fn sweep_writes_deterministic_results_and_fit_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.json"), SMALL_CONFIG).unwrap();
    let first = vzsim(&["sweep", "small.json"], dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv1 = fs::read(dir.path().join("out/small.csv")).unwrap();
    let json1 = fs::read(dir.path().join("out/small.json")).unwrap();
    let second = vzsim(&["sweep", "small.json", "--output", "again.csv"], dir.path());
    assert!(second.status.success());
    assert_eq!(csv1, fs::read(dir.path().join("again.csv")).unwrap());
    assert_eq!(json1, fs::read(dir.path().join("again.json")).unwrap());

    let text = String::from_utf8(csv1).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 8);
    assert!(stdout(&first).contains("XY4:asym@1"));

    let fit = vzsim(&["fit", "again.csv"], dir.path());
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    assert!(stdout(&fit).contains("T_D(XY4:asym) >= T_D(UR4:sym)"), "{}", stdout(&fit));
    let sampled = vzsim(&["fit", "again.csv", "--column", "sampled"], dir.path());
    assert!(sampled.status.success());
}

#[test]
fn sweep_timestamp_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.json"), SMALL_CONFIG).unwrap();
    let o = vzsim(&["sweep", "small.json", "--output", "t.csv", "--timestamp", "1700000000"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(v["manifest"]["timestamp_unix"], 1700000000);
}

#[test]
fn sweep_missing_config_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = vzsim(&["sweep", "absent.json", "--output", "x.csv"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.json"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn sweep_invalid_config_names_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"sequences": [{"name": "YY"}], "tau_ns": 10, "t_g_ns": 20}"#).unwrap();
    let o = vzsim(&["sweep", "bad.json", "--output", "x.csv"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tau_ns") && err.contains("t_g_ns"), "{err}");
    assert!(!dir.path().join("x.csv").exists());
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bundled_fig3_config_reproduces_identical_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("fig3_sequence_zoo.json");
    let o = vzsim(&["sweep", cfg.to_str().unwrap(), "--output", "fig3.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&dir.path().join("fig3.csv"));
    let curve = |seq: &str, strat: &str| -> Vec<(u64, f64)> {
        rows.iter()
            .filter(|r| r[0] == seq && r[1] == strat)
            .map(|r| (r[3].parse().unwrap(), r[5].parse().unwrap()))
            .collect()
    };
    let labels: std::collections::BTreeSet<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    assert_eq!(labels.len(), 5);
    assert_eq!(rows.len(), 5 * 320);
    let xy4 = curve("XY4", "asym");
    let ur4 = curve("UR4", "sym");
    assert_eq!(xy4.len(), 320);
    for (a, b) in xy4.iter().zip(&ur4) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() <= 1e-7);
    }
    let yy = curve("YY", "sym");
    assert_eq!(yy.last().unwrap().0, 640);
}

#[test]
fn bundled_fig5_config_oscillations_shrink_with_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("fig5_interval_sweep.json");
    let o = vzsim(&["sweep", cfg.to_str().unwrap(), "--output", "fig5.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("fig5.json")).unwrap()).unwrap();
    let amp = |label: &str| {
        sidecar["fits"]
            .as_array()
            .unwrap()
            .iter()
            .find(|f| f["label"] == label)
            .unwrap()["osc_amplitude"]
            .as_f64()
            .unwrap()
    };
    let (a1, a2, a3) = (amp("XY4:sym@1"), amp("XY4:sym@2"), amp("XY4:sym@3"));
    assert!(a1 > a2 && a2 > a3, "{a1} {a2} {a3}");
}
