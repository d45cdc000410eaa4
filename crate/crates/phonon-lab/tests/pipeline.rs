//! End-to-end tests of the CLI binary and the figure pipelines:
//! exit codes, emitted files, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_phonon-lab");

fn run(args: &[&str], out_dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out_dir)
        .env_remove("PHONON_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path
}

const NOISELESS: &str = "defaults = \"paper\"\n[synth]\nseed = 7\naverages = 0\n";

#[test]
fn design_emits_report_and_exits_zero() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["design"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("design.json")).unwrap()).unwrap();
    let fsr = report["acoustic"]["fsr_hz"].as_f64().unwrap();
    assert!((fsr - 6.04e6).abs() < 1e3, "fsr {fsr}");
    assert!(report["operating_pair"]["stokes_suppression"].as_f64().unwrap() >= 1000.0);
}

#[test]
fn reproduce_fig2_noiseless_recovers_configured_truth() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), NOISELESS);
    let out = run(
        &["reproduce", "fig2", "--config", config.to_str().unwrap()],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("fig2_report.json")).unwrap(),
    )
    .unwrap();
    let gamma0 = report["regression"]["gamma0"].as_f64().unwrap();
    let p1 = report["regression"]["power_at_unity_c"].as_f64().unwrap();
    let g0 = report["g0_hz"].as_f64().unwrap();
    assert!((gamma0 - 600.0).abs() < 0.6, "gamma0 {gamma0}");
    assert!((p1 - 22.8e-6).abs() < 2.3e-8, "p1 {p1}");
    assert!((g0 - 6.08).abs() < 0.01, "g0 {g0}");
    assert!(tmp.path().join("fig2_fits.csv").exists());
    assert!(tmp.path().join("fig2_plot.gp").exists());
    assert!(tmp.path().join("omit_00.csv").exists());
    assert!(tmp.path().join("omia_00.csv").exists());
}

#[test]
fn reproduce_fig3_reports_ground_state_occupation() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), NOISELESS);
    let out = run(
        &["reproduce", "fig3", "--config", config.to_str().unwrap()],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("fig3_report.json")).unwrap(),
    )
    .unwrap();
    let n_lw = report["final_occupation_linewidth"].as_f64().unwrap();
    assert!(n_lw < 0.4, "occupation {n_lw}");
    assert!(tmp.path().join("fig3_cooling.csv").exists());
    assert!(tmp.path().join("psd_00.csv").exists());
}

#[test]
fn invalid_figure_name_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["reproduce", "fig9"], tmp.path());
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unknown_config_key_is_config_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "defaults = \"paper\"\n[system]\ntypo = 1\n");
    let out = run(&["design", "--config", config.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn unstable_geometry_is_physics_error() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "defaults = \"paper\"\n[hbar]\nlength = 0.2\n",
    );
    let out = run(&["design", "--config", config.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_without_grid_is_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["sweep"], tmp.path());
    assert_eq!(out.status.code(), Some(64));
}

const SWEEP_CONFIG: &str = r#"
defaults = "paper"
[synth]
seed = 7
averages = 0
[[sweep.axes]]
parameter = "alignment.transverse_offset"
values = [0.0, 2.0e-6, 4.0e-6, 6.0e-6]
"#;

#[test]
fn sweep_is_byte_identical_across_jobs_and_replays() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), SWEEP_CONFIG);
    let mut outputs = Vec::new();
    for jobs in ["1", "16", "16"] {
        let out_dir = TempDir::new().unwrap();
        let out = run(
            &["sweep", "--config", config.to_str().unwrap(), "--jobs", jobs],
            out_dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(out_dir.path().join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "jobs=1 vs jobs=16 differ");
    assert_eq!(outputs[1], outputs[2], "replay differs");
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 5, "header + 4 rows");
}

#[test]
fn env_var_sets_output_directory() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("from-env");
    let output = Command::new(BIN)
        .arg("design")
        .env("PHONON_LAB_OUT", &out_dir)
        .output()
        .expect("binary runs");
    assert!(output.status.success());
    assert!(out_dir.join("design.json").exists());
}

#[test]
fn reproduce_is_reproducible_byte_for_byte() {
    let config_dir = TempDir::new().unwrap();
    let config = write_config(
        config_dir.path(),
        "defaults = \"paper\"\n[synth]\nseed = 11\naverages = 200\n",
    );
    let mut reports = Vec::new();
    for _ in 0..2 {
        let tmp = TempDir::new().unwrap();
        let out = run(
            &["reproduce", "fig2", "--config", config.to_str().unwrap()],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push((
            fs::read(tmp.path().join("fig2_report.json")).unwrap(),
            fs::read(tmp.path().join("omit_03.csv")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
}
