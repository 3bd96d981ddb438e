use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SHORT: &str = "duration_s = 3600\nworkload.interval_s = 200\n";

fn cidor_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cidor-sim"))
        .args(args)
        .env("CIDOR_SIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.conf");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn missing_map_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "mobility.map = nowhere.map\n");
    let out = dir.path().join("out");
    let o = cidor_sim(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mobility.map"));
    assert!(!out.join("run.csv").exists());
}

#[test]
fn unknown_sweep_key_is_rejected_before_running() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let out = dir.path().join("sweep");
    let o = cidor_sim(&[
        "sweep",
        "--config",
        &cfg,
        "--vary",
        "warp.factor=1,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn same_seed_same_csv_and_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = cidor_sim(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "7",
            "--trace",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((
            fs::read(out.join("run.csv")).unwrap(),
            fs::read(out.join("trace.log")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("7,epsw,"));
    assert!(!outputs[0].1.is_empty());
}

#[test]
fn sweep_writes_one_row_per_run_and_report_reaggregates() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let out = dir.path().join("sweep");
    let o = cidor_sim(&[
        "sweep",
        "--config",
        &cfg,
        "--vary",
        "router=epidemic,snw",
        "--vary",
        "ttl_s=100,500",
        "--seeds",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_lines(&out.join("runs.csv")), 12);
    assert_eq!(data_lines(&out.join("aggregate.csv")), 4);
    assert!(out.join("config.effective").exists());

    let swept = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    fs::remove_file(out.join("aggregate.csv")).unwrap();
    let o = cidor_sim(&["report", "--in", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), swept);
    assert_eq!(
        fs::read_to_string(out.join("aggregate.csv")).unwrap(),
        swept
    );
}

#[test]
fn report_without_runs_fails() {
    let dir = TempDir::new().unwrap();
    let o = cidor_sim(&["report", "--in", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
