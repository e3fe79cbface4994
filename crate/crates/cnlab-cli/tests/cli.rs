//! End-to-end checks of the command-line surface: exit codes, format
//! contracts and byte-identical reruns.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cnlab")
}

fn write_small_p1_config(path: &Path) {
    let doc = serde_json::json!({
        "schema_version": 1,
        "generators": [
            {"interval": ["-2", "2"], "density": {"type": "uniform"}}
        ],
        "precision_bits": 192,
        "max_degree": 12,
        "table_points": 64,
        "orthogonality_degree": 4
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

#[test]
fn gen_system_then_limits_roundtrip() {
    let dir = tempdir("gen-limits");
    let config = dir.join("config.json");
    let status = Command::new(bin())
        .args(["gen-system", "--preset", "p1"])
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(config.exists());

    let out = dir.join("out");
    let status = Command::new(bin())
        .args(["limits", "--max-degree", "12"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("limits.csv")).unwrap();
    assert!(csv.starts_with("i,j,value,error,drift\n"));
    assert!(out.join("verdicts-limits.json").exists());
}

#[test]
fn overlapping_intervals_exit_code_2() {
    let dir = tempdir("overlap");
    let config = dir.join("config.json");
    let doc = serde_json::json!({
        "schema_version": 1,
        "generators": [
            {"interval": ["-1", "0.2"], "density": {"type": "uniform"}},
            {"interval": ["0.1", "1.5"], "density": {"type": "uniform"}}
        ],
        "max_degree": 12
    });
    std::fs::write(&config, serde_json::to_string(&doc).unwrap()).unwrap();
    let status = Command::new(bin())
        .arg("mop-run")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempdir("determinism");
    let config = dir.join("config.json");
    write_small_p1_config(&config);
    let run = |out: &Path| {
        let status = Command::new(bin())
            .arg("mop-run")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        std::fs::read(out.join("recurrence.csv")).unwrap()
    };
    let first = run(&dir.join("out1"));
    let second = run(&dir.join("out2"));
    assert_eq!(first, second, "CSV output must be deterministic");
    assert!(String::from_utf8_lossy(&first).starts_with("n,j,a_value\n"));
}

#[test]
fn report_aggregates_and_propagates_failure() {
    let dir = tempdir("report");
    let out = dir.join("out");
    std::fs::create_dir_all(&out).unwrap();
    // no verdict files: configuration error
    let status = Command::new(bin())
        .arg("report")
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // a failing verdict file propagates exit code 1
    let doc = serde_json::json!({
        "schema_version": 1,
        "manifest": {"version": "0", "config_hash": "x", "created_unix": 0},
        "experiment": "synthetic",
        "verdicts": [
            {"id": "a", "description": "d", "residual": 2.0, "tolerance": 1.0, "status": "fail"}
        ],
        "files": []
    });
    std::fs::write(out.join("verdicts-synthetic.json"), doc.to_string()).unwrap();
    let status = Command::new(bin())
        .arg("report")
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("cnlab-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
