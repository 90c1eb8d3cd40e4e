//! The binary end to end: outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn cantorlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cantorlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value =
        serde_json::from_str(&cantorlab::preset("zero-map").unwrap().to_json()).unwrap();
    edit(&mut v);
    let path = dir.join("config.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn small_commands() {
    let o = cantorlab(&["--base", "factorial", "expand", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "N,L,digits\n5,1,1 2\n");

    let o = cantorlab(&["--base", "2", "--map", "radical-inverse", "eval", "3"]);
    assert_eq!(stdout(&o), "n,f\n3,0.75\n");

    let o = cantorlab(&[
        "--base",
        "2",
        "--map",
        "radical-inverse",
        "discrepancy",
        "--n",
        "4",
    ]);
    assert_eq!(stdout(&o).trim(), "0.25");

    let o = cantorlab(&["preset-list"]);
    assert!(stdout(&o).contains("regimeC-ternary"));
}

#[test]
fn experiment_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cantorlab(&[
        "--preset",
        "zero-map",
        "--out",
        out.to_str().unwrap(),
        "experiment",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn print_config_feeds_back_in() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantorlab(&["--preset", "example-II", "experiment", "--print-config"]);
    let path = dir.path().join("c.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let o2 = cantorlab(&[
        "--config",
        path.to_str().unwrap(),
        "experiment",
        "--print-config",
    ]);
    assert_eq!(o.stdout, o2.stdout);
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(
        cantorlab(&["--preset", "nope", "experiment"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["grid"]["pitch"] = (-1.0).into());
    let o = cantorlab(&["--config", &cfg, "experiment"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.pitch"));
}

#[test]
fn resource_limit_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["enumeration_cap"] = 100.into());
    assert_eq!(
        cantorlab(&["--config", &cfg, "experiment"]).status.code(),
        Some(3)
    );
}

#[test]
fn conditional_totals_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| {
        v["map"] =
            serde_json::json!({"family": "custom-table", "levels": [[0.0, 0.5], [0.0, 0.25]]});
        v["n"] = serde_json::json!({"list": [4, 8]});
    });
    let o = cantorlab(&["--config", &cfg, "experiment"]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).lines().count(), 3);
}
