use std::path::Path;
use std::process::{Command, Output};

fn deltaprime(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltaprime"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SCATTER_SWEEP: &str = r#"{
  "sweep": { "hbar_values": [0.1, 0.07, 0.049, 0.0343, 0.02401], "kind": "scatter" }
}"#;

#[test]
fn sweep_output_is_independent_of_threads_and_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.json", SCATTER_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let o = deltaprime(&[
            "sweep",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# deltaprime "));
    assert!(text.lines().any(|l| l.starts_with("# slope: ")));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
}

#[test]
fn json_sweep_has_rows_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.json", SCATTER_SWEEP);
    let o = deltaprime(&["sweep", "--config", &config, "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert!(v["trailer"]["slope"].as_f64().unwrap() >= 3.0);
    assert_eq!(v["config"]["sweep"]["kind"], "scatter");
}

#[test]
fn evolve_writes_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "evolve.json",
        r#"{ "grid": { "x_max": 20, "n": 2048 } }"#,
    );
    let o = deltaprime(&["evolve", "--config", &config, "--t", "1.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0].split(',').count(), 8);
    assert_eq!(data.len(), 2049);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{ "model": { "hbar": 0.1, "mass2": 1 } }"#,
    );
    let o = deltaprime(&["sweep", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model"));

    let negative = write_config(dir.path(), "neg.json", r#"{ "model": { "hbar": -0.1 } }"#);
    assert_eq!(
        deltaprime(&["bound", "--config", &negative]).status.code(),
        Some(2)
    );
    assert_eq!(
        deltaprime(&["sweep", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(deltaprime(&["evolve"]).status.code(), Some(2));

    let inadmissible = write_config(
        dir.path(),
        "inadm.json",
        r#"{ "sweep": { "times": [2.0] } }"#,
    );
    assert_eq!(
        deltaprime(&["sweep", "--config", &inadmissible])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn bound_table_has_all_terms() {
    let o = deltaprime(&["bound", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let columns: Vec<&str> = v["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    for name in [
        "hbar",
        "underline_h",
        "t",
        "eta",
        "dynamics",
        "waveop",
        "scatter",
    ] {
        assert!(columns.contains(&name), "{name}");
    }
    assert!(!v["rows"].as_array().unwrap().is_empty());
}
