use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
schema_version = 1
name = "small"

[domain]
kind = "unit_square"

[sigma]
kind = "point_set"
points = [[0.5, 0.0]]

[mesh]
h = 0.2

[[fields]]
name = "bump"
kind = "directional_bump"
center = [0.4, 0.3]
radius = 0.4
vector = [0.3, -0.2]
"#;

fn hardy(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hardy"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn deterministic_solve_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = hardy(d.path(), SMALL, &["--deterministic", "solve"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["small.solution.json", "small.mesh.txt", "small.minimiser.csv"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn csv_has_provenance_header_and_lf_endings() {
    let d = tempfile::tempdir().unwrap();
    let out = hardy(d.path(), SMALL, &["--emit", "csv", "solve"]);
    assert!(out.status.success());
    let text = fs::read_to_string(d.path().join("out/small.minimiser.csv")).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# hardy ") && first.contains("config_hash="));
    assert!(!text.contains('\r'));
    let header = lines.next().unwrap();
    let cols = header.split(',').count();
    assert!(lines.all(|l| l.split(',').count() == cols));
    assert!(!d.path().join("out/small.solution.json").exists());
}

#[test]
fn verify_passes_and_derivative_agrees_with_oracle() {
    let d = tempfile::tempdir().unwrap();
    let cfg = include_str!("../../../configs/default.toml");
    let out = hardy(d.path(), cfg, &["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 violations"));

    let out = hardy(d.path(), cfg, &["derivative"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("out/default.derivative.json")).unwrap()).unwrap();
    let discrepancies: Vec<f64> = find_all(&json, "discrepancy");
    assert!(!discrepancies.is_empty());
    assert!(discrepancies.iter().all(|&x| x < 0.02), "{discrepancies:?}");
}

fn find_all(v: &serde_json::Value, key: &str) -> Vec<f64> {
    match v {
        serde_json::Value::Object(m) => m
            .iter()
            .flat_map(|(k, x)| if k == key { x.as_f64().into_iter().collect() } else { find_all(x, key) })
            .collect(),
        serde_json::Value::Array(a) => a.iter().flat_map(|x| find_all(x, key)).collect(),
        _ => Vec::new(),
    }
}

#[test]
fn invalid_config_reports_a_path() {
    let d = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("h = 0.2", "h = -0.2");
    let out = hardy(d.path(), &bad, &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[CONFIG_INVALID]"), "{err}");
    assert!(err.contains("mesh.h"), "{err}");

    let out = hardy(d.path(), &SMALL.replace("schema_version = 1", "schema_version = 1\nbogus = 3"), &["solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn boundary_sweep_on_a_disk_is_flat() {
    let d = tempfile::tempdir().unwrap();
    let cfg = SMALL.split("[[fields]]").next().unwrap();
    let out = hardy(d.path(), cfg, &["boundary-sweep", "--domain", "disk", "--samples", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("out/small.boundary_sweep.json")).unwrap()).unwrap();
    let spread = json["result"]["relative_spread"].as_f64().unwrap();
    assert!(spread < 1e-6, "{spread}");
}
