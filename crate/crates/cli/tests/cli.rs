use std::path::Path;
use std::process::{Command, Output};

fn pentalab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pentalab"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("PENTALAB_PRECISION")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// CSV rows below the two header comments and the column line.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn gen_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        assert!(pentalab(dir.path(), &["gen", "--d", "3", "--n", "7", "--seed", "1"]).status.success());
    }
    let text = read(a.path(), "polygon.json");
    let b_text = read(b.path(), "polygon.json").replace(&*b.path().to_string_lossy(), &*a.path().to_string_lossy());
    assert_eq!(text, b_text);
    assert!(text.contains("\"tag\": \"polygon.generate\""));
    assert!(text.contains("\"backend\": \"rational\""));
}

#[test]
fn same_directory_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--d", "3", "--n", "7", "--seed", "1", "--backend", "float", "--precision", "128"];
    pentalab(dir.path(), &args);
    let first = read(dir.path(), "polygon.json");
    pentalab(dir.path(), &args);
    assert_eq!(first, read(dir.path(), "polygon.json"));
}

#[test]
fn rational_conservation_has_zero_drift() {
    let dir = tempfile::tempdir().unwrap();
    let out = pentalab(dir.path(), &["conserve", "--d", "3", "--n", "5", "--steps", "10", "--backend", "rational"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "drift.csv");
    assert!(csv.starts_with("# tag=lax.conservation_report\n# config={"));
    let rows = rows(&csv);
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn continuous_limit_has_slope_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = pentalab(dir.path(), &["climit", "--d", "2", "--grid", "32", "--eps", "0.08,0.04,0.02"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "climit.json")).unwrap();
    for s in report["slopes"].as_array().unwrap() {
        assert!((s.as_f64().unwrap() - 2.0).abs() <= 0.1, "{s}");
    }
    assert_eq!(rows(&read(dir.path(), "climit.csv")).len(), 3);
}

#[test]
fn map_reads_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    pentalab(dir.path(), &["gen", "--d", "2", "--n", "5"]);
    let input = dir.path().join("polygon.json");
    let out = pentalab(dir.path(), &["map", "--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let image = read(dir.path(), "image.json");
    assert!(image.contains("pentagram.pentagram_map"));
    let out = pentalab(dir.path(), &["orbit", "--input", input.to_str().unwrap(), "--steps", "3"]);
    assert!(out.status.success());
    let orbit: serde_json::Value = serde_json::from_str(&read(dir.path(), "orbit.json")).unwrap();
    assert_eq!(orbit.as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pentalab(dir.path(), &["gen", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(pentalab(dir.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(pentalab(dir.path(), &["gen", "--d", "3", "--n", "4"]).status.code(), Some(2));
    assert_eq!(pentalab(dir.path(), &["gen", "--precision", "20"]).status.code(), Some(2));
    assert_eq!(pentalab(dir.path(), &["xcheck-monodromy", "--d", "2", "--n", "5"]).status.code(), Some(2));
    assert_eq!(pentalab(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn precision_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pentalab"))
        .args(["gen", "--backend", "float", "--out-dir"])
        .arg(dir.path())
        .env("PENTALAB_PRECISION", "96")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(read(dir.path(), "polygon.json").contains("\"precision\": 96"));
}

#[test]
fn check_commands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectral", "--d", "3", "--n", "5"],
        vec!["genus", "--d", "3", "--n", "7"],
        vec!["rank", "--d", "3", "--n", "5"],
        vec!["closed-check", "--n", "7", "--tol", "1e-25"],
        vec!["xcheck-monodromy", "--d", "3", "--n", "5", "--backend", "float"],
        vec!["scaling-check", "--d", "4", "--n", "7", "--samples", "3"],
        vec!["kdv-shift-check", "--d", "2", "--grid", "32"],
        vec!["kdv-evolve", "--d", "2", "--grid", "32", "--steps", "20"],
    ] {
        let out = pentalab(dir.path(), &args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let genus: serde_json::Value = serde_json::from_str(&read(dir.path(), "genus.json")).unwrap();
    assert_eq!(genus["genus"], 9);
    let rank: serde_json::Value = serde_json::from_str(&read(dir.path(), "rank.json")).unwrap();
    assert_eq!(rank["rank"], rank["expected"]);
    let closed: serde_json::Value = serde_json::from_str(&read(dir.path(), "closed.json")).unwrap();
    assert_eq!(closed["within_tol"], true);
    let spectral: serde_json::Value = serde_json::from_str(&read(dir.path(), "spectral.json")).unwrap();
    assert_eq!(spectral["labels"]["G"].as_array().unwrap().len(), 3);
    assert!(rows(&read(dir.path(), "scaling.csv")).iter().all(|r| r[4] == "0e0"));
}

#[test]
fn quick_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = pentalab(dir.path(), &["verify", "--level", "quick"]);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{table}");
    assert!(table.starts_with("# config={"));
    assert_eq!(table.matches("PASS").count(), 9);
    assert_eq!(table.matches("SKIP").count(), 2);
}
