//! End-to-end checks of the binary: determinism of outputs, config
//! validation, and exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdg"))
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

#[test]
fn fool_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fool.json");
    write(
        &cfg,
        r#"{
            "class": { "zoo": { "name": "half_arcs", "n": 8 } },
            "eps": 0.5,
            "trials": 5,
            "seed": 21,
            "learner": "mw"
        }"#,
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["fool", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in [
        "fool_summary.csv",
        "fool_transcripts.jsonl",
        "fool_run.json",
    ] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(
        &cfg,
        r#"{
            "class": { "zoo": { "name": "cube", "n": 3 } },
            "eps": 0.5,
            "bogus_knob": 17
        }"#,
    );
    let output = bin()
        .args(["fool", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bogus_knob"), "stderr: {stderr}");
}

#[test]
fn dims_reports_known_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dims.json");
    write(
        &cfg,
        r#"{ "class": { "zoo": { "name": "cube", "n": 3 }, "symmetrize": false } }"#,
    );
    let out = dir.path().join("out");
    let output = bin()
        .args(["dims", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("dims.json")).unwrap()).unwrap();
    assert_eq!(doc["vc"], 3);
    assert_eq!(doc["ldim"], 3);
    assert_eq!(doc["dual_ldim"], 1);
    assert_eq!(doc["dual_bound_holds"], true);
}

#[test]
fn class_file_loading_works() {
    let dir = tempfile::tempdir().unwrap();
    let class_file = dir.path().join("thresholds4.cls");
    write(&class_file, "4 5\n0000\n0001\n0011\n0111\n1111\n");
    let cfg = dir.path().join("dims.json");
    write(
        &cfg,
        &format!(
            r#"{{ "class": {{ "file": {:?}, "symmetrize": false }} }}"#,
            class_file
        ),
    );
    let out = dir.path().join("out");
    let output = bin()
        .args(["dims", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("dims.json")).unwrap()).unwrap();
    assert_eq!(doc["vc"], 1);
}

#[test]
fn trials_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fool.json");
    write(
        &cfg,
        r#"{
            "class": { "zoo": { "name": "half_arcs", "n": 4 } },
            "eps": 0.5,
            "trials": 50,
            "seed": 2
        }"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["fool", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--trials", "3"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("fool_summary.csv")).unwrap();
    // Comment, header, three rows.
    assert_eq!(csv.trim_end().lines().count(), 5);
    assert!(csv.starts_with("# sdg-cli"));
}

#[test]
fn audit_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("audit.json");
    write(
        &cfg,
        r#"{ "mechanism": "randomized_response", "trials": 20000, "seed": 5, "alpha": 1.0 }"#,
    );
    let out = dir.path().join("out");
    let status = bin()
        .args(["audit", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("audit_report.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["violation"], false);
}
