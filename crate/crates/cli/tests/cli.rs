use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const ZZ: &str = r#"{"n": 2, "terms": [{"coeff": 1.0, "ops": [[0, "Z"], [1, "Z"]]}]}"#;
const ZZZ: &str =
    r#"{"n": 3, "coupled_terms": [{"gamma": 1.0, "sites": [[0, "Z"], [1, "Z"], [2, "Z"]]}]}"#;

fn wgadget(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgadget"))
        .args(args)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn desk_build_records_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let g = dir.path().join("g.json");
    let out = wgadget(&[
        "build",
        "--target",
        s(&t),
        "--desk",
        "--R",
        "2",
        "--C",
        "2",
        "--J",
        "40",
        "-o",
        s(&g),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&g);
    assert_eq!(v["plan"]["Delta"], 80.0);
    assert_eq!(v["plan"]["kind"], "two_body");
    assert_eq!(v["n_total"], 6);
}

#[test]
fn verify_passes_and_fails_by_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let g = dir.path().join("g.json");
    wgadget(&[
        "build",
        "--target",
        s(&t),
        "--desk",
        "--R",
        "2",
        "--C",
        "2",
        "--J",
        "40",
        "-o",
        s(&g),
    ]);
    let r = dir.path().join("r.json");
    let ok = wgadget(&[
        "verify",
        "--target",
        s(&t),
        "--gadget",
        s(&g),
        "--levels",
        "4",
        "--eps",
        "0.3",
        "-o",
        s(&r),
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&r);
    assert_eq!(v["report"]["pass"], true);
    assert_eq!(v["plan"]["Delta"], 80.0);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let strict = wgadget(&[
        "verify",
        "--target",
        s(&t),
        "--gadget",
        s(&g),
        "--levels",
        "4",
        "--eps",
        "0.001",
    ]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let csv = dir.path().join("out.csv");
    let out = wgadget(&[
        "sweep",
        "--target",
        s(&t),
        "--vary",
        "Delta",
        "--values",
        "40,80,160",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "param,value,max_abs_error,beta_max,J,n_total,runtime_ms,pass"
    );
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let g = dir.path().join("g.json");
    wgadget(&[
        "build",
        "--target",
        s(&t),
        "--desk",
        "--R",
        "1",
        "--C",
        "2",
        "--J",
        "100",
        "-o",
        s(&g),
    ]);
    let run = |name: &str| {
        let p = dir.path().join(name);
        wgadget(&[
            "selfenergy",
            "--target",
            s(&t),
            "--gadget",
            s(&g),
            "--z-points",
            "5",
            "-o",
            s(&p),
        ]);
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn bad_pauli_label_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(
        dir.path(),
        "t.json",
        r#"{"n": 1, "terms": [{"coeff": 1, "ops": [[0, "Q"]]}]}"#,
    );
    let out = wgadget(&[
        "build",
        "--target",
        s(&t),
        "--desk",
        "--R",
        "1",
        "--C",
        "1",
        "--J",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("terms[0].ops[0]"), "{err}");
}

#[test]
fn oversized_asymptotic_plan_exits_with_resource_status() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let out = wgadget(&["build", "--target", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn three_local_input_goes_to_build3() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZZ);
    let out = wgadget(&[
        "build",
        "--target",
        s(&t),
        "--desk",
        "--R",
        "1",
        "--C",
        "1",
        "--J",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let g = dir.path().join("g.json");
    let ok = wgadget(&[
        "build3",
        "--target",
        s(&t),
        "--delta1",
        "64",
        "--delta2",
        "100000",
        "--R",
        "1",
        "--C",
        "1",
        "-o",
        s(&g),
    ]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert_eq!(json(&g)["plan"]["kind"], "serial");
}

#[test]
fn amplified_gadget_verifies_against_the_scaled_target() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let g = dir.path().join("g.json");
    let out = wgadget(&[
        "amplify",
        "--target",
        s(&t),
        "--theta",
        "3",
        "--R",
        "2",
        "--C",
        "2",
        "--J",
        "160",
        "-o",
        s(&g),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = dir.path().join("r.json");
    let v = wgadget(&[
        "verify",
        "--target",
        s(&t),
        "--gadget",
        s(&g),
        "--theta",
        "3",
        "--levels",
        "4",
        "--eps",
        "0.15",
        "-o",
        s(&r),
    ]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(
        json(&r)["report"]["target_eigs"],
        serde_json::json!([-3.0, -3.0, 3.0, 3.0])
    );
}

#[test]
fn subspace_and_demo_commands_report() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let g = dir.path().join("g.json");
    wgadget(&[
        "build",
        "--target",
        s(&t),
        "--desk",
        "--R",
        "1",
        "--C",
        "2",
        "--J",
        "100",
        "-o",
        s(&g),
    ]);
    let r = dir.path().join("s.json");
    let out = wgadget(&["subspace", "--gadget", s(&g), "--trials", "3", "-o", s(&r)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&r)["report"]["subspace"]["ok"], true);

    let t3 = write(dir.path(), "t3.json", ZZZ);
    let d = dir.path().join("d.json");
    let out = wgadget(&[
        "demo-appxC",
        "--target",
        s(&t3),
        "--deltas",
        "100,1000,10000",
        "-o",
        s(&d),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&d)["report"]["experimental"], true);
}

#[test]
fn missing_desk_fields_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let out = wgadget(&["build", "--target", s(&t), "--desk", "--R", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_logs_are_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t.json", ZZ);
    let out = Command::new(env!("CARGO_BIN_EXE_wgadget"))
        .args([
            "--json-logs",
            "build",
            "--target",
            s(&t),
            "--desk",
            "--R",
            "1",
            "--C",
            "1",
            "--J",
            "50",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    let first: Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert!(first["fields"]["plan"].is_string());
}
