//! End-to-end tests of the `vcslab` binary: exit codes, report schemas,
//! determinism, and the cache directory.

use std::path::Path;
use std::process::{Command, Output};

fn vcslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn vcslab_env(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vcslab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON document")
}

#[test]
fn eigsys_example() {
    let out = vcslab(&["eigsys", "--n", "3", "--z", "0.3:0,0.4:1.5708"]);
    assert!(out.status.success());
    let doc = json_of(&out);
    let eig: Vec<f64> = doc["results"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, want) in eig.iter().zip([0.5, 1.0, 1.5]) {
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
    assert!(doc["residuals"]["orthonormality"].as_f64().unwrap() <= 1e-11);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["results"]["construction"], "closed-form");
}

#[test]
fn unknown_flag_exits_one() {
    let out = vcslab(&["eigsys", "--does-not-exist"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("usage") || err.contains("error"), "{err}");
}

#[test]
fn bad_tuple_exits_one() {
    for spec in ["1.5:0", "0.3;0", "abc", "0.3:0,,"] {
        let out = vcslab(&["eigsys", "--z", spec]);
        assert_eq!(out.status.code(), Some(1), "tuple '{spec}'");
    }
}

#[test]
fn mismatched_n_exits_one() {
    let out = vcslab(&["eigsys", "--n", "4", "--z", "0.3:0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn su11_audit_assert_exits_two_with_anomaly() {
    let out = vcslab(&[
        "su11-audit",
        "--fock",
        "3",
        "--radial",
        "64",
        "--angular",
        "16",
        "--assert",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json_of(&out);
    assert_eq!(doc["assert"]["passed"], false);
    let failures = doc["assert"]["failures"].as_array().unwrap();
    assert!(
        failures
            .iter()
            .any(|f| f.as_str().unwrap().contains("0.27216")),
        "anomaly value must be listed: {failures:?}"
    );
    let top = &doc["results"]["audit"]["anomaly_entries"][0];
    assert!((top["value"].as_f64().unwrap() - 6f64.sqrt() / 9.0).abs() <= 1e-9);
}

#[test]
fn frame_n3_assert_passes() {
    let out = vcslab(&[
        "frame", "--n", "3", "--fock", "3", "--radial", "48", "--angular", "8", "--assert",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert!(doc["residuals"]["offdiag_max"].as_f64().unwrap() <= 1e-10);
    assert_eq!(doc["results"]["audit"]["paper_consistent"], true);
    // defaults are recorded
    assert_eq!(doc["params"]["radial"], 48);
    assert_eq!(doc["params"]["angular"], 8);
}

#[test]
fn frame_angular_too_coarse_exits_one() {
    let out = vcslab(&["frame", "--n", "3", "--fock", "3", "--angular", "4"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn moments_csv_schema() {
    let out = vcslab(&[
        "moments", "--n", "3", "--fock", "4", "--radial", "24", "--format", "csv",
    ]);
    assert!(out.status.success());
    let body = String::from_utf8(out.stdout).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("m,N1,N2,R,S"));
    assert_eq!(lines.count(), 5, "one row per m");
}

#[test]
fn inverse_growth_csv_rows() {
    let out = vcslab(&["inverse-growth", "--max", "5", "--format", "csv"]);
    assert!(out.status.success());
    let body = String::from_utf8(out.stdout).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("M,norm"));
    for (m, line) in lines.enumerate() {
        let want = ((m + 1) * (m + 1)) as f64;
        assert_eq!(line, format!("{m},{want}"));
    }
}

#[test]
fn diverge_csv_schema() {
    let out = vcslab(&["diverge", "--fock", "5", "--format", "csv"]);
    assert!(out.status.success());
    let body = String::from_utf8(out.stdout).unwrap();
    assert!(body.starts_with("m,term,partial,scaled_partial\n"));
    assert_eq!(body.lines().count(), 7);
}

#[test]
fn state_report_shape() {
    let out = vcslab(&["state", "--z", "0.5:0.7", "--q", "1", "--fock", "4", "--su11"]);
    assert!(out.status.success());
    let doc = json_of(&out);
    assert_eq!(doc["results"]["degenerate"], false);
    assert_eq!(
        doc["results"]["state"]["coeffs"].as_array().unwrap().len(),
        2 * 5
    );
    assert!(doc["results"]["norm_series"]["verdict"].as_bool().unwrap());
}

fn strip_timings(mut doc: serde_json::Value) -> serde_json::Value {
    doc.as_object_mut().unwrap().remove("timings");
    doc
}

#[test]
fn reports_are_deterministic() {
    let args = [
        "su11-audit", "--fock", "2", "--radial", "32", "--angular", "8",
    ];
    let a = vcslab(&args);
    let b = vcslab(&args);
    let da = strip_timings(json_of(&a));
    let db = strip_timings(json_of(&b));
    assert_eq!(
        serde_json::to_string(&da).unwrap(),
        serde_json::to_string(&db).unwrap(),
        "identical config must reproduce the report byte for byte"
    );
    // CSV carries no timings at all
    let c = vcslab(&["moments", "--n", "2", "--fock", "3", "--format", "csv"]);
    let d = vcslab(&["moments", "--n", "2", "--fock", "3", "--format", "csv"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn reconstruct_seeded_and_bounded() {
    let out = vcslab(&[
        "reconstruct", "--n", "3", "--fock", "2", "--radial", "32", "--mode", "paper-t",
        "--count", "5", "--seed", "9", "--assert",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert!(doc["results"]["max_rel_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn cache_dir_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["moments", "--n", "3", "--fock", "3", "--radial", "24"];
    let a = vcslab_env(&args, &[("VCSLAB_CACHE_DIR", dir.path())]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let cached: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(cached.len(), 1);
    assert!(cached[0].starts_with("moments_v1_n3_M3_k24"), "{cached:?}");
    // second run reads the cache and reproduces the report
    let b = vcslab_env(&args, &[("VCSLAB_CACHE_DIR", dir.path())]);
    assert_eq!(
        strip_timings(json_of(&a)),
        strip_timings(json_of(&b))
    );
}

#[test]
fn output_file_and_threads_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = vcslab(&[
        "frame", "--n", "2", "--fock", "2", "--radial", "24", "--threads", "2",
        "--output", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "frame");
}
