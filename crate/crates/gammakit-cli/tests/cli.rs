//! End-to-end checks of the binary: exit-code contract, JSON schema,
//! deterministic CSV export.

use std::process::{Command, Output};

fn gammakit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gammakit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn membership_boundary_holds_with_exit_zero() {
    let out = gammakit(&["membership", "--point", r#"{"n":2,"s":[[2,0],[1,0]]}"#, "--boundary"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"]["holds"], serde_json::Value::Bool(true));
    assert_eq!(v["params"]["route"], "all");
}

#[test]
fn membership_failure_reports_root_certificate() {
    let out = gammakit(&["membership", "--point", r#"{"n":2,"s":[[3,0],[1,0]]}"#]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"]["holds"], serde_json::Value::Bool(false));
    let root = v["verdict"]["certificate"]["value"][0].as_f64().unwrap();
    assert!((root - 2.618033988749895).abs() < 1e-6);
}

#[test]
fn malformed_input_exits_two() {
    let out = gammakit(&["membership", "--point", "{not json"]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert!(v["error"].is_string());
    // dimension mismatch in the wire format is also an input error
    let out = gammakit(&["membership", "--point", r#"{"n":3,"s":[[1,0]]}"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_error_exits_two() {
    let out = gammakit(&["membership"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_is_deterministic_bytes() {
    let a = gammakit(&["sample", "--n", "3", "--count", "100", "--boundary", "--seed", "7"]);
    let b = gammakit(&["sample", "--n", "3", "--count", "100", "--boundary", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout.iter().filter(|&&c| c == b'\n').count(), 100);
    let c = gammakit(&["sample", "--n", "3", "--count", "100", "--boundary", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn project_embed_fiber_round_trip() {
    let out = gammakit(&["project", "--point", r#"{"n":3,"s":[[3,0],[3,0],[1,0]]}"#]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["n"], 2);
    assert!((v["result"]["s"][0][0].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let out = gammakit(&["embed", "--point", r#"{"n":2,"s":[[2,0],[1,0]]}"#, "--alpha", "1"]);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["n"], 3);
    assert!((v["result"]["s"][0][0].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let out = gammakit(&["fiber", "--point", r#"{"n":2,"s":[[0,0],[-1,0]]}"#]);
    let v = stdout_json(&out);
    let coords = v["result"].as_array().unwrap();
    assert_eq!(coords.len(), 2);
}

#[test]
fn reduce_and_sup_pipe_through_files() {
    let dir = std::env::temp_dir().join(format!("gammakit-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let poly_path = dir.join("kv.poly");
    // the symmetric polynomial z1²+z2²+z3²-2z1z2-2z2z3-2z3z1
    std::fs::write(
        &poly_path,
        "1 0 : 2 0 0\n1 0 : 0 2 0\n1 0 : 0 0 2\n-2 0 : 1 1 0\n-2 0 : 0 1 1\n-2 0 : 1 0 1\n",
    )
    .unwrap();
    let arg = format!("@{}", poly_path.display());
    let out = gammakit(&["reduce", "--poly", &arg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["terms"], 2);

    // sup of the reduced polynomial x1^2 - 4 x2 over Γ_3 is 5
    let red_path = dir.join("reduced.poly");
    std::fs::write(&red_path, "1 0 : 2 0 0\n-4 0 : 0 1 0\n").unwrap();
    let arg = format!("@{}", red_path.display());
    let out = gammakit(&["sup", "--poly", &arg, "--grid", "48"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["result"]["value"].as_f64().unwrap() - 5.0).abs() < 1e-8);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn classify_and_vn_check_exit_codes() {
    // 1x1 tuple at the boundary point s(1,1) = (2,1): a Γ_2-unitary
    let tuple = r#"{"n":2,"mats":[{"dim":1,"entries":[[2,0]]},{"dim":1,"entries":[[1,0]]}]}"#;
    let out = gammakit(&["classify", "--tuple", tuple, "--kind", "unitary", "--grid", "32"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let bad = r#"{"n":2,"mats":[{"dim":1,"entries":[[3,0]]},{"dim":1,"entries":[[1,0]]}]}"#;
    let out = gammakit(&["classify", "--tuple", bad, "--kind", "unitary", "--grid", "32"]);
    assert_eq!(out.status.code(), Some(1));

    let out = gammakit(&[
        "vn-check", "--tuple", bad, "--budget-degree", "2", "--budget-polys", "4", "--grid", "24",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert!(v["verdict"]["defect"].as_f64().unwrap() > 0.5);
}

#[test]
fn model_build_check_and_invariant() {
    // d=1, n=2, a = 0.6: admissible
    let sym = r#"{"d":1,"A":[{"dim":1,"entries":[[0.6,0]]}]}"#;
    let out = gammakit(&["model-check", "--symbols", sym, "--budget-polys", "6", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = gammakit(&["model-build", "--symbols", sym, "--budget-polys", "6", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["result"]["d"], 1);

    let out = gammakit(&["invariant", "--model", sym]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["result"][0]["entries"][0][0].as_f64().unwrap() - 0.6).abs() < 1e-12);

    // inadmissible
    let bad = r#"{"d":1,"A":[{"dim":1,"entries":[[1.4,0]]}]}"#;
    let out = gammakit(&["model-check", "--symbols", bad, "--budget-polys", "6", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(1));
    let out = gammakit(&["model-build", "--symbols", bad, "--budget-polys", "6", "--grid", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blh_and_equiv_commands() {
    let model = r#"{"d":2,"A":[{"dim":2,"entries":[[0.5,0],[0,0],[0,0],[0.3,0.2]]}]}"#;
    let theta = r#"{"e_in":2,"e_out":2,"coeffs":[[[0,0],[0,0],[0,0],[0,0]],[[1,0],[0,0],[0,0],[1,0]]]}"#;
    let out = gammakit(&[
        "blh-verify", "--model", model, "--theta", theta, "--budget-polys", "4", "--grid", "16",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let a = r#"{"d":1,"A":[{"dim":1,"entries":[[0.5,0]]}]}"#;
    let b = r#"{"d":1,"A":[{"dim":1,"entries":[[0.5,0]]}]}"#;
    let out = gammakit(&["equiv", "--a", a, "--b", b]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["witness"].is_object());

    let c = r#"{"d":1,"A":[{"dim":1,"entries":[[0.52,0]]}]}"#;
    let out = gammakit(&["equiv", "--a", a, "--b", c]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn wold_matrix_route() {
    // a 1x1 Γ_2-unitary: all unitary part
    let tuple = r#"{"n":2,"mats":[{"dim":1,"entries":[[2,0]]},{"dim":1,"entries":[[1,0]]}]}"#;
    let out = gammakit(&["wold", "--input", tuple]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["params"]["route"], "matrix");
    assert!(v["result"]["pure"].is_null());

    // strict contraction in the last slot: neither route
    let bad = r#"{"n":2,"mats":[{"dim":1,"entries":[[0.2,0]]},{"dim":1,"entries":[[0.5,0]]}]}"#;
    let out = gammakit(&["wold", "--input", bad]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("gammakit-out-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("verdict.json");
    let out = gammakit(&[
        "membership",
        "--point",
        r#"{"n":2,"s":[[0,0],[0,0]]}"#,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"]["holds"], serde_json::Value::Bool(true));

    let csv_path = dir.join("samples.csv");
    let out = gammakit(&[
        "sample", "--n", "2", "--count", "5", "--seed", "3", "--out", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout_json(&out);
    assert_eq!(summary["result"]["rows"], 5);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 5);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn threads_flag_accepted() {
    let out = gammakit(&[
        "membership", "--threads", "2", "--point", r#"{"n":2,"s":[[0,0],[0,0]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
}
