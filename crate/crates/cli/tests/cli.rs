use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bellforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellforge")).args(args).env_remove("BELLFORGE_JOBS").output().expect("spawn")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json")
}

#[test]
fn facet_report() {
    let v = stdout_json(&bellforge(&["facet", "--eps", "1/4"]));
    assert_eq!(v["saturating_count"], 56);
    assert_eq!(v["class_counts"], serde_json::json!([28, 16, 4, 4, 4]));
    assert_eq!(v["facet"], true);
    assert_eq!(v["det"], serde_json::json!({"num": 5103, "den": 4194304}));
}

#[test]
fn conditional_vertex_count() {
    let v = stdout_json(&bellforge(&["vertices", "--kind", "conditional", "--epsA", "1/4", "--epsB", "1/4"]));
    assert_eq!(v.as_array().unwrap().len(), 1296);
}

#[test]
fn pg_at_tsirelson() {
    let v = stdout_json(&bellforge(&["pg", "--kappa", "0", "--beta", "2.8284271247"]));
    assert!((v["pg"].as_f64().unwrap() - 0.5).abs() < 1e-4);
}

#[test]
fn pg_csv() {
    let o = bellforge(&["pg", "--kappa", "0", "--curve", "2", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "beta,kappa,pg,hmin\n2,0,1,0\n2.82842712475,0,0.5,1\n");
}

#[test]
fn output_is_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for jobs in ["1", "3"] {
        let path = dir.path().join(format!("v{jobs}.json"));
        let o = bellforge(&[
            "--jobs", jobs, "vertices", "--kind", "joint", "--l", "1/8", "--h", "1/2", "--eps", "1/4",
            "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        texts.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let v: Value = serde_json::from_slice(&texts[0]).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12 * 1296);
}

#[test]
fn jobs_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_bellforge"))
        .args(["vertices", "--kind", "input", "--l", "1/8", "--h", "1/2"])
        .env("BELLFORGE_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&o).as_array().unwrap().len(), 12);
    let bad = Command::new(env!("CARGO_BIN_EXE_bellforge"))
        .args(["pg", "--kappa", "0", "--beta", "2.5"])
        .env("BELLFORGE_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn quantum_then_check_and_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let hardy = dir.path().join("hardy.json");
    let o = bellforge(&["quantum", "--strategy", "tilted-hardy", "--eps", "0", "--out", hardy.to_str().unwrap()]);
    assert!(o.status.success());
    let h = hardy.to_str().unwrap();

    let c = stdout_json(&bellforge(&["check", "--ineq", "pd_facet", "--eps", "0", "--behavior", h]));
    assert_eq!(c["violated"], true);
    let want = (5.0 * 5f64.sqrt() - 11.0) / 2.0;
    assert!((c["margin"].as_f64().unwrap() - want).abs() < 1e-12);

    let inside = stdout_json(&bellforge(&["decompose", "--eps", "1/4", "--behavior", h]));
    assert_eq!(inside["status"], "inside");
    let total: f64 = inside["terms"].as_array().unwrap().iter().map(|t| t["weight"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let outside = stdout_json(&bellforge(&["decompose", "--eps", "0", "--behavior", h]));
    assert_eq!(outside["status"], "outside");
    assert!(outside["gap"].as_f64().unwrap() > 0.0);
}

// With l = h a conditional table is weighted by the fixed input distribution,
// so checking it must match checking the joint table built by hand.
#[test]
fn joint_inequality_on_conditional_table() {
    let dir = tempfile::tempdir().unwrap();
    let cond = dir.path().join("cond.json");
    let o = bellforge(&["quantum", "--strategy", "tilted-hardy", "--eps", "1/4", "--out", cond.to_str().unwrap()]);
    assert!(o.status.success());
    let mut b: Value = serde_json::from_str(&std::fs::read_to_string(&cond).unwrap()).unwrap();
    b["kind"] = "joint".into();
    for v in b["values"].as_array_mut().unwrap() {
        *v = (v.as_f64().unwrap() / 4.0).into();
    }
    let joint = write(dir.path(), "joint.json", &b.to_string());

    let from_cond = stdout_json(&bellforge(&["check", "--ineq", "mdpdl", "--eps", "1/4", "--behavior", cond.to_str().unwrap()]));
    let from_joint = stdout_json(&bellforge(&["check", "--ineq", "mdpdl", "--eps", "1/4", "--behavior", &joint]));
    assert_eq!(from_cond["violated"], true);
    let (x, y) = (from_cond["value"].as_f64().unwrap(), from_joint["value"].as_f64().unwrap());
    assert!((x - y).abs() < 1e-15, "{x} vs {y}");

    let o = bellforge(&["check", "--ineq", "mdpdl", "--l", "1/8", "--h", "1/2", "--behavior", cond.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_behavior_file() {
    let dir = tempfile::tempdir().unwrap();
    // PR box: p(ab|xy) = 1/2 when a xor b = xy.
    let pr = write(
        dir.path(),
        "pr.json",
        r#"{"scenario":{"nA":2,"nB":2,"nX":2,"nY":2},"kind":"conditional",
            "values":["1/2",0,0,"1/2", "1/2",0,0,"1/2", "1/2",0,0,"1/2", 0,"1/2","1/2",0]}"#,
    );
    let c = stdout_json(&bellforge(&["check", "--ineq", "chsh", "--behavior", &pr]));
    assert_eq!(c["value"], serde_json::json!({"num": 4, "den": 1}));
    assert_eq!(c["violated"], true);
    let d = stdout_json(&bellforge(&["decompose", "--eps", "1/4", "--behavior", &pr]));
    assert_eq!(d["status"], "outside");
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"scenario":{"nA":2,"nB":2,"nX":2,"nY":2},"kind":"input","values":[1,1,0,0]}"#);
    for args in [
        vec!["check", "--ineq", "chsh", "--behavior", bad.as_str()],
        vec!["check", "--ineq", "nope", "--behavior", bad.as_str()],
        vec!["facet", "--eps", "3/2"],
        vec!["facet", "--eps", "x"],
        vec!["pg", "--kappa", "0.5", "--beta", "1.0"],
        vec!["vertices", "--kind", "input", "--l", "1/2", "--h", "1/2"],
        vec!["vertices", "--kind", "conditional", "--scenario", "3,2,2,2"],
        vec!["quantum", "--strategy", "chsh-leak"],
        vec!["frobnicate"],
    ] {
        let o = bellforge(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn decimal_parameters_warn() {
    let o = bellforge(&["vertices", "--kind", "input", "--l", "0.25", "--h", "0.25"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(stdout_json(&o)[0]["values"], serde_json::json!([0.25, 0.25, 0.25, 0.25]));
}

#[test]
fn self_test_subset() {
    let o = bellforge(&["self-test", "--only", "1,7"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
