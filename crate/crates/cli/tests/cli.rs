use std::path::Path;
use std::process::{Command, Output};

fn fracshape(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracshape")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn constants_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fracshape(&["constants", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("o/constants.json")).unwrap()).unwrap();
    assert!((v["C1"].as_f64().unwrap() - 0.5 / std::f64::consts::PI).abs() < 1e-12);
    assert!((v["I0"].as_f64().unwrap() - 9.8696044).abs() < 1e-6);
    assert_eq!(v["phi_inf"].as_f64(), Some(1.0));
    assert!((v["C0"].as_f64().unwrap() + 0.3926990817).abs() < 1e-9);
}

#[test]
fn solve_grid_has_center_value() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "disk.json", r#"{"center":[0,0],"a0":1}"#);
    let out = fracshape(&["solve", "--domain", "disk.json", "--out", "o", "--grid", "33"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x1,x2,u"));
    assert_eq!(csv.lines().count(), 1 + 33 * 33);
    let center = csv.lines().find(|l| l.starts_with("0,0,")).unwrap();
    let u: f64 = center.rsplit(',').next().unwrap().parse().unwrap();
    assert!((u - 2.0 / std::f64::consts::PI).abs() < 1e-3);
    assert!(tmp.path().join("o/coefficients.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "d.json", r#"{"center":[0.1,0],"a0":1,"cos":[0,0.05],"sin":[0.03]}"#);
    for o in ["a", "b"] {
        let out = fracshape(&["trace", "--domain", "d.json", "--out", o, "--quad", "coarse"], tmp.path());
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["trace.csv", "trace.json", "trace.svg"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn validation_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "disk.json", r#"{"center":[0,0],"a0":1}"#);
    write(tmp.path(), "bad_domain.json", r#"{"center":[0,0],"a0":1,"radius":2}"#);
    write(tmp.path(), "cfg.json", r#"{"krad":3,"unknown_key":true}"#);
    let cases: [&[&str]; 6] = [
        &["solve"],
        &["solve", "--domain", "nope.json"],
        &["solve", "--domain", "bad_domain.json"],
        &["energy", "--domain", "disk.json", "--config", "cfg.json"],
        &["energy", "--domain", "disk.json", "--quad", "8,8,7,8"],
        &["optimize", "--domain", "disk.json", "--step", "-0.1"],
    ];
    for args in cases {
        let out = fracshape(args, tmp.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!tmp.path().join("out").exists(), "{args:?} wrote artifacts");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_fracshape"))
        .args(["constants"])
        .env("FRACSHAPE_THREADS", "many")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    // strongly wavy boundary: the trace window no longer fits inside the tubular band
    write(tmp.path(), "wavy.json", r#"{"center":[0,0],"a0":1,"cos":[0,0,0,0,0,0,0,0.2]}"#);
    let out = fracshape(&["trace", "--domain", "wavy.json", "--out", "o", "--quad", "coarse"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "disk.json", r#"{"center":[0,0],"a0":1}"#);
    write(tmp.path(), "cfg.json", r#"{"domain":"disk.json","out":"o","krad":2,"kang":1,"quad":"coarse"}"#);
    let out = fracshape(&["energy", "--config", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("o/energy.json")).unwrap()).unwrap();
    assert!((v["energy"].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-3);
}

#[test]
fn dshape_and_symmetry_reports() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "e.json", r#"{"center":[0,0],"a0":1,"cos":[0,0.1]}"#);
    let out = fracshape(&["dshape", "--domain", "e.json", "--out", "o", "--field", "dilation", "--quad", "coarse"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("o/dshape.json")).unwrap()).unwrap();
    for key in ["analytic", "fd", "h", "discrepancy"] {
        assert!(v[key].is_number(), "{key}");
    }
    let out = fracshape(&["symmetry", "--domain", "e.json", "--out", "o", "--directions", "3", "--quad", "coarse"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("o/symmetry.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert!(tmp.path().join("o/symmetry_02.svg").exists());
}
