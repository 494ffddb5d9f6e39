use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lipopsys"))
}

fn instance() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/two_point.json")
}

fn column(csv: &Path, name: &str, filter: impl Fn(&csv::StringRecord, &csv::StringRecord) -> bool) -> Vec<String> {
    let mut r = csv::Reader::from_path(csv).unwrap();
    let h = r.headers().unwrap().clone();
    let i = h.iter().position(|c| c == name).unwrap();
    r.records().map(|x| x.unwrap()).filter(|x| filter(&h, x)).map(|x| x[i].to_string()).collect()
}

#[test]
fn flattening_dist_bound_column_halves() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().args(["example", "flattening-triangle", "dist-bound", "--n", "1,2,4,8", "--out"]).arg(out.path()).status().unwrap();
    assert!(st.success());
    let vals = column(&out.path().join("flattening-triangle/dist_bound.csv"), "value", |h, r| {
        r[h.iter().position(|c| c == "bound_kind").unwrap()] == *"upper"
    });
    let got: Vec<f64> = vals.iter().map(|v| v.parse().unwrap()).collect();
    for (g, want) in got.iter().zip([1.0, 0.5, 0.25, 0.125]) {
        assert!((g - want).abs() <= 1e-6, "{got:?}");
    }
    assert_eq!(got.len(), 4);
}

#[test]
fn two_by_two_limit_is_not_inherited() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().args(["example", "two-by-two", "--n", "4", "limit-system", "--out"]).arg(out.path()).status().unwrap();
    assert!(st.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("two-by-two/limit.json")).unwrap()).unwrap();
    assert_eq!(v["inherited"], serde_json::Value::Bool(false));
}

#[test]
fn radius_of_the_two_point_instance_is_one() {
    let out = tempfile::tempdir().unwrap();
    let st = bin().arg("radius").arg("--config").arg(instance()).arg("--out").arg(out.path()).status().unwrap();
    assert!(st.success());
    let csv = out.path().join("radius.csv");
    for col in ["lower", "upper"] {
        let v: f64 = column(&csv, col, |_, _| true)[0].parse().unwrap();
        assert!((v - 1.0).abs() <= 1e-6, "{col}: {v}");
    }
    assert_eq!(column(&csv, "status", |_, _| true), vec!["converged"]);
}

#[test]
fn schema_errors_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"system": {"blocks": [1, 1], "basis": [[[[[1, 0]]], [[[1, 0]]]]]}, "seminorm": {"kind": "linmap", "rows": [[0, 1]], "p": 3, "weight": 1}}"#).unwrap();
    let o = bin().arg("radius").arg("--config").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!o.status.success());
    let msg = String::from_utf8(o.stderr).unwrap();
    assert!(msg.contains("`seminorm`") && msg.contains("p must be"), "{msg}");
    std::fs::write(&bad, r#"{"system": {"blocks": [1, 1], "basis": [[[[[1, 0]]], [[[1, 0]]]], [[[[1, 0]]], [[1, 0]]]]}, "seminorm": {"kind": "linmap", "rows": [[0, 1]], "p": 2, "weight": 1}}"#).unwrap();
    let o = bin().arg("radius").arg("--config").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    let msg = String::from_utf8(o.stderr).unwrap();
    assert!(!o.status.success() && msg.contains("system.basis[1][1]"), "{msg}");
}

#[test]
fn missing_tasks_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("hausdorff").arg("--config").arg(instance()).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("bridge"));
}

#[test]
fn grid_flag_is_validated() {
    let o = bin().args(["epsilon-curve", "--grid", "2:1:4"]).output().unwrap();
    assert!(!o.status.success());
}
