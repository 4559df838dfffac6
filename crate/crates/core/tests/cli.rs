use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pflsim");

fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn pflsim(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("PFLSIM_DT")
        .output()
        .expect("binary runs")
}

fn metrics(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("metrics.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("imp2");
    let o = pflsim(&["run", &scenario("3r_imp2.json"), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trajectory.csv", "metrics.json", "meta.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let m = metrics(&out);
    assert_eq!(m["label"], "3r_imp2");
    assert!(m["settling_time_s"].as_f64().unwrap() > 0.0);
    assert_eq!(m["mean_abs_error"].as_array().unwrap().len(), 3);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["settling"]["hold"], 0.2);
    assert_eq!(meta["scenario"]["controller"]["lambda"], 0.5);
}

#[test]
fn lambda_override_matches_second_impedance_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = pflsim(&[
        "run",
        &scenario("3r_imp1.json"),
        "-o",
        a.to_str().unwrap(),
        "--override",
        "lambda=0.5",
        "--override",
        "label=3r_imp2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(pflsim(&["run", &scenario("3r_imp2.json"), "-o", b.to_str().unwrap()]).status.success());
    assert_eq!(metrics(&a), metrics(&b));
}

#[test]
fn malformed_json_is_a_usage_error_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"robot\": \"planar3r\",\n  \"goal\": [1, 2,,]\n}").unwrap();
    let o = pflsim(&["run", bad.to_str().unwrap(), "-o", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn bad_override_and_bad_env_dt_are_usage_errors() {
    let o = pflsim(&["run", &scenario("3r_pd.json"), "--override", "lambda=0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(BIN)
        .args(["run", &scenario("3r_pd.json")])
        .env("PFLSIM_DT", "fast")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulation_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // the human sits on the starting end effector
    let o = pflsim(&[
        "run",
        &scenario("3r_ctm.json"),
        "-o",
        tmp.path().to_str().unwrap(),
        "--override",
        "human.position=[1.4142135623730951,1.4142135623730951]",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_suite_lists_available() {
    let o = pflsim(&["suite", "scara"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("3r") && err.contains("panda"), "{err}");
}

#[test]
fn suite_3r_is_ordered_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = pflsim(&["suite", "3r", "-o", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let table: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("comparison.json")).unwrap()).unwrap();
    let settling: Vec<f64> = table["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["settling_time_s"].as_f64().unwrap())
        .collect();
    assert!(settling.windows(2).all(|w| w[0] > w[1]), "{settling:?}");
    assert!(a.join("comparison.txt").is_file());
    for run in ["3r_pd", "3r_ctm", "3r_imp1", "3r_imp2"] {
        let x = std::fs::read(a.join(run).join("trajectory.csv")).unwrap();
        let y = std::fs::read(b.join(run).join("trajectory.csv")).unwrap();
        assert!(x == y, "{run} differs between runs");
    }
}

fn limits_rows(args: &[&str]) -> Vec<Vec<String>> {
    let o = pflsim(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn limits_iso_is_constant() {
    let rows = limits_rows(&[
        "limits", "planar3r", "--region", "abdomen", "--method", "iso_conservative", "--grid", "2:5:4,-1:2:4",
    ]);
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert_eq!(r[2].parse::<f64>().unwrap(), 9.0);
    }
}

#[test]
fn limits_operational_space_varies_below_total_mass() {
    // interior of the workspace; the bound does not hold near full reach
    let rows = limits_rows(&[
        "limits", "planar3r", "--region", "abdomen", "--method", "operational_space", "--grid", "1:4:4,-1:2:4",
    ]);
    let masses: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(masses.len(), 16);
    assert!(masses.iter().all(|m| *m > 0.0 && *m <= 18.0), "{masses:?}");
    let spread = masses.iter().cloned().fold(f64::MIN, f64::max) - masses.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.1);
}

#[test]
fn limits_effective_mass_grows_toward_full_reach() {
    let rows = limits_rows(&[
        "limits", "planar3r", "--region", "abdomen", "--method", "operational", "--grid", "5.0:5.99:3,0:0:1",
    ]);
    let masses: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(masses.windows(2).all(|w| w[1] > w[0]), "{masses:?}");
    assert!(masses[2] > 18.0);
}

#[test]
fn limits_rejects_empty_grid_and_unknown_method() {
    let o = pflsim(&["limits", "planar3r", "--region", "abdomen", "--method", "iso", "--grid", ""]);
    assert_eq!(o.status.code(), Some(2));
    let o = pflsim(&["limits", "planar3r", "--region", "abdomen", "--method", "magic", "--grid", "0:1:2,0:1:2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pflsim(&["limits", "planar3r", "--region", "tail", "--method", "iso", "--grid", "0:1:2,0:1:2"]);
    assert_eq!(o.status.code(), Some(2));
}
