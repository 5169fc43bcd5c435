//! The `loopsoup` binary: exit codes and output files.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loopsoup"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("loopsoup-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn experiment_writes_tables_and_record() {
    let dir = scratch("hydro");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"n_grid":[100,200],"t":0.5}"#).unwrap();
    let run = |out: &str| {
        let st = bin()
            .args(["hydro", "--config"])
            .arg(&cfg)
            .args(["--seed", "3", "--replicas", "50", "--out"])
            .arg(dir.join(out))
            .output()
            .unwrap();
        assert!(st.status.code().is_some());
        fs::read_to_string(dir.join(out).join("hydro.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    assert!(a.starts_with("n,k,rho_hat_mean,rho_limit,mse\n"));
    let rec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("a/run_record.json")).unwrap()).unwrap();
    assert_eq!(rec["seed"], 3);
    assert_eq!(rec["config"]["replicas"], 50);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failed_assertions_give_exit_code_one() {
    let dir = scratch("fail");
    let cfg = dir.join("cfg.json");
    // an impossible slope window
    fs::write(&cfg, r#"{"n_grid":[100,200],"slope_min":5.0,"slope_max":6.0}"#).unwrap();
    let st = bin()
        .args(["hydro", "--replicas", "20", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("o"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
    let st = bin().args(["hydro", "--config"]).arg(dir.join("missing.json")).status().unwrap();
    assert_eq!(st.code(), Some(2));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn gw_table_and_coag_solve() {
    let dir = scratch("tables");
    let st = bin()
        .args(["gw-table", "--eps", "1", "--t", "0.5", "--out"])
        .arg(dir.join("gw"))
        .status()
        .unwrap();
    assert!(st.success());
    let csv = fs::read_to_string(dir.join("gw/gw_table.csv")).unwrap();
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert!((first[1] - (-0.25f64).exp()).abs() < 1e-15);
    let js: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("gw/gw_table.json")).unwrap()).unwrap();
    assert_eq!(js["q"], 1.0);
    assert_eq!(js["rate_kind"], "h");

    let st = bin()
        .args(["coag-solve", "--t-end", "0.5", "--K", "30", "--Jmax", "20", "--dt", "0.01", "--outputs", "5", "--out"])
        .arg(dir.join("coag"))
        .status()
        .unwrap();
    assert!(st.success());
    let rho = fs::read_to_string(dir.join("coag/rho.csv")).unwrap();
    assert_eq!(rho.lines().count(), 1 + 5 * 30);
    let mom = fs::read_to_string(dir.join("coag/moments.csv")).unwrap();
    assert!(mom.starts_with("t,m1,m2,gel\n"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn sample_then_explore() {
    let dir = scratch("soup");
    let soup = dir.join("s.soup");
    assert!(bin()
        .args(["sample-soup", "--n", "40", "--horizon", "30", "--seed", "9", "--out"])
        .arg(&soup)
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(["explore", "--x", "5", "--aux-seed", "1", "--soup"])
        .arg(&soup)
        .arg("--out")
        .arg(dir.join("ex"))
        .status()
        .unwrap()
        .success());
    let js: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ex/trace.json")).unwrap()).unwrap();
    assert_eq!(js["T"], js["component_size"]);
    fs::remove_dir_all(dir).unwrap();
}
