use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn greedy_colloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greedy-colloc")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = greedy_colloc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn heat_run_writes_profile_log_and_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("heat");
    run_ok(&["run", "heat2d-ms", "--n", "200", "--dt", "0.02", "--epsilon", "3", "--out", out.to_str().unwrap()]);

    let profile = read(&out.join("error_profile.csv"));
    let lines: Vec<&str> = profile.lines().collect();
    assert_eq!(lines[0], "dt,n,epsilon,scheme,greedy,termination,selected_cols,final_rel_rms,blowup");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..5], &["0.02", "200", "3", "cn", "true"]);
    assert!(["SC1Prime", "SC2Prime"].contains(&fields[5]), "{}", lines[1]);
    assert!(fields[6].parse::<usize>().unwrap() < 200);
    assert_eq!(fields[8], "false");

    let cell = out.join("cells").join("n200_dt0.02");
    assert!(read(&cell.join("iterations.csv")).starts_with("iter,rows,cols,kappa,res_inf_selected,res_inf_fullrow\n"));
    let snapshot = read(&cell.join("u.csv"));
    assert!(snapshot.starts_with("x,y,value\n"));
    assert_eq!(snapshot.lines().count(), 1 + 200 + 4 * 15);

    let m = manifest(&out);
    assert_eq!(m["experiment"], "heat2d-ms");
    assert_eq!(m["blowup"], false);
    assert_eq!(m["cells"].as_array().unwrap().len(), 1);
    assert_eq!(m["tolerances"][0]["tau_r"], 0.02);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn gaussian_without_greedy_records_blowup() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("gauss");
    let stdout = run_ok(&["run", "heat2d-gaussian", "--no-greedy", "--dt", "0.01", "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("blow-up"));
    let m = manifest(&out);
    assert_eq!(m["blowup"], true);
    assert_eq!(m["cells"][0]["final_rel_rms"], "inf");
    assert!(read(&out.join("error_profile.csv")).lines().nth(1).unwrap().ends_with(",inf,true"));
}

#[test]
fn sweep_has_one_row_per_cell_and_bands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    run_ok(&["sweep", "heat2d-ms", "--n-list", "100,130,160", "--dt-list", "0.02,0.01", "--out", out.to_str().unwrap()]);
    let profile = read(&out.join("error_profile.csv"));
    let rows: Vec<Vec<&str>> = profile.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let order: Vec<(&str, &str)> = rows.iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(order, [("0.02", "100"), ("0.02", "130"), ("0.02", "160"), ("0.01", "100"), ("0.01", "130"), ("0.01", "160")]);

    let bands = read(&out.join("bands.csv"));
    let lines: Vec<&str> = bands.lines().collect();
    assert_eq!(lines[0], "dt,scheme,greedy,cells,blowups,min,median,max");
    assert_eq!(lines.len(), 3);
    for (line, dt) in lines[1..].iter().zip(["0.02", "0.01"]) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[0], f[3]), (dt, "3"));
        let errs: Vec<f64> = rows.iter().filter(|r| r[0] == dt).map(|r| r[7].parse().unwrap()).collect();
        let (lo, mid, hi): (f64, f64, f64) = (f[5].parse().unwrap(), f[6].parse().unwrap(), f[7].parse().unwrap());
        assert!(lo <= mid && mid <= hi);
        assert!(errs.contains(&mid) || errs.iter().any(|e| (e - mid).abs() <= 1e-12 * e));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        run_ok(&["sweep", "heat2d-ms", "--n-list", "90,110", "--dt-list", "0.02", "--scheme", "sbdf2", "--out", d.to_str().unwrap()]);
    }
    for file in ["error_profile.csv", "bands.csv", "cells/n90_dt0.02/u.csv", "cells/n110_dt0.02/iterations.csv"] {
        assert_eq!(fs::read(dirs[0].join(file)).unwrap(), fs::read(dirs[1].join(file)).unwrap(), "{file}");
    }
}

#[test]
fn bulk_surface_run_writes_four_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("spots");
    run_ok(&[
        "run", "bs-spots-2d", "--n-bulk", "120", "--n-surf", "30", "--dt", "0.01", "--t-final", "0.05", "--out",
        out.to_str().unwrap(),
    ]);
    for (field, rows) in [("u", 150), ("v", 150), ("w", 30), ("s", 30)] {
        let text = read(&out.join(format!("{field}.csv")));
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), rows + 1, "{field}");
        assert!(read(&out.join(format!("iterations_{field}.csv"))).starts_with("iter,"));
    }
    let m = manifest(&out);
    assert_eq!(m["steps"], 5);
    assert_eq!(m["n_bulk"], 120);
    assert_eq!(m["params"]["gamma"], 30.0);
    let selections = m["selections"].as_array().unwrap();
    assert_eq!(selections.len(), 4);
    assert!(selections.iter().all(|s| s["termination"].is_string()));
}

#[test]
fn config_file_sets_values_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cfg");
    let config = tmp.path().join("run.json");
    let body = format!(
        r#"{{"experiment": "heat2d-ms", "n": 120, "dt": 0.05, "scheme": "sbdf1", "out": "{}"}}"#,
        out.display()
    );
    fs::write(&config, body).unwrap();
    run_ok(&["run", "--config", config.to_str().unwrap(), "--dt", "0.02"]);
    let row = read(&out.join("error_profile.csv")).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("0.02,120,3,sbdf1,"), "{row}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();
    let empty = tmp.path().join("empty.json");
    fs::write(&empty, r#"{"experiment": "heat2d-ms", "dt_list": []}"#).unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let nested = blocker.join("out");
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "heat9d", "--out", o],
        vec!["sweep", "heat2d-ms", "--dt-list", "", "--out", o],
        vec!["sweep", "--config", empty.to_str().unwrap(), "--out", o],
        vec!["run", "heat2d-ms", "--dt", "0.03", "--out", o],
        vec!["run", "bs-spots-2d", "--scheme", "cn", "--out", o],
        vec!["run", "heat2d-ms", "--n", "50", "--out", nested.to_str().unwrap()],
    ];
    for args in cases {
        let res = greedy_colloc(&args);
        assert_eq!(res.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
    assert!(!out.exists());
}
