use std::process::{Command, Output};

use vexlab::SeriesReport;

fn vexlab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vexlab"));
    cmd.args(args).env_remove("VEX_KMAX");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn vexlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_prints_the_value() {
    let o = vexlab(&["eval", "--exponent", "ksz", "--x", "0.9"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 2.0);
}

#[test]
fn eval_accepts_anchor_points() {
    let o = vexlab(&["--format", "json", "eval", "--exponent", "ksz", "--x", "beta:3", "--conjugate"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["conjugate"], true);
    assert!(v["value"].as_f64().unwrap() > 1.0);
}

#[test]
fn usage_errors_exit_64() {
    let bogus = vexlab(&["eval", "--exponent", "nope", "--x", "0.5"], &[]);
    assert_eq!(bogus.status.code(), Some(64));
    let deep = vexlab(&["verify", "--suite", "ratio"], &[("VEX_KMAX", "50")]);
    assert_eq!(deep.status.code(), Some(64));
    let lambda = vexlab(&["verify", "--suite", "conjugate", "--lambda", "0.5"], &[]);
    assert_eq!(lambda.status.code(), Some(64));
    let grid = vexlab(&["osc", "--function", "ksz", "--r-grid", "spiral:1,2,3"], &[]);
    assert_eq!(grid.status.code(), Some(64));
}

#[test]
fn verify_json_round_trips() {
    let o = vexlab(&["verify", "--suite", "hardy", "--kmax", "10"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: SeriesReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.ok());
    assert_eq!(r.rows.last().map(|row| row.k), Some(10));
}

#[test]
fn verify_several_suites_gives_an_array() {
    let o = vexlab(&["verify", "--suite", "ratio,dl"], &[("VEX_KMAX", "4")]);
    assert_eq!(o.status.code(), Some(0));
    let rs: Vec<SeriesReport> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rs.len(), 2);
    assert!(rs.iter().all(|r| r.rows.iter().all(|row| row.k <= 4)));
}

#[test]
fn verify_csv_and_plain() {
    let o = vexlab(&["--format", "csv", "verify", "--suite", "growth", "--kmax", "5"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some(vexlab::report::CSV_HEADER));
    assert_eq!(text.lines().count(), 1 + 5);
    let o = vexlab(&["--format", "plain", "verify", "--suite", "ratio", "--kmax", "5"], &[]);
    assert!(stdout(&o).starts_with("PASS ratio"));
}

#[test]
fn norm_of_constant_exponent() {
    let o = vexlab(&["--format", "json", "norm", "--exponent", "const:2", "--interval", "0.2,0.7"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["norm"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
    assert!(v["ratio_ln"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn osc_sweep_to_file() {
    let path = std::env::temp_dir().join(format!("vexlab-osc-{}.csv", std::process::id()));
    let o = vexlab(&["osc", "--function", "ksz", "--r-grid", "geometric:1,0.5,8", "-o", path.to_str().unwrap()], &[("VEX_KMAX", "3")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 8);
    let moduli: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(moduli.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}
