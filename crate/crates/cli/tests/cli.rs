use std::path::PathBuf;
use std::process::{Command, Output};

use qgnls_core::emit::read_state;

fn graph(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../graphs")
        .join(name)
}

fn qgnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgnls"))
        .args(args)
        .output()
        .expect("run qgnls")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn period_prints_negative_partials() {
    let o = qgnls(&["period", "--p", "0.001", "--q", "0.002"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(row.len(), 5);
    assert!((row[2] + (0.003f64 / 4.0).ln()).abs() < 1e-3);
    assert!(row[3] < 0.0 && row[4] < 0.0);
}

#[test]
fn validate_exit_codes() {
    let ok = qgnls(&[
        "validate",
        "--graph",
        graph("flower.graph").to_str().unwrap(),
    ]);
    assert!(ok.status.success(), "{}", stdout(&ok));
    let fake = graph("interval.graph");
    let bad = qgnls(&["validate", "--graph", fake.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("degree 2"));
    let allowed = qgnls(&[
        "validate",
        "--graph",
        fake.to_str().unwrap(),
        "--allow-fake-vertices",
    ]);
    assert!(allowed.status.success());
}

#[test]
fn parse_errors_exit_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.graph");
    std::fs::write(&path, "vertex v\nloop e1 v halflength=abc\n").unwrap();
    let o = qgnls(&["validate", "--graph", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn solve_writes_a_readable_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("state.csv");
    let dat = dir.path().join("state.dat");
    let o = qgnls(&[
        "solve",
        "--graph",
        graph("flower.graph").to_str().unwrap(),
        "--eps",
        "6",
        "--h",
        "0.05",
        "--out",
        out.to_str().unwrap(),
        "--dat",
        dat.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read_state(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(t.eps, 6.0);
    assert_eq!(t.h, 0.05);
    assert!(t.residual < 1e-10);
    let peak = t.rows.iter().map(|r| r.u).fold(0.0, f64::max);
    assert!((peak - 1.0).abs() < 1e-2);
    assert_eq!(
        std::fs::read_to_string(&dat)
            .unwrap()
            .matches("# edge ")
            .count(),
        4
    );
}

#[test]
fn morse_expectation_sets_exit_code() {
    let g = graph("dumbbell.graph");
    let args = |e: &'static str| {
        vec![
            "morse",
            "--graph",
            g.to_str().unwrap(),
            "--eps",
            "6",
            "--h",
            "0.05",
            "--expect",
            e,
        ]
    };
    let o = qgnls(&args("2,0"));
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "2,0");
    assert_eq!(qgnls(&args("1,0")).status.code(), Some(1));
}

#[test]
fn spectrum_scan_columns() {
    let o = qgnls(&[
        "spectrum",
        "--preset",
        "flower-2",
        "--eps",
        "6",
        "--h",
        "0.05",
        "--alpha-scan",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,n,z,nearest"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 13);
    assert!(rows
        .iter()
        .all(|r| r.split(',').nth(1) == Some("2") && r.split(',').nth(2) == Some("0")));
    assert!(rows.last().unwrap().starts_with("inf,"));
}

#[test]
fn asym_reports_offset() {
    let o = qgnls(&[
        "asym",
        "--graph",
        graph("offset.graph").to_str().unwrap(),
        "--eps",
        "10",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("bar,")).unwrap();
    let a: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((a - (2f64 / 3.0).ln() / 4.0).abs() < 1e-12);
}

#[test]
fn scenario_and_sweep_are_deterministic() {
    let o = qgnls(&["scenario", "flower-1", "--eps", "6", "--h", "0.05"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("expectation met (1,0)"));

    let args = [
        "sweep", "flower-1", "--ladder", "6,8", "--h", "0.05", "--seed", "7",
    ];
    let a = qgnls(&args);
    let b = qgnls(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# seed=7"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header.split(',').count(), 9);
    assert!(text.lines().last().unwrap().starts_with("# fit:"));
}

#[test]
fn unknown_preset_is_an_error() {
    let o = qgnls(&["scenario", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("flower"));
}
