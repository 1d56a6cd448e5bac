#![allow(clippy::excessive_precision)]

use std::process::{Command, Output};

use serde_json::Value;

fn seqchi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqchi"))
        .args(args)
        .output()
        .expect("run seqchi")
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

#[test]
fn origin_gives_unit_alpha() {
    let out = seqchi(&[
        "alpha",
        "--n-categories",
        "5",
        "--c",
        "0.7",
        "--x1",
        "0",
        "--x2",
        "0",
        "--method",
        "quad",
    ]);
    assert!(out.status.success());
    let r = &records(&out)[0];
    assert_eq!(r["command"], "alpha");
    assert_eq!(r["outputs"]["alpha"], 1.0);
    assert_eq!(r["inputs"]["n_categories"], 5);
}

#[test]
fn validity_failure_exits_with_domain_code() {
    let out = seqchi(&[
        "alpha",
        "--n-categories",
        "5",
        "--c",
        "0.7",
        "--x1",
        "40",
        "--x2",
        "10",
        "--method",
        "bracket",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho window"));

    let out = seqchi(&[
        "alpha",
        "--n-categories",
        "3",
        "--c",
        "0.5",
        "--x1",
        "1",
        "--x2",
        "1",
        "--method",
        "bracket",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x1*x2* lower bound"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        seqchi(&["alpha", "--n-categories", "5", "--x1", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(seqchi(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn bracket_record_contains_quadrature() {
    let base = [
        "alpha",
        "--n-categories",
        "5",
        "--c",
        "0.6",
        "--x1",
        "60",
        "--x2",
        "60",
    ];
    let b = records(&seqchi(&[&base[..], &["--method", "bracket"]].concat()))[0]["outputs"].clone();
    let q = records(&seqchi(&[&base[..], &["--method", "quad"]].concat()))[0]["outputs"].clone();
    let lq = q["log_alpha"].as_f64().unwrap();
    assert!(b["log_lo"].as_f64().unwrap() <= lq && lq <= b["log_hi"].as_f64().unwrap());
    assert_eq!(b["log_alpha"], b["log_hi"]);
}

#[test]
fn later_flags_override_earlier() {
    let out = seqchi(&[
        "alpha",
        "--n-categories",
        "5",
        "--c",
        "0.7",
        "--x1",
        "3",
        "--x2",
        "0",
        "--x1",
        "0",
    ]);
    assert_eq!(records(&out)[0]["outputs"]["alpha"], 1.0);
}

#[test]
fn csv_output_has_header_and_rows() {
    let out = seqchi(&["--format", "csv", "infeld", "--nu", "0.5", "--x", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("command,version,seed"));
    assert!(header.contains("in.nu") && header.contains("out.log_value"));
    assert!(lines.next().unwrap().starts_with("infeld,"));
}

#[test]
fn grid_runs_each_row() {
    let dir = std::env::temp_dir().join(format!("seqchi-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("grid.csv");
    std::fs::write(&path, "x1,x2\n0,0\n10,12\n20,25\n").unwrap();
    let out = seqchi(&[
        "--grid",
        path.to_str().unwrap(),
        "alpha",
        "--n-categories",
        "4",
        "--c",
        "0.5",
        "--x1",
        "1",
        "--x2",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rs = records(&out);
    assert_eq!(rs.len(), 3);
    assert_eq!(rs[0]["outputs"]["alpha"], 1.0);
    let a: Vec<f64> = rs
        .iter()
        .map(|r| r["outputs"]["alpha"].as_f64().unwrap())
        .collect();
    assert!(a[0] > a[1] && a[1] > a[2]);
    assert_eq!(rs[2]["inputs"]["x1"], 20.0);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn mc_is_deterministic_and_records_seed() {
    let args = [
        "mc", "--mode", "bessel", "--reps", "1000000", "--seed", "42", "--d", "3", "--s1", "1",
        "--s2", "2", "--x1", "2", "--x2", "2.5",
    ];
    let a = seqchi(&args);
    let b = seqchi(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r = &records(&a)[0];
    assert_eq!(r["seed"], 42);
    assert!(r["inputs"].get("threads").is_none());
}

#[test]
fn quiet_silences_notes() {
    let args = [
        "alpha",
        "--n-categories",
        "5",
        "--c",
        "0.6",
        "--x1",
        "60",
        "--x2",
        "60",
        "--method",
        "bracket",
    ];
    let loud = seqchi(&args);
    let quiet = seqchi(&[&["--quiet"][..], &args[..]].concat());
    assert!(quiet.status.success());
    assert!(quiet.stderr.is_empty());
    assert_eq!(loud.stdout, quiet.stdout);
}

#[test]
fn levels_and_bonferroni_and_bessel() {
    let r = &records(&seqchi(&[
        "levels",
        "--n-categories",
        "5",
        "--c",
        "0.6",
        "--alpha1",
        "0.01",
        "--p",
        "1.2",
    ]))[0];
    let la = r["outputs"]["log_alpha"].as_f64().unwrap();
    assert!((la + 7.6895469111548543606).abs() < 1e-9);

    let r = &records(&seqchi(&[
        "bonferroni",
        "--marginals",
        "0.05,0.05,0.05",
        "--pairwise",
        "0.05,0.01,0.01;0.01,0.05,0.01;0.01,0.01,0.05",
    ]))[0];
    assert_eq!(r["outputs"]["lo"], 0.0);
    assert_eq!(r["outputs"]["alpha"], 0.01);

    let out = seqchi(&[
        "bessel", "--d", "3", "--s1", "1", "--s2", "2", "--x1", "0", "--x2", "0",
    ]);
    assert_eq!(records(&out)[0]["outputs"]["alpha"], 1.0);
}
