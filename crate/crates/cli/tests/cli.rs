use std::process::{Command, Output};
use std::time::Instant;

use hyh_cli::bench::CSV_HEADER;

fn hyh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyh")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_passes_and_reports() {
    let o = hyh(&["verify", "--scope", "all", "--cases", "12", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("kernel.reconstruction"));
    assert!(text.contains("riccati.kkt_residual"));
    assert!(text.contains("0 failed"));
}

#[test]
fn injected_fault_fails() {
    let o = hyh(&["verify", "--scope", "kernels", "--cases", "4", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL kernel."));
}

#[test]
fn zero_cases_warns() {
    let o = hyh(&["verify", "--cases", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hyh(&["verify", "--scope", "everything"]).status.code(), Some(2));
    assert_eq!(hyh(&["verify", "--instance", "/definitely/not/here.json"]).status.code(), Some(2));
    assert_eq!(hyh(&["bench-update", "--reps", "1"]).status.code(), Some(2));
    assert_eq!(hyh(&["gen", "kernel", "--signs", "+x"]).status.code(), Some(2));
}

#[test]
fn update_bench_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let o = hyh(&["bench-update", "--reps", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 16 * (3 + 1));
    assert!(rows.iter().all(|r| r.split(',').count() == 13));
    assert_eq!(rows.iter().filter(|r| r.starts_with("full_factorization,64,")).count(), 16);
}

fn residual_columns(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let f: Vec<_> = l.split(',').collect();
            let mut keep: Vec<&str> = f[..10].to_vec();
            keep.extend(&f[11..]);
            keep.join(",")
        })
        .collect()
}

#[test]
fn riccati_smoke_is_fast_and_deterministic() {
    let args = ["bench-riccati", "-N", "4", "--nx", "4", "--nu", "2", "--nc", "2,4", "--reps", "3", "--seed", "9"];
    let t = Instant::now();
    let a = hyh(&args);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(a.status.code(), Some(0));
    let b = hyh(&args);
    let (a, b) = (stdout(&a), stdout(&b));
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    assert_eq!(residual_columns(&a), residual_columns(&b));
}

#[test]
fn generated_instances_verify() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("k.json");
    let p = dir.path().join("o.json");
    assert!(hyh(&["gen", "kernel", "--n", "20", "--signs", "+-+-", "--seed", "3", "--out", k.to_str().unwrap()])
        .status
        .success());
    assert!(hyh(&["gen", "ocp", "-N", "5", "--nx", "3", "--nu", "2", "--nc", "4", "--out", p.to_str().unwrap()])
        .status
        .success());
    for f in [&k, &p] {
        let o = hyh(&["verify", "--instance", f.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let o = hyh(&["verify", "--instance", k.to_str().unwrap(), "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));

    // Same seed, same bytes.
    let again = dir.path().join("k2.json");
    hyh(&["gen", "kernel", "--n", "20", "--signs", "+-+-", "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(&k).unwrap(), std::fs::read(&again).unwrap());
}
