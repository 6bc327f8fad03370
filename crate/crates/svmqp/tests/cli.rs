use std::path::Path;
use std::process::{Command, Output};

use svmqp::dataset::read_dataset;
use svmqp::report::{read_report, ExperimentReport};

fn svmqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svmqp"))
        .args(args)
        .env_remove("SVMQP_SEED")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_json(dir: &Path, name: &str, extra: &[&str]) -> (Output, Option<ExperimentReport>) {
    let out = dir.join(name);
    let mut args = vec!["train", "--n", "40", "--gamma", "3", "--test-size", "500", "--format", "json", "--out", path(&out)];
    args.extend_from_slice(extra);
    let o = svmqp(&args);
    let report = read_report(&out).ok();
    (o, report)
}

#[test]
fn gen_writes_requested_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let test = dir.path().join("test.csv");
    let o = svmqp(&[
        "gen", "--kind", "halfmoon", "--n", "48", "--d", "3", "--seed", "4", "--out", path(&train),
        "--test-out", path(&test), "--test-size", "30", "--header",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tr = read_dataset(&train).unwrap();
    assert_eq!((tr.len(), tr.dim()), (48, 3));
    assert_eq!(tr.count(1.0), 24);
    assert_eq!(read_dataset(&test).unwrap().len(), 30);
}

#[test]
fn converged_training_exits_zero_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (o, report) = train_json(dir.path(), "cmu.json", &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report.unwrap();
    assert!(r.converged());
    assert_eq!(r.solver, "cmu");
    assert_eq!(r.seed, 3);
    assert_eq!(r.test_points, 500);
    assert!(r.cycles.is_some());
    assert!(r.kkt_rel <= 1e-10);
    // The serialized report parses back to an identical value.
    let text = serde_json::to_string(&r).unwrap();
    let back: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn reports_are_reproducible_except_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = train_json(dir.path(), "a.json", &["--solver", "rsmo", "--max-iter", "2000"]);
    let (_, b) = train_json(dir.path(), "b.json", &["--solver", "rsmo", "--max-iter", "2000"]);
    let (mut a, mut b) = (a.unwrap(), b.unwrap());
    a.wall_time_s = 0.0;
    b.wall_time_s = 0.0;
    assert_eq!(a, b);
}

#[test]
fn seed_comes_from_the_environment_when_not_given() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env.json");
    let o = Command::new(env!("CARGO_BIN_EXE_svmqp"))
        .args(["train", "--n", "40", "--gamma", "3", "--test-size", "100", "--format", "json", "--out", path(&out)])
        .env("SVMQP_SEED", "17")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read_report(&out).unwrap().seed, 17);
}

#[test]
fn iteration_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (o, report) = train_json(dir.path(), "gsmo.json", &["--solver", "gsmo", "--max-iter", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let r = report.unwrap();
    assert!(!r.converged());
    assert_eq!(r.cycles, None);
    assert_eq!(r.inner_iterations, 3);
}

#[test]
fn invalid_input_exits_one() {
    let o = svmqp(&["train", "--n", "40", "--gamma=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    let o = svmqp(&["train", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-flag"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0.1,0.2,1\n0.3,0.4,2\n").unwrap();
    let o = svmqp(&["train", "--data", path(&bad), "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = svmqp(&["bench", "--table", "3", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_and_text_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let o = svmqp(&["train", "--n", "40", "--gamma", "3", "--test-size", "100", "--format", "csv", "--out", path(&csv)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("label,solver,status,cycles,inner_iterations"));

    let o = svmqp(&["train", "--n", "40", "--gamma", "3", "--test-size", "100"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let header = stdout.lines().next().unwrap();
    let cols = ["cycles", "iterations", "time", "KKT violation", "q(x_final)", "|x_final|", "rel class. errors"];
    let mut at = 0;
    for c in cols {
        let pos = header[at..].find(c).unwrap_or_else(|| panic!("{c} missing or out of order in {header}"));
        at += pos + c.len();
    }
}

#[test]
fn trained_file_data_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    assert!(svmqp(&["gen", "--kind", "checkerboard", "--n", "60", "--seed", "2", "--out", path(&train)]).status.success());
    let trace = dir.path().join("trace.csv");
    let out = dir.path().join("r.json");
    let o = svmqp(&[
        "train", "--data", path(&train), "--gamma", "3", "--C", "10", "--format", "json", "--out", path(&out),
        "--trace", path(&trace),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_report(&out).unwrap();
    assert_eq!(r.config.upper, 10.0);
    assert_eq!(r.test_points, 0);

    let mut rdr = csv::Reader::from_path(&trace).unwrap();
    let qs: Vec<f64> = rdr.records().map(|rec| rec.unwrap()[3].parse().unwrap()).collect();
    assert_eq!(qs.len(), r.inner_iterations + 1);
    for w in qs.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    }
}

#[test]
fn oracle_check_passes_on_random_instances() {
    let o = svmqp(&["oracle-check", "--count", "6", "--n", "7", "--C", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
