use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reuselab::selection::selection_probability;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_reuselab"));
    c.env_remove("REUSELAB_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const MINIMAL: &str = r#"
test_prop = 0.5
repetitions = 2
strategies = ["random"]
consumers = ["least-squares", "lda"]
n_grid = [10, 50, 100]
base_seed = 1
[dataset]
kind = "uniform-line"
n = 200
"#;

const TRACED: &str = r#"
test_prop = 0.5
repetitions = 3
strategies = ["random", "uncertainty", "iwal", "iwal-no-weights"]
consumers = ["least-squares"]
n_grid = [20, 100]
c0_grid = [0.05, 1.0]
base_seed = 5
traces = true
[dataset]
kind = "uniform-line"
n = 200
"#;

#[test]
fn gen_circle_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = run(&["gen", "circle", "--n", "10000", "--circle-prob", "0.001", "--out", s(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "f0,f1,label");
    assert_eq!(lines.count(), 10000);
    assert!(String::from_utf8_lossy(&o.stdout).contains("instances 10000"));
}

#[test]
fn gen_is_deterministic_and_reports_balance() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let o = run(&["gen", "four-cluster-line", "--n", "1000", "--seed", "9", "--out", s(&a)]);
    run(&["gen", "four-cluster-line", "--n", "1000", "--seed", "9", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let frac: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("positive_fraction "))
        .unwrap()
        .parse()
        .unwrap();
    // Binomial(1000, 0.5), five standard deviations.
    assert!((frac - 0.5).abs() < 5.0 * (0.25f64 / 1000.0).sqrt(), "{frac}");
}

#[test]
fn gen_io_failure_exits_four() {
    let o = run(&["gen", "uniform-line", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn minimal_run_rows_and_quiet_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MINIMAL);
    let out = dir.path().join("out");
    let o = run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&out)]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty());
    let stdout = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(stdout.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 8);
    assert_eq!(rdr.records().collect::<Result<Vec<_>, _>>().unwrap().len(), 3 * 2);
    assert_eq!(fs::read_to_string(out.join("curve.csv")).unwrap(), stdout);
    for f in ["report.csv", "reps.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn progress_goes_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MINIMAL);
    let o = run(&["run", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("repetition"));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("strategy,consumer,cell"));
}

#[test]
fn rerun_and_manifest_rerun_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", TRACED);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&a), "--jobs", "1"]).status.success());
    assert!(run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&b), "--jobs", "3"]).status.success());
    let manifest = a.join("manifest.json");
    assert!(run(&["--quiet", "run", "--config", s(&manifest), "--out-dir", s(&c)]).status.success());
    for f in ["curve.csv", "report.csv", "reps.csv"] {
        let base = fs::read(a.join(f)).unwrap();
        assert_eq!(base, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(base, fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn env_sets_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MINIMAL);
    let out = dir.path().join("from-env");
    let o = bin().args(["--quiet", "run", "--config", s(&cfg)]).env("REUSELAB_OUT_DIR", &out).output().unwrap();
    assert!(o.status.success());
    assert!(out.join("curve.csv").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", MINIMAL);
    let a = run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&dir.path().join("a"))]);
    let b = run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&dir.path().join("b")), "--seed", "77"]);
    assert_ne!(a.stdout, b.stdout);
    let manifest = fs::read_to_string(dir.path().join("b/manifest.json")).unwrap();
    assert!(manifest.contains("\"base_seed\": 77"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(dir.path(), "typo.toml", &MINIMAL.replace("repetitions", "repetitons"));
    let o = run(&["run", "--config", s(&typo), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("repetitons"));
    assert_eq!(run(&["run"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn all_cells_empty_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // Two examples cannot give QDA a usable covariance for either class.
    let body = MINIMAL.replace("[10, 50, 100]", "[2]").replace("\"least-squares\", \"lda\"", "\"qda\"");
    let cfg = write_config(dir.path(), "e.toml", &body);
    let o = run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3));
}

fn traced_run(dir: &Path) -> PathBuf {
    let cfg = write_config(dir, "t.toml", TRACED);
    let out = dir.join("out");
    assert!(run(&["--quiet", "run", "--config", s(&cfg), "--out-dir", s(&out)]).status.success());
    out
}

#[test]
fn replay_verifies_every_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = traced_run(dir.path());
    let o = run(&["replay", s(&out)]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    // 3 reps x (2 random + 2 uncertainty + 2 x 2 iwal) cells.
    assert_eq!(stdout.lines().filter(|l| l.starts_with("ok ")).count(), 3 * 8);
}

fn iwal_trace(out: &Path) -> PathBuf {
    out.join("traces/rep0001-iwal-0.05.csv")
}

#[test]
fn flipped_coin_is_reported_at_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = traced_run(dir.path());
    let path = iwal_trace(&out);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // Line 0 is the header comment, line 1 the column names.
    let target = (2..lines.len()).find(|&i| lines[i].split(',').nth(3) == Some("0")).unwrap();
    let mut fields: Vec<String> = lines[target].split(',').map(str::to_string).collect();
    fields[3] = "1".into();
    lines[target] = fields.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let o = run(&["replay", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains(&format!("row {} field coin", target - 2)), "{stdout}");
}

#[test]
fn wrong_c0_diverges_where_probabilities_first_differ() {
    let dir = tempfile::tempdir().unwrap();
    let out = traced_run(dir.path());
    let path = iwal_trace(&out);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"c0\":0.05"));
    let tampered = text.replacen("\"c0\":0.05", "\"c0\":0.2", 1);
    fs::write(&path, &tampered).unwrap();

    // Rows agree until the first probability that changes with c0.
    let expected = text
        .lines()
        .skip(2)
        .enumerate()
        .find(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let (g, p): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
            selection_probability(g, i + 1, 0.2) != p
        })
        .unwrap()
        .0;
    let o = run(&["replay", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains(&format!("row {expected} field probability")), "{stdout}");
}

#[test]
fn corrupt_trace_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = traced_run(dir.path());
    let path = iwal_trace(&out);
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen(",", ";", 3)).unwrap();
    assert_eq!(run(&["replay", s(&path)]).status.code(), Some(2));
    let missing = dir.path().join("nope.csv");
    assert_eq!(run(&["replay", s(&missing)]).status.code(), Some(4));
}

#[test]
fn report_merge_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = traced_run(dir.path());
    let reps = fs::read_to_string(out.join("reps.csv")).unwrap();
    let mut lines = reps.lines();
    let header = lines.next().unwrap();
    let body: Vec<&str> = lines.collect();
    let (first, second) = body.split_at(body.len() / 2);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, format!("{header}\n{}\n", second.join("\n"))).unwrap();
    fs::write(&b, format!("{header}\n{}\n", first.join("\n"))).unwrap();
    let merged = dir.path().join("merged");
    let o = run(&["report-merge", s(&a), s(&b), "--out-dir", s(&merged)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["curve.csv", "report.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(merged.join(f)).unwrap(), "{f}");
    }
    // The same records twice is a duplicate, not a merge.
    let o = run(&["report-merge", s(&a), s(&a), "--out-dir", s(&merged)]);
    assert_eq!(o.status.code(), Some(2));
}
