use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{"horizon_s": 1800, "n_type_a": 40, "n_type_b": 8, "n_tasks": 20, "seed": 3}"#;

fn ridesense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ridesense")).args(args).output().unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_report_events_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        std::fs::create_dir(out).unwrap();
        let o = ridesense(&["run", &cfg, "--mechanism", "rbc", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for f in ["report.json", "events.ndjson", "metrics.csv"] {
            assert!(out.join(f).is_file(), "missing {f}");
        }
    }
    let ra = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report.json")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["mechanism"], "rbc");
    assert_eq!(report["seed"], 3);

    let events = std::fs::read_to_string(a.join("events.ndjson")).unwrap();
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["event"].is_string());
    }
    let metrics = std::fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next(), Some("cycle,released,assigned,theta,omega_t,objective"));
    assert_eq!(metrics.lines().count(), 1 + 1800 / 300);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = ridesense(&["run", &cfg, "--seed", "9", "--out", s(dir.path())]);
    assert!(o.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
}

#[test]
fn bad_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(ridesense(&["run", s(&missing)]).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_type_a": -4}"#).unwrap();
    assert_eq!(ridesense(&["run", s(&bad), "--out", s(dir.path())]).status.code(), Some(2));
    std::fs::write(&bad, r#"{"horizon_s": 1000}"#).unwrap();
    let o = ridesense(&["run", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon_s"));

    assert_eq!(ridesense(&["run"]).status.code(), Some(2));
    let cfg = small_config(dir.path());
    assert_eq!(ridesense(&["sweep", &cfg, "--param", "zoom", "--values", "1"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = ridesense(&["run", &cfg, "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compare_runs_both_mechanisms_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = ridesense(&["compare", &cfg, "--seeds", "5", "--out", s(dir.path())]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("ran 10 simulations"));
    let table = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let mut lines = table.lines();
    let header = lines.next().unwrap();
    for col in ["SS_mean", "RB_mean", "CR_mean", "AWT_mean", "ATR_mean", "AP_A_mean", "AP_B_mean"] {
        assert!(header.contains(col), "{header}");
    }
    assert_eq!(lines.count(), 2);
}

#[test]
fn sweep_writes_one_row_per_value_seed_and_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = ridesense(&[
        "sweep",
        &cfg,
        "--param",
        "n_type_b",
        "--values",
        "4,8,12",
        "--seeds",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(dir.path().join("sweep_n_type_b.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2 * 2);

    let o = ridesense(&[
        "sweep",
        &cfg,
        "--param",
        "bid_bounds",
        "--values",
        "2:4,2.5:3.5",
        "--seeds",
        "1",
        "--mechanism",
        "rbc",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(Result::ok)
        .find(|e| e.file_name().to_string_lossy().starts_with("sweep_bid"));
    assert_eq!(std::fs::read_to_string(rows.unwrap().path()).unwrap().lines().count(), 1 + 2);
}

#[test]
fn verify_budget_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ridesense(&["verify", "--suite", "bb", "--instances", "50", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_reports_vcg_rationality_counterexamples() {
    let dir = tempfile::tempdir().unwrap();
    let o = ridesense(&["verify", "--suite", "ir", "--instances", "200", "--mechanism", "vcg", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("counterexample_ir.json").is_file());
    let o = ridesense(&["verify", "--suite", "ir", "--instances", "200", "--mechanism", "rbc", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
