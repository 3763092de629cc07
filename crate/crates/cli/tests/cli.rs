use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lotus(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lotus"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOTUS_WORKERS")
        .output()
        .expect("spawn lotus")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path) {
    fs::write(
        dir.join("cfg.json"),
        r#"{"qubits":[6],"depths":[4],"densities":[0.8],"modes":[2],"seeds":6,"shots":0,"budget":200}"#,
    )
    .unwrap();
}

#[test]
fn gen_writes_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let o = lotus(&["gen", "-n", "7", "-p", "0.6", "-s", "4", "-o", "g.json"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let a = lotus_core::Instance::load(&dir.path().join("g.json"), true).unwrap();
    let b = lotus_core::Instance::generate(7, 0.6, 4).unwrap();
    assert_eq!(a.graph.edges(), b.graph.edges());
}

#[test]
fn gen_count_writes_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = lotus(&["gen", "-n", "5", "-c", "3", "-o", "many"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(fs::read_dir(dir.path().join("many")).unwrap().count(), 3);
}

#[test]
fn run_score_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let o = lotus(&["run", "--config", "cfg.json", "--out", "res.ndjson", "--workers", "2"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let records = lotus_core::harness::read_records(&dir.path().join("res.ndjson")).unwrap();
    assert_eq!(records.len(), 6 * 4);
    assert!(dir.path().join("res.csv").exists());
    assert!(!dir.path().join("res.ndjson.resume").exists());

    let o = lotus(&["score", "res.ndjson", "--alpha", "0.5", "--out", "scores.csv"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let csv = fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 24);
    assert!(csv.lines().next().unwrap().ends_with("score,alpha"));

    let o = lotus(&["report", "res.ndjson"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    for arm in ["nelder-mead", "powell", "fd-lbfgs", "lotus-k2"] {
        assert!(text.contains(arm), "{text}");
    }
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_lotus"))
        .args(["run", "--config", "cfg.json", "--out", "a.ndjson"])
        .current_dir(dir.path())
        .env("LOTUS_WORKERS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    let o = lotus(&["run", "--config", "cfg.json", "--out", "b.ndjson", "--workers", "1"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let strip = |name: &str| {
        lotus_core::harness::read_records(&dir.path().join(name))
            .unwrap()
            .into_iter()
            .map(|r| serde_json::to_string(&r.without_timing()).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip("a.ndjson"), strip("b.ndjson"));
}

#[test]
fn transfer_prints_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let o = lotus(
        &["transfer", "--n", "6", "--source-depth", "4", "--depths", "4,8", "-k", "1", "--no-hot-start", "--json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["depths"], serde_json::json!([4, 8]));
    assert_eq!(v["gaps"].as_array().unwrap().len(), 1);
}

#[test]
fn check_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = lotus(&["check"], dir.path());
    let text = stdout(&o);
    assert!(text.contains("15 checks"), "{text}");
    let failed = text.lines().any(|l| l.starts_with("[FAIL]"));
    assert_eq!(o.status.code(), Some(if failed { 1 } else { 0 }));
}

#[test]
fn check_fails_on_injected_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = lotus(&["check", "--inject-lipschitz-violation"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("[FAIL] lipschitz-certificate")));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lotus(&["run", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(lotus(&["run", "--config", "missing.json"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), r#"{"qubits":[6],"nope":1}"#).unwrap();
    assert_eq!(lotus(&["run", "--config", "bad.json"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("bad2.json"), r#"{"optimizers":["simplex-x"]}"#).unwrap();
    assert_eq!(lotus(&["run", "--config", "bad2.json"], dir.path()).status.code(), Some(2));
    assert_eq!(lotus(&["gen", "-n", "1", "-o", "x.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn resume_without_marker() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let o = lotus(&["run", "--config", "cfg.json", "--out", "r.ndjson", "--resume"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(lotus_core::harness::read_records(&dir.path().join("r.ndjson")).unwrap().len(), 24);
    // finished output is never overwritten by a resume
    let o = lotus(&["run", "--config", "cfg.json", "--out", "r.ndjson", "--resume"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(lotus_core::harness::read_records(&dir.path().join("r.ndjson")).unwrap().len(), 24);
}
