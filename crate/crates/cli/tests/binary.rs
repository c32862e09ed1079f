use std::path::Path;
use std::process::{Command, Output};

fn ffdyn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffdyn")).args(args).arg("--out").arg(out).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = ffdyn(&["cusp-volume", "--seed", "1", "rank=1"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    let threshold = ffdyn(&["cusp-volume", "--seed", "1", "rank=3", "q=4"], dir.path());
    assert_eq!(threshold.status.code(), Some(2));
    let bad = ffdyn(&["cusp-volume", "rank=1"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("seed"));
}

#[test]
fn module_errors_carry_a_reproduction_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.txt");
    let out = ffdyn(&["reduce", "--seed", "0", &format!("matrix={}", missing.display())], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("lattice: "), "{err}");
    assert!(err.contains("reproduce with: ffdyn reduce --seed 0"), "{err}");
}

#[test]
fn artifacts_start_with_a_schema_line_and_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["delta-flow", "--seed", "11", "trials=3", "T=16"];
    let ra = ffdyn(&args, a.path());
    let rb = ffdyn(&[&args[..], &["--threads", "2"]].concat(), b.path());
    assert_eq!(ra.status.code(), Some(0));
    assert_eq!(rb.status.code(), Some(0));
    for name in ["delta-flow.csv", "delta-flow-report.json", "delta-flow-config.txt"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    assert!(read(a.path(), "delta-flow.csv").starts_with("# ffdyn-delta-flow v1\n"));
    assert!(read(a.path(), "delta-flow-report.json").contains("\"schema\": \"ffdyn-report v1\""));
    assert!(String::from_utf8_lossy(&ra.stderr).contains("wall clock"));
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# quick run\nseed = 5\nrank = 2\nq = 3\n").unwrap();
    let out = ffdyn(&["cusp-volume", "--config", cfg.to_str().unwrap(), "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(read(dir.path(), "cusp-volume.json").starts_with("{\"schema\":\"ffdyn-cusp-volume v1\""));
}

#[test]
fn tree_loglaw_reports_median_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = ffdyn(&["tree-loglaw", "--seed", "2", "--format", "json", "q=2", "trials=200", "T=100000"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "tree-loglaw.json")).unwrap();
    let median = v["median_ratio"].as_f64().unwrap();
    assert!((median - 1.0).abs() <= 0.15, "{median}");
}

#[test]
fn convergent_ladder_is_classified_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let out = ffdyn(&["strong-bc", "--seed", "3", "ladder=convergent", "N=10000", "trials=50"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = read(dir.path(), "strong-bc-report.json");
    assert!(report.contains("\"classification\": \"convergent: counts bounded\""), "{report}");
}
