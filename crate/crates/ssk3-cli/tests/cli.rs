use std::path::Path;
use std::process::{Command, Output};

fn ssk3(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssk3"))
        .arg("--cache-dir")
        .arg(cache)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn candidates_match_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["candidates", "--strict", "--p", "19"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.ends_with("# triples=20169 pairs=14487 pruned_triples=9247 pruned_pairs=7722\n"), "{out}");
    assert!(out.lines().filter(|l| !l.starts_with('#')).all(|l| l.starts_with("19\t")));
}

#[test]
fn candidates_json_parses() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["candidates", "--format", "json", "--R", "21A1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["triples"], 20169);
    let rows = v["candidates"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["r"] == "21A1"));
}

#[test]
fn classify_then_verify_p19() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["classify-rdp", "--p", "19"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("19\tA18+A3\t76\t1\tComplete"), "{out}");
    let o = ssk3(dir.path(), &["verify", "--table", "RDP", "--p", "19"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).trim(), "table RDP: missing 0 extra 0 mismatched 0");

    let o = ssk3(dir.path(), &["cache", "ls"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rdp-p19.json\trdp\t19\t"));
    // second run is served from the cache
    let o = ssk3(dir.path(), &["classify-rdp", "--p", "19"]);
    assert!(!stderr(&o).contains("classifying"), "{}", stderr(&o));
}

#[test]
fn elliptic_p11_matches_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["classify-elliptic", "--p", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for table in ["E", "QE"] {
        let o = ssk3(dir.path(), &["verify", "--table", table, "--p", "11"]);
        assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn static_tables_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["verify", "--table", "T2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with("\tok")).count(), 10);
    assert!(stdout(&o).contains("sigma=10\tisotropic=true\tconditions=true\tdisc=-2^20"));
    let o = ssk3(dir.path(), &["verify", "--table", "T1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_without_cache_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["verify", "--table", "RDP", "--p", "17"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no cached result"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["candidates", "--R", "Z9"][..],
        &["classify-rdp", "--node-budget", "0"],
        &["classify-rdp", "--time-budget", "-1"],
        &["verify"],
        &["verify", "--table", "X"],
        &["classify-rdp", "--workers", "0"],
    ] {
        let o = ssk3(dir.path(), args);
        assert_ne!(o.status.code(), Some(0), "{args:?} succeeded");
    }
}

#[test]
fn tiny_budget_reports_undecided() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssk3(dir.path(), &["classify-rdp", "--p", "2", "--R", "21A1", "--n", "2", "--node-budget", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("Undecided"));
    let o = ssk3(dir.path(), &["cache", "gc"]);
    assert_eq!(stdout(&o).trim(), "removed 0 files, dropped 1 undecided entries");
}

#[test]
fn corrupt_cache_is_reported_and_collected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("rdp-p19.json"), "{ not json").unwrap();
    let o = ssk3(dir.path(), &["classify-rdp", "--p", "19"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ssk3(dir.path(), &["cache", "gc"]);
    assert_eq!(stdout(&o).trim(), "removed 1 files, dropped 0 undecided entries");
}
