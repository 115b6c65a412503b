//! The `modcount` binary end to end: files, caches, exit codes and formats.

use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modcount"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn census_writes_one_file_per_prime_and_reuses_it() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["census", "--q-range", "5..31", "--cache-dir", "c"];
    let first = run(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0));
    let files = std::fs::read_dir(dir.path().join("c")).unwrap().count();
    assert_eq!(files, 9);
    assert!(stdout(&first).contains("5,12,20,5,built"));
    let again = run(dir.path(), &args);
    assert_eq!(again.status.code(), Some(0));
    let out = stdout(&again);
    assert!(out.contains("31,66,930,31,cached"));
    assert!(!out.contains("built"));
}

#[test]
fn census_rejects_non_primes_but_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["census", "--q-range", "4..5", "--cache-dir", "c"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping 4"));
    let out = stdout(&o);
    assert!(out.contains("# rejected: 4"));
    assert!(out.contains("\n5,12,20,5,"));
}

#[test]
fn corrupt_cache_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("c")).unwrap();
    std::fs::write(dir.path().join("c/census_p7.jsonl"), "not json\n").unwrap();
    let o = run(dir.path(), &["census", "--q", "7", "--cache-dir", "c"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("7,18,42,7,rebuilt"));
    let o = run(dir.path(), &["census", "--q", "7", "--cache-dir", "c"]);
    assert!(stdout(&o).contains("7,18,42,7,cached"));
}

#[test]
fn hgamma_footer_sums_to_the_class_number() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["hgamma", "--level", "G1-5", "--q", "11", "--cache-dir", "c"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("# sum H q=11: 80/121"));
}

#[test]
fn gamma1_3_has_no_nonsplit_reduction_at_7() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "local-stats",
            "--level",
            "G1-3",
            "--q",
            "7",
            "--B",
            "200",
            "--samples",
            "2000",
            "--cache-dir",
            "c",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\n7,nonsplit,0,0,1\n"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = run(dir.path(), &["census", "--q", "4..8"]);
    assert_eq!(bad.status.code(), Some(4));
    let unknown = run(dir.path(), &["bogus"]);
    assert_eq!(unknown.status.code(), Some(4));
    let two_levels = run(
        dir.path(),
        &["moments", "--level", "G1-5,G1-7", "--q", "11"],
    );
    assert_eq!(two_levels.status.code(), Some(4));
    // Non-coprime q is skipped with a note, not an error.
    let coprime = run(dir.path(), &["cusps", "--level", "G1-7", "--q", "14"]);
    assert_eq!(coprime.status.code(), Some(0));
    assert!(stdout(&coprime).contains("# skipped for G1-7: 14"));
    let big = run(dir.path(), &["census", "--q", "20011", "--cache-dir", "c"]);
    assert_eq!(big.status.code(), Some(3));
    let help = run(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn output_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "moments",
        "--level",
        "G1-7",
        "--q-range",
        "7..60",
        "--R",
        "2",
        "--jobs",
        "1",
        "--cache-dir",
        "c",
    ];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn json_reports_parse_and_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "cusps", "--level", "G1-7", "--q", "11,13", "--format", "json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "cusps");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 16);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["rational_count"], 3);
    assert_eq!(rows[1]["rational_count"], 6);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.txt"), "level=G1-5\nq=11\n").unwrap();
    let from_file = run(
        dir.path(),
        &["hgamma", "--config", "cfg.txt", "--cache-dir", "c"],
    );
    let explicit = run(
        dir.path(),
        &["hgamma", "--level", "G1-5", "--q", "11", "--cache-dir", "c"],
    );
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, explicit.stdout);
    let overridden = run(
        dir.path(),
        &[
            "hgamma",
            "--config",
            "cfg.txt",
            "--q",
            "13",
            "--cache-dir",
            "c",
        ],
    );
    assert!(stdout(&overridden).contains("# sum H q=13:"));
    std::fs::write(dir.path().join("bad.txt"), "colour=blue\n").unwrap();
    let bad = run(dir.path(), &["hgamma", "--config", "bad.txt"]);
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["cusps", "--level", "G1-5", "--q", "11", "--out", "r.csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(text.starts_with("# modcount "));
    assert!(text.contains(",11,"));
}
