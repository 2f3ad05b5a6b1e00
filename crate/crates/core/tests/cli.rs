use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ndn-dos"))
}

fn chain() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/chain.json")
}

#[test]
fn validate_reports_counts() {
    let out = bin().arg("validate").arg(chain()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6 nodes") && text.contains("2 arm(s)"), "{text}");
}

#[test]
fn invalid_scenario_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "bad", "duration_ms": 0, "nodes": [], "links": []}"#).unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("duration_ms") && err.contains("no nodes"), "{err}");
}

#[test]
fn run_honours_the_output_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--seed", "3"])
        .arg(chain())
        .env("NDN_DOS_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("summary.json").is_file());
    assert!(dir.path().join("defended/replicate-0.csv").is_file());
    assert!(dir.path().join("undefended/replicate-0.csv").is_file());
}
