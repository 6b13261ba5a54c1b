use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shipped(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn cdyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdyn"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("static.json");
    std::fs::write(&p, body).unwrap();
    p
}

const STATIC: &str = r#"{
  "name": "static",
  "dimension": 1,
  "kernel": { "kind": "zero" },
  "mass_law": { "kind": "zero" },
  "initial": { "x": { "builtin": "sin2_4s" }, "m": { "builtin": "uniform" } },
  "T": 0.1,
  "dt": 0.01,
  "N_list": [4, 8],
  "tolerances": { "projection_factor": 0.5 }
}"#;

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let help = cdyn(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(text(&help.stdout).contains("sweep"));
    assert_eq!(cdyn(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(cdyn(dir.path(), &["figure", &shipped("leaders_k1"), "--id", "fig9"]).status.code(), Some(1));
}

#[test]
fn missing_or_malformed_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdyn(dir.path(), &["simulate", "nope.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).starts_with("error:"));

    let p = write_scenario(dir.path(), &STATIC.replace(r#""kernel": { "kind": "zero" },"#, ""));
    let out = cdyn(dir.path(), &["simulate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("kernel"), "{}", text(&out.stderr));
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdyn(dir.path(), &["simulate", &shipped("leaders_k1"), "--grid", "10", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/leaders_k1_micro.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 52);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 21);
    assert_eq!((header[0], header[1], header[11]), ("t", "x_1", "m_1"));
    assert!(lines[51].starts_with("5."));

    let out = cdyn(dir.path(), &["simulate", &shipped("clusters"), "--level", "pde", "--grid", "40"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/clusters_pde.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x_center,density"));
    assert_eq!(csv.lines().count(), 1 + 51 * 40);
}

#[test]
fn refusals_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = shipped("leaders_k1");
    for args in [
        vec!["subordinate", k1.as_str()],
        vec!["simulate", k1.as_str(), "--level", "pde"],
        vec!["figure", k1.as_str(), "--id", "fig7"],
        vec!["figure", k1.as_str(), "--id", "fig5"],
    ] {
        let out = cdyn(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(text(&out.stderr).contains("refused"), "{}", text(&out.stderr));
    }
    // 15 agents cannot be split into leaders and followers with r = 0.1.
    let out = cdyn(dir.path(), &["simulate", &shipped("leaders_k2"), "--grid", "15"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn threshold_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), STATIC);
    let out = cdyn(dir.path(), &["sweep", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("x monotone: pass"));
    assert!(stdout.contains("final within projection bound: FAIL"));
    let csv = std::fs::read_to_string(dir.path().join("out/static_sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("N,x_error,m_error,x_projection,m_projection"));
    assert_eq!(csv.lines().count(), 3);

    let loose = write_scenario(dir.path(), &STATIC.replace("0.5", "2.0"));
    let out = cdyn(dir.path(), &["sweep", loose.to_str().unwrap(), "--n", "2,4"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
}

#[test]
fn empty_audit_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdyn(dir.path(), &["audit", &shipped("leaders_k1"), "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("audit: pass"));
    let csv = std::fs::read_to_string(dir.path().join("out/leaders_k1_audit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn figure_bundle_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = cdyn(dir.path(), &["figure", &shipped("leaders_k1"), "--id", "fig3"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(dir.path().join("out/leaders_k1_fig3_trajectory.csv").exists());
}
