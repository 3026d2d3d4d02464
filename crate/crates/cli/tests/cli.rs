use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use weakcoupled::report::TaskData;
use weakcoupled::{Report, RunConfig};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_weakcoupled"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn base_config(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

#[test]
fn ground_state_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["ground-state"], &configs().join("ground_state.json"), dir.path()), 0);
    let text = std::fs::read_to_string(dir.path().join("ground-state.json")).unwrap();
    let report = Report::round_trip(&text).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    for key in ["schema", "config", "results", "thresholds", "timing"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let TaskData::GroundState { solutions } = &report.results.data else {
        panic!("wrong task")
    };
    assert_eq!(solutions.len(), 1);
    assert_eq!(solutions[0].classification, "fully-nontrivial");
    let csv = std::fs::read_to_string(dir.path().join("ground-state.csv")).unwrap();
    assert!(csv.starts_with("orbit_id,energy,"));
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn invalid_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = base_config("ground_state.json");
    v["problem"]["lambda"] = (-1.0).into();
    let cfg = write_config(dir.path(), "neg.json", &v);
    let out = dir.path().join("out");
    assert_eq!(run(&["ground-state"], &cfg, &out), 2);
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());

    let mut v = base_config("ground_state.json");
    v["solver"]["tolerance"] = 1e-9.into();
    let cfg = write_config(dir.path(), "unknown.json", &v);
    assert_eq!(run(&["ground-state"], &cfg, &out), 2);
    assert_eq!(run(&["ground-state"], &dir.path().join("missing.json"), &out), 2);
}

#[test]
fn boundary_infimum_is_a_solver_failure() {
    // λ below Λ₀ = 1/2 in the symmetric four-dimensional family
    let dir = tempfile::tempdir().unwrap();
    let mut v = base_config("limit.json");
    v["problem"]["lambda"] = 0.25.into();
    let cfg = write_config(dir.path(), "low.json", &v);
    assert_eq!(run(&["limit"], &cfg, dir.path()), 3);
    assert!(!dir.path().join("limit.json").exists());
}

#[test]
fn failed_property_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = base_config("multiplicity.json");
    v["task"]["multiplicity"] = serde_json::json!({ "orbits": 40, "budget": 2 });
    let cfg = write_config(dir.path(), "greedy.json", &v);
    assert_eq!(run(&["multiplicity"], &cfg, dir.path()), 4);
    let text = std::fs::read_to_string(dir.path().join("multiplicity.json")).unwrap();
    let report = Report::round_trip(&text).unwrap();
    assert!(!report.results.passed());
}

#[test]
fn resonant_kappa_skips_the_claim_sweep() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["verify-estimates"], &configs().join("estimates_resonant.json"), dir.path()),
        0
    );
    let text = std::fs::read_to_string(dir.path().join("verify-estimates.json")).unwrap();
    let report = Report::round_trip(&text).unwrap();
    assert!(report.results.notes.iter().any(|n| n.starts_with("resonant κ: hypothesis violated")));
    let TaskData::VerifyEstimates(e) = &report.results.data else {
        panic!("wrong task")
    };
    assert!(e.claim.is_none());
}

#[test]
fn seed_override_is_recorded_and_runs_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ground_state.json");
    let out = dir.path().join("a");
    let args = ["ground-state", "--seed", "99", "--threads", "2"];
    assert_eq!(run(&args, &cfg, &out), 0);
    let ta = std::fs::read(out.join("ground-state.json")).unwrap();
    let ca = std::fs::read(out.join("ground-state.csv")).unwrap();
    assert_eq!(run(&args, &cfg, &out), 0);
    assert_eq!(ta, std::fs::read(out.join("ground-state.json")).unwrap());
    assert_eq!(ca, std::fs::read(out.join("ground-state.csv")).unwrap());
    let v: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(v["config"]["solver"]["seed"], 99);
    assert!(std::fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn every_subcommand_round_trips() {
    for (cmd, file) in [
        (weakcoupled::Command::Thresholds, "thresholds.json"),
        (weakcoupled::Command::Limit, "limit.json"),
        (weakcoupled::Command::Synchronized, "synchronized.json"),
        (weakcoupled::Command::VerifyEstimates, "estimates_n5.json"),
    ] {
        let cfg = RunConfig::load(&configs().join(file)).unwrap();
        let report = weakcoupled::execute(cmd, &cfg).unwrap();
        assert!(report.results.passed(), "{file}: {:?}", report.results.checks);
        let text = report.to_json().unwrap();
        assert_eq!(Report::round_trip(&text).unwrap(), report);
        let csv = report.to_csv().unwrap();
        let mut lines = csv.lines();
        let width = lines.next().unwrap().split(',').count();
        assert!(lines.all(|l| l.split(',').count() == width));
    }
}
