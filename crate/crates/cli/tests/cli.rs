use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bearing-flows"))
}

fn scenarios() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios");
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    out.sort();
    out
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(format!("{name}.json"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

/// Exit code of each bundled scenario: 0 when it converges, 2 when it is still
/// moving at its time limit (unstable target, fixed-horizon figures, a
/// non-equivalent equilibrium).
const EXPECTED: [(&str, i32); 10] = [
    ("counterexample", 2),
    ("fig3_directed", 0),
    ("fig3_undirected", 0),
    ("fig4_cycle", 2),
    ("fig4_directed", 2),
    ("fig4_undirected", 2),
    ("leader_follower", 0),
    ("persistence_fig1", 2),
    ("two_body", 0),
    ("unit_square_cycle", 0),
];

#[test]
fn bundled_scenarios_exit_codes() {
    let all = scenarios();
    assert_eq!(all.len(), EXPECTED.len());
    let out = tempfile::tempdir().unwrap();
    for (path, (name, code)) in all.iter().zip(EXPECTED) {
        let stem = path.file_stem().unwrap().to_string_lossy();
        assert_eq!(stem, name);
        let o = run(bin().arg("simulate").arg(path).arg("--out").arg(out.path()));
        assert_eq!(o.status.code(), Some(code), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.path().join(format!("{stem}_report.json"))).unwrap()).unwrap();
        assert!(report.is_object());
        assert!(out.path().join(format!("{stem}_trajectory.csv")).exists());
    }
}

#[test]
fn time_limit_exits_with_two() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().arg("simulate").arg(scenario("two_body")).args(["--tmax", "0.5", "--out"]).arg(out.path()));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trajectories_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(bin().arg("simulate").arg(scenario("fig4_undirected")).args(["--seed", "7", "--out"]).arg(dir.path()));
        assert_eq!(o.status.code(), Some(2));
    }
    for name in ["fig4_undirected_trajectory.csv", "fig4_undirected_report.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn json_format_writes_a_json_trajectory() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().arg("simulate").arg(scenario("two_body")).args(["--format", "json", "--out"]).arg(out.path()));
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.path().join("two_body_trajectory.json")).unwrap();
    serde_json::from_str::<serde_json::Value>(&text).unwrap();
}

#[test]
fn malformed_scenario_fails_without_output() {
    let out = tempfile::tempdir().unwrap();
    let bad = out.path().join("bad.json");
    fs::write(&bad, "{ \"name\": \"bad\", \"graph\": ").unwrap();
    let o = run(bin().arg("simulate").arg(&bad).arg("--out").arg(out.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    assert_eq!(listing(out.path()), vec!["bad.json".to_string()]);
}

#[test]
fn unknown_reproduction_is_an_error() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().args(["reproduce", "fig9", "--out"]).arg(out.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(listing(out.path()).is_empty());
}

#[test]
fn unknown_certificate_is_an_error() {
    let o = run(bin().arg("analyze").arg(scenario("two_body")).args(["--cert", "nu,bogus"]));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_prints_requested_certificates() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().arg("analyze").arg(scenario("counterexample")).args(["--cert", "spectrum,rigidity", "--out"]).arg(out.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!report["spectrum"].is_null());
    assert!(!report["rigidity"].is_null());
}

#[test]
fn reproduce_counterexample_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().args(["reproduce", "counterexample", "--out"]).arg(out.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn batch_reports_the_worst_exit_code() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin()
        .arg("batch")
        .arg(scenario("two_body"))
        .arg(scenario("unit_square_cycle"))
        .args(["--sequential", "--out"])
        .arg(out.path()));
    assert_eq!(o.status.code(), Some(0));
    let missing = out.path().join("missing.json");
    let o = run(bin().arg("batch").arg(scenario("two_body")).arg(&missing).arg("--out").arg(out.path()));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sequential_and_parallel_certificates_agree() {
    let out = tempfile::tempdir().unwrap();
    let args = ["--cert", "nu,persistence", "--seed", "3", "--out"];
    let par = run(bin().arg("analyze").arg(scenario("persistence_fig1")).args(args).arg(out.path()));
    let seq = run(bin().arg("analyze").arg(scenario("persistence_fig1")).args(args).arg(out.path()).arg("--sequential"));
    assert_eq!(par.status.code(), Some(0), "{}", String::from_utf8_lossy(&par.stderr));
    assert_eq!(par.stdout, seq.stdout);
}

#[test]
fn controller_overrides_apply() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin()
        .arg("simulate")
        .arg(scenario("fig4_undirected"))
        .args(["--controller", "consensus", "--topology", "directed", "--tmax", "20", "--out"])
        .arg(out.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Converged"));
    let o = run(bin().arg("simulate").arg(scenario("two_body")).args(["--controller", "formation", "--out"]).arg(out.path()));
    assert_eq!(o.status.code(), Some(1));
}
