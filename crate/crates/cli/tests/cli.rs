use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use confinement_lab::{RunReport, EXIT_FAILURE, EXIT_VALIDATION};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confinement-lab"))
}

fn run_spec(dir: &Path, name: &str, spec: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, spec).unwrap();
    let out = dir.join(name);
    bin().arg("run").arg(&path).arg("--out").arg(&out).args(extra).output().unwrap()
}

#[test]
fn spherical_table_writes_the_ground_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_spec(dir.path(), "sph", r#"{"schema":1,"task":{"kind":"spherical-table","m":1,"k_max":5}}"#, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sph/table.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines, ["k,lambda,multiplicity", "1,0.5,2", "3,3.5,4", "5,8.5,6"]);
    let report: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("sph/report.json")).unwrap()).unwrap();
    assert_eq!(report.spec.task.name(), "spherical-table");
}

#[test]
fn sweep_alpha_flips_between_point_eight_and_point_nine() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_spec(
        dir.path(),
        "sweep",
        r#"{"schema":1,"task":{"kind":"sweep-alpha","range":[0.3,1.2],"step":0.1}}"#,
        &[],
    );
    assert!(o.status.success());
    let mut rd = csv::Reader::from_path(dir.path().join("sweep/table.csv")).unwrap();
    let rows: Vec<(f64, String, String)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[4].to_string(), r[5].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 10);
    for (alpha, ind, sol) in rows {
        let want = if alpha < 0.85 { "limit_circle" } else { "limit_point" };
        assert_eq!((ind.as_str(), sol.as_str()), (want, want), "α = {alpha}");
    }
}

#[test]
fn malformed_spec_exits_two_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_spec(
        dir.path(),
        "bad",
        r#"{"schema":1,"field":{"kind":"disk_counterexample","alpha":-1},"task":{"kind":"scan-criterion"}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
    assert!(!dir.path().join("bad").exists());
    assert!(!o.stderr.is_empty());
    let o = run_spec(dir.path(), "junk", "{not json", &[]);
    assert_eq!(o.status.code(), Some(EXIT_VALIDATION));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"schema":1,"seed":5,
        "field":{"kind":"constant","b0":[[0.0,2.0],[-2.0,0.0]]},
        "domain":{"kind":"disk2d","radius":1.0},
        "task":{"kind":"lemma-slack","hs":[0.2,0.1],"trials":10,"calibration_h":0.2}}"#;
    let a = run_spec(dir.path(), "a", spec, &["--threads", "2"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run_spec(dir.path(), "b", spec, &[]);
    assert!(b.status.success());
    let ca = fs::read(dir.path().join("a/table.csv")).unwrap();
    assert_eq!(ca, fs::read(dir.path().join("b/table.csv")).unwrap());
    let c = run_spec(dir.path(), "c", spec, &["--seed", "6"]);
    assert!(c.status.success());
    let report: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("c/report.json")).unwrap()).unwrap();
    assert_eq!(report.spec.seed, 6);
}

#[test]
fn eig_dumps_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"schema":1,
        "field":{"kind":"constant","b0":[[0.0,1.0],[-1.0,0.0]]},
        "domain":{"kind":"disk2d","radius":1.0},
        "task":{"kind":"eig","h":0.1,"k":3}}"#;
    let o = run_spec(dir.path(), "eig", spec, &["--dump-matrix"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mtx = fs::read_to_string(dir.path().join("eig/matrix.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate complex hermitian"));
    let report: RunReport = serde_json::from_str(&fs::read_to_string(dir.path().join("eig/report.json")).unwrap()).unwrap();
    let confinement_lab::Payload::Eig(t) = report.payload else { panic!() };
    assert_eq!(t.eigen.values.len(), 3);
    assert!(t.eigen.residuals.iter().all(|r| *r <= 1e-8));
    assert!(t.hermitian_defect <= 1e-13);
}

#[test]
fn validate_reports_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"schema":1,"task":{"kind":"monopole-verdict","m":[1,2]}}"#).unwrap();
    let o = bin().arg("validate").arg(&good).output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok: monopole-verdict");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"schema":1,"task":{"kind":"monopole-verdict","m":[0]}}"#).unwrap();
    assert_eq!(bin().arg("validate").arg(&bad).output().unwrap().status.code(), Some(EXIT_VALIDATION));
}

#[test]
fn reproduce_passes_and_catches_a_corrupted_threshold() {
    let o = bin().arg("reproduce").output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 12);

    let o = bin().args(["reproduce", "--corrupt-threshold"]).output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_FAILURE));
    let text = String::from_utf8_lossy(&o.stdout);
    let fails: Vec<_> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(fails.len(), 1, "{text}");
    assert!(fails[0].contains("disk-sweep"));
}
