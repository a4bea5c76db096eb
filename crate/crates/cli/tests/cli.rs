use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn groundstate(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundstate"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn invalid_configurations_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["sweep-max", "--d", "3", "--sigma", "2.5"],
        &["sweep-max", "--d", "6"],
        &["epsilon-curve", "--d", "4"],
        &["profiles", "--tau", "-1"],
        &["profiles", "--sigma-range", "1:0.5:3"],
        &["profiles", "--M", "2"],
    ];
    for args in cases {
        let out = groundstate(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // clap rejects malformed flags with the same code
    let out = groundstate(&["sweep-max", "--d", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "d = 1\ngrid = fine\n").unwrap();
    let out = groundstate(&["oracle-compare", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_compare_writes_csv_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = groundstate(
        &["oracle-compare", "--d", "1", "--sigma", "1", "--R", "12", "--M", "600"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("oracle_compare.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,sigma,alpha_flow,alpha_shoot,alpha_exact,sup_diff,pohozaev_res1,pohozaev_res2,within_tolerance,iterations,error"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let alpha: f64 = row[2].parse().unwrap();
    assert!((alpha - 2f64.sqrt()).abs() < 1e-3);
    assert!(row[10].is_empty());

    let meta: serde_json::Value = serde_json::from_str(&read(&dir.path().join("oracle_compare.json"))).unwrap();
    assert_eq!(meta["command"], "oracle-compare");
    assert_eq!(meta["config"]["radius"], 12.0);
    let started = meta["started_at"].as_str().unwrap();
    assert!(chrono::DateTime::parse_from_rfc3339(started).is_ok());
    assert_eq!(meta["records"].as_array().unwrap().len(), 1);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let one = TempDir::new().unwrap();
    let three = TempDir::new().unwrap();
    let args = ["sweep-max", "--d", "1,2", "--sigma", "0.5,1", "--R", "10", "--M", "500"];
    let mut a = args.to_vec();
    a.extend(["--threads", "1"]);
    let mut b = args.to_vec();
    b.extend(["--threads", "3"]);
    assert!(groundstate(&a, one.path()).status.success());
    assert!(groundstate(&b, three.path()).status.success());
    let x = read(&one.path().join("sweep_max.csv"));
    assert_eq!(x, read(&three.path().join("sweep_max.csv")));
    // rows sorted by (d, sigma)
    let keys: Vec<(String, String)> = x
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().to_string(), f.next().unwrap().to_string())
        })
        .collect();
    assert_eq!(keys.len(), 4);
    assert_eq!(keys[0].0, "1");
    assert_eq!(keys[3].0, "2");
}

#[test]
fn config_file_sits_under_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("profiles.cfg");
    std::fs::write(&cfg, "# coarse run\ncommand = profiles\nsigma = 0.1, 1\nR = 10\nM = 400\ntau = 0.2\n").unwrap();
    let out = groundstate(&["profiles", "--config", cfg.to_str().unwrap(), "--M", "500"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("profiles_d2.csv"));
    assert_eq!(csv.lines().next().unwrap(), "r,u_0.1,u_1,u0");
    assert_eq!(csv.lines().count(), 501);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir.path().join("profiles_d2.json"))).unwrap();
    assert_eq!(meta["config"]["unknowns"], 500);
    assert_eq!(meta["config"]["tau"], 0.2);
    assert!(dir.path().join("profiles_crossings.csv").exists());
}

#[test]
fn solver_failures_become_error_rows_and_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = groundstate(
        &["sweep-max", "--d", "1", "--sigma", "1", "--R", "10", "--M", "200", "--max-iter", "3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let csv = read(&dir.path().join("sweep_max.csv"));
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert!(fields[2].is_empty(), "no fabricated alpha: {row}");
    assert!(fields.last().unwrap().contains("no convergence"));
}

#[test]
fn validate_reports_every_check() {
    let dir = TempDir::new().unwrap();
    let out = groundstate(&["validate"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("validate.json"))).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 11);
    assert!(checks.iter().all(|c| c["passed"].is_boolean()));
    assert_eq!(out.status.success(), report["summary"]["passed"] == true);
    assert!(out.status.success(), "{report}");
}
