use std::path::Path;
use std::process::{Command, Output};
use vpatch_core::cantor::{excluded_measure, DiophantineSpec, ResonanceKind};
use vpatch_core::spectrum::FrequencySystem;

fn vpatch(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpatch"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("VPATCH_OUT")
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn spectrum_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vpatch(&["spectrum", "--b", "0.5", "--jmax", "5", "--lmax", "0"], tmp.path());
    assert!(out.status.success());
    let table = read(tmp.path(), "omega.csv");
    let row = table.lines().find(|l| l.starts_with("2,")).unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(value, 0.53125);
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn flat_trajectory_from_the_disc() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vpatch(&["simulate", "--t-final", "0.2", "--dt", "0.01", "--record-stride", "5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(tmp.path(), "summary.json");
    assert!(s["max_radius_deviation"].as_f64().unwrap() < 1e-15);
    let traj = read(tmp.path(), "trajectory.csv");
    assert_eq!(traj.lines().count(), 1 + 5);
    for line in traj.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap().abs() < 1e-15), "{line}");
    }
}

#[test]
fn cantor_total_matches_library() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vpatch(&["cantor", "--gamma", "1e-3", "--sites", "1,2"], tmp.path());
    assert!(out.status.success());
    let first = read(tmp.path(), "intervals.csv");
    let total: f64 = first
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            v[1] - v[0]
        })
        .sum();
    let sys = FrequencySystem::new(&[1, 2], 0.1, 0.9).unwrap();
    let spec = DiophantineSpec { gamma: 1e-3, ..DiophantineSpec::new(ResonanceKind::FirstOrder, 2, sys.q0()) };
    let lib = excluded_measure(&sys, &spec).unwrap();
    let summary = json(tmp.path(), "summary.json");
    assert_eq!(summary["excluded"].as_f64().unwrap(), lib.excluded);
    assert!((total - lib.excluded).abs() <= 1e-15);
    assert!(vpatch(&["cantor", "--gamma", "1e-3", "--sites", "1,2"], tmp.path()).status.success());
    assert_eq!(read(tmp.path(), "intervals.csv"), first);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = vpatch(&["simulate", "--b", "1.5"], tmp.path());
    assert_eq!(bad.status.code(), Some(1));
    let unseeded = vpatch(&["kam-remainder"], tmp.path());
    assert_eq!(unseeded.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unseeded.stderr).contains("--seed"));
    let unknown = vpatch(&["cantor", "--kind", "third-order"], tmp.path());
    assert_eq!(unknown.status.code(), Some(1));
    let huge = vpatch(&["kam-remainder", "--seed", "1", "--delta", "0.5"], tmp.path());
    assert_eq!(huge.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&huge.stderr).contains("invertible"));
    let folded = vpatch(&["kam-transport", "--terms", "0.2:0:3"], tmp.path());
    assert_eq!(folded.status.code(), Some(2), "{}", String::from_utf8_lossy(&folded.stderr));
    assert!(String::from_utf8_lossy(&folded.stderr).contains("invariant violated"));
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"b": 0.3, "jmax": 3, "lmax": 0}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = vpatch(&["spectrum", "--config", cfg.to_str().unwrap(), "--b", "0.5"], &out_dir);
    assert!(out.status.success());
    let s = json(&out_dir, "summary.json");
    assert_eq!(s["b"].as_f64().unwrap(), 0.5);
    assert_eq!(s["jmax"].as_i64().unwrap(), 3);
    let m = json(&out_dir, "manifest.json");
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["config"]["settings"]["b"].as_f64().unwrap(), 0.5);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["files"].as_array().unwrap().iter().any(|f| f == "omega.csv"));

    std::fs::write(&cfg, r#"{"gama": 0.1}"#).unwrap();
    let typo = vpatch(&["spectrum", "--config", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(typo.status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_vpatch"))
        .args(["spectrum", "--lmax", "0", "--jmax", "2"])
        .env("VPATCH_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("omega.csv").exists() && dir.join("manifest.json").exists());
}

#[test]
fn kam_runs_report_their_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(vpatch(&["kam-transport"], tmp.path()).status.success());
    let t = json(tmp.path(), "summary.json");
    assert!((t["speed"].as_f64().unwrap() - 0.24f64.sqrt()).abs() < 1e-8);
    assert_eq!(t["in_cantor_set"], true);

    assert!(vpatch(&["kam-remainder", "--seed", "2024"], tmp.path()).status.success());
    let r = json(tmp.path(), "spectrum.json");
    assert!(r["superlinear_slope"].as_f64().unwrap() >= 1.4);
    assert!(r["max_conjugation_defect"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["spectrum"].as_array().unwrap().len(), 16);
    let history = read(tmp.path(), "history.csv");
    assert_eq!(history.lines().count(), 1 + 4);
}

#[test]
fn linearize_at_the_disc_is_diagonal() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(vpatch(&["linearize", "--n", "6", "--m", "64"], tmp.path()).status.success());
    let s = json(tmp.path(), "summary.json");
    assert!(s["max_offdiag_abs"].as_f64().unwrap() < 1e-9);
    assert!(s["max_diagonal_shift"].as_f64().unwrap() < 1e-9);
    assert_eq!(read(tmp.path(), "matrix.csv").lines().count(), 1 + 12 * 12);
    assert_eq!(read(tmp.path(), "eigenvalues.csv").lines().count(), 1 + 12);
}
