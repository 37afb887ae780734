use std::fs;
use std::path::Path;
use std::process::Command;

use rothe_cli::commands::observed_order;
use rothe_cli::output::sha256_hex;
use rothe_cli::{
    cmd_convergence, cmd_solve, cmd_verify, CliError, RunConfig, RunManifest, RunStatus, EXIT_CHECKS_FAILED,
    EXIT_INVALID_CONFIG, EXIT_NON_CONVERGENCE, EXIT_OK,
};
use tempfile::TempDir;

fn config(name: &str, dir: &Path, steps: &[f64]) -> RunConfig {
    let mut cfg = RunConfig::for_problem(name);
    cfg.output.dir = dir.to_path_buf();
    cfg.time.steps = Some(steps.to_vec());
    cfg
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn zero_problem_solves_to_zero() {
    let dir = TempDir::new().unwrap();
    let out = cmd_solve(&config("zero", dir.path(), &[0.25, 0.125])).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    assert_eq!(out.manifest.status, RunStatus::Ok);
    let (h, rows) = read_csv(&dir.path().join("snapshots.csv"));
    assert_eq!(h, ["h", "t", "node", "x", "value"]);
    assert!(!rows.is_empty());
    assert!(column(&h, &rows, "value").iter().all(|v| *v == 0.0));
}

#[test]
fn solve_writes_the_error_table_for_exact_problems() {
    let dir = TempDir::new().unwrap();
    let out = cmd_solve(&config("P1_linear_1d", dir.path(), &[0.1, 0.05])).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let (h, rows) = read_csv(&dir.path().join("error_vs_exact.csv"));
    assert_eq!(h, ["h", "t", "sup_error"]);
    assert_eq!(rows.len(), 2 * 3);
    assert!(column(&h, &rows, "sup_error").iter().all(|e| *e < 1e-3));
    let (th, trows) = read_csv(&dir.path().join("telemetry.csv"));
    assert_eq!(
        th,
        ["h", "step", "t", "method", "iterations", "residual", "tolerance", "converged", "fallbacks", "increment"]
    );
    assert_eq!(trows.len(), 10 + 20);
}

#[test]
fn problems_without_exact_solution_skip_the_error_table() {
    let dir = TempDir::new().unwrap();
    let out = cmd_solve(&config("P2_pucci_1d", dir.path(), &[0.25])).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    assert!(!dir.path().join("error_vs_exact.csv").exists());
}

#[test]
fn two_dimensional_snapshots_have_both_coordinates() {
    let dir = TempDir::new().unwrap();
    cmd_solve(&config("P3_bellman_2d", dir.path(), &[0.5])).unwrap();
    let (h, rows) = read_csv(&dir.path().join("snapshots.csv"));
    assert_eq!(h, ["h", "t", "node", "x", "y", "value"]);
    assert_eq!(rows.len(), 3 * 15 * 15);
}

#[test]
fn step_larger_than_horizon_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let err = cmd_solve(&config("P1_linear_1d", dir.path(), &[2.0])).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), EXIT_INVALID_CONFIG);
}

#[test]
fn nonconvergence_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("P2_pucci_1d", dir.path(), &[0.1]);
    cfg.solver.method = "pseudo_time".into();
    cfg.solver.max_pseudo_time_iters = 3;
    let out = cmd_solve(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_NON_CONVERGENCE);
    assert_eq!(out.manifest.status, RunStatus::NonConvergence);
    assert!(out.manifest.partial.is_some());
    let on_disk = RunManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(on_disk, out.manifest);
}

#[test]
fn verify_passes_on_the_heat_problem() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("P1_linear_1d", dir.path(), &[0.1, 0.05, 0.025]);
    cfg.diagnostics.touch_trials = 50;
    cfg.diagnostics.gronwall_instances = 20;
    let out = cmd_verify(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.report.failures().collect::<Vec<_>>());
    assert!(out.manifest.checks.iter().all(|c| c.passed));
    let (h, rows) = read_csv(&dir.path().join("diagnostics.csv"));
    assert_eq!(h, ["check", "measured", "bound", "margin", "tolerance", "pass"]);
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn verify_flags_a_corrupted_candidate() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("P1_linear_1d", dir.path(), &[0.05, 0.025]);
    cfg.diagnostics.checks = vec!["touch".into()];
    cfg.diagnostics.touch_trials = 100;
    cfg.diagnostics.candidate_scale = 2.0;
    let out = cmd_verify(&cfg).unwrap();
    assert_eq!(out.exit_code, EXIT_CHECKS_FAILED);
    assert_eq!(out.manifest.status, RunStatus::ChecksFailed);
}

#[test]
fn verify_with_no_checks_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("zero", dir.path(), &[0.5]);
    cfg.diagnostics.checks.clear();
    assert_eq!(cmd_verify(&cfg).unwrap_err().exit_code(), EXIT_INVALID_CONFIG);
}

#[test]
fn convergence_reports_orders_for_exact_problems() {
    let dir = TempDir::new().unwrap();
    let out = cmd_convergence(&config("P1_linear_1d", dir.path(), &[0.1, 0.05, 0.025])).unwrap();
    assert_eq!(out.exit_code, EXIT_OK);
    let (h, rows) = read_csv(&dir.path().join("order.csv"));
    assert_eq!(h, ["h_coarse", "h_fine", "t", "error_coarse", "error_fine", "observed_order"]);
    assert_eq!(rows.len(), 2 * 3);
    let (ch, crows) = read_csv(&dir.path().join("cauchy.csv"));
    assert_eq!(ch, ["h_i", "h_j", "max_sup_difference"]);
    assert_eq!(crows.len(), 3);
    assert!(dir.path().join("successive.dat").exists());
    assert!(dir.path().join("error_t0.dat").exists());
}

#[test]
fn convergence_on_the_zero_problem_is_all_zero() {
    let dir = TempDir::new().unwrap();
    cmd_convergence(&config("zero", dir.path(), &[0.5, 0.25, 0.125])).unwrap();
    let (h, rows) = read_csv(&dir.path().join("cauchy.csv"));
    assert!(column(&h, &rows, "max_sup_difference").iter().all(|v| *v == 0.0));
    let (h, rows) = read_csv(&dir.path().join("order.csv"));
    assert!(column(&h, &rows, "observed_order").iter().all(|v| *v == 0.0));
}

#[test]
fn convergence_needs_three_levels() {
    let dir = TempDir::new().unwrap();
    let err = cmd_convergence(&config("P1_linear_1d", dir.path(), &[0.1, 0.05])).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_INVALID_CONFIG);
}

#[test]
fn observed_order_examples() {
    assert_eq!(observed_order(0.0, 0.0), 0.0);
    assert!((observed_order(4e-3, 1e-3) - 2.0).abs() < 1e-12);
    assert!((observed_order(2.0, 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn manifest_checksums_match_the_files() {
    let dir = TempDir::new().unwrap();
    let out = cmd_solve(&config("P1_linear_1d", dir.path(), &[0.25, 0.125])).unwrap();
    let manifest = RunManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest, out.manifest);
    assert!(!manifest.files.is_empty());
    for f in &manifest.files {
        let data = fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(data.len() as u64, f.bytes);
        assert_eq!(sha256_hex(&data), f.sha256);
    }
    assert!(fs::read_dir(dir.path())
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn repeated_runs_write_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let ma = cmd_verify(&config("P2_pucci_1d", a.path(), &[0.25, 0.125])).unwrap().manifest;
    let mb = cmd_verify(&config("P2_pucci_1d", b.path(), &[0.25, 0.125])).unwrap().manifest;
    assert_eq!(ma.files, mb.files);
}

#[test]
fn config_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut cfg = config("custom_pucci", dir.path(), &[0.2, 0.1]);
    cfg.problem.extremal = "minus".into();
    cfg.problem.gamma = 0.25;
    cfg.problem.forcing_amplitude = -1.0;
    let path = dir.path().join("run.toml");
    fs::write(&path, cfg.to_toml_string()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}

fn rothe(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_rothe"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, "[problem]\nname = \"zero\"\n[time]\nsteps = [0.5, 0.25, 0.125]\n").unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let good = good.to_str().unwrap();
    assert_eq!(rothe(&["solve", "--config", good, "--out", out]), EXIT_OK);
    assert_eq!(rothe(&["convergence", "--config", good, "--out", out]), EXIT_OK);
    assert_eq!(rothe(&["solve", "--config", good, "--out", out, "--levels", "2"]), EXIT_OK);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[problem]\nname = \"zero\"\ninitial_data = 1.0\n").unwrap();
    assert_eq!(rothe(&["solve", "--config", bad.to_str().unwrap()]), EXIT_INVALID_CONFIG);
    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "[problem]\nname = \"nope\"\n").unwrap();
    assert_eq!(rothe(&["verify", "--config", unknown.to_str().unwrap()]), EXIT_INVALID_CONFIG);
    assert_eq!(rothe(&["solve", "--config", "/nonexistent/run.toml"]), EXIT_INVALID_CONFIG);
    assert_eq!(rothe(&["convergence", "--config", good, "--out", out, "--levels", "2"]), EXIT_INVALID_CONFIG);
}
