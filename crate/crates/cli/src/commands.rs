//! The `solve`, `verify` and `convergence` commands.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rothe_core::diagnostics::{
    convolution_properties, first_step_bounds, gronwall_bound, gronwall_recursion, increment_report,
    ladder_stability, lipschitz_constant, pucci_sandwich_check, viscosity_touch_test, Check,
    DiagnosticsReport, TestProblem, TouchConfig, TouchDirection, TrialOutcome,
};
use rothe_core::{run_rothe, Grid, GridFunction, RefinementLadder, RotheError, RotheSequence, Scheme};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{float, now_unix_ms, CheckOutcome, OutputDir, RunManifest, RunStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("output error: {0}")]
    Io(#[from] io::Error),
    #[error("run failed: {0}")]
    Rothe(#[from] RotheError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_INVALID_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Rothe(_) => EXIT_NON_CONVERGENCE,
        }
    }
}

/// Result of a command that ran to completion (possibly with failed
/// checks or a failed step, both recorded in the manifest).
#[derive(Debug)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
    pub report: DiagnosticsReport,
}

struct Setup {
    problem: TestProblem,
    scheme: Scheme,
    steps: Vec<f64>,
    horizon: f64,
}

fn setup(cfg: &RunConfig) -> Result<Setup, ConfigError> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let scheme = cfg.scheme_for(&problem)?;
    Ok(Setup {
        steps: cfg.steps()?,
        horizon: cfg.horizon()?,
        problem,
        scheme,
    })
}

/// Extracts the completed part of a failed run, if any.
fn partial_sequence(e: &RotheError) -> Option<(&RotheSequence, String)> {
    match e {
        RotheError::Step { partial, .. } => Some((partial.as_ref(), e.to_string())),
        RotheError::Level { source, .. } => partial_sequence(source).map(|(s, _)| (s, e.to_string())),
        _ => None,
    }
}

fn run_levels(s: &Setup, cfg: &RunConfig) -> Result<Vec<RotheSequence>, RotheError> {
    let rc = cfg.rothe_config().expect("validated config");
    if s.steps.len() == 1 {
        Ok(vec![run_rothe(s.problem.operator.as_ref(), &s.scheme, s.steps[0], s.horizon, &rc)?])
    } else {
        let ladder = RefinementLadder::run(
            s.problem.operator.as_ref(),
            &s.scheme,
            &s.steps,
            s.horizon,
            Some(cfg.snapshot_times().expect("validated config")),
            &rc,
        )?;
        Ok(ladder.levels)
    }
}

fn point_columns(g: &Grid, k: usize) -> Vec<String> {
    let p = g.point(k);
    (0..g.dim()).map(|a| float(p[a])).collect()
}

fn coordinate_header(g: &Grid) -> Vec<&'static str> {
    if g.dim() == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

fn exact_error(problem: &TestProblem, u: &GridFunction, t: f64) -> Option<f64> {
    let exact = problem.exact?;
    let g = u.grid();
    Some((0..g.len()).fold(0.0, |m: f64, k| {
        let p = g.point(k);
        m.max((u.get(k) - exact(&p[..g.dim()], t)).abs())
    }))
}

fn write_solution_files(
    out: &mut OutputDir,
    cfg: &RunConfig,
    problem: &TestProblem,
    levels: &[&RotheSequence],
) -> Result<(), CliError> {
    let times = cfg.snapshot_times()?;
    let g = problem.grid;
    let mut header = vec!["h", "t", "node"];
    header.extend(coordinate_header(&g));
    header.push("value");
    let mut snaps = Vec::new();
    let mut errors = Vec::new();
    for seq in levels {
        for &t in &times {
            // A partial run only covers the steps it completed.
            let Ok(u) = seq.interpolate(t) else { continue };
            for k in 0..g.len() {
                let mut row = vec![float(seq.h), float(t), k.to_string()];
                row.extend(point_columns(&g, k));
                row.push(float(u.get(k)));
                snaps.push(row);
            }
            if let Some(e) = exact_error(problem, &u, t) {
                errors.push(vec![float(seq.h), float(t), float(e)]);
            }
        }
    }
    out.write_csv("snapshots.csv", &header, &snaps)?;
    if problem.exact.is_some() {
        out.write_csv("error_vs_exact.csv", &["h", "t", "sup_error"], &errors)?;
    }

    let mut telemetry = Vec::new();
    for seq in levels {
        for (n, r) in seq.reports.iter().enumerate() {
            let fallbacks: Vec<&str> = r.fallbacks.iter().map(|m| m.as_str()).collect();
            telemetry.push(vec![
                float(seq.h),
                (n + 1).to_string(),
                float(seq.time(n + 1)),
                r.method_used.as_str().to_string(),
                r.iterations.to_string(),
                float(r.final_residual_norm),
                float(r.tolerance),
                r.converged.to_string(),
                fallbacks.join(";"),
                float(seq.increments[n]),
            ]);
        }
    }
    out.write_csv(
        "telemetry.csv",
        &[
            "h",
            "step",
            "t",
            "method",
            "iterations",
            "residual",
            "tolerance",
            "converged",
            "fallbacks",
            "increment",
        ],
        &telemetry,
    )?;
    Ok(())
}

/// Runs the configured ladder and writes snapshots, solver telemetry and,
/// for problems with an exact solution, the error at the snapshot times.
pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let started = now_unix_ms();
    let s = setup(cfg)?;
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let mut manifest = RunManifest::new("solve", cfg, started);
    let mut summary = format!("problem {}\nsteps {:?}\nhorizon {}\n", s.problem.name, s.steps, s.horizon);
    let exit_code = match run_levels(&s, cfg) {
        Ok(levels) => {
            let refs: Vec<&RotheSequence> = levels.iter().collect();
            write_solution_files(&mut out, cfg, &s.problem, &refs)?;
            for seq in &levels {
                summary.push_str(&format!(
                    "h = {}: {} steps, max increment {:.6e}\n",
                    seq.h,
                    seq.steps(),
                    seq.increments.iter().fold(0.0f64, |m, v| m.max(*v))
                ));
            }
            EXIT_OK
        }
        Err(e) => {
            let Some((partial, msg)) = partial_sequence(&e) else {
                return Err(e.into());
            };
            write_solution_files(&mut out, cfg, &s.problem, &[partial])?;
            summary.push_str(&format!("FAILED: {msg}\npartial output for h = {}\n", partial.h));
            manifest.status = RunStatus::NonConvergence;
            manifest.partial = Some(msg);
            EXIT_NON_CONVERGENCE
        }
    };
    out.write("summary.txt", summary.as_bytes())?;
    let manifest = manifest.finish(&out)?;
    Ok(CommandOutcome {
        exit_code,
        manifest,
        report: DiagnosticsReport::new(),
    })
}

/// For each check name, the instance with the smallest `margin + tolerance`.
fn worst_by_name(reports: Vec<DiagnosticsReport>, prefix: &str) -> DiagnosticsReport {
    let mut out = DiagnosticsReport::new();
    for r in reports {
        for c in r.checks {
            let name = format!("{prefix}/{}", c.name);
            match out.checks.iter_mut().find(|o| o.name == name) {
                Some(o) if c.margin + c.tolerance < o.margin + o.tolerance => *o = Check { name, ..c },
                Some(_) => {}
                None => out.check(Check { name, ..c }),
            }
        }
    }
    out
}

fn gronwall_self_test(instances: usize, seed: u64) -> DiagnosticsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.gen_range(0..=50);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let v0 = rng.gen_range(0.0..1.0);
        let bound = gronwall_bound(v0, &b, &d).expect("nonnegative inputs");
        let rec = gronwall_recursion(v0, &b, &d).expect("nonnegative inputs");
        worst = worst.max((bound - rec).abs() / rec.abs().max(1e-300));
    }
    let mut r = DiagnosticsReport::new();
    r.check(
        Check::at_most("recursion_match", worst, 0.0, 1e-12)
            .with_detail(format!("largest relative gap over {instances} random instances")),
    );
    // Dyadic increments keep every partial sum exact.
    let n = 40;
    let (v0, d) = (0.75, 0.125);
    let unit = gronwall_bound(v0, &vec![1.0; n], &vec![d; n]).expect("nonnegative inputs");
    r.check(Check::at_most("unit_factor", (unit - (v0 + n as f64 * d)).abs(), 0.0, 0.0));
    r
}

/// `count` distinct random step indices in increasing order.
fn sample_steps(steps: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..steps).collect();
    let count = count.min(steps);
    for i in 0..count {
        let j = rng.gen_range(i..steps);
        all.swap(i, j);
    }
    let mut picked = all[..count].to_vec();
    picked.sort_unstable();
    picked
}

fn sandwich_report(s: &Setup, cfg: &RunConfig, levels: &[RotheSequence]) -> DiagnosticsReport {
    let level = cfg.diagnostics.sandwich_level.min(levels.len() - 1);
    let seq = &levels[level];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5a4d);
    let radius = seq
        .iterates
        .iter()
        .flatten()
        .fold(0.0f64, |m, z| m.max(z.sup_norm()))
        .max(1.0);
    let mut reports = Vec::new();
    let mut r = DiagnosticsReport::new();
    let mut worst_defect: f64 = 0.0;
    for n in sample_steps(seq.steps(), cfg.diagnostics.sandwich_samples, &mut rng) {
        let (rep, summary) = pucci_sandwich_check(
            s.problem.operator.as_ref(),
            seq.iterate(n).expect("all iterates kept"),
            seq.iterate(n + 1).expect("all iterates kept"),
            seq.h,
            seq.time(n + 1),
            radius,
            seq.reports[n].tolerance,
        );
        worst_defect = worst_defect.max(summary.defect);
        reports.push(rep);
    }
    r.merge(worst_by_name(reports, "sandwich"));
    r.measure("sandwich/h", seq.h);
    r.measure("sandwich/defect", worst_defect);
    r
}

fn convolution_report(s: &Setup, cfg: &RunConfig, finest: &RotheSequence) -> DiagnosticsReport {
    let eps = cfg.diagnostics.convolution_eps;
    let mut reports = Vec::new();
    for &t in &cfg.snapshot_times().expect("validated config") {
        if let Ok(u) = finest.interpolate(t) {
            reports.push(convolution_properties(&u, eps));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc0c0);
    let g = s.problem.grid;
    for _ in 0..cfg.diagnostics.convolution_samples {
        let values = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridFunction::from_values(g, values).expect("grid length");
        reports.push(convolution_properties(&u, eps));
    }
    let mut r = worst_by_name(reports, "convolution");
    r.measure("convolution/eps", eps);
    r
}

fn touch_rows(outcomes: &[TrialOutcome]) -> Vec<Vec<String>> {
    outcomes
        .iter()
        .map(|o| {
            vec![
                o.trial.node.to_string(),
                o.trial.level.to_string(),
                match o.direction {
                    Some(TouchDirection::Sub) => "sub".into(),
                    Some(TouchDirection::Super) => "super".into(),
                    None => "none".into(),
                },
                o.touch.0.to_string(),
                o.touch.1.to_string(),
                o.interior.to_string(),
                float(o.gap),
                float(o.residual_extreme),
                o.passed.to_string(),
            ]
        })
        .collect()
}

/// Runs the enabled diagnostics on the configured problem; exit 1 when any
/// check fails, with every report written regardless.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let started = now_unix_ms();
    if cfg.diagnostics.checks.is_empty() {
        return Err(ConfigError::Invalid("diagnostics.checks is empty: nothing to verify".into()).into());
    }
    let s = setup(cfg)?;
    let enabled = |name: &str| cfg.diagnostics.checks.iter().any(|c| c == name);
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let mut manifest = RunManifest::new("verify", cfg, started);
    let levels = match run_levels(&s, cfg) {
        Ok(l) => l,
        Err(e) => {
            let msg = e.to_string();
            if let Some((partial, _)) = partial_sequence(&e) {
                write_solution_files(&mut out, cfg, &s.problem, &[partial])?;
            }
            out.write("summary.txt", format!("FAILED: {msg}\n").as_bytes())?;
            manifest.status = RunStatus::NonConvergence;
            manifest.partial = Some(msg);
            let manifest = manifest.finish(&out)?;
            return Ok(CommandOutcome {
                exit_code: EXIT_NON_CONVERGENCE,
                manifest,
                report: DiagnosticsReport::new(),
            });
        }
    };
    let finest = levels.last().expect("at least one level");
    let limit = cfg.diagnostics.stability_limit;
    let op = s.problem.operator.as_ref();
    let mut report = DiagnosticsReport::new();

    if enabled("first_step") {
        let mut ratios = Vec::new();
        for seq in &levels {
            let r = first_step_bounds(seq).expect("sequence has steps");
            ratios.push(r.measurement("first_step_ratio").expect("measured"));
            report.merge(r.prefixed(&format!("h={}", seq.h)));
        }
        report.check(ladder_stability("first_step_ratio_stability", &ratios, limit));
    }
    if enabled("increments") {
        for seq in levels.iter().filter(|q| q.steps() >= 2) {
            report.merge(increment_report(seq, op).expect("two steps").prefixed(&format!("h={}", seq.h)));
        }
    }
    if enabled("lipschitz") {
        let l: Vec<f64> = levels.iter().map(lipschitz_constant).collect();
        for (seq, v) in levels.iter().zip(&l) {
            report.measure(format!("h={}/lipschitz_constant", seq.h), *v);
        }
        report.check(ladder_stability("lipschitz_stability", &l, limit));
    }
    if enabled("gronwall") {
        report.merge(gronwall_self_test(cfg.diagnostics.gronwall_instances, cfg.seed).prefixed("gronwall"));
    }
    if enabled("sandwich") {
        report.merge(sandwich_report(&s, cfg, &levels));
    }
    if enabled("convolution") {
        report.merge(convolution_report(&s, cfg, finest));
    }
    let mut touch_outcomes = Vec::new();
    if enabled("touch") {
        let tc = TouchConfig {
            trials: cfg.diagnostics.touch_trials,
            candidate_scale: cfg.diagnostics.candidate_scale,
            pass_fraction: cfg.diagnostics.touch_pass_fraction,
            seed: cfg.seed,
            ..TouchConfig::default()
        };
        let (r, outcomes) = viscosity_touch_test(op, finest, &tc);
        report.merge(r);
        touch_outcomes = outcomes;
    }

    let rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                float(c.measured),
                float(c.bound),
                float(c.margin),
                float(c.tolerance),
                c.passed.to_string(),
            ]
        })
        .collect();
    out.write_csv("diagnostics.csv", &["check", "measured", "bound", "margin", "tolerance", "pass"], &rows)?;
    let rows: Vec<Vec<String>> = report
        .measurements
        .iter()
        .map(|m| vec![m.name.clone(), float(m.value)])
        .collect();
    out.write_csv("measurements.csv", &["name", "value"], &rows)?;
    if enabled("touch") {
        out.write_csv(
            "touch_trials.csv",
            &[
                "node",
                "level",
                "direction",
                "touch_node",
                "touch_level",
                "interior",
                "gap",
                "residual_extreme",
                "pass",
            ],
            &touch_rows(&touch_outcomes),
        )?;
    }
    let refs: Vec<&RotheSequence> = levels.iter().collect();
    write_solution_files(&mut out, cfg, &s.problem, &refs)?;

    let mut summary = format!("problem {}\n", s.problem.name);
    for c in &report.checks {
        summary.push_str(&format!(
            "{} {}: measured {:.6e}, bound {:.6e}, tolerance {:.3e}{}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.bound,
            c.tolerance,
            if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }
        ));
    }
    out.write("summary.txt", summary.as_bytes())?;

    manifest.checks = report
        .checks
        .iter()
        .map(|c| CheckOutcome {
            name: c.name.clone(),
            passed: c.passed,
        })
        .collect();
    let passed = report.passed();
    manifest.status = if passed { RunStatus::Ok } else { RunStatus::ChecksFailed };
    let manifest = manifest.finish(&out)?;
    Ok(CommandOutcome {
        exit_code: if passed { EXIT_OK } else { EXIT_CHECKS_FAILED },
        manifest,
        report,
    })
}

/// `log2(e_coarse / e_fine)`; zero when both errors vanish.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    if e_coarse == 0.0 && e_fine == 0.0 {
        0.0
    } else {
        (e_coarse / e_fine).log2()
    }
}

/// Runs at least three ladder levels and writes the Cauchy table and, with
/// an exact solution, the observed temporal order between levels.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<CommandOutcome, CliError> {
    let started = now_unix_ms();
    let s = setup(cfg)?;
    if s.steps.len() < 3 {
        return Err(ConfigError::Invalid(format!(
            "convergence needs at least 3 ladder levels, got {}",
            s.steps.len()
        ))
        .into());
    }
    let times = cfg.snapshot_times()?;
    let ladder = RefinementLadder::run(
        s.problem.operator.as_ref(),
        &s.scheme,
        &s.steps,
        s.horizon,
        Some(times.clone()),
        &cfg.rothe_config()?,
    )?;
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let manifest = RunManifest::new("convergence", cfg, started);

    let table = ladder.cauchy_table()?;
    let mut rows = Vec::new();
    for i in 0..s.steps.len() {
        for j in i + 1..s.steps.len() {
            rows.push(vec![float(s.steps[i]), float(s.steps[j]), float(table[i][j])]);
        }
    }
    out.write_csv("cauchy.csv", &["h_i", "h_j", "max_sup_difference"], &rows)?;
    let successive = ladder.successive_differences()?;
    let points: Vec<(f64, f64)> = s.steps.iter().zip(&successive).map(|(h, d)| (*h, *d)).collect();
    out.write_plot(
        "successive.dat",
        "h  max_t ||U_h - U_{h/2}||_inf over the sample times",
        &points,
    )?;

    let mut summary = format!("problem {}\nsuccessive differences", s.problem.name);
    for d in &successive {
        summary.push_str(&format!(" {d:.6e}"));
    }
    summary.push('\n');

    if s.problem.exact.is_some() {
        let mut errors = vec![vec![0.0; times.len()]; s.steps.len()];
        let mut err_rows = Vec::new();
        for (k, seq) in ladder.levels.iter().enumerate() {
            for (j, &t) in times.iter().enumerate() {
                let u = seq.interpolate(t)?;
                errors[k][j] = exact_error(&s.problem, &u, t).expect("exact solution");
                err_rows.push(vec![float(seq.h), float(t), float(errors[k][j])]);
            }
        }
        out.write_csv("error_vs_exact.csv", &["h", "t", "sup_error"], &err_rows)?;
        let mut order_rows = Vec::new();
        for k in 1..s.steps.len() {
            for (j, &t) in times.iter().enumerate() {
                let p = observed_order(errors[k - 1][j], errors[k][j]);
                order_rows.push(vec![
                    float(s.steps[k - 1]),
                    float(s.steps[k]),
                    float(t),
                    float(errors[k - 1][j]),
                    float(errors[k][j]),
                    float(p),
                ]);
                summary.push_str(&format!("order h={} -> {} at t={}: {:.4}\n", s.steps[k - 1], s.steps[k], t, p));
            }
        }
        out.write_csv(
            "order.csv",
            &["h_coarse", "h_fine", "t", "error_coarse", "error_fine", "observed_order"],
            &order_rows,
        )?;
        for (j, &t) in times.iter().enumerate() {
            let points: Vec<(f64, f64)> = s.steps.iter().enumerate().map(|(k, h)| (*h, errors[k][j])).collect();
            out.write_plot(&format!("error_t{j}.dat"), &format!("h  sup error at t = {t}"), &points)?;
        }
    }
    out.write("summary.txt", summary.as_bytes())?;
    let manifest = manifest.finish(&out)?;
    Ok(CommandOutcome {
        exit_code: EXIT_OK,
        manifest,
        report: DiagnosticsReport::new(),
    })
}
