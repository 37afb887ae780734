//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rothe_cli::{cmd_verify, RunConfig};
use rothe_core::diagnostics::{
    convolution_properties, first_step_bounds, gronwall_bound, gronwall_recursion, increment_report,
    ladder_stability, lipschitz_constant, manufactured_problem, pucci_sandwich_check,
    single_node_problem, sup_convolution, viscosity_touch_test, TestProblem, TouchConfig,
};
use rothe_core::step_solver::{newton, policy_iteration};
use rothe_core::{
    solve_step, Grid, GridFunction, RefinementLadder, RotheConfig, RotheSequence, Scheme, SolverChoice,
    StepConfig,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn ladder(problem: &TestProblem, grid: Grid) -> RefinementLadder {
    RefinementLadder::run(
        problem.operator.as_ref(),
        &Scheme::monotone(grid),
        &problem.steps,
        problem.horizon,
        Some(vec![0.25, 0.5, 1.0]),
        &RotheConfig::default(),
    )
    .expect("ladder runs")
}

fn sup_error(problem: &TestProblem, u: &GridFunction, t: f64) -> f64 {
    let exact = problem.exact.expect("exact solution");
    let g = u.grid();
    (0..g.len()).fold(0.0, |m: f64, k| m.max((u.get(k) - exact(&g.point(k)[..1], t)).abs()))
}

fn errors(problem: &TestProblem, l: &RefinementLadder) -> Vec<Vec<f64>> {
    l.levels
        .iter()
        .map(|seq| {
            l.sample_times
                .iter()
                .map(|&t| sup_error(problem, &seq.interpolate(t).unwrap(), t))
                .collect()
        })
        .collect()
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let p1 = manufactured_problem("P1_linear_1d").unwrap();
    let coarse = errors(&p1, &ladder(&p1, p1.grid));
    let control = errors(&p1, &ladder(&p1, Grid::interval(0.0, 1.0, 255).unwrap()));
    let last = coarse.len() - 1;
    // Second-order spatial error: e63 - e255 is 15/16 of the 63-node part.
    let spatial: Vec<f64> = (0..3)
        .map(|j| (coarse[last][j] - control[last][j]) * 16.0 / 15.0)
        .collect();
    let qualifying: Vec<usize> = (0..coarse.len())
        .filter(|&k| (0..3).all(|j| spatial[j] <= 0.25 * coarse[k][j]))
        .collect();
    let mut orders = Vec::new();
    for w in qualifying.windows(2) {
        if w[1] == w[0] + 1 {
            for j in 0..3 {
                orders.push((coarse[w[0]][j] / coarse[w[1]][j]).log2());
            }
        }
    }
    let raw: Vec<String> = (1..coarse.len())
        .map(|k| format!("{:.3}", (coarse[k - 1][2] / coarse[k][2]).log2()))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = !orders.is_empty() && orders.iter().all(|p| (p - 1.0).abs() <= 0.3) && elapsed < 60.0;
    verdict(
        ok,
        format!(
            "errors at t=1 (63 nodes) {:.6e} .. {:.6e}; 255-node control {:.6e}; spatial estimate {:.6e}; \
             qualifying levels {:?}; orders among them {:?}; raw orders at t=1 {:?}; {:.1}s",
            coarse[0][2], coarse[last][2], control[last][2], spatial[2], qualifying, orders, raw, elapsed
        ),
    )
}

struct Ladders {
    p1: RefinementLadder,
    p2: RefinementLadder,
    p2_steady: RefinementLadder,
    p3: RefinementLadder,
    single: RefinementLadder,
}

impl Ladders {
    fn run() -> Self {
        let run = |name: &str| {
            let p = manufactured_problem(name).unwrap();
            ladder(&p, p.grid)
        };
        let single = single_node_problem();
        Self {
            p1: run("P1_linear_1d"),
            p2: run("P2_pucci_1d"),
            p2_steady: run("P2_pucci_1d_steady"),
            p3: run("P3_bellman_2d"),
            single: ladder(&single, single.grid),
        }
    }
}

fn first_ratios(l: &RefinementLadder) -> Vec<f64> {
    l.levels
        .iter()
        .map(|s| first_step_bounds(s).unwrap().measurement("first_step_ratio").unwrap())
        .collect()
}

fn ac2(l: &Ladders) -> Verdict {
    let c1 = ladder_stability("p1", &first_ratios(&l.p1), 4.0);
    let c2 = ladder_stability("p2", &first_ratios(&l.p2), 4.0);
    let closed = l
        .single
        .levels
        .iter()
        .map(|s| (s.iterate(1).unwrap().get(0) - (-s.h / (8.0 * s.h + 1.0))).abs())
        .fold(0.0, f64::max);
    verdict(
        c1.passed && c2.passed && closed <= 1e-10,
        format!(
            "P1 max/min {:.4}, P2 max/min {:.4}, single-node gap {closed:.3e}",
            c1.measured, c2.measured
        ),
    )
}

fn ac3(l: &Ladders) -> Verdict {
    let steady = manufactured_problem("P2_pucci_1d_steady").unwrap();
    let p1 = manufactured_problem("P1_linear_1d").unwrap();
    let mut worst = Vec::new();
    let mut ok = true;
    for (name, lad, op) in [
        ("P2 steady", &l.p2_steady, steady.operator.as_ref()),
        ("P1", &l.p1, p1.operator.as_ref()),
    ] {
        for seq in &lad.levels {
            let r = increment_report(seq, op).unwrap();
            let c = r.get("increment_growth").unwrap();
            ok &= c.passed;
            worst.push(format!("{name} h={}: excess {:.3e} (tol {:.1e})", seq.h, -c.margin, c.tolerance));
        }
    }
    verdict(ok, worst.join("; "))
}

fn ac4(l: &Ladders) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, lad) in [("P1", &l.p1), ("P2", &l.p2), ("P3", &l.p3)] {
        let values: Vec<f64> = lad.levels.iter().map(lipschitz_constant).collect();
        let c = ladder_stability(name, &values, 4.0);
        ok &= c.passed;
        parts.push(format!("{name} max/min {:.4}", c.measured));
    }
    verdict(ok, parts.join(", "))
}

fn ac5() -> Verdict {
    let p2 = manufactured_problem("P2_pucci_1d").unwrap();
    let h = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut picks: Vec<usize> = Vec::new();
    while picks.len() < 5 {
        let n = rng.gen_range(0..20);
        if !picks.contains(&n) {
            picks.push(n);
        }
    }
    picks.sort_unstable();
    let run = |nodes: usize| -> (bool, f64, f64) {
        let grid = Grid::interval(0.0, 1.0, nodes).unwrap();
        let seq = rothe_core::run_rothe(p2.operator.as_ref(), &Scheme::monotone(grid), h, 1.0, &RotheConfig::default())
            .unwrap();
        let radius = seq.iterates.iter().flatten().fold(1.0f64, |m, z| m.max(z.sup_norm()));
        let mut ok = true;
        let mut defect: f64 = 0.0;
        let mut worst: f64 = f64::INFINITY;
        for &n in &picks {
            let (_, s) = pucci_sandwich_check(
                p2.operator.as_ref(),
                seq.iterate(n).unwrap(),
                seq.iterate(n + 1).unwrap(),
                h,
                seq.time(n + 1),
                radius,
                seq.reports[n].tolerance,
            );
            ok &= s.passed();
            defect = defect.max(s.defect);
            worst = worst.min(s.worst_margin + s.tolerance);
        }
        (ok, defect, worst)
    };
    let (holds, _, slack) = run(63);
    let defects: Vec<f64> = [31, 63, 127, 255].iter().map(|&n| run(n).1).collect();
    let ratios: Vec<f64> = defects.windows(2).map(|w| w[0] / w[1]).collect();
    let shrinks = ratios.iter().all(|r| *r >= 1.5);
    verdict(
        holds && shrinks,
        format!(
            "steps {picks:?}: smallest margin + tolerance {slack:.3e}; defect ratios per halving {:?}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(0..1000u32)), BigInt::from(rng.gen_range(1..100u32)))
}

fn ac6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(0..=50);
        let b: Vec<BigRational> = (0..n).map(|_| rational(&mut rng)).collect();
        let d: Vec<BigRational> = (0..n).map(|_| rational(&mut rng)).collect();
        let v0 = rational(&mut rng);
        if gronwall_bound(v0.clone(), &b, &d).unwrap() != gronwall_recursion(v0, &b, &d).unwrap() {
            mismatches += 1;
        }
    }
    let mut unit_ok = true;
    for n in [0usize, 1, 7, 50] {
        let v0 = rational(&mut rng);
        let d = rational(&mut rng);
        let ones = vec![BigRational::one(); n];
        let got = gronwall_bound(v0.clone(), &ones, &vec![d.clone(); n]).unwrap();
        unit_ok &= got == v0 + d * BigRational::from_integer(BigInt::from(n));
    }
    let f = gronwall_bound(0.5, &[1.0; 50], &[0.125; 50]).unwrap();
    unit_ok &= f == 0.5 + 50.0 * 0.125;
    unit_ok &= gronwall_bound(BigRational::zero(), &[], &[]).unwrap().is_zero();
    verdict(
        mismatches == 0 && unit_ok,
        format!("{mismatches} mismatches in 1000 exact instances; B = 1 form exact: {unit_ok}"),
    )
}

fn ac7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let mut names = Vec::new();
    for i in 0..100 {
        let grid = if i % 4 == 3 {
            Grid::rectangle([0.0, 0.0], [1.0, 1.0], [rng.gen_range(3..12), rng.gen_range(3..12)]).unwrap()
        } else {
            Grid::interval(0.0, 1.0, rng.gen_range(3..80)).unwrap()
        };
        let amp = rng.gen_range(0.1..5.0);
        let values = (0..grid.len()).map(|_| rng.gen_range(-amp..amp)).collect();
        let u = GridFunction::from_values(grid, values).unwrap();
        let eps = 10f64.powf(rng.gen_range(-3.0..0.0));
        let r = convolution_properties(&u, eps);
        for c in r.failures() {
            violations += 1;
            names.push(c.name.clone());
        }
    }
    let spike = sup_convolution(
        &GridFunction::from_values(Grid::interval(0.0, 1.0, 1).unwrap(), vec![1.0]).unwrap(),
        1.0,
    );
    let spike_ok = spike.values() == [0.875, 1.0, 0.875];
    verdict(
        violations == 0 && spike_ok,
        format!("{violations} violations on 100 random functions {names:?}; spike {:?}", spike.values()),
    )
}

fn ac8(l: &Ladders) -> Verdict {
    let start = Instant::now();
    let p1 = manufactured_problem("P1_linear_1d").unwrap();
    let finest = l.p1.levels.last().unwrap();
    let (r, _) = viscosity_touch_test(p1.operator.as_ref(), finest, &TouchConfig::default());
    let frac = r.get("touch_pass_fraction").unwrap().measured;
    let qualifying = r.get("touch_qualifying").unwrap().passed;
    let corrupted = TouchConfig {
        candidate_scale: 2.0,
        ..TouchConfig::default()
    };
    let (rc, _) = viscosity_touch_test(p1.operator.as_ref(), finest, &corrupted);
    let failures = rc.measurement("touch_failures").unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        qualifying && frac >= 0.95 && failures >= 1.0 && elapsed < 120.0,
        format!("pass fraction {frac:.3} on h = {}; 2U control failures {failures}; {elapsed:.1}s", finest.h),
    )
}

fn random_function(rng: &mut ChaCha8Rng, g: Grid, amp: f64) -> GridFunction {
    GridFunction::from_values(g, (0..g.len()).map(|_| rng.gen_range(-amp..=amp)).collect()).unwrap()
}

fn ac9(l: &Ladders) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = StepConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, lad) in [("P2_pucci_1d", &l.p2), ("P3_bellman_2d", &l.p3)] {
        let p = manufactured_problem(name).unwrap();
        let op = p.operator.as_ref();
        let seq: &RotheSequence = &lad.levels[0];
        let scheme = &seq.scheme;
        let h = seq.h;
        let tol = cfg.effective_tolerance(h);
        let mut spread: f64 = 0.0;
        let mut np_gap: f64 = 0.0;
        for n in 0..seq.steps() {
            let z_prev = seq.iterate(n).unwrap();
            let t = seq.time(n + 1);
            let amp = 2.0 * z_prev.sup_norm().max(0.5);
            let sols: Vec<GridFunction> = (0..20)
                .map(|_| {
                    let init = random_function(&mut rng, scheme.grid, amp);
                    solve_step(op, scheme, z_prev, h, t, &cfg, Some(&init)).unwrap().0
                })
                .collect();
            for a in &sols {
                for b in &sols {
                    spread = spread.max(a.sup_distance(b));
                }
            }
            if name == "P3_bellman_2d" {
                let nc = StepConfig {
                    method: SolverChoice::Newton,
                    ..cfg.clone()
                };
                let (zn, _) = newton(op, scheme, z_prev, h, t, &nc, None).unwrap();
                let (zp, _) = policy_iteration(op, scheme, z_prev, h, t, &cfg).unwrap();
                np_gap = np_gap.max(zn.sup_distance(&zp));
            }
        }
        let mut worst_order: f64 = f64::INFINITY;
        for _ in 0..50 {
            let amp = 2.0 * seq.iterates.iter().flatten().fold(0.5f64, |m, z| m.max(z.sup_norm()));
            let za = random_function(&mut rng, scheme.grid, amp);
            let bump: Vec<f64> = (0..za.values().len())
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..amp) })
                .collect();
            let zb = GridFunction::from_values(scheme.grid, za.values().iter().zip(&bump).map(|(a, b)| a + b).collect())
                .unwrap();
            let t = seq.time(rng.gen_range(1..=seq.steps()));
            let (na, _) = solve_step(op, scheme, &za, h, t, &cfg, None).unwrap();
            let (nb, _) = solve_step(op, scheme, &zb, h, t, &cfg, None).unwrap();
            let gap = nb.values().iter().zip(na.values()).map(|(b, a)| b - a).fold(f64::INFINITY, f64::min);
            worst_order = worst_order.min(gap);
        }
        ok &= spread <= 10.0 * tol && np_gap <= 10.0 * tol && worst_order >= -10.0 * tol;
        parts.push(format!(
            "{name}: init spread {spread:.2e}, newton/policy {np_gap:.2e}, comparison min gap {worst_order:.2e} (10 tol {:.1e})",
            10.0 * tol
        ));
    }
    verdict(ok, parts.join("; "))
}

fn ac10() -> Verdict {
    let base = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::for_problem("P1_linear_1d");
    cfg.seed = 11;
    let mut dirs = Vec::new();
    for run in 0..2 {
        cfg.output.dir = base.path().join(format!("run{run}"));
        let out = cmd_verify(&cfg).unwrap();
        if out.exit_code != 0 {
            return verdict(false, format!("verify exit code {}", out.exit_code));
        }
        dirs.push(cfg.output.dir.clone());
    }
    let mut names: Vec<String> = fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| fs::read(dirs[0].join(n)).ok() != fs::read(dirs[1].join(n)).ok())
        .collect();
    verdict(
        !names.is_empty() && differing.is_empty(),
        format!("{} CSV files compared, differing: {differing:?}", names.len()),
    )
}

fn main() -> ExitCode {
    let ladders = Ladders::run();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("AC1 manufactured temporal order (P1)", Box::new(ac1)),
        ("AC2 first-step bound", Box::new(|| ac2(&ladders))),
        ("AC3 increment estimate", Box::new(|| ac3(&ladders))),
        ("AC4 Lipschitz in time", Box::new(|| ac4(&ladders))),
        ("AC5 Pucci sandwich", Box::new(ac5)),
        ("AC6 discrete Gronwall", Box::new(ac6)),
        ("AC7 sup-convolution suite", Box::new(ac7)),
        ("AC8 viscosity touching test", Box::new(|| ac8(&ladders))),
        ("AC9 solver robustness", Box::new(|| ac9(&ladders))),
        ("AC10 reproducibility", Box::new(ac10)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let v = f();
        if !v.passed {
            failed += 1;
        }
        println!("{} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
