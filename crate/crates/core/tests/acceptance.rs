//! End-to-end acceptance run: one line per criterion, exit status 1 if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in order on
//! one thread and their wall times are not inflated by concurrent tests.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nonlocal_liouville::config::Config;
use nonlocal_liouville::conv::ConvPath;
use nonlocal_liouville::kernel::{kernel_constants, marginal_j1, KernelConstants, Profile};
use nonlocal_liouville::nonlinearity::{extend, ExtensionMode};
use nonlocal_liouville::solver::{
    build_subsolution, energy, evolve_ball, front_profile, maximal_solution, FrontOptions, MaximalOptions,
    MaximalSolution,
};
use nonlocal_liouville::verify::{
    comparison_suite, counterexample_check, hostile_solution, liouville_experiment, operator_suite,
    robustness_experiment, Report, Status,
};

type Outcome = Result<(bool, String), String>;

const COUNTEREXAMPLE_RESIDUAL: f64 = 1e-12;
const COUNTEREXAMPLE_SECONDS: f64 = 5.0;
const LIOUVILLE_GAP: f64 = 1e-6;
const LIOUVILLE_SECONDS: f64 = 300.0;
const PATH_AGREEMENT: f64 = 1e-10;
const OPERATOR_TRIALS: usize = 100;
const OPERATOR_SECONDS: f64 = 30.0;
const MONOTONE_SLACK: f64 = 1e-12;
const BALL_RESIDUAL: f64 = 1e-9;
const EVOLUTION_AGREEMENT: f64 = 1e-6;
const NESTING_SLACK: f64 = 1e-10;
const MINMAX_SLACK: f64 = 1e-10;
const CENTER_GAP_AT_LARGEST: f64 = 0.05;
const ENERGY_FORMS_RELATIVE: f64 = 1e-9;
const D0_REFERENCE: f64 = 14.75;
const D0_WINDOW: f64 = 0.01;
const DELTA0_REFERENCE: f64 = 0.115;
const DELTA0_WINDOW: f64 = 1e-3;
const SUBSOLUTION_SECONDS: f64 = 60.0;
const COMPARISON_TRIALS: usize = 100;
const COMPARISON_EXCESS: f64 = 1e-12;
const FRONT_RESIDUAL: f64 = 1e-8;
const FRONT_ENDS: f64 = 1e-3;
const FRONT_ORACLE: f64 = 1e-4;
const ROBUST_EPS_MAX: f64 = 0.1;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Result<Config, String> {
    Config::load(&configs().join(name)).map_err(|e| format!("{name}: {e}"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn measured(r: &Report, name: &str) -> Result<f64, String> {
    r.check(name)
        .and_then(|c| c.measured)
        .ok_or_else(|| format!("report {} has no measured check {name}", r.experiment))
}

fn failing(r: &Report) -> Vec<String> {
    r.checks
        .iter()
        .filter(|c| matches!(c.status, Status::Fail | Status::Skipped))
        .map(|c| format!("{}={}", c.name, c.status.name()))
        .collect()
}

fn counterexample() -> Outcome {
    let cfg = load("counterexample.ini")?;
    let t = Instant::now();
    let (r, _) = counterexample_check(&cfg, ConvPath::Direct).map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let res = measured(&r, "residual_sup")?;
    let fixed = measured(&r, "fixed_point")?;
    let ok = r.passed() && res <= COUNTEREXAMPLE_RESIDUAL && fixed <= COUNTEREXAMPLE_RESIDUAL && secs < COUNTEREXAMPLE_SECONDS;
    Ok((ok, format!("residual {res:.1e}, fixed-point move {fixed:.1e}, {secs:.2} s")))
}

fn liouville(reports: &mut Vec<Report>) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["liouville_disk.ini", "liouville_ellipse.ini", "liouville_square.ini"] {
        let mut cfg = load(name)?;
        cfg.set("experiment.refine", "true").map_err(err)?;
        let t = Instant::now();
        let (r, _) = liouville_experiment(&cfg, ConvPath::Fast).map_err(err)?;
        let secs = t.elapsed().as_secs_f64();
        let min_u = measured(&r, "min_u")?;
        let change = measured(&r, "refined.min_u_change")?;
        let this = r.passed() && min_u >= 1.0 - LIOUVILLE_GAP && change <= LIOUVILLE_GAP && secs < LIOUVILLE_SECONDS;
        if !this {
            parts.push(format!("{name} failing {:?}", failing(&r)));
        }
        ok &= this;
        parts.push(format!("{}: 1-min u {:.1e}, h/2 change {change:.1e}, {secs:.1} s", name.trim_end_matches(".ini"), 1.0 - min_u));
        reports.push(r);
    }
    Ok((ok, parts.join("; ")))
}

fn operator() -> Outcome {
    let cfg = load("liouville_disk.ini")?;
    let t = Instant::now();
    let r = operator_suite(&cfg, OPERATOR_TRIALS, 1).map_err(err)?;
    let secs = t.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut combos = 0;
    for c in r.checks.iter().filter(|c| c.name.ends_with(".sup_diff")) {
        worst = worst.max(c.measured.unwrap_or(f64::INFINITY));
        combos += 1;
    }
    let ok = r.passed() && combos == 6 && worst <= PATH_AGREEMENT && secs < OPERATOR_SECONDS;
    Ok((ok, format!("{combos} profile/obstacle combinations x {OPERATOR_TRIALS} fields, worst {worst:.1e}, {secs:.1} s")))
}

struct Maximal2d {
    cfg: Config,
    consts: KernelConstants,
    m: MaximalSolution,
    seconds: f64,
}

fn monotone_scheme(cache: &mut Option<Maximal2d>) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["maximal_1d.ini", "maximal_2d.ini"] {
        let cfg = load(name)?;
        let grid = cfg.build_grid().map_err(err)?;
        let k = cfg.build_kernel(&grid).map_err(err)?;
        let f = cfg.nonlinearity().map_err(err)?;
        let consts = kernel_constants(&k, &f.base, &cfg.experiment.alphas).map_err(err)?;
        let t = Instant::now();
        let m = maximal_solution(&k, &f, cfg.ball.center, cfg.ball.radius, consts.d0, &MaximalOptions::default())
            .map_err(err)?;
        let seconds = t.elapsed().as_secs_f64();
        let ones: Vec<f64> = m.ball.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let st = nonlocal_liouville::nonlinearity::stiffness(&f.base).map_err(err)?;
        let dt = 0.9 / (1.0 + st.max_abs_fp);
        let (ev, _, converged) = evolve_ball(&m.ball, &f, &ones, dt, 1e-12, 2_000_000, ConvPath::Fast).map_err(err)?;
        let gap = ev.iter().zip(&m.v.values).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let this = m.monotone_violation <= MONOTONE_SLACK
            && m.residual <= BALL_RESIDUAL
            && m.v.max() > f.base.theta()
            && converged
            && gap <= EVOLUTION_AGREEMENT;
        ok &= this;
        parts.push(format!(
            "{}-D R={}: rise {:.1e}, residual {:.1e}, max v {:.4}, evolution gap {gap:.1e}",
            grid.dim(),
            cfg.ball.radius,
            m.monotone_violation.max(0.0),
            m.residual,
            m.v.max()
        ));
        if grid.dim() == 2 {
            *cache = Some(Maximal2d { cfg, consts, m, seconds });
        }
    }
    Ok((ok, parts.join("; ")))
}

fn structure() -> Outcome {
    let cfg = load("maximal_1d.ini")?;
    let grid = cfg.build_grid().map_err(err)?;
    let h = grid.spacing();
    let k = cfg.build_kernel(&grid).map_err(err)?;
    let f = cfg.nonlinearity().map_err(err)?;
    let consts = kernel_constants(&k, &f.base, &[]).map_err(err)?;
    let opts = MaximalOptions::default();
    let solve = |center: f64, radius: f64| maximal_solution(&k, &f, [center, 0.0], radius, consts.d0, &opts);
    // R at the d0 scale, rounded up to whole cells.
    let r = (consts.d0 / h).ceil() * h;
    let mut centers = Vec::new();
    let mut solutions = BTreeMap::new();
    for mult in [1u32, 2, 3, 4] {
        let m = solve(0.0, f64::from(mult) * r).map_err(err)?;
        centers.push(m.center_value());
        solutions.insert(mult, m);
    }
    // Nested balls B_{2R} ⊂ B_{4R}.
    let (v2, v4) = (&solutions[&2], &solutions[&4]);
    let cells = |m: &MaximalSolution| (m.ball.radius / h).round() as isize;
    let mut nest = f64::NEG_INFINITY;
    for a in -cells(v2)..=cells(v2) {
        if let (Some(x), Some(y)) = (v2.at_offset(a, 0), v4.at_offset(a, 0)) {
            nest = nest.max(x - y);
        }
    }
    // Translation by a lattice vector.
    let shifted = solve(7.0 * h, 2.0 * r).map_err(err)?;
    let identical = shifted.v.values == v2.v.values;
    // min over B_R of v_{4R} against max of v_{2R}.
    let rc = (r / h).round() as isize;
    let min4 = (-rc..=rc).filter_map(|a| v4.at_offset(a, 0)).fold(f64::INFINITY, f64::min);
    let max2 = v2.v.max();
    // Nesting gives the growth in R, so it carries the same rounding slack.
    let increasing = centers.windows(2).all(|w| w[1] >= w[0] - NESTING_SLACK);
    let last_gap = 1.0 - centers[centers.len() - 1];
    let ok = nest <= NESTING_SLACK && identical && min4 >= max2 - MINMAX_SLACK && increasing && last_gap <= CENTER_GAP_AT_LARGEST;
    Ok((
        ok,
        format!(
            "1-D, R = {r}: nesting excess {nest:.1e}, translation {}, min v_4R - max v_2R = {:.1e}, 1 - v(0) over R..4R = {:?}",
            if identical { "bit-identical" } else { "differs" },
            min4 - max2,
            centers.iter().map(|c| format!("{:.1e}", 1.0 - c)).collect::<Vec<_>>()
        ),
    ))
}

fn energy_negativity(cache: &Option<Maximal2d>) -> Outcome {
    let Some(c) = cache else {
        return Err("2-D maximal solution unavailable".into());
    };
    let grid = c.cfg.build_grid().map_err(err)?;
    let k = c.cfg.build_kernel(&grid).map_err(err)?;
    let f = extend(&c.cfg.bistable().map_err(err)?, ExtensionMode::Odd);
    let ones: Vec<f64> = c.m.ball.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let ei = energy(&k, &f, &c.m.ball, &ones).map_err(err)?;
    let ev = energy(&k, &f, &c.m.ball, &c.m.v.values).map_err(err)?;
    let rel = |e: &nonlocal_liouville::solver::EnergyReport| (e.value - e.alt).abs() / e.value.abs().max(e.alt.abs());
    let d0 = c.consts.d0;
    let ok = (d0 - D0_REFERENCE).abs() <= D0_WINDOW
        && c.m.ball.radius >= d0
        && ei.value < 0.0
        && ev.value <= ei.value
        && rel(&ei).max(rel(&ev)) <= ENERGY_FORMS_RELATIVE;
    Ok((
        ok,
        format!(
            "d0 {d0:.4}, R = {}: E(1_B) {:.4}, E(v) {:.4}, form mismatch {:.1e}",
            c.m.ball.radius,
            ei.value,
            ev.value,
            rel(&ei).max(rel(&ev))
        ),
    ))
}

fn subsolution(cache: &Option<Maximal2d>) -> Outcome {
    let Some(c) = cache else {
        return Err("2-D maximal solution unavailable".into());
    };
    let cfg = load("subsolution.ini")?;
    if cfg.kernel.profile != c.cfg.kernel.profile || cfg.ball.radius != c.cfg.ball.radius {
        return Err("subsolution.ini no longer matches maximal_2d.ini".into());
    }
    let grid = cfg.build_grid().map_err(err)?;
    let k = cfg.build_kernel(&grid).map_err(err)?;
    let f = cfg.nonlinearity().map_err(err)?;
    let w11 = c.consts.w11.ok_or("quartic kernel lost its W11 constant")?;
    let delta0 = c.consts.delta0.ok_or("delta0 unavailable")?;
    let t = Instant::now();
    let s = build_subsolution(&c.m, &k, &f, delta0 / 2.0, &c.consts, ConvPath::Fast).map_err(err)?;
    let secs = c.seconds + t.elapsed().as_secs_f64();
    let floor = -2.0 * grid.spacing() * w11;
    let ok = matches!(cfg.profile().map_err(err)?, Profile::Quartic { .. })
        && (delta0 - DELTA0_REFERENCE).abs() <= DELTA0_WINDOW
        && s.verification_min >= floor
        && secs < SUBSOLUTION_SECONDS;
    Ok((
        ok,
        format!(
            "delta0 {delta0:.4}, delta {:.4}: min {:.2e} >= {floor:.2e}, {secs:.1} s including the maximal solve",
            delta0 / 2.0,
            s.verification_min
        ),
    ))
}

fn comparison() -> Outcome {
    let mut cfg = load("liouville_disk.ini")?;
    cfg.set("experiment.trials", &COMPARISON_TRIALS.to_string()).map_err(err)?;
    let p = cfg.build_problem().map_err(err)?;
    let consts = kernel_constants(&p.kernel, &p.f.base, &cfg.experiment.alphas).map_err(err)?;
    let u = hostile_solution(&p, cfg.solver.tol, cfg.solver.max_steps, ConvPath::Fast).map_err(err)?;
    let r = comparison_suite(&p, u.as_ref(), &consts, cfg.experiment.sweep_radius, COMPARISON_TRIALS, 9, ConvPath::Fast)
        .map_err(err)?;
    let mut violations = 0.0;
    let mut suites = Vec::new();
    for c in r.checks.iter().filter(|c| c.name.ends_with(".violations")) {
        violations += c.measured.unwrap_or(f64::INFINITY);
        suites.push(c.name.trim_end_matches(".violations").to_string());
    }
    let excess = r
        .checks
        .iter()
        .filter(|c| c.name.ends_with(".max_excess"))
        .filter_map(|c| c.measured)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = r.passed() && suites.len() == 4 && violations == 0.0 && excess <= COMPARISON_EXCESS;
    Ok((
        ok,
        format!("{} x {COMPARISON_TRIALS} trials, {violations} violations, largest excess {excess:.1e}", suites.join("/")),
    ))
}

fn front() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, target) in [("counterexample.ini", 340usize), ("liouville_disk.ini", 340)] {
        let cfg = load(name)?;
        let grid = cfg.build_grid().map_err(err)?;
        let k = cfg.build_kernel(&grid).map_err(err)?;
        let j1 = marginal_j1(&k);
        let f = cfg.bistable().map_err(err)?;
        let phi = front_profile(&j1, &f, &FrontOptions::default()).map_err(err)?;
        let u = common::parabolic_front(&j1, f.theta(), 960, target);
        let mut gap = 0.0f64;
        for s in -240isize..=240 {
            gap = gap.max((u[(target as isize + s) as usize] - phi.phi[(phi.pin as isize + s) as usize]).abs());
        }
        let left = phi.phi[0];
        let right = 1.0 - phi.phi[phi.phi.len() - 1];
        let this = phi.is_monotone()
            && phi.residual_sup <= FRONT_RESIDUAL
            && left <= FRONT_ENDS
            && right <= FRONT_ENDS
            && gap <= FRONT_ORACLE;
        ok &= this;
        parts.push(format!(
            "{}: residual {:.1e}, ends {left:.1e}/{right:.1e}, parabolic gap {gap:.1e}, c = {:.5}",
            cfg.kernel.profile, phi.residual_sup, phi.speed
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn holder(reports: &[Report]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    let mut ok = reports.len() == 3;
    for r in reports {
        for alpha in ["0.5", "1"] {
            let Some(c) = r.check(&format!("bounds.holder.alpha_{alpha}")) else {
                ok = false;
                continue;
            };
            let (Some(lhs), Some(bound), Some(slack)) = (c.measured, c.bound, c.tolerance) else {
                ok = false;
                continue;
            };
            ok &= c.status == Status::Pass && lhs <= bound + slack;
            worst = worst.max(lhs / (bound + slack));
            count += 1;
        }
    }
    Ok((ok && count == 6, format!("{count} quotients on disk/ellipse/square, largest lhs/(2[J] + slack) = {worst:.1e}")))
}

fn robustness() -> Outcome {
    let cfg = load("robustness.ini")?;
    let (r, _) = robustness_experiment(&cfg, ConvPath::Fast).map_err(err)?;
    let flat = measured(&r, "flatness")?;
    let mut asserted = 0;
    let mut ok = r.passed() && flat > 0.0;
    for &e in cfg.experiment.epsilons.iter().filter(|&&e| e <= ROBUST_EPS_MAX) {
        let min_u = measured(&r, &format!("eps_{e}.min_u"))?;
        ok &= min_u >= 1.0 - LIOUVILLE_GAP;
        asserted += 1;
    }
    let holder: Vec<_> = r.checks.iter().filter(|c| c.name.contains(".holder_alpha_")).collect();
    ok &= !holder.is_empty() && holder.iter().all(|c| c.status == Status::Pass);
    let eps0 = r.check("empirical_eps0").and_then(|c| c.measured).unwrap_or(f64::NAN);
    Ok((
        ok && asserted > 0,
        format!(
            "flatness margin {flat:.3}, {asserted} epsilons <= {ROBUST_EPS_MAX} asserted, {} Holder checks pass, empirical eps0 {eps0}",
            holder.len()
        ),
    ))
}

fn run_cli(args: &[&str], threads: &str, out: &Path) -> Result<i32, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_nonlocal-liouville"))
        .args(args)
        .args(["--threads", threads, "--out"])
        .arg(out)
        .output()
        .map_err(err)?;
    o.status.code().ok_or_else(|| "terminated by signal".to_string())
}

fn artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut m = BTreeMap::new();
    for e in fs::read_dir(dir).map_err(err)? {
        let e = e.map_err(err)?;
        let name = e.file_name().to_string_lossy().into_owned();
        if name != "timing.txt" {
            m.insert(name, fs::read(e.path()).map_err(err)?);
        }
    }
    Ok(m)
}

fn determinism() -> Outcome {
    let cfg = |n: &str| configs().join(n).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["experiment".into(), "counterexample".into(), "--config".into(), cfg("counterexample.ini")],
        vec!["experiment".into(), "liouville".into(), "--config".into(), cfg("liouville_disk.ini")],
        vec![
            "verify".into(),
            "operator".into(),
            "--config".into(),
            cfg("counterexample.ini"),
            "--set".into(),
            "experiment.trials=10".into(),
            "--seed".into(),
            "3".into(),
        ],
    ];
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut ok = true;
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = tmp.path().join(format!("{i}-t1"));
        let b = tmp.path().join(format!("{i}-t2"));
        let ca = run_cli(&args, "1", &a)?;
        let cb = run_cli(&args, "2", &b)?;
        let (fa, fb) = (artifacts(&a)?, artifacts(&b)?);
        ok &= ca == cb && !fa.is_empty() && fa == fb;
        files += fa.len();
    }
    Ok((ok, format!("{} runs at 1 and 2 threads, {files} artifact files compared byte for byte", runs.len())))
}

fn main() {
    let mut liouville_reports = Vec::new();
    let mut maximal = None;
    let mut passed = 0;
    let mut report = |id: usize, title: &str, outcome: Outcome| {
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        passed += usize::from(ok);
        println!("criterion {id:2} {} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    };
    report(1, "counterexample exactness", counterexample());
    report(2, "Liouville on convex obstacles", liouville(&mut liouville_reports));
    report(3, "operator path equivalence", operator());
    report(4, "monotone scheme", monotone_scheme(&mut maximal));
    report(5, "maximal-solution structure", structure());
    report(6, "energy negativity", energy_negativity(&maximal));
    report(7, "sub-solution certificate", subsolution(&maximal));
    report(8, "comparison suites", comparison());
    report(9, "front profile", front());
    report(10, "Holder bound", holder(&liouville_reports));
    report(11, "robustness sweep", robustness());
    report(12, "determinism", determinism());
    println!("acceptance: {passed}/12 criteria pass");
    if passed != 12 {
        std::process::exit(1);
    }
}
