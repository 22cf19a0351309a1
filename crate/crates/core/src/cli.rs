//! Command-line entry point: `solve`, `maximal`, `front`, `subsolution`,
//! `verify <suite>` and `experiment <name>`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::conv::ConvPath;
use crate::error::{Error, Result};
use crate::kernel::{kernel_constants, marginal_j1};
use crate::nonlinearity::ExtensionMode;
use crate::solver::{
    build_subsolution, evolve, front_profile, iteration_csv, log_csv, max_dt, maximal_solution,
    EvolveOptions, FrontOptions, MaximalOptions,
};
use crate::verify::{
    bounds_suite, comparison_suite, counterexample_check, hostile_solution, initial_field,
    liouville_experiment, operator_suite, robustness_experiment, Artifacts, Report,
};

/// Exit code for failed checks and numerical failures.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for rejected preconditions and malformed configuration.
pub const EXIT_PRECONDITION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nonlocal-liouville", version, about = "Nonlocal bistable equations on perforated domains")]
pub struct Cli {
    /// INI configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Conv::Fast)]
    pub conv: Conv,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the convolutions (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// `sweep` replays the barrier sweeping steps after a Liouville run.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Override a config entry, e.g. `--set grid.h=0.125`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Conv {
    Direct,
    Fast,
    Both,
}

impl From<Conv> for ConvPath {
    fn from(c: Conv) -> ConvPath {
        match c {
            Conv::Direct => ConvPath::Direct,
            Conv::Fast => ConvPath::Fast,
            Conv::Both => ConvPath::Both,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relax to a stationary field on the configured domain.
    Solve,
    /// Maximal solution of the ball problem by monotone iteration.
    Maximal,
    /// One-dimensional front profile of the marginal kernel.
    Front,
    /// Cone-extended sub-solution and its verification.
    Subsolution,
    /// Property suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Named experiments.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Comparison,
    Bounds,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    Liouville,
    Counterexample,
    Robustness,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PRECONDITION } else { 0 };
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => EXIT_FAIL,
                Error::Precondition(_) | Error::Config(_) | Error::Io(_) => EXIT_PRECONDITION,
            }
        }
    }
}

/// Config file plus `--mode` and `--set` overrides.
pub fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(m) = &cli.mode {
        cfg.set("experiment.mode", m)?;
    }
    for o in &cli.overrides {
        let Some((k, v)) = o.split_once('=') else {
            return Err(Error::Config(format!("override `{o}` is not KEY=VALUE")));
        };
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    let path: ConvPath = cli.conv.into();
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli, &cfg, path))
    }
    #[cfg(not(feature = "parallel"))]
    dispatch(cli, &cfg, path)
}

fn dispatch(cli: &Cli, cfg: &Config, path: ConvPath) -> Result<i32> {
    let start = Instant::now();
    let (mut report, art) = match cli.command {
        Command::Solve => solve(cfg, path)?,
        Command::Maximal => maximal(cfg, path)?,
        Command::Front => front(cfg)?,
        Command::Subsolution => subsolution(cfg, path)?,
        Command::Verify { suite } => (verify(cfg, suite, cli.seed, path)?, Artifacts::default()),
        Command::Experiment { name } => match name {
            ExperimentName::Liouville => liouville_experiment(cfg, path)?,
            ExperimentName::Counterexample => counterexample_check(cfg, path)?,
            ExperimentName::Robustness => robustness_experiment(cfg, path)?,
        },
    };
    report.inputs.insert("seed".into(), cli.seed.to_string());
    report.inputs.insert("conv".into(), path.name().into());
    report.wall_time = start.elapsed().as_secs_f64();
    write_outputs(&cli.out, cfg, &report, &art)?;
    summarize(&report);
    Ok(report.exit_code())
}

fn write_outputs(dir: &Path, cfg: &Config, report: &Report, art: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.ini"), cfg.to_ini())?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    std::fs::write(dir.join("report.csv"), report.to_csv())?;
    for (name, content) in &art.files {
        std::fs::write(dir.join(name), content)?;
    }
    std::fs::write(dir.join("timing.txt"), format!("wall_time_s = {:.3}\n", report.wall_time))?;
    Ok(())
}

fn summarize(r: &Report) {
    for c in &r.checks {
        let m = c.measured.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into());
        println!("{:<8} {:<40} {}", c.status.name(), c.name, m);
    }
    println!("{}: {:?} ({:.2} s)", r.experiment, r.outcome, r.wall_time);
}

fn solve(cfg: &Config, path: ConvPath) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("solve", cfg.entries());
    let mut art = Artifacts::default();
    let p = cfg.build_problem()?;
    let u0 = initial_field(&p, cfg.solver.initial)?;
    let dt = if cfg.solver.dt > 0.0 { cfg.solver.dt } else { max_dt(&p) };
    let out = evolve(
        &p,
        &u0,
        &EvolveOptions {
            dt,
            max_steps: cfg.solver.max_steps,
            residual_tol: cfg.solver.tol,
            path,
            log_every: cfg.solver.log_every,
        },
    )?;
    r.meta("steps", out.steps);
    r.meta("dt", dt);
    r.check_true("converged", out.converged, "");
    r.check_le("residual_sup", out.residual_sup, cfg.solver.tol, 0.0);
    r.info("min_u", out.field.min(), "");
    art.add("solution.csv", out.field.to_csv_string());
    art.add("log.csv", log_csv(&out.log));
    Ok((r, art))
}

fn maximal(cfg: &Config, path: ConvPath) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("maximal", cfg.entries());
    let mut art = Artifacts::default();
    if cfg.f.extension != ExtensionMode::ZeroLeft {
        return Err(Error::Precondition("maximal needs f.extension = zero-left".into()));
    }
    let grid = cfg.build_grid()?;
    let k = cfg.build_kernel(&grid)?;
    let f = cfg.nonlinearity()?;
    let consts = kernel_constants(&k, &f.base, &cfg.experiment.alphas)?;
    let opts = MaximalOptions {
        path,
        ..MaximalOptions::default()
    };
    let m = maximal_solution(&k, &f, cfg.ball.center, cfg.ball.radius, consts.d0, &opts)?;
    r.meta("d0", consts.d0);
    r.meta("iterations", m.iterations);
    r.meta("kshift", m.kshift);
    r.check_le("monotone_violation", m.monotone_violation, 0.0, 1e-12);
    r.check_le("residual", m.residual, 0.0, opts.residual_tol);
    r.check_ge("max_v_above_theta", m.v.max(), f.base.theta(), 0.0);
    r.info("center_value", m.center_value(), "");
    art.add("maximal.csv", m.v.to_csv_string());
    art.add("iterations.csv", iteration_csv(&m.log));
    Ok((r, art))
}

fn front(cfg: &Config) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("front", cfg.entries());
    let mut art = Artifacts::default();
    let grid = cfg.build_grid()?;
    let k = cfg.build_kernel(&grid)?;
    let f = cfg.bistable()?;
    let opts = FrontOptions::default();
    let phi = front_profile(&marginal_j1(&k), &f, &opts)?;
    r.meta("sweeps", phi.sweeps);
    r.info("speed", phi.speed, "");
    r.check_true("monotone", phi.is_monotone(), "");
    r.check_le("residual", phi.residual_sup, 0.0, opts.residual_tol);
    r.check_le("left_end", phi.phi[0], 0.0, 1e-3);
    r.check_ge("right_end", phi.phi[phi.phi.len() - 1], 1.0, 1e-3);
    art.add("front.csv", phi.field().to_csv_string());
    Ok((r, art))
}

fn subsolution(cfg: &Config, path: ConvPath) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("subsolution", cfg.entries());
    let mut art = Artifacts::default();
    let grid = cfg.build_grid()?;
    let k = cfg.build_kernel(&grid)?;
    let f = cfg.nonlinearity()?;
    let consts = kernel_constants(&k, &f.base, &cfg.experiment.alphas)?;
    let Some(delta0) = consts.delta0 else {
        return Err(Error::Precondition("kernel profile is not W^{1,1}; delta0 unavailable".into()));
    };
    let delta = if cfg.subsolution.delta > 0.0 { cfg.subsolution.delta } else { delta0 / 2.0 };
    let opts = MaximalOptions {
        path,
        ..MaximalOptions::default()
    };
    let m = maximal_solution(&k, &f, cfg.ball.center, cfg.ball.radius, consts.d0, &opts)?;
    let s = build_subsolution(&m, &k, &f, delta, &consts, path)?;
    r.meta("delta0", delta0);
    r.meta("delta", delta);
    r.meta("shell_cells", s.shell_cells);
    r.check_ge("verification_min", s.verification_min, 0.0, s.tol);
    println!(
        "subsolution: min(L w - w + f(w)) = {:e}, accepted >= {:e}: {}",
        s.verification_min,
        -s.tol,
        if s.passes() { "pass" } else { "fail" }
    );
    art.add("subsolution.csv", s.w.to_csv_string());
    art.add("maximal.csv", m.v.to_csv_string());
    Ok((r, art))
}

fn verify(cfg: &Config, suite: Suite, seed: u64, path: ConvPath) -> Result<Report> {
    let trials = cfg.experiment.trials;
    match suite {
        Suite::Operator => operator_suite(cfg, trials, seed),
        Suite::Comparison => {
            let p = cfg.build_problem()?;
            let consts = kernel_constants(&p.kernel, &p.f.base, &cfg.experiment.alphas)?;
            let u = hostile_solution(&p, cfg.solver.tol, cfg.solver.max_steps, path)?;
            let mut r = comparison_suite(&p, u.as_ref(), &consts, cfg.experiment.sweep_radius, trials, seed, path)?;
            for (k, v) in cfg.entries() {
                r.inputs.insert(k, v);
            }
            Ok(r)
        }
        Suite::Bounds => {
            let p = cfg.build_problem()?;
            let f = cfg.bistable()?;
            let consts = kernel_constants(&p.kernel, &f, &cfg.experiment.alphas)?;
            let Some(u) = hostile_solution(&p, cfg.solver.tol, cfg.solver.max_steps, path)? else {
                return Err(Error::Numerical("no converged stationary field for the bounds suite".into()));
            };
            let phi = front_profile(&marginal_j1(&p.kernel), &f, &FrontOptions::default())?;
            let mut r = bounds_suite(&u, &p, &phi, &consts, &cfg.experiment.alphas, cfg.experiment.max_pairs, path)?;
            for (k, v) in cfg.entries() {
                r.inputs.insert(k, v);
            }
            Ok(r)
        }
    }
}
