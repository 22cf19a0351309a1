use std::f64::consts::PI;

use crate::config::{Config, Initial};
use crate::conv::ConvPath;
use crate::error::{precondition, Result};
use crate::grid::{holder_quotient, sup_metrics, Field};
use crate::kernel::{kernel_constants, marginal_j1, Kernel, KernelConstants};
use crate::nonlinearity::{stiffness, Bistable};
use crate::obstacle::{deformation_family, jmass, Obstacle, Shape};
use crate::operator::Problem;
use crate::solver::{
    evolve, evolve_step, front_profile, log_csv, max_dt, EvolveOptions, EvolveOutcome, FrontOptions,
    FrontProfile,
};

use super::bounds::bounds_suite;
use super::comparison::{active_extent, barrier, barrier_excess, obstacle_extent, ORDER_EPS};
use super::sliding::sliding_radius;
use super::Report;

/// Pass criterion of the Liouville and robustness runs.
pub const LIOUVILLE_TOL: f64 = 1e-6;
/// Exactness of the counterexample residual and fixed point.
pub const COUNTEREXAMPLE_TOL: f64 = 1e-12;
/// Largest kernel radius for which the annulus counterexample is exact.
pub const COUNTEREXAMPLE_MAX_RADIUS: f64 = 0.5;
const SWEEP_ROTATIONS: usize = 64;

/// Named text files produced by an experiment, in creation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

fn annulus_of(p: &Problem) -> Option<([f64; 2], f64, f64)> {
    match &p.obstacle.shape {
        Shape::Annulus { center, inner, outer } => Some((*center, *inner, *outer)),
        _ => None,
    }
}

/// `1` outside the annulus' outer circle, `0` in the hole.
pub fn counterexample_field(p: &Problem) -> Result<Field> {
    let Some((c, inner, _)) = annulus_of(p) else {
        return precondition("the counterexample field needs an annulus obstacle");
    };
    let g = p.grid();
    let values = (0..g.len())
        .map(|i| {
            let x = g.center(i);
            let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
            if p.domain[i] && r > inner {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    p.field(values)
}

/// Starting field with the clamp band at the far-field value.
pub fn initial_field(p: &Problem, initial: Initial) -> Result<Field> {
    let n = p.grid().len();
    let u = match initial {
        Initial::Hostile => p.field(vec![0.0; n])?,
        Initial::Ones => p.field(vec![1.0; n])?,
        Initial::Counterexample => counterexample_field(p)?,
    };
    p.clamped(u)
}

/// Front of the marginal kernel (the kernel itself in one dimension).
pub(crate) fn front_for(k: &Kernel, f: &Bistable) -> Result<FrontProfile> {
    front_profile(&marginal_j1(k), f, &FrontOptions::default())
}

fn evolve_config(cfg: &Config, p: &Problem, u0: &Field, path: ConvPath) -> Result<EvolveOutcome> {
    let dt = if cfg.solver.dt > 0.0 { cfg.solver.dt } else { max_dt(p) };
    evolve(
        p,
        u0,
        &EvolveOptions {
            dt,
            max_steps: cfg.solver.max_steps,
            residual_tol: cfg.solver.tol,
            path,
            log_every: cfg.solver.log_every,
        },
    )
}

fn grid_meta(r: &mut Report, p: &Problem) {
    let g = p.grid();
    let [n0, n1] = g.counts();
    r.meta("grid.cells", if g.dim() == 2 { format!("{n0}x{n1}") } else { n0.to_string() });
    r.meta("kernel.taps", p.kernel.taps().len());
    r.meta("obstacle.cells", p.obstacle.cell_count());
    r.meta("obstacle.convex", p.obstacle.convex);
}

/// One evolve run with its report lines; returns the outcome.
fn liouville_run(
    cfg: &Config,
    p: &Problem,
    path: ConvPath,
    r: &mut Report,
    prefix: &str,
) -> Result<EvolveOutcome> {
    let u0 = initial_field(p, cfg.solver.initial)?;
    let out = evolve_config(cfg, p, &u0, path)?;
    r.meta(&format!("{prefix}steps"), out.steps);
    r.info(&format!("{prefix}residual_sup"), out.residual_sup, "");
    if !out.converged {
        r.skip(
            &format!("{prefix}converged"),
            &format!("residual {:e} above {:e} after {} steps", out.residual_sup, cfg.solver.tol, out.steps),
        );
    } else {
        r.check_true(&format!("{prefix}converged"), true, "");
    }
    Ok(out)
}

/// Evolves from the initial datum on a (convex) obstacle; passes iff `min u >= 1 - 1e-6`.
///
/// With `experiment.mode = sweep` the barrier sweeping steps are replayed on the result.
pub fn liouville_experiment(cfg: &Config, path: ConvPath) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("liouville", cfg.entries());
    let mut art = Artifacts::default();
    let p = cfg.build_problem()?;
    grid_meta(&mut r, &p);
    let f = cfg.bistable()?;
    let consts = kernel_constants(&p.kernel, &f, &cfg.experiment.alphas)?;
    r.check_true("obstacle.convex", p.obstacle.convex, "the Liouville property is asserted on convex obstacles");

    let u0 = initial_field(&p, cfg.solver.initial)?;
    art.add("initial.csv", u0.to_csv_string());
    let out = liouville_run(cfg, &p, path, &mut r, "")?;
    let u = &out.field;
    r.check_ge("min_u", u.min(), 1.0 - LIOUVILLE_TOL, 0.0);

    let phi = front_for(&p.kernel, &f)?;
    let slide = sliding_radius(u, [1.0, 0.0], &phi)?;
    r.info("sliding.r_star", slide.value(), if slide.is_below_box() { "below -L_box" } else { "finite" });
    r.check_true("sliding.below_box", slide.is_below_box(), "plane wave slides past the whole box");

    let b = bounds_suite(u, &p, &phi, &consts, &cfg.experiment.alphas, cfg.experiment.max_pairs, path)?;
    r.absorb("bounds", &b);

    if cfg.experiment.refine {
        let fine = cfg.refined();
        let pf = fine.build_problem()?;
        let of = liouville_run(&fine, &pf, path, &mut r, "refined.")?;
        r.check_ge("refined.min_u", of.field.min(), 1.0 - LIOUVILLE_TOL, 0.0);
        r.check_le("refined.min_u_change", (of.field.min() - u.min()).abs(), 0.0, LIOUVILLE_TOL);
        art.add("solution_refined.csv", of.field.to_csv_string());
    }

    if cfg.experiment.mode == "sweep" {
        sweep_steps(&p, u, &consts, cfg.experiment.sweep_radius, path, &mut r)?;
    }

    art.add("solution.csv", u.to_csv_string());
    art.add("log.csv", log_csv(&out.log));
    art.add("jmass.csv", p.jmass.to_csv_string());
    art.add("front.csv", phi.field().to_csv_string());
    Ok((r, art))
}

/// The four sweeping steps on a computed field `u`:
/// (1) a barrier far out fits below `u`; (2) the barrier is a certified
/// sub-solution; (3) rotating it around the obstacle keeps it below `u`;
/// (4) moving it radially inward to the obstacle keeps it below `u`.
pub fn sweep_experiment(cfg: &Config, u: &Field, path: ConvPath) -> Result<Report> {
    let mut r = Report::new("sweep", cfg.entries());
    let p = cfg.build_problem()?;
    let consts = kernel_constants(&p.kernel, &cfg.bistable()?, &cfg.experiment.alphas)?;
    sweep_steps(&p, u, &consts, cfg.experiment.sweep_radius, path, &mut r)?;
    Ok(r)
}

fn sweep_steps(
    p: &Problem,
    u: &Field,
    consts: &KernelConstants,
    radius: f64,
    path: ConvPath,
    r: &mut Report,
) -> Result<()> {
    if p.grid().dim() != 2 {
        r.skip("sweep.step1_start", "sweeping needs a two-dimensional grid");
        return Ok(());
    }
    let b = barrier(&p.kernel, &p.f, radius, consts, path)?;
    r.meta("sweep.barrier", b.kind);
    let c = [0.0, 0.0];
    let h = p.grid().spacing();
    let rj = p.kernel.radius();
    let k_out = obstacle_extent(p, c);
    let rho_min = k_out + b.reach + rj + h;
    let rho_max = active_extent(p, c) - b.reach - rj - h;
    if rho_min > rho_max {
        r.skip("sweep.step1_start", "no room for the barrier between obstacle and clamp band");
        return Ok(());
    }
    let at = |rho: f64, tau: f64| [c[0] + rho * tau.cos(), c[1] + rho * tau.sin()];
    let start = barrier_excess(&b, u, at(rho_max, 0.0));
    if !r.check_le("sweep.step1_start", start, 0.0, ORDER_EPS) {
        return Ok(());
    }
    match b.certificate {
        Some((min, tol)) => {
            r.check_ge("sweep.step2_subsolution", min, 0.0, tol);
        }
        None => r.info(
            "sweep.step2_subsolution",
            b.center_value,
            "zero-extended maximal solution; kernel not W^{1,1}",
        ),
    }
    let ring = |rho: f64| {
        (0..SWEEP_ROTATIONS)
            .map(|j| barrier_excess(&b, u, at(rho, 2.0 * PI * j as f64 / SWEEP_ROTATIONS as f64)))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    r.check_le("sweep.step3_annulus", ring(rho_max), 0.0, ORDER_EPS);
    let steps = ((rho_max - rho_min) / h).floor() as usize;
    let mut worst = f64::NEG_INFINITY;
    let mut covered = rho_max;
    for s in 1..=steps {
        let rho = rho_max - s as f64 * h;
        let ex = ring(rho);
        worst = worst.max(ex);
        if ex > ORDER_EPS {
            break;
        }
        covered = rho;
    }
    r.check_le("sweep.step4_radial", worst.max(f64::MIN), 0.0, ORDER_EPS);
    r.info("sweep.covered_inner_radius", covered - b.reach, "inner edge of the swept annulus");
    r.info("sweep.obstacle_extent", k_out, "");
    // Conclusion: u is at least the barrier's center value on the swept circle of centers.
    let g = &u.grid;
    let circle_min = (0..g.len())
        .filter(|&i| u.mask[i])
        .filter(|&i| {
            let x = g.center(i);
            let rr = (x[0] * x[0] + x[1] * x[1]).sqrt();
            rr >= covered && rr <= rho_max
        })
        .map(|i| u.values[i])
        .fold(f64::INFINITY, f64::min);
    r.check_ge("sweep.lower_bound", circle_min, b.center_value, ORDER_EPS);
    Ok(())
}

/// The annulus counterexample: a non-constant exact solution.
pub fn counterexample_check(cfg: &Config, path: ConvPath) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("counterexample", cfg.entries());
    let mut art = Artifacts::default();
    if cfg.obstacle.family != "annulus" {
        return precondition("the counterexample needs obstacle.family = annulus");
    }
    let rj = cfg.kernel.radius;
    if rj > COUNTEREXAMPLE_MAX_RADIUS {
        return precondition(format!(
            "kernel radius {rj} exceeds {COUNTEREXAMPLE_MAX_RADIUS}; the hole and the exterior would interact"
        ));
    }
    let gap = cfg.obstacle.outer - cfg.obstacle.inner;
    if gap < rj + cfg.grid.h {
        return precondition(format!(
            "annulus width {gap} leaves no empty cell shell beyond the kernel reach {rj}"
        ));
    }
    let p = cfg.build_problem()?;
    grid_meta(&mut r, &p);
    let u = p.clamped(counterexample_field(&p)?)?;
    let (res, sup) = p.residual(&u, path)?;
    r.check_le("residual_sup", sup, 0.0, COUNTEREXAMPLE_TOL);
    r.check_le("oscillation", (u.max() - u.min() - 1.0).abs(), 0.0, 0.0);
    let ones = p.field(vec![1.0; p.grid().len()])?;
    let m = sup_metrics(&u, &ones)?;
    r.check_le("distance_to_one", (m.sup_diff - 1.0).abs(), 0.0, 0.0);
    let mut next = u.clone();
    evolve_step(&p, &mut next, max_dt(&p), path)?;
    let moved = sup_metrics(&next, &u)?.sup_diff;
    r.check_le("fixed_point", moved, 0.0, COUNTEREXAMPLE_TOL);
    art.add("counterexample.csv", u.to_csv_string());
    art.add("residual.csv", res.to_csv_string());
    Ok((r, art))
}

fn same_mask_inclusion(a: &Obstacle, b: &Obstacle) -> bool {
    a.mask_k.iter().zip(&b.mask_k).all(|(&x, &y)| !x || y)
}

/// Deformed-obstacle family `K_ε`: Liouville runs along a decreasing `ε` grid.
pub fn robustness_experiment(cfg: &Config, path: ConvPath) -> Result<(Report, Artifacts)> {
    let mut r = Report::new("robustness", cfg.entries());
    let mut art = Artifacts::default();
    let grid = cfg.build_grid()?;
    let kernel = cfg.build_kernel(&grid)?;
    let f = cfg.bistable()?;
    let st = stiffness(&f)?;
    let consts = kernel_constants(&kernel, &f, &cfg.experiment.alphas)?;
    let mut base_cfg = cfg.clone();
    if cfg.obstacle.family == "deformed" {
        base_cfg.obstacle.family = cfg.obstacle.base.clone();
    }
    base_cfg.obstacle.delta = 0.0;
    if !matches!(base_cfg.obstacle.family.as_str(), "ball" | "ellipse") {
        return precondition("the robustness family needs a disk or ellipse base");
    }
    let base = base_cfg.build_obstacle(&grid)?;
    if base.is_empty() {
        return precondition("the base obstacle has empty interior on this grid");
    }
    let psi = cfg.obstacle.psi;
    let mut eps = cfg.experiment.epsilons.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();

    // Masks, inclusion chain, and flatness before any run.
    let mut family = Vec::new();
    for &e in &eps {
        let k = deformation_family(&base, e, psi)?;
        let jm = jmass(&kernel, &k)?;
        family.push((e, k, jm));
    }
    let mut chain = family.iter().all(|(_, k, _)| same_mask_inclusion(&base, k));
    for w in family.windows(2) {
        chain &= same_mask_inclusion(&w[1].1, &w[0].1);
    }
    r.check_true("mask_inclusion", chain, "K ⊂ K_ε1 ⊂ K_ε2 for ε1 <= ε2");
    let mut inf_j = f64::INFINITY;
    let mut problems = Vec::new();
    for (e, k, _) in &family {
        let p = Problem::new(kernel.clone(), k.clone(), cfg.nonlinearity()?, cfg.clamp_width())?;
        let mj = p.min_jmass();
        r.info(&format!("eps_{e}.min_jmass"), mj, "");
        inf_j = inf_j.min(mj);
        problems.push((*e, p));
    }
    if inf_j <= st.maxfp {
        return precondition(format!(
            "flatness hypothesis fails: inf J_eps = {inf_j} <= max f' = {}",
            st.maxfp
        ));
    }
    r.check_ge("flatness", inf_j - st.maxfp, 0.0, 0.0);
    r.meta("inf_jmass", inf_j);

    let h = grid.spacing();
    let mut passing = Vec::new();
    for (e, p) in &problems {
        let tag = format!("eps_{e}");
        let out = liouville_run(cfg, p, path, &mut r, &format!("{tag}."))?;
        let u = &out.field;
        let ok = u.min() >= 1.0 - LIOUVILLE_TOL;
        if *e <= 0.1 + 1e-12 {
            r.check_ge(&format!("{tag}.min_u"), u.min(), 1.0 - LIOUVILLE_TOL, 0.0);
        } else {
            r.info(&format!("{tag}.min_u"), u.min(), "large deformation: recorded, not asserted");
        }
        if out.converged {
            let active = Field::from_parts(u.grid.clone(), u.values.clone(), p.active.clone())?;
            for &alpha in &cfg.experiment.alphas {
                let Some(nik) = consts.nikolskii_at(alpha) else { continue };
                let a = 2.0 * nik / (inf_j - st.maxfp);
                let q = holder_quotient(&active, alpha, cfg.experiment.max_pairs)?;
                let slack = 2.0 * out.residual_sup / (h.powf(alpha) * (inf_j - st.maxfp));
                r.check_le(&format!("{tag}.holder_alpha_{alpha}"), q.value, a, slack);
            }
        }
        passing.push((*e, ok));
        art.add(format!("solution_eps_{e}.csv"), u.to_csv_string());
    }
    // Largest ε such that every ε' <= ε passes.
    let mut eps0 = None;
    for &(e, ok) in passing.iter().rev() {
        if !ok {
            break;
        }
        eps0 = Some(e);
    }
    match eps0 {
        Some(e) => r.info("empirical_eps0", e, "largest passing epsilon with all smaller ones passing"),
        None => r.info("empirical_eps0", 0.0, "no epsilon passed"),
    }
    Ok((r, art))
}
