//! Constructive schemes: parabolic relaxation, the monotone scheme on balls,
//! energies, principal eigenvalues, fronts, and compactly supported sub-solutions.

mod ball;
mod front;
mod subsolution;

pub use ball::{
    ball_residual, energy, evolve_ball, iteration_csv, maximal_solution, principal_eigenvalue, resolvent_solve,
    scheme_shift, EnergyReport, Eigen, IterationLine, MaximalOptions, MaximalSolution,
};
pub use front::{front_profile, FrontOptions, FrontProfile};
pub use subsolution::{build_subsolution, interpolate, SubSolution};

use crate::conv::ConvPath;
use crate::error::{numerical, precondition, Result};
use crate::grid::Field;
use crate::operator::Problem;

/// Stopping rule and step size for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub dt: f64,
    pub max_steps: usize,
    pub residual_tol: f64,
    pub path: ConvPath,
    /// Record a progress line every this many steps (0 disables).
    pub log_every: usize,
}

/// One progress checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLine {
    pub step: usize,
    pub residual_sup: f64,
    pub min_u: f64,
    pub max_u: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub field: Field,
    pub steps: usize,
    pub converged: bool,
    pub residual_sup: f64,
    pub log: Vec<LogLine>,
}

/// Largest explicit step allowed by the comparison-preserving bound.
pub fn max_dt(p: &Problem) -> f64 {
    let st = crate::nonlinearity::stiffness(&p.f.base).expect("validated nonlinearity");
    0.9 / (p.max_jmass() + st.max_abs_fp)
}

/// Clipped explicit Euler for `u_t = Lu + f(u)` with the clamp band held at the far-field value.
pub fn evolve(p: &Problem, u0: &Field, opts: &EvolveOptions) -> Result<EvolveOutcome> {
    let bound = max_dt(p);
    if !(opts.dt > 0.0 && opts.dt <= bound) {
        return precondition(format!("dt = {} exceeds the stability bound {bound}", opts.dt));
    }
    let mut u = p.clamped(u0.clone())?;
    if u.masked_values().any(|v| !(0.0..=1.0).contains(&v)) {
        return precondition("initial datum must take values in [0,1]");
    }
    let mut log = Vec::new();
    let mut step = 0;
    loop {
        let r = active_residual(p, &u, opts.path)?;
        let sup = r.sup;
        if !sup.is_finite() {
            return numerical(format!("non-finite residual at step {step}"));
        }
        let done = sup <= opts.residual_tol || step >= opts.max_steps;
        if opts.log_every > 0 && (step % opts.log_every == 0 || done) {
            log.push(LogLine {
                step,
                residual_sup: sup,
                min_u: u.min(),
                max_u: u.max(),
            });
        }
        if done {
            return Ok(EvolveOutcome {
                field: u,
                steps: step,
                converged: sup <= opts.residual_tol,
                residual_sup: sup,
                log,
            });
        }
        apply_step(p, &mut u, &r.values, opts.dt);
        step += 1;
    }
}

struct ActiveResidual {
    values: Vec<f64>,
    sup: f64,
}

fn active_residual(p: &Problem, u: &Field, path: ConvPath) -> Result<ActiveResidual> {
    let mut r = p.apply_l_values(&u.values, path)?;
    let mut sup = 0.0f64;
    for i in 0..r.len() {
        if p.active[i] {
            r[i] += p.f.eval(u.values[i]);
            sup = sup.max(r[i].abs());
        }
    }
    Ok(ActiveResidual { values: r, sup })
}

fn apply_step(p: &Problem, u: &mut Field, r: &[f64], dt: f64) {
    for i in 0..r.len() {
        if p.active[i] {
            u.values[i] = (u.values[i] + dt * r[i]).clamp(0.0, 1.0);
        }
    }
}

/// One clipped Euler step in place; returns the sup-norm of the residual before the step.
///
/// The caller is responsible for `dt` and for the clamp band, as in [`evolve`].
pub fn evolve_step(p: &Problem, u: &mut Field, dt: f64, path: ConvPath) -> Result<f64> {
    let r = active_residual(p, u, path)?;
    if !r.sup.is_finite() {
        return numerical("non-finite residual");
    }
    apply_step(p, u, &r.values, dt);
    Ok(r.sup)
}

/// Progress log as `step,residual_sup,min_u,max_u` CSV.
pub fn log_csv(log: &[LogLine]) -> String {
    use crate::grid::fmt17;
    let mut s = String::from("step,residual_sup,min_u,max_u\n");
    for l in log {
        s.push_str(&format!(
            "{},{},{},{}\n",
            l.step,
            fmt17(l.residual_sup),
            fmt17(l.min_u),
            fmt17(l.max_u)
        ));
    }
    s
}
