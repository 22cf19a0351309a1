use crate::conv::ConvPath;
use crate::error::{numerical, precondition, Result};
use crate::grid::{pairwise_sum, Field};
use crate::kernel::Kernel;
use crate::nonlinearity::{ExtendedNonlinearity, ExtensionMode};
use crate::operator::BallDomain;

/// Shift `k = ⌈sup f̃'⌉ + 1` of the monotone scheme.
pub fn scheme_shift(f: &ExtendedNonlinearity) -> f64 {
    f.max_deriv().ceil() + 1.0
}

const RESOLVENT_TOL: f64 = 1e-13;
const RESOLVENT_MAX_SWEEPS: usize = 100_000;
pub(crate) const UPPER_SLACK: f64 = 1e-12;

/// Solves `𝓛[w] - (k+1) w = rhs` on the ball by the contraction
/// `w <- (𝓛[w] - rhs) / (k+1)`, starting from `warm` (or zero).
///
/// Returns the solution and the number of sweeps.
pub fn resolvent_solve(
    ball: &BallDomain,
    kshift: f64,
    rhs: &[f64],
    warm: Option<&[f64]>,
    path: ConvPath,
) -> Result<(Vec<f64>, usize)> {
    if kshift < 0.0 {
        return precondition(format!("resolvent shift must be nonnegative, got {kshift}"));
    }
    let n = ball.len();
    if rhs.len() != n {
        return precondition("right-hand side does not match the ball grid");
    }
    let mut w = match warm {
        Some(w0) => w0.to_vec(),
        None => vec![0.0; n],
    };
    let inv = 1.0 / (kshift + 1.0);
    for sweep in 1..=RESOLVENT_MAX_SWEEPS {
        let lw = ball.apply(&w, path)?;
        let mut incr = 0.0f64;
        for i in 0..n {
            let new = if ball.mask[i] { (lw[i] - rhs[i]) * inv } else { 0.0 };
            incr = incr.max((new - w[i]).abs());
            w[i] = new;
        }
        if !incr.is_finite() {
            return numerical(format!("resolvent diverged at sweep {sweep}"));
        }
        if incr <= RESOLVENT_TOL {
            return Ok((w, sweep));
        }
    }
    numerical(format!("resolvent did not converge in {RESOLVENT_MAX_SWEEPS} sweeps"))
}

/// `sup_B |𝓛[v] - v + f(v)|`.
pub fn ball_residual(ball: &BallDomain, f: &ExtendedNonlinearity, v: &[f64], path: ConvPath) -> Result<f64> {
    let lv = ball.apply(v, path)?;
    Ok((0..ball.len())
        .filter(|&i| ball.mask[i])
        .fold(0.0f64, |a, i| a.max((lv[i] - v[i] + f.eval(v[i])).abs())))
}

/// Knobs for [`maximal_solution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalOptions {
    pub path: ConvPath,
    /// Stop once `sup (v_n - v_{n+1})` falls below this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Skip the `R >= d0` precondition; a collapse to the trivial branch is still reported.
    pub allow_below_d0: bool,
    /// Largest ball-equation residual accepted at the end.
    pub residual_tol: f64,
}

impl Default for MaximalOptions {
    fn default() -> Self {
        MaximalOptions {
            path: ConvPath::Fast,
            tol: 1e-10,
            max_iterations: 200_000,
            allow_below_d0: false,
            residual_tol: 1e-9,
        }
    }
}

/// Largest solution in `[0,1]` of `𝓛_B[v] - v + f(v) = 0` on a ball.
#[derive(Debug, Clone)]
pub struct MaximalSolution {
    pub ball: BallDomain,
    pub v: Field,
    pub iterations: usize,
    pub final_increment: f64,
    pub residual: f64,
    /// `max_n max_x (v_{n+1} - v_n)`; nonpositive for an exact monotone scheme.
    pub monotone_violation: f64,
    pub kshift: f64,
    pub total_sweeps: usize,
    pub log: Vec<IterationLine>,
}

/// One outer iteration of the monotone scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLine {
    pub iteration: usize,
    /// `sup |v_n - v_{n+1}|`.
    pub increment: f64,
    pub center_value: f64,
    pub sweeps: usize,
}

/// Iteration history as `iteration,increment,center_value,sweeps` CSV.
pub fn iteration_csv(log: &[IterationLine]) -> String {
    use crate::grid::fmt17;
    let mut s = String::from("iteration,increment,center_value,sweeps\n");
    for l in log {
        s.push_str(&format!(
            "{},{},{},{}\n",
            l.iteration,
            fmt17(l.increment),
            fmt17(l.center_value),
            l.sweeps
        ));
    }
    s
}

impl MaximalSolution {
    pub fn center_value(&self) -> f64 {
        self.v.values[self.ball.center_index()]
    }

    /// Value at an integer cell offset from the center, if inside the ball.
    pub fn at_offset(&self, a: isize, b: isize) -> Option<f64> {
        self.ball
            .index_of(a, b)
            .filter(|&i| self.ball.mask[i])
            .map(|i| self.v.values[i])
    }
}

/// Monotone iteration `𝓛[v_{n+1}] - (k+1) v_{n+1} = -k v_n - f(v_n)` from `v_0 ≡ 1`.
pub fn maximal_solution(
    k: &Kernel,
    f: &ExtendedNonlinearity,
    center: [f64; 2],
    radius: f64,
    d0: f64,
    opts: &MaximalOptions,
) -> Result<MaximalSolution> {
    if f.mode != ExtensionMode::ZeroLeft {
        return precondition("the monotone scheme uses the zero-left extension");
    }
    if radius < k.radius() {
        return precondition(format!("ball radius {radius} is below the kernel radius"));
    }
    if radius < d0 && !opts.allow_below_d0 {
        return precondition(format!("ball radius {radius} is below d0 = {d0}"));
    }
    let ball = BallDomain::new(k, center, radius, 0)?;
    let kshift = scheme_shift(f);
    let n = ball.len();
    let mut v: Vec<f64> = ball.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let mut rhs = vec![0.0; n];
    let mut violation = f64::NEG_INFINITY;
    let mut total_sweeps = 0;
    let mut prev: Option<Vec<f64>> = None;
    let mut log = Vec::new();
    let ci = ball.center_index();
    for it in 1..=opts.max_iterations {
        for i in 0..n {
            rhs[i] = if ball.mask[i] { -kshift * v[i] - f.eval(v[i]) } else { 0.0 };
        }
        // Warm start by linear extrapolation of the last two iterates.
        let warm: Vec<f64> = match &prev {
            Some(p) => (0..n).map(|i| (2.0 * v[i] - p[i]).max(0.0)).collect(),
            None => v.clone(),
        };
        let (next, sweeps) = resolvent_solve(&ball, kshift, &rhs, Some(&warm), opts.path)?;
        total_sweeps += sweeps;
        let mut incr = 0.0f64;
        let mut up = f64::NEG_INFINITY;
        for i in 0..n {
            if ball.mask[i] {
                incr = incr.max((v[i] - next[i]).abs());
                up = up.max(next[i] - v[i]);
            }
        }
        violation = violation.max(up);
        log.push(IterationLine {
            iteration: it,
            increment: incr,
            center_value: next[ci],
            sweeps,
        });
        if up > 1e-12 {
            return numerical(format!(
                "monotone scheme increased by {up:e} at iteration {it} (shift k = {kshift})"
            ));
        }
        prev = Some(std::mem::replace(&mut v, next));
        if incr <= opts.tol {
            let residual = ball_residual(&ball, f, &v, opts.path)?;
            let field = ball.field(v)?;
            if field.max() <= f.base.theta() {
                return numerical(format!(
                    "collapsed to trivial branch: max v = {} <= theta",
                    field.max()
                ));
            }
            if residual > opts.residual_tol {
                return numerical(format!(
                    "ball equation residual {residual:e} exceeds {:e}",
                    opts.residual_tol
                ));
            }
            // Deep inside a large ball `1 - v` drops below the rounding unit.
            if field.min() <= 0.0 || field.max() > 1.0 + UPPER_SLACK {
                return numerical(format!(
                    "maximal solution left the open interval (0,1): min {}, max {}",
                    field.min(),
                    field.max()
                ));
            }
            return Ok(MaximalSolution {
                ball,
                v: field,
                iterations: it,
                final_increment: incr,
                residual,
                monotone_violation: violation,
                kshift,
                total_sweeps,
                log,
            });
        }
    }
    numerical(format!(
        "monotone scheme did not converge in {} iterations",
        opts.max_iterations
    ))
}

/// Clipped explicit Euler for `v_t = 𝓛_B[v] - v + f(v)` on the ball.
///
/// Returns the final values, step count, and whether the residual reached `tol`.
pub fn evolve_ball(
    ball: &BallDomain,
    f: &ExtendedNonlinearity,
    v0: &[f64],
    dt: f64,
    tol: f64,
    max_steps: usize,
    path: ConvPath,
) -> Result<(Vec<f64>, usize, bool)> {
    let st = crate::nonlinearity::stiffness(&f.base)?;
    let bound = 0.9 / (1.0 + st.max_abs_fp);
    if !(dt > 0.0 && dt <= bound) {
        return precondition(format!("dt = {dt} exceeds the ball stability bound {bound}"));
    }
    let mut v: Vec<f64> = v0
        .iter()
        .zip(&ball.mask)
        .map(|(&x, &m)| if m { x } else { 0.0 })
        .collect();
    for step in 0..=max_steps {
        let lv = ball.apply(&v, path)?;
        let mut sup = 0.0f64;
        let mut r = vec![0.0; v.len()];
        for i in 0..v.len() {
            if ball.mask[i] {
                r[i] = lv[i] - v[i] + f.eval(v[i]);
                sup = sup.max(r[i].abs());
            }
        }
        if !sup.is_finite() {
            return numerical(format!("non-finite ball residual at step {step}"));
        }
        if sup <= tol {
            return Ok((v, step, true));
        }
        if step == max_steps {
            break;
        }
        for i in 0..v.len() {
            if ball.mask[i] {
                v[i] = (v[i] + dt * r[i]).clamp(0.0, 1.0);
            }
        }
    }
    Ok((v, max_steps, false))
}

/// Both forms of the ball energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `¼ΣΣ J (u_y - u_x)² h^{2d} + ½ Σ c u² h^d - Σ F(u) h^d`.
    pub value: f64,
    /// `-½ ΣΣ J u_x u_y h^{2d} + ½ Σ u² h^d - Σ F(u) h^d`.
    pub alt: f64,
}

/// Energy of `u` (values on the ball grid) with the odd extension of `f`.
pub fn energy(
    k: &Kernel,
    f: &ExtendedNonlinearity,
    ball: &BallDomain,
    u: &[f64],
) -> Result<EnergyReport> {
    if f.mode != ExtensionMode::Odd {
        return precondition("the energy uses the odd extension of f");
    }
    if u.len() != ball.len() {
        return precondition("field does not match the ball grid");
    }
    let vol = ball.grid.cell_volume();
    let taps = k.taps();
    let cells: Vec<usize> = (0..ball.len()).filter(|&i| ball.mask[i]).collect();
    let mut dirichlet = Vec::with_capacity(cells.len());
    let mut cross = Vec::with_capacity(cells.len());
    let mut mass_term = Vec::with_capacity(cells.len());
    let mut square = Vec::with_capacity(cells.len());
    let mut potential = Vec::with_capacity(cells.len());
    for &i in &cells {
        let (a, b) = ball.offset(i);
        let ux = u[i];
        let mut d = 0.0;
        let mut c = 0.0;
        let mut seen = 0.0;
        for t in &taps {
            if let Some(j) = ball.index_of(a + t.di, b + t.dj) {
                if ball.mask[j] {
                    let uy = u[j];
                    d += t.mass * (uy - ux) * (uy - ux);
                    c += t.mass * uy;
                    seen += t.mass;
                }
            }
        }
        dirichlet.push(0.25 * d * vol);
        cross.push(-0.5 * ux * c * vol);
        mass_term.push(0.5 * (1.0 - seen) * ux * ux * vol);
        square.push(0.5 * ux * ux * vol);
        potential.push(f.antideriv(ux) * vol);
    }
    let pot = pairwise_sum(&potential);
    let value = pairwise_sum(&dirichlet) + pairwise_sum(&mass_term) - pot;
    let alt = pairwise_sum(&cross) + pairwise_sum(&square) - pot;
    if (value - alt).abs() > 1e-9 * (1.0 + value.abs()) {
        return numerical(format!("energy forms disagree: {value} vs {alt}"));
    }
    Ok(EnergyReport { value, alt })
}

/// Principal eigenpair of `𝓛_B - Id`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Power iteration on `𝓛_B + Id`, whose spectrum lies in `[0, 2]`.
pub fn principal_eigenvalue(ball: &BallDomain, path: ConvPath) -> Result<Eigen> {
    const TOL: f64 = 1e-8;
    const MAX_ITER: usize = 10_000;
    let n = ball.len();
    let mut v: Vec<f64> = ball.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let norm = |x: &[f64]| pairwise_sum(&x.iter().map(|a| a * a).collect::<Vec<_>>()).sqrt();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut mu_prev = f64::NAN;
    for it in 1..=MAX_ITER {
        let lv = ball.apply(&v, path)?;
        let w: Vec<f64> = (0..n)
            .map(|i| if ball.mask[i] { lv[i] + v[i] } else { 0.0 })
            .collect();
        let mu = pairwise_sum(&(0..n).map(|i| v[i] * w[i]).collect::<Vec<_>>());
        let nw = norm(&w);
        v = w.iter().map(|x| x / nw).collect();
        if (mu - mu_prev).abs() <= TOL {
            if v.iter().zip(&ball.mask).any(|(&x, &m)| m && x <= 0.0) {
                return numerical("principal eigenvector is not positive");
            }
            return Ok(Eigen {
                lambda: mu - 2.0,
                vector: v,
                iterations: it,
            });
        }
        mu_prev = mu;
    }
    numerical(format!("power iteration did not converge in {MAX_ITER} iterations"))
}
