use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conv::ConvPath;
use crate::error::{precondition, Result};
use crate::grid::{Field, Grid};
use crate::kernel::{Kernel, KernelConstants};
use crate::nonlinearity::{extend, ExtendedNonlinearity, ExtensionMode, Stiffness};
use crate::operator::Problem;
use crate::solver::{
    build_subsolution, evolve, evolve_step, interpolate, max_dt, maximal_solution, EvolveOptions,
    MaximalOptions,
};

use super::Report;

/// Exactness level of every ordering assertion in the suite.
pub const ORDER_EPS: f64 = 1e-12;
const EVOLVE_STEPS: usize = 10;
const ROTATIONS: usize = 16;

/// Radially symmetric sub-solution used as a moving barrier.
#[derive(Debug, Clone)]
pub(crate) struct Barrier {
    /// Values on a local grid centered at the origin; zero off it.
    pub w: Field,
    /// Support radius.
    pub reach: f64,
    pub center_value: f64,
    pub kind: &'static str,
    /// `min (𝓛[w] - w + f(w))`, when a certificate is computed.
    pub certificate: Option<(f64, f64)>,
}

impl Barrier {
    pub fn at(&self, x: [f64; 2], center: [f64; 2]) -> f64 {
        interpolate(&self.w, [x[0] - center[0], x[1] - center[1]])
    }
}

/// The cone sub-solution `w_{0,R,δ₀/2}` when `J` is `W¹,¹`, else the maximal
/// solution extended by zero (also a sub-solution away from `K`).
pub(crate) fn barrier(
    k: &Kernel,
    f: &ExtendedNonlinearity,
    radius: f64,
    consts: &KernelConstants,
    path: ConvPath,
) -> Result<Barrier> {
    let fz = extend(&f.base, ExtensionMode::ZeroLeft);
    let opts = MaximalOptions {
        path,
        allow_below_d0: true,
        ..MaximalOptions::default()
    };
    let m = maximal_solution(k, &fz, [0.0, 0.0], radius, consts.d0, &opts)?;
    let center_value = m.center_value();
    if let Some(delta0) = consts.delta0 {
        let sub = build_subsolution(&m, k, &fz, delta0 / 2.0, consts, path)?;
        let cert = Some((sub.verification_min, sub.tol));
        return Ok(Barrier {
            reach: radius + sub.delta,
            w: sub.w,
            center_value,
            kind: "cone",
            certificate: cert,
        });
    }
    let n = m.ball.len();
    let w = Field::from_parts(m.ball.grid.clone(), m.v.values.clone(), vec![true; n])?;
    Ok(Barrier {
        w,
        reach: radius,
        center_value,
        kind: "zero-extension",
        certificate: None,
    })
}

/// Flat indices of cells whose center lies within `r` of `x`.
pub(crate) fn cells_near(g: &Grid, x: [f64; 2], r: f64) -> Vec<usize> {
    let h = g.spacing();
    let lo = g.lo();
    let [n0, n1] = g.counts();
    let range = |c: f64, l: f64, n: usize| -> (usize, usize) {
        let a = (((c - r - l) / h) - 1.0).floor().max(0.0) as usize;
        let b = ((((c + r - l) / h) + 1.0).ceil().max(0.0) as usize).min(n);
        (a.min(n), b)
    };
    let (a0, b0) = range(x[0], lo[0], n0);
    let (a1, b1) = if g.dim() == 2 { range(x[1], lo[1], n1) } else { (0, 1) };
    let mut out = Vec::new();
    for i in a0..b0 {
        for j in a1..b1 {
            let k = g.index(i, j);
            let c = g.center(k);
            if (c[0] - x[0]).powi(2) + (c[1] - x[1]).powi(2) <= r * r {
                out.push(k);
            }
        }
    }
    out
}

/// Largest distance from `c` to a cell of `K`, plus half a cell.
pub(crate) fn obstacle_extent(p: &Problem, c: [f64; 2]) -> f64 {
    let g = p.grid();
    let h = g.spacing();
    (0..g.len())
        .filter(|&i| p.obstacle.mask_k[i])
        .map(|i| {
            let x = g.center(i);
            ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt() + h / 2.0
        })
        .fold(0.0, f64::max)
}

/// Largest ball radius around `c` whose cells stay in the active region.
pub(crate) fn active_extent(p: &Problem, c: [f64; 2]) -> f64 {
    let g = p.grid();
    let lo = g.lo();
    let hi = g.hi();
    let mut r = f64::INFINITY;
    for a in 0..g.dim() {
        r = r.min(c[a] - lo[a]).min(hi[a] - c[a]);
    }
    r - p.clamp_width
}

/// Sup of `w_τ - u` over the grid for the barrier centered at `x`.
pub(crate) fn barrier_excess(b: &Barrier, u: &Field, x: [f64; 2]) -> f64 {
    let g = &u.grid;
    cells_near(g, x, b.reach + g.spacing())
        .into_iter()
        .filter(|&i| u.mask[i])
        .map(|i| b.at(g.center(i), x) - u.values[i])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 2] {
    if dim == 1 {
        return [if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0];
    }
    let t = rng.gen_range(0.0..2.0 * PI);
    [t.cos(), t.sin()]
}

/// `(Lv + f(v)) - (Lu + f(u))` on active cells.
fn defect(p: &Problem, u: &[f64], v: &[f64], path: ConvPath) -> Result<Vec<f64>> {
    let lu = p.apply_l_values(u, path)?;
    let lv = p.apply_l_values(v, path)?;
    Ok((0..u.len())
        .map(|i| {
            if p.active[i] {
                (lv[i] + p.f.eval(v[i])) - (lu[i] + p.f.eval(u[i]))
            } else {
                0.0
            }
        })
        .collect())
}

/// Weak, strong and sweeping comparison principles on seeded random data.
///
/// `u_stationary` is a converged solution of `p` used by the sweeping part;
/// `None` skips that part with a reason.
pub fn comparison_suite(
    p: &Problem,
    u_stationary: Option<&Field>,
    consts: &KernelConstants,
    sweep_radius: f64,
    trials: usize,
    seed: u64,
    path: ConvPath,
) -> Result<Report> {
    let mut r = Report::new("comparison", vec![("seed".into(), seed.to_string())]);
    r.meta("trials", trials);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    weak_part(p, trials, &mut rng, path, &mut r)?;
    evolve_part(p, trials, &mut rng, path, &mut r)?;
    strong_part(p, trials, &mut rng, path, &mut r)?;
    match u_stationary {
        Some(u) => sweeping_part(p, u, consts, sweep_radius, trials, &mut rng, path, &mut r)?,
        None => r.skip("sweeping.violations", "no stationary field supplied"),
    }
    Ok(r)
}

/// At the maximum `x̄` of `w = v - u` over `H̄`, with `w <= 0` off `H̄` and
/// `u >= 1 - c0` on `H̄`, the defect must satisfy `D(x̄) <= -c1 w(x̄)`, so the
/// pair can never be an ordered super/sub-solution pair.
fn weak_part(p: &Problem, trials: usize, rng: &mut ChaCha8Rng, path: ConvPath, r: &mut Report) -> Result<()> {
    let (c0, c1) = Stiffness::well_constants(&p.f.base);
    r.meta("weak.c0", c0);
    r.meta("weak.c1", c1);
    let g = p.grid();
    let n = g.len();
    let kcells: Vec<[f64; 2]> = (0..n).filter(|&i| p.obstacle.mask_k[i]).map(|i| g.center(i)).collect();
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut tested = 0usize;
    for _ in 0..trials {
        let e = random_unit(rng, g.dim());
        let top = kcells.iter().map(|x| x[0] * e[0] + x[1] * e[1]).fold(f64::NEG_INFINITY, f64::max);
        let base = if top.is_finite() { top } else { -2.0 };
        let offset = base + rng.gen_range(0.0..1.0);
        let in_h: Vec<bool> = (0..n)
            .map(|i| {
                let x = g.center(i);
                p.active[i] && x[0] * e[0] + x[1] * e[1] >= offset
            })
            .collect();
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..n {
            if !p.domain[i] {
                continue;
            }
            if in_h[i] {
                u[i] = 1.0 - c0 * rng.gen::<f64>();
                v[i] = u[i] + rng.gen_range(-0.2..0.2);
            } else {
                u[i] = rng.gen::<f64>();
                v[i] = u[i] - rng.gen_range(0.0..0.5);
            }
        }
        let Some(xbar) = (0..n).filter(|&i| in_h[i]).max_by(|&a, &b| {
            (v[a] - u[a]).total_cmp(&(v[b] - u[b])).then(b.cmp(&a))
        }) else {
            continue;
        };
        let w = v[xbar] - u[xbar];
        if w <= 0.0 {
            continue;
        }
        tested += 1;
        let d = defect(p, &u, &v, path)?;
        let excess = d[xbar] + c1 * w;
        worst = worst.max(excess);
        if excess > ORDER_EPS {
            violations += 1;
        }
    }
    r.meta("weak.tested", tested);
    if tested == 0 {
        r.skip("weak.violations", "no trial produced a positive maximum in the half-space");
        return Ok(());
    }
    r.check_le("weak.violations", violations as f64, 0.0, 0.0);
    r.info("weak.max_excess", worst, "max of D(x̄) + c1 w(x̄); must be <= 0");
    Ok(())
}

/// Ordered data stay ordered under the clipped explicit scheme.
fn evolve_part(p: &Problem, trials: usize, rng: &mut ChaCha8Rng, path: ConvPath, r: &mut Report) -> Result<()> {
    let n = p.grid().len();
    let dt = max_dt(p);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            if p.domain[i] {
                let x: f64 = rng.gen();
                let y: f64 = rng.gen();
                a[i] = x.min(y);
                b[i] = x.max(y);
            }
        }
        let mut u = p.clamped(p.field(a)?)?;
        let mut v = p.clamped(p.field(b)?)?;
        for _ in 0..EVOLVE_STEPS {
            evolve_step(p, &mut u, dt, path)?;
            evolve_step(p, &mut v, dt, path)?;
            let gap = (0..n)
                .filter(|&i| p.domain[i])
                .map(|i| u.values[i] - v.values[i])
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(gap);
            if gap > ORDER_EPS {
                violations += 1;
                break;
            }
        }
    }
    r.check_le("evolve_order.violations", violations as f64, 0.0, 0.0);
    r.info("evolve_order.max_gap", worst, "max of u_n - v_n over all steps");
    Ok(())
}

/// Plants equality `v = u` on a kernel-neighborhood chain grown from a contact
/// cell and checks that the defect vanishes exactly where the chain closes
/// and is strictly negative where it leaks.
fn strong_part(p: &Problem, trials: usize, rng: &mut ChaCha8Rng, path: ConvPath, r: &mut Report) -> Result<()> {
    let g = p.grid();
    let n = g.len();
    let [n0, n1] = g.counts();
    let taps: Vec<(isize, isize)> = p
        .kernel
        .taps()
        .iter()
        .filter(|t| (t.di, t.dj) != (0, 0))
        .map(|t| (t.di, t.dj))
        .collect();
    let neighbors = |i: usize| -> Vec<usize> {
        let (a, b) = g.coords(i);
        taps.iter()
            .filter_map(|&(da, db)| {
                let x = a as isize + da;
                let y = b as isize + db;
                (x >= 0 && y >= 0 && (x as usize) < n0 && (y as usize) < n1)
                    .then(|| g.index(x as usize, y as usize))
            })
            .filter(|&j| p.domain[j])
            .collect()
    };
    let active: Vec<usize> = (0..n).filter(|&i| p.active[i]).collect();
    let mut violations = 0usize;
    let mut contacts = 0usize;
    for _ in 0..trials {
        let xbar = active[rng.gen_range(0..active.len())];
        let depth = rng.gen_range(1..=3usize);
        let mut layer = vec![usize::MAX; n];
        layer[xbar] = 0;
        let mut queue = VecDeque::from([xbar]);
        while let Some(i) = queue.pop_front() {
            if layer[i] == depth {
                continue;
            }
            for j in neighbors(i) {
                if layer[j] == usize::MAX {
                    layer[j] = layer[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        for i in 0..n {
            if p.domain[i] {
                u[i] = rng.gen_range(0.2..1.0);
                v[i] = if layer[i] != usize::MAX { u[i] } else { u[i] - rng.gen_range(0.01..0.1) };
            }
        }
        let d = defect(p, &u, &v, path)?;
        for i in 0..n {
            if layer[i] == usize::MAX || !p.active[i] {
                continue;
            }
            contacts += 1;
            let leaks = neighbors(i).into_iter().any(|j| layer[j] == usize::MAX);
            let ok = if leaks { d[i] < -ORDER_EPS } else { d[i].abs() <= ORDER_EPS };
            if !ok || d[i] > ORDER_EPS {
                violations += 1;
            }
        }
    }
    r.meta("strong.contact_cells", contacts);
    r.check_le("strong.violations", violations as f64, 0.0, 0.0);

    // Number of equality-propagation steps needed to cover a ball of radius
    // 4 R_J around the center of the box, against ceil(diam / (r2 - r1)).
    let (r1, r2) = p.kernel.positivity_radii();
    let c = [0.5 * (g.lo()[0] + g.hi()[0]), 0.5 * (g.lo()[1] + g.hi()[1])];
    let ball_r = 4.0 * p.kernel.radius();
    let region: Vec<usize> = cells_near(g, c, ball_r).into_iter().filter(|&i| p.domain[i]).collect();
    if let Some(&start) = region.first() {
        let inside: std::collections::HashSet<usize> = region.iter().copied().collect();
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut steps = 0;
        while let Some(i) = queue.pop_front() {
            steps = steps.max(dist[i]);
            for j in neighbors(i) {
                if inside.contains(&j) && dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let reached = region.iter().filter(|&&i| dist[i] != usize::MAX).count();
        r.check_true(
            "strong.chain_covers_ball",
            reached == region.len(),
            "equality propagates to every cell of a ball through kernel neighborhoods",
        );
        r.info(
            "strong.chain_steps",
            steps as f64,
            &format!("continuum count ceil(diam/(r2-r1)) = {}", (2.0 * ball_r / (r2 - r1)).ceil()),
        );
    }
    Ok(())
}

/// Rotates a barrier around the obstacle inside the active annulus and
/// checks that `w_{τ0} <= u` propagates to every sampled `τ`.
#[allow(clippy::too_many_arguments)]
fn sweeping_part(
    p: &Problem,
    u: &Field,
    consts: &KernelConstants,
    radius: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
    path: ConvPath,
    r: &mut Report,
) -> Result<()> {
    if p.grid().dim() != 2 {
        r.skip("sweeping.violations", "rotations need a two-dimensional grid");
        return Ok(());
    }
    if u.mask != p.domain {
        return precondition("stationary field is not defined on the problem domain");
    }
    let b = barrier(&p.kernel, &p.f, radius, consts, path)?;
    r.meta("sweeping.barrier", b.kind);
    r.meta("sweeping.center_value", b.center_value);
    let c = [0.0, 0.0];
    let rj = p.kernel.radius();
    let h = p.grid().spacing();
    let rho_min = obstacle_extent(p, c) + b.reach + rj + h;
    let rho_max = active_extent(p, c) - b.reach - rj - h;
    if rho_min > rho_max {
        r.skip("sweeping.violations", "no annulus between the obstacle and the clamp band fits the barrier");
        return Ok(());
    }
    r.meta("sweeping.rho_range", format!("{rho_min},{rho_max}"));
    let mut violations = 0usize;
    let mut started = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let rho = rng.gen_range(rho_min..=rho_max);
        let tau0 = rng.gen_range(0.0..2.0 * PI);
        let at = |tau: f64| [c[0] + rho * tau.cos(), c[1] + rho * tau.sin()];
        if barrier_excess(&b, u, at(tau0)) > ORDER_EPS {
            continue;
        }
        started += 1;
        for j in 1..ROTATIONS {
            let ex = barrier_excess(&b, u, at(tau0 + j as f64 * PI / 8.0));
            worst = worst.max(ex);
            if ex > ORDER_EPS {
                violations += 1;
            }
        }
    }
    r.meta("sweeping.started", started);
    if started == 0 {
        r.skip("sweeping.violations", "w_tau0 <= u never held at the starting angle");
        return Ok(());
    }
    r.check_le("sweeping.violations", violations as f64, 0.0, 0.0);
    r.info("sweeping.max_excess", worst, "max of w_tau - u over sampled rotations");
    Ok(())
}

/// Stationary field of `p` evolved from the hostile datum (0 inside, 1 on
/// the clamp band), or `None` if the residual did not reach `tol`.
pub fn hostile_solution(p: &Problem, tol: f64, max_steps: usize, path: ConvPath) -> Result<Option<Field>> {
    let u0 = p.field(vec![0.0; p.grid().len()])?;
    let out = evolve(
        p,
        &u0,
        &EvolveOptions {
            dt: max_dt(p),
            max_steps,
            residual_tol: tol,
            path,
            log_every: 0,
        },
    )?;
    Ok(out.converged.then_some(out.field))
}
