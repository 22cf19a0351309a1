use crate::conv::ConvPath;
use crate::error::{precondition, Result};
use crate::grid::{holder_quotient, Field};
use crate::kernel::KernelConstants;
use crate::nonlinearity::stiffness;
use crate::operator::Problem;
use crate::solver::FrontProfile;

use super::Report;

const ORDER_TOL: f64 = 1e-10;
/// Convex obstacles: `𝒥 >= 1/2` up to this lattice slack.
pub const JMASS_SLACK: f64 = 0.05;
const PROBE_DELTAS: [f64; 3] = [0.5, 0.1, 0.01];

/// Smallest `r0` on the `h`-lattice of `[0, R_box]` with `φ(|x - c| - r0) <= u(x) + 1e-10`
/// on every domain cell, or `None` when even `R_box` fails.
pub fn radial_lower_bound(u: &Field, phi: &FrontProfile, center: [f64; 2]) -> Option<f64> {
    let g = &u.grid;
    let h = g.spacing();
    let cells: Vec<(f64, f64)> = (0..g.len())
        .filter(|&i| u.mask[i])
        .map(|i| {
            let x = g.center(i);
            let d = [x[0] - center[0], x[1] - center[1]];
            ((d[0] * d[0] + d[1] * d[1]).sqrt(), u.values[i])
        })
        .collect();
    let rbox = cells.iter().fold(0.0f64, |a, &(r, _)| a.max(r));
    let fits = |r0: f64| cells.iter().all(|&(r, v)| phi.eval(r - r0) <= v + ORDER_TOL);
    let top = (rbox / h).ceil() as usize;
    if !fits(top as f64 * h) {
        return None;
    }
    if fits(0.0) {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (0usize, top);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if fits(mid as f64 * h) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi as f64 * h)
}

fn center_of(p: &Problem) -> [f64; 2] {
    use crate::obstacle::Shape;
    fn c(s: &Shape) -> [f64; 2] {
        match s {
            Shape::None | Shape::Polygon { .. } => [0.0, 0.0],
            Shape::Ball { center, .. }
            | Shape::Ellipse { center, .. }
            | Shape::Annulus { center, .. }
            | Shape::Star { center, .. } => *center,
            Shape::Deformed { base, .. } | Shape::Thickened { base, .. } => c(base),
        }
    }
    c(&p.obstacle.shape)
}

/// Post-hoc checks on a stationary field: Hölder bound, radial and uniform
/// lower bounds from the front, and the mass-map bound.
pub fn bounds_suite(
    u: &Field,
    p: &Problem,
    phi: &FrontProfile,
    consts: &KernelConstants,
    alphas: &[f64],
    max_pairs: u64,
    path: ConvPath,
) -> Result<Report> {
    if u.mask != p.domain {
        return precondition("field is not defined on the problem domain");
    }
    let mut r = Report::new("bounds", vec![]);
    let st = stiffness(&p.f.base)?;
    let (_, residual) = p.residual(u, path)?;
    let h = p.grid().spacing();
    let min_j = p.min_jmass();
    let coef = min_j - st.maxfp;
    r.meta("min_jmass", min_j);
    r.meta("maxfp", st.maxfp);
    r.meta("residual_sup", residual);
    let active = Field::from_parts(u.grid.clone(), u.values.clone(), p.active.clone())?;

    for &alpha in alphas {
        let name = format!("holder.alpha_{alpha}");
        let Some(nik) = consts.nikolskii_at(alpha) else {
            r.skip(&name, "Nikol'skii seminorm not computed for this exponent");
            continue;
        };
        let q = holder_quotient(&active, alpha, max_pairs)?;
        let lhs = coef * q.value;
        let slack = 2.0 * residual / h.powf(alpha);
        if p.obstacle.convex && coef > 0.0 {
            r.check_le(&name, lhs, 2.0 * nik, slack);
        } else {
            r.info(&name, lhs, "non-convex obstacle or inf J <= max f': measured only");
        }
        if !q.exact {
            r.meta(&format!("{name}.pairs"), q.pairs);
        }
    }

    let center = center_of(p);
    match radial_lower_bound(u, phi, center) {
        Some(r0) => {
            r.check_true("radial.exists", true, "");
            r.info("radial.r0", r0, "");
            for delta in PROBE_DELTAS {
                let name = format!("uniform.delta_{delta}");
                let Some(k) = phi.phi.iter().position(|&v| v >= 1.0 - delta) else {
                    r.skip(&name, "front never reaches 1 - delta");
                    continue;
                };
                let s = (k as f64 - phi.pin as f64) * phi.grid.spacing();
                let rd = r0 + s;
                let g = &u.grid;
                let far = (0..g.len())
                    .filter(|&i| u.mask[i])
                    .filter(|&i| {
                        let x = g.center(i);
                        let d = [x[0] - center[0], x[1] - center[1]];
                        (d[0] * d[0] + d[1] * d[1]).sqrt() >= rd
                    })
                    .map(|i| u.values[i])
                    .fold(f64::INFINITY, f64::min);
                if far.is_finite() {
                    r.check_ge(&name, far, 1.0 - delta, ORDER_TOL);
                } else {
                    r.info(&name, rd, "vacuous: no cell beyond R_delta");
                }
            }
        }
        None => {
            r.check_true("radial.exists", false, "no r0 up to the box radius");
        }
    }

    if p.obstacle.convex {
        r.check_ge("jmass.min", min_j, 0.5, JMASS_SLACK);
    } else {
        r.info("jmass.min", min_j, "non-convex obstacle");
    }
    Ok(r)
}
