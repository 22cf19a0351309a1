use crate::conv::ConvPath;
use crate::error::{numerical, precondition, Result};
use crate::grid::Field;
use crate::kernel::{Kernel, KernelConstants};
use crate::nonlinearity::ExtendedNonlinearity;
use crate::operator::BallDomain;

use super::MaximalSolution;

/// Compactly supported sub-solution built from a maximal solution by a cone of slope `1/δ`.
#[derive(Debug, Clone)]
pub struct SubSolution {
    /// Ball `B_{R+δ}` on a local grid padded by the kernel reach.
    pub domain: BallDomain,
    /// `w` on every cell of the local grid.
    pub w: Field,
    pub delta: f64,
    pub base_radius: f64,
    /// `min_x (𝓛_{B_{R+δ}}[w] - w + f(w))` over the local grid.
    pub verification_min: f64,
    /// Accepted slack `2 h ∫|∇J|`.
    pub tol: f64,
    /// Cells outside the base ball where `w > 0`.
    pub shell_cells: usize,
}

impl SubSolution {
    /// Bilinear interpolation of `w` at a point; zero off the local grid.
    pub fn eval_at(&self, x: [f64; 2]) -> f64 {
        interpolate(&self.w, x)
    }

    pub fn passes(&self) -> bool {
        self.verification_min >= -self.tol
    }
}

/// Bilinear (linear in 1-D) interpolation of cell-centered values, zero outside the grid.
pub fn interpolate(u: &Field, x: [f64; 2]) -> f64 {
    let g = &u.grid;
    let h = g.spacing();
    let lo = g.lo();
    let [n0, n1] = g.counts();
    let s0 = (x[0] - lo[0]) / h - 0.5;
    let value = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n0 as isize || j >= n1 as isize {
            0.0
        } else {
            let k = g.index(i as usize, j as usize);
            if u.mask[k] {
                u.values[k]
            } else {
                0.0
            }
        }
    };
    let i0 = s0.floor();
    let t0 = s0 - i0;
    let i0 = i0 as isize;
    if g.dim() == 1 {
        return (1.0 - t0) * value(i0, 0) + t0 * value(i0 + 1, 0);
    }
    let s1 = (x[1] - lo[1]) / h - 0.5;
    let j0 = s1.floor();
    let t1 = s1 - j0;
    let j0 = j0 as isize;
    (1.0 - t0) * ((1.0 - t1) * value(i0, j0) + t1 * value(i0, j0 + 1))
        + t0 * ((1.0 - t1) * value(i0 + 1, j0) + t1 * value(i0 + 1, j0 + 1))
}

/// `w(x) = max{v(P x) - |x - P x| / δ, 0}` with `P` the nearest lattice cell of the ball.
///
/// The projection lands on a cell where the discrete ball equation holds, so
/// `v(P x)` is a computed value rather than an interpolant.
pub fn build_subsolution(
    v: &MaximalSolution,
    k: &Kernel,
    f: &ExtendedNonlinearity,
    delta: f64,
    consts: &KernelConstants,
    path: ConvPath,
) -> Result<SubSolution> {
    let (Some(w11), Some(delta0)) = (consts.w11, consts.delta0) else {
        return precondition("kernel profile is not W^{1,1}; delta0 unavailable");
    };
    if !(delta > 0.0 && delta <= delta0) {
        return precondition(format!("delta = {delta} must lie in (0, delta0 = {delta0}]"));
    }
    let base = &v.ball;
    let h = k.spacing();
    let radius = base.radius;
    let domain = BallDomain::new(k, base.center, radius + delta, k.half_width() + 2)?;
    let boundary: Vec<(isize, isize, f64)> = (0..base.len())
        .filter(|&i| base.mask[i])
        .filter_map(|i| {
            let (a, b) = base.offset(i);
            let nbrs = if base.grid.dim() == 2 {
                vec![(a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)]
            } else {
                vec![(a + 1, b), (a - 1, b)]
            };
            let edge = nbrs
                .iter()
                .any(|&(p, q)| base.index_of(p, q).map_or(true, |j| !base.mask[j]));
            edge.then(|| (a, b, v.v.values[i]))
        })
        .collect();
    let reach = (radius + delta) / h + 1.0;
    let mut w = vec![0.0; domain.len()];
    let mut shell_cells = 0;
    for (i, wi) in w.iter_mut().enumerate() {
        let (a, b) = domain.offset(i);
        if let Some(j) = base.index_of(a, b).filter(|&j| base.mask[j]) {
            *wi = v.v.values[j];
            continue;
        }
        if (((a * a + b * b) as f64).sqrt()) > reach {
            continue;
        }
        let mut best = (i64::MAX, 0.0);
        for &(p, q, val) in &boundary {
            let d2 = ((a - p) * (a - p) + (b - q) * (b - q)) as i64;
            if d2 < best.0 {
                best = (d2, val);
            }
        }
        let tau = h * (best.0 as f64).sqrt();
        let value = (best.1 - tau / delta).max(0.0);
        if value > 0.0 {
            shell_cells += 1;
        }
        *wi = value;
    }
    if w.iter().any(|&x| !(0.0..=1.0 + super::ball::UPPER_SLACK).contains(&x)) {
        return numerical("sub-solution left [0,1]");
    }
    // Support check: w vanishes outside B_{R+δ}.
    for i in 0..domain.len() {
        if !domain.mask[i] && w[i] != 0.0 {
            return numerical("sub-solution support exceeds B_{R+delta}");
        }
    }
    let lw = domain.apply(&w, path)?;
    let verification_min = (0..domain.len())
        .map(|i| lw[i] - w[i] + f.eval(w[i]))
        .fold(f64::INFINITY, f64::min);
    let field = Field::from_parts(domain.grid.clone(), w, vec![true; domain.len()])?;
    Ok(SubSolution {
        domain,
        w: field,
        delta,
        base_radius: radius,
        verification_min,
        tol: 2.0 * h * w11,
        shell_cells,
    })
}
