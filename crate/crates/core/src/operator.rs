//! The discrete operators `L` on the perforated box and `𝓛_B` on balls.

use crate::conv::{ConvPath, Convolver, PATH_TOL};
use crate::error::{numerical, precondition, Result};
use crate::grid::{Field, Grid};
use crate::kernel::Kernel;
use crate::nonlinearity::ExtendedNonlinearity;
use crate::obstacle::{jmass, Obstacle};

/// Stationary problem `Lu + f(u) = 0` on the box minus `K`, with a far-field clamp band.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kernel: Kernel,
    pub obstacle: Obstacle,
    pub f: ExtendedNonlinearity,
    pub far_field: f64,
    pub clamp_width: f64,
    /// Box cells outside `K`.
    pub domain: Vec<bool>,
    /// Domain cells closer than `clamp_width` to the box boundary.
    pub clamp: Vec<bool>,
    /// Domain cells outside the clamp band, where the equation is imposed.
    pub active: Vec<bool>,
    pub jmass: Field,
    conv: Convolver,
}

impl Problem {
    pub fn new(
        kernel: Kernel,
        obstacle: Obstacle,
        f: ExtendedNonlinearity,
        clamp_width: f64,
    ) -> Result<Problem> {
        let g = &obstacle.grid;
        if kernel.dim() != g.dim() || kernel.spacing() != g.spacing() {
            return precondition("kernel and obstacle grids are inconsistent");
        }
        if clamp_width < kernel.radius() {
            return precondition(format!(
                "clamp band {clamp_width} is narrower than the kernel radius {}",
                kernel.radius()
            ));
        }
        let domain = obstacle.domain_mask();
        let clamp: Vec<bool> = (0..g.len())
            .map(|i| domain[i] && g.distance_to_boundary(i) < clamp_width)
            .collect();
        if let Some(i) = (0..g.len()).find(|&i| clamp[i] && obstacle.mask_k.get(i) == Some(&true)) {
            return precondition(format!("obstacle reaches the clamp band at cell {i}"));
        }
        let active: Vec<bool> = (0..g.len()).map(|i| domain[i] && !clamp[i]).collect();
        if !active.iter().any(|&a| a) {
            return precondition("no cells outside the clamp band");
        }
        let jm = jmass(&kernel, &obstacle)?;
        let conv = Convolver::new(g.dim(), g.counts(), &kernel);
        Ok(Problem {
            kernel,
            obstacle,
            f,
            far_field: 1.0,
            clamp_width,
            domain,
            clamp,
            active,
            jmass: jm,
            conv,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.obstacle.grid
    }

    /// Field on the domain mask with the given values.
    pub fn field(&self, values: Vec<f64>) -> Result<Field> {
        Field::from_parts(self.grid().clone(), values, self.domain.clone())
    }

    /// Sample `u0` on the domain and overwrite the clamp band with the far-field value.
    pub fn clamped(&self, mut u: Field) -> Result<Field> {
        if u.mask != self.domain || !u.grid.same_lattice(self.grid()) {
            return precondition("field is not defined on the problem domain");
        }
        for i in 0..u.values.len() {
            if self.clamp[i] {
                u.values[i] = self.far_field;
            }
        }
        Ok(u)
    }

    /// Smallest `𝒥` over active cells.
    pub fn min_jmass(&self) -> f64 {
        self.active_fold(&self.jmass.values, f64::INFINITY, f64::min)
    }

    pub fn max_jmass(&self) -> f64 {
        self.active_fold(&self.jmass.values, f64::NEG_INFINITY, f64::max)
    }

    fn active_fold(&self, v: &[f64], init: f64, op: fn(f64, f64) -> f64) -> f64 {
        v.iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .fold(init, |acc, (&x, _)| op(acc, x))
    }

    fn check_field(&self, u: &Field) -> Result<()> {
        if !u.grid.same_lattice(self.grid()) || u.mask != self.domain {
            return precondition("field is not defined on the problem domain");
        }
        Ok(())
    }

    /// Raw `Lu` values on active cells (zero elsewhere).
    pub fn apply_l_values(&self, u: &[f64], path: ConvPath) -> Result<Vec<f64>> {
        let n = u.len();
        let mut out = vec![0.0; n];
        match path {
            ConvPath::Direct => self.conv.direct_masked_difference(u, &self.domain, &mut out),
            ConvPath::Fast => self.fast_l(u, &mut out),
            ConvPath::Both => {
                self.conv.direct_masked_difference(u, &self.domain, &mut out);
                let mut other = vec![0.0; n];
                self.fast_l(u, &mut other);
                let diff = (0..n)
                    .filter(|&i| self.active[i])
                    .fold(0.0f64, |a, i| a.max((out[i] - other[i]).abs()));
                if diff > PATH_TOL {
                    return numerical(format!(
                        "direct and fast operator paths differ by {diff:e} > {PATH_TOL:e}"
                    ));
                }
            }
        }
        for (o, &a) in out.iter_mut().zip(&self.active) {
            if !a {
                *o = 0.0;
            }
        }
        Ok(out)
    }

    fn fast_l(&self, u: &[f64], out: &mut [f64]) {
        let masked: Vec<f64> = u
            .iter()
            .zip(&self.domain)
            .map(|(&v, &m)| if m { v } else { 0.0 })
            .collect();
        self.conv.fast(&masked, out);
        for i in 0..u.len() {
            out[i] -= self.jmass.values[i] * masked[i];
        }
    }

    /// `Lu(x) = Σ_{y in domain} J(x-y)(u(y)-u(x)) h^dim` on active cells.
    pub fn apply_l(&self, u: &Field, path: ConvPath) -> Result<Field> {
        self.check_field(u)?;
        let out = self.apply_l_values(&u.values, path)?;
        Field::from_parts(self.grid().clone(), out, self.active.clone())
    }

    /// `Lu + f(u)` on active cells, with its sup-norm.
    pub fn residual(&self, u: &Field, path: ConvPath) -> Result<(Field, f64)> {
        self.check_field(u)?;
        let mut r = self.apply_l_values(&u.values, path)?;
        let mut sup = 0.0f64;
        for i in 0..r.len() {
            if self.active[i] {
                r[i] += self.f.eval(u.values[i]);
                sup = sup.max(r[i].abs());
            }
        }
        Ok((Field::from_parts(self.grid().clone(), r, self.active.clone())?, sup))
    }
}

/// Closed ball `B_R(x0)` on a local lattice centered at `x0`.
///
/// The local grid has `2·half + 1` cells per axis with `x0` at the central
/// cell. Ball membership is decided on integer offsets, so two balls with the
/// same radius and cell counts have identical masks regardless of center.
#[derive(Debug, Clone)]
pub struct BallDomain {
    pub grid: Grid,
    pub center: [f64; 2],
    pub radius: f64,
    pub half: usize,
    pub mask: Vec<bool>,
    conv: Convolver,
}

/// Whether the integer offset `(a, b)` lies in the closed ball of radius `r` cells.
pub fn in_ball_cells(a: isize, b: isize, r_cells: f64) -> bool {
    ((a * a + b * b) as f64) <= r_cells * r_cells + 1e-9
}

impl BallDomain {
    /// `pad` extra cells beyond the ball on each side.
    pub fn new(kernel: &Kernel, center: [f64; 2], radius: f64, pad: usize) -> Result<BallDomain> {
        let h = kernel.spacing();
        let dim = kernel.dim();
        if !(radius > 0.0 && radius.is_finite()) {
            return precondition(format!("ball radius must be positive, got {radius}"));
        }
        let r_cells = radius / h;
        let half = (r_cells + 1e-9).floor() as usize + pad;
        let side = 2 * half + 1;
        let lo = [
            center[0] - (half as f64 + 0.5) * h,
            if dim == 2 { center[1] - (half as f64 + 0.5) * h } else { 0.0 },
        ];
        let grid = Grid::from_counts(dim, lo, h, [side, if dim == 2 { side } else { 1 }])?;
        let mask = (0..grid.len())
            .map(|i| {
                let (a, b) = grid.coords(i);
                let a = a as isize - half as isize;
                let b = if dim == 2 { b as isize - half as isize } else { 0 };
                in_ball_cells(a, b, r_cells)
            })
            .collect();
        let conv = Convolver::new(dim, grid.counts(), kernel);
        Ok(BallDomain {
            grid,
            center: if dim == 2 { center } else { [center[0], 0.0] },
            radius,
            half,
            mask,
            conv,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Flat index of the center cell.
    pub fn center_index(&self) -> usize {
        if self.grid.dim() == 2 {
            self.grid.index(self.half, self.half)
        } else {
            self.half
        }
    }

    /// Integer offset of a cell from the center.
    pub fn offset(&self, flat: usize) -> (isize, isize) {
        let (a, b) = self.grid.coords(flat);
        let a = a as isize - self.half as isize;
        let b = if self.grid.dim() == 2 { b as isize - self.half as isize } else { 0 };
        (a, b)
    }

    /// Flat index for an integer offset, if it lies on the local grid.
    pub fn index_of(&self, a: isize, b: isize) -> Option<usize> {
        let hf = self.half as isize;
        if a.abs() > hf || b.abs() > hf || (self.grid.dim() == 1 && b != 0) {
            return None;
        }
        Some(if self.grid.dim() == 2 {
            self.grid.index((a + hf) as usize, (b + hf) as usize)
        } else {
            (a + hf) as usize
        })
    }

    /// `𝓛_B[v](x) = Σ_{y in B} J(x-y) v(y) h^dim` at every local cell.
    pub fn apply(&self, v: &[f64], path: ConvPath) -> Result<Vec<f64>> {
        let masked: Vec<f64> = v
            .iter()
            .zip(&self.mask)
            .map(|(&x, &m)| if m { x } else { 0.0 })
            .collect();
        let mut out = vec![0.0; v.len()];
        self.conv.apply(path, &masked, &mut out)?;
        Ok(out)
    }

    /// Field on the ball mask.
    pub fn field(&self, values: Vec<f64>) -> Result<Field> {
        Field::from_parts(self.grid.clone(), values, self.mask.clone())
    }
}

/// `𝓛_{B_R(x0)}[v]` on the closed ball's cells of `v`'s grid.
pub fn apply_l_ball(
    k: &Kernel,
    center: [f64; 2],
    radius: f64,
    v: &Field,
    path: ConvPath,
) -> Result<Field> {
    let g = &v.grid;
    if k.dim() != g.dim() || k.spacing() != g.spacing() {
        return precondition("kernel does not match the field grid");
    }
    let ball: Vec<bool> = (0..g.len())
        .map(|i| {
            let x = g.center(i);
            let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
            d2 <= radius * radius * (1.0 + 1e-12)
        })
        .collect();
    if !ball.iter().any(|&b| b) {
        return precondition("ball contains no cells of the grid");
    }
    let masked: Vec<f64> = (0..g.len())
        .map(|i| if ball[i] && v.mask[i] { v.values[i] } else { 0.0 })
        .collect();
    let mut out = vec![0.0; g.len()];
    Convolver::new(g.dim(), g.counts(), k).apply(path, &masked, &mut out)?;
    Field::from_parts(g.clone(), out, ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_kernel, Profile};
    use crate::nonlinearity::{extend, make_bistable, ExtensionMode};
    use crate::obstacle::{build_obstacle, Shape};

    fn problem(shape: Shape) -> Problem {
        let g = Grid::new(2, &[-3.0, -3.0], &[3.0, 3.0], 0.125).unwrap();
        let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
        let o = build_obstacle(shape, &g, 1.5).unwrap();
        let f = extend(&make_bistable(0.3, 1.0).unwrap(), ExtensionMode::ZeroLeft);
        Problem::new(k, o, f, 0.5).unwrap()
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let p = problem(Shape::Ball {
            center: [0.0, 0.0],
            radius: 1.0,
        });
        let u = p.field(vec![1.0; p.grid().len()]).unwrap();
        let lu = p.apply_l(&u, ConvPath::Direct).unwrap();
        assert!(lu.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn narrow_clamp_rejected() {
        let g = Grid::new(2, &[-3.0, -3.0], &[3.0, 3.0], 0.125).unwrap();
        let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
        let o = build_obstacle(Shape::None, &g, 1.5).unwrap();
        let f = extend(&make_bistable(0.3, 1.0).unwrap(), ExtensionMode::ZeroLeft);
        assert!(Problem::new(k, o, f, 0.25).is_err());
    }

    #[test]
    fn ball_mask_is_symmetric() {
        let g = Grid::new(2, &[-1.0, -1.0], &[1.0, 1.0], 0.125).unwrap();
        let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
        let b = BallDomain::new(&k, [0.3, -0.2], 1.0, 2).unwrap();
        for i in 0..b.len() {
            let (a, c) = b.offset(i);
            assert_eq!(b.mask[i], b.mask[b.index_of(-a, c).unwrap()]);
            assert_eq!(b.mask[i], b.mask[b.index_of(c, a).unwrap()]);
        }
        assert!(b.mask[b.center_index()]);
    }
}
