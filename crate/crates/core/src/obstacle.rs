//! Obstacle geometry on the lattice and the mass map `𝒥`.

use std::f64::consts::PI;

use crate::conv::Convolver;
use crate::error::{precondition, Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::Kernel;

/// Nonnegative angular perturbation profile for deformed obstacles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    /// `max(0, 1 + cos(lobes · φ))`.
    Cosine { lobes: u32 },
    /// `|sin(lobes · φ / 2)|^alpha`, Hölder of order `alpha` at its zeros.
    Cusp { lobes: u32, alpha: f64 },
}

impl Psi {
    pub fn eval(&self, phi: f64) -> f64 {
        match *self {
            Psi::Cosine { lobes } => (1.0 + (lobes as f64 * phi).cos()).max(0.0),
            Psi::Cusp { lobes, alpha } => (lobes as f64 * phi / 2.0).sin().abs().powf(alpha),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Psi::Cosine { .. } => 2.0,
            Psi::Cusp { .. } => 1.0,
        }
    }

    /// Parses `cosine:<lobes>` or `cusp:<lobes>:<alpha>`.
    pub fn parse(s: &str) -> Result<Psi> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::Precondition(format!("cannot parse perturbation profile `{s}`"));
        match parts.as_slice() {
            ["cosine", l] => Ok(Psi::Cosine {
                lobes: l.parse().map_err(|_| bad())?,
            }),
            ["cusp", l, a] => Ok(Psi::Cusp {
                lobes: l.parse().map_err(|_| bad())?,
                alpha: a.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Psi::Cosine { lobes } => format!("cosine:{lobes}"),
            Psi::Cusp { lobes, alpha } => format!("cusp:{lobes}:{alpha}"),
        }
    }
}

/// Closed-form obstacle shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    None,
    Ball {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        angle: f64,
    },
    /// Vertices in order (either orientation).
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Closed annulus `inner <= |x - c| <= outer`.
    Annulus {
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    /// `r <= radius (1 + amplitude cos(lobes φ))`.
    Star {
        center: [f64; 2],
        radius: f64,
        amplitude: f64,
        lobes: u32,
    },
    /// `r <= ρ(φ) + epsilon ψ(φ)` around a disk or ellipse.
    Deformed {
        base: Box<Shape>,
        epsilon: f64,
        psi: Psi,
    },
    /// Cell-center dilation of another shape by `delta`.
    Thickened {
        base: Box<Shape>,
        delta: f64,
    },
}

fn polar(x: [f64; 2], c: [f64; 2]) -> (f64, f64) {
    let d = [x[0] - c[0], x[1] - c[1]];
    ((d[0] * d[0] + d[1] * d[1]).sqrt(), d[1].atan2(d[0]))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn polygon_is_convex(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0f64;
    for i in 0..n {
        let c = cross(v[i], v[(i + 1) % n], v[(i + 2) % n]);
        if c != 0.0 {
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
    }
    sign != 0.0
}

fn point_in_polygon(v: &[[f64; 2]], x: [f64; 2]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let t = (x[1] - a[1]) / (b[1] - a[1]);
            if x[0] < a[0] + t * (b[0] - a[0]) {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl Shape {
    pub fn family(&self) -> &'static str {
        match self {
            Shape::None => "none",
            Shape::Ball { .. } => "ball",
            Shape::Ellipse { .. } => "ellipse",
            Shape::Polygon { .. } => "polygon",
            Shape::Annulus { .. } => "annulus",
            Shape::Star { .. } => "star",
            Shape::Deformed { .. } => "deformed",
            Shape::Thickened { .. } => "thickened",
        }
    }

    /// Convexity of the continuum shape as declared by its family.
    pub fn family_convex(&self) -> bool {
        match self {
            Shape::None | Shape::Ball { .. } | Shape::Ellipse { .. } => true,
            Shape::Polygon { vertices } => polygon_is_convex(vertices),
            Shape::Annulus { .. } | Shape::Star { .. } | Shape::Deformed { .. } => false,
            Shape::Thickened { base, .. } => base.family_convex(),
        }
    }

    /// Radial boundary function of a disk or ellipse, in polar angle about its center.
    fn radial(&self, phi: f64) -> Option<([f64; 2], f64)> {
        match *self {
            Shape::Ball { center, radius } => Some((center, radius)),
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let (c, s) = ((phi - angle).cos(), (phi - angle).sin());
                let r = 1.0 / ((c / semi_axes[0]).powi(2) + (s / semi_axes[1]).powi(2)).sqrt();
                Some((center, r))
            }
            _ => None,
        }
    }

    /// Closed-form indicator at a point.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match self {
            Shape::None => false,
            Shape::Ball { center, radius } => polar(x, *center).0 <= *radius,
            Shape::Ellipse { center, .. } => {
                let (r, phi) = polar(x, *center);
                r <= self.radial(phi).expect("ellipse").1
            }
            Shape::Polygon { vertices } => point_in_polygon(vertices, x),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = polar(x, *center).0;
                r >= *inner && r <= *outer
            }
            Shape::Star {
                center,
                radius,
                amplitude,
                lobes,
            } => {
                let (r, phi) = polar(x, *center);
                r <= radius * (1.0 + amplitude * (*lobes as f64 * phi).cos())
            }
            Shape::Deformed { base, epsilon, psi } => {
                let (c, _) = base.radial(0.0).expect("validated base");
                let (r, phi) = polar(x, c);
                let rho = base.radial(phi).expect("validated base").1;
                r <= rho + epsilon * psi.eval(phi)
            }
            // Dilations are built on the lattice, not pointwise.
            Shape::Thickened { base, .. } => base.contains(x),
        }
    }

    /// Human-readable parameter listing.
    pub fn describe(&self) -> String {
        match self {
            Shape::None => "none".into(),
            Shape::Ball { center, radius } => format!("ball c={center:?} r={radius}"),
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => format!("ellipse c={center:?} axes={semi_axes:?} angle={angle}"),
            Shape::Polygon { vertices } => format!("polygon {vertices:?}"),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => format!("annulus c={center:?} [{inner},{outer}]"),
            Shape::Star {
                center,
                radius,
                amplitude,
                lobes,
            } => format!("star c={center:?} r={radius} amp={amplitude} lobes={lobes}"),
            Shape::Deformed { base, epsilon, psi } => {
                format!("deformed({}) eps={epsilon} psi={}", base.describe(), psi.describe())
            }
            Shape::Thickened { base, delta } => format!("thickened({}) delta={delta}", base.describe()),
        }
    }
}

/// Obstacle mask on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub grid: Grid,
    /// True where the cell center lies in `K`.
    pub mask_k: Vec<bool>,
    pub shape: Shape,
    pub convex: bool,
    pub margin: f64,
}

pub fn build_obstacle(shape: Shape, grid: &Grid, margin: f64) -> Result<Obstacle> {
    if let Shape::Deformed { base, epsilon, psi } = &shape {
        validate_deformation(base, *epsilon, psi)?;
    }
    if let Shape::Thickened { base, delta } = shape {
        let k = build_obstacle(*base, grid, margin)?;
        return thicken(&k, delta);
    }
    if grid.dim() == 1 && !matches!(shape, Shape::None | Shape::Ball { .. }) {
        return precondition(format!(
            "obstacle family `{}` needs a two-dimensional grid",
            shape.family()
        ));
    }
    let mask_k: Vec<bool> = (0..grid.len()).map(|i| shape.contains(grid.center(i))).collect();
    let convex = shape.family_convex();
    let k = Obstacle {
        grid: grid.clone(),
        mask_k,
        shape,
        convex,
        margin,
    };
    k.check_margin()?;
    if k.convex && !k.hull_fixed_point() {
        return precondition("convex obstacle mask differs from its discrete convex hull");
    }
    Ok(k)
}

fn validate_deformation(base: &Shape, epsilon: f64, psi: &Psi) -> Result<()> {
    if !matches!(base, Shape::Ball { .. } | Shape::Ellipse { .. }) {
        return precondition("deformations need a disk or ellipse base");
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return precondition(format!("deformation parameter must lie in [0,1], got {epsilon}"));
    }
    for i in 0..3600 {
        let phi = -PI + 2.0 * PI * i as f64 / 3600.0;
        if psi.eval(phi) < 0.0 {
            return precondition(format!("perturbation profile is negative at φ = {phi}"));
        }
    }
    Ok(())
}

impl Obstacle {
    /// Cells of the computational domain: box cells outside `K`.
    pub fn domain_mask(&self) -> Vec<bool> {
        self.mask_k.iter().map(|&k| !k).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.mask_k.iter().filter(|&&k| k).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count() == 0
    }

    fn check_margin(&self) -> Result<()> {
        for i in 0..self.grid.len() {
            if self.mask_k[i] && self.grid.distance_to_boundary(i) < self.margin {
                return precondition(format!(
                    "obstacle cell at {:?} lies within the margin {} of the box boundary",
                    self.grid.center(i),
                    self.margin
                ));
            }
        }
        Ok(())
    }

    /// Whether every cell inside the convex hull of the `K` cells is a `K` cell.
    pub fn hull_fixed_point(&self) -> bool {
        let g = &self.grid;
        let pts: Vec<[f64; 2]> = (0..g.len())
            .filter(|&i| self.mask_k[i])
            .map(|i| g.center(i))
            .collect();
        if pts.len() <= 1 {
            return true;
        }
        if g.dim() == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            return (0..g.len()).all(|i| {
                let x = g.center(i)[0];
                self.mask_k[i] || x < lo || x > hi
            });
        }
        let hull = convex_hull(&pts);
        const EPS: f64 = 1e-9;
        (0..g.len()).all(|i| {
            if self.mask_k[i] {
                return true;
            }
            let x = g.center(i);
            if hull.len() < 3 {
                // Degenerate hull: a segment.
                let (a, b) = (hull[0], hull[hull.len() - 1]);
                let on_line = cross(a, b, x).abs() <= EPS;
                let t = ((x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1]))
                    / ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2));
                return !(on_line && (-EPS..=1.0 + EPS).contains(&t));
            }
            let inside = (0..hull.len()).all(|k| cross(hull[k], hull[(k + 1) % hull.len()], x) >= -EPS);
            !inside
        })
    }

    /// Distance from `center` to the nearest domain cell, and to the farthest `K` cell.
    pub fn radial_extent(&self, center: [f64; 2]) -> (f64, f64) {
        let mut outer = 0.0f64;
        let mut inner = f64::INFINITY;
        for i in 0..self.grid.len() {
            let r = polar(self.grid.center(i), center).0;
            if self.mask_k[i] {
                outer = outer.max(r);
            } else {
                inner = inner.min(r);
            }
        }
        (inner, outer)
    }
}

/// Andrew's monotone chain, counter-clockwise, without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// `K_δ`: cells whose center lies within `delta` of some `K` cell center.
pub fn thicken(k: &Obstacle, delta: f64) -> Result<Obstacle> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return precondition(format!("thickening radius must be nonnegative, got {delta}"));
    }
    let g = &k.grid;
    let h = g.spacing();
    let reach = (delta / h).floor() as isize;
    let [n0, n1] = g.counts();
    let r1 = if g.dim() == 2 { reach } else { 0 };
    let lim = (delta / h) * (delta / h) + 1e-9;
    let offsets: Vec<(isize, isize)> = (-reach..=reach)
        .flat_map(|a| (-r1..=r1).map(move |b| (a, b)))
        .filter(|&(a, b)| ((a * a + b * b) as f64) <= lim)
        .collect();
    let mut mask = k.mask_k.clone();
    for i in 0..g.len() {
        if !k.mask_k[i] {
            continue;
        }
        let (a, b) = g.coords(i);
        for &(da, db) in &offsets {
            let (x, y) = (a as isize + da, b as isize + db);
            if x >= 0 && y >= 0 && (x as usize) < n0 && (y as usize) < n1 {
                mask[g.index(x as usize, y as usize)] = true;
            }
        }
    }
    let mut out = Obstacle {
        grid: g.clone(),
        mask_k: mask,
        shape: Shape::Thickened {
            base: Box::new(k.shape.clone()),
            delta,
        },
        convex: false,
        margin: k.margin,
    };
    out.check_margin()?;
    out.convex = k.convex && out.hull_fixed_point();
    Ok(out)
}

/// `K_ε = {r <= ρ(φ) + ε ψ(φ)}` for a disk or ellipse `K`.
pub fn deformation_family(k: &Obstacle, epsilon: f64, psi: Psi) -> Result<Obstacle> {
    if !k.convex {
        return precondition("deformation family needs a convex base obstacle");
    }
    validate_deformation(&k.shape, epsilon, &psi)?;
    if epsilon == 0.0 {
        return Ok(k.clone());
    }
    build_obstacle(
        Shape::Deformed {
            base: Box::new(k.shape.clone()),
            epsilon,
            psi,
        },
        &k.grid,
        k.margin,
    )
}

/// `𝒥(x) = Σ_{y in domain} J(x-y) h^dim` on domain cells.
pub fn jmass(k: &Kernel, obstacle: &Obstacle) -> Result<Field> {
    let g = &obstacle.grid;
    if k.spacing() != g.spacing() || k.dim() != g.dim() {
        return precondition("kernel spacing or dimension does not match the grid");
    }
    let mask = obstacle.domain_mask();
    let input: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let mut out = vec![0.0; g.len()];
    Convolver::new(g.dim(), g.counts(), k).direct(&input, &mut out);
    Field::from_parts(g.clone(), out, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2, &[-4.0, -4.0], &[4.0, 4.0], 0.125).unwrap()
    }

    #[test]
    fn polygon_convexity() {
        let sq = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        assert!(polygon_is_convex(&sq));
        let dart = vec![[-1.0, -1.0], [0.0, -0.2], [1.0, -1.0], [0.0, 1.0]];
        assert!(!polygon_is_convex(&dart));
    }

    #[test]
    fn margin_enforced() {
        let r = build_obstacle(
            Shape::Ball {
                center: [0.0, 0.0],
                radius: 3.5,
            },
            &grid(),
            1.5,
        );
        assert!(r.is_err());
    }

    #[test]
    fn annulus_is_not_convex_and_fails_hull_test() {
        let k = build_obstacle(
            Shape::Annulus {
                center: [0.0, 0.0],
                inner: 1.0,
                outer: 2.0,
            },
            &grid(),
            1.5,
        )
        .unwrap();
        assert!(!k.convex);
        assert!(!k.hull_fixed_point());
    }

    #[test]
    fn hull_of_square() {
        let h = convex_hull(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn psi_parse() {
        assert_eq!(Psi::parse("cosine:6").unwrap(), Psi::Cosine { lobes: 6 });
        assert!(Psi::parse("wave").is_err());
    }
}
