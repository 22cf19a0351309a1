//! Discrete radial dispersal kernels and the constants derived from them.

use std::io::Write;

use crate::error::{precondition, Result};
use crate::grid::{fmt17, pairwise_sum, Grid};
use crate::nonlinearity::{stiffness, Bistable};

/// Closed-form radial profile, up to normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// Constant on the open ball `|x| < radius`.
    TopHat { radius: f64 },
    /// `(1 - r²/R²)²` on `|x| < R`.
    Quartic { radius: f64 },
    /// Constant on the open annulus `inner < |x| < outer`.
    Ring { inner: f64, outer: f64 },
}

impl Profile {
    pub fn parse(name: &str, radius: f64, inner: f64) -> Result<Profile> {
        match name {
            "tophat" => Ok(Profile::TopHat { radius }),
            "quartic" => Ok(Profile::Quartic { radius }),
            "ring" => Ok(Profile::Ring {
                inner,
                outer: radius,
            }),
            other => precondition(format!("unknown kernel profile `{other}`")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::TopHat { .. } => "tophat",
            Profile::Quartic { .. } => "quartic",
            Profile::Ring { .. } => "ring",
        }
    }

    /// Support radius `R_J`.
    pub fn radius(&self) -> f64 {
        match *self {
            Profile::TopHat { radius } | Profile::Quartic { radius } => radius,
            Profile::Ring { outer, .. } => outer,
        }
    }

    /// Radii `r1 < r2` with the profile positive on `r1 < |x| < r2`.
    pub fn positivity_radii(&self) -> (f64, f64) {
        match *self {
            Profile::TopHat { radius } | Profile::Quartic { radius } => (0.0, radius),
            Profile::Ring { inner, outer } => (inner, outer),
        }
    }

    /// Unnormalized profile value at distance `r`.
    pub fn shape(&self, r: f64) -> f64 {
        match *self {
            Profile::TopHat { radius } => {
                if r < radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Quartic { radius } => {
                if r < radius {
                    let t = 1.0 - (r / radius).powi(2);
                    t * t
                } else {
                    0.0
                }
            }
            Profile::Ring { inner, outer } => {
                if r > inner && r < outer {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Constant `A` such that `A · shape` has unit mass in the continuum.
    pub fn continuum_normalizer(&self, dim: usize) -> f64 {
        use std::f64::consts::PI;
        match (*self, dim) {
            (Profile::TopHat { radius }, 1) => 1.0 / (2.0 * radius),
            (Profile::TopHat { radius }, _) => 1.0 / (PI * radius * radius),
            (Profile::Quartic { radius }, 1) => 15.0 / (16.0 * radius),
            (Profile::Quartic { radius }, _) => 3.0 / (PI * radius * radius),
            (Profile::Ring { inner, outer }, 1) => 1.0 / (2.0 * (outer - inner)),
            (Profile::Ring { inner, outer }, _) => 1.0 / (PI * (outer * outer - inner * inner)),
        }
    }
}

/// What a discrete kernel was sampled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSource {
    Profile(Profile),
    /// One-dimensional marginal of a two-dimensional profile.
    Marginal(Profile),
}

/// Discrete unit-mass radial kernel on the lattice `hℤ^dim`.
///
/// `weights` holds densities on the offset box `[-m, m]^dim`, row-major, so
/// that `Σ weights · h^dim = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    dim: usize,
    h: f64,
    radius: f64,
    half_width: usize,
    weights: Vec<f64>,
    source: KernelSource,
    r1: f64,
    r2: f64,
}

/// One-dimensional kernel; same representation.
pub type Kernel1D = Kernel;

/// Nonzero kernel entry as a cell offset and mass `J(o) h^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub di: isize,
    pub dj: isize,
    pub mass: f64,
}

pub fn build_kernel(profile: Profile, grid: &Grid) -> Result<Kernel> {
    let dim = grid.dim();
    let h = grid.spacing();
    let radius = profile.radius();
    let (r1, r2) = profile.positivity_radii();
    if !(radius.is_finite() && radius > 0.0) {
        return precondition(format!("kernel radius must be positive, got {radius}"));
    }
    if radius < 2.0 * h {
        return precondition(format!(
            "kernel support radius {radius} is smaller than two cells (h = {h})"
        ));
    }
    if !(r1 >= 0.0 && r2 > r1) {
        return precondition(format!("ring radii must satisfy 0 <= inner < outer, got {r1}, {r2}"));
    }
    if r2 - r1 < 2.0 * h {
        return precondition(format!(
            "positivity annulus {r1} < r < {r2} is thinner than two cells"
        ));
    }
    let m = (radius / h).floor() as usize;
    let side = 2 * m + 1;
    let rows = if dim == 2 { side } else { 1 };
    let mut raw = vec![0.0; side * rows];
    for a in 0..side {
        for b in 0..rows {
            let da = a as f64 - m as f64;
            let db = if dim == 2 { b as f64 - m as f64 } else { 0.0 };
            let r = h * (da * da + db * db).sqrt();
            let v = profile.shape(r);
            if !(v >= 0.0 && v.is_finite()) {
                return precondition(format!("kernel profile is negative at r = {r}"));
            }
            raw[a * rows + b] = v;
        }
    }
    let total = pairwise_sum(&raw);
    if total <= 0.0 {
        return precondition("kernel support contains no lattice offset");
    }
    let vol = grid.cell_volume();
    let weights = raw.iter().map(|&v| v / total / vol).collect();
    Ok(Kernel {
        dim,
        h,
        radius,
        half_width: m,
        weights,
        source: KernelSource::Profile(profile),
        r1,
        r2,
    })
}

/// Integrates out the transverse direction of a two-dimensional kernel.
///
/// A one-dimensional kernel is returned unchanged.
pub fn marginal_j1(k: &Kernel) -> Kernel1D {
    if k.dim == 1 {
        return k.clone();
    }
    let side = 2 * k.half_width + 1;
    let weights = (0..side)
        .map(|a| pairwise_sum(&k.weights[a * side..(a + 1) * side]) * k.h)
        .collect();
    let profile = match k.source {
        KernelSource::Profile(p) | KernelSource::Marginal(p) => p,
    };
    Kernel {
        dim: 1,
        h: k.h,
        radius: k.radius,
        half_width: k.half_width,
        weights,
        source: KernelSource::Marginal(profile),
        r1: 0.0,
        r2: k.r2,
    }
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Support radius `R_J`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest offset (in cells) along an axis.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn source(&self) -> KernelSource {
        self.source
    }

    pub fn positivity_radii(&self) -> (f64, f64) {
        (self.r1, self.r2)
    }

    fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Density `J` at the cell offset `(di, dj)`; zero outside the table.
    pub fn weight(&self, di: isize, dj: isize) -> f64 {
        let m = self.half_width as isize;
        if di.abs() > m || dj.abs() > m || (self.dim == 1 && dj != 0) {
            return 0.0;
        }
        let a = (di + m) as usize;
        if self.dim == 1 {
            self.weights[a]
        } else {
            self.weights[a * self.side() + (dj + m) as usize]
        }
    }

    /// Raw density table.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Discrete mass `Σ J h^dim`.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.weights) * self.cell_volume()
    }

    /// Nonzero entries in lexicographic offset order.
    pub fn taps(&self) -> Vec<Tap> {
        let m = self.half_width as isize;
        let rows = if self.dim == 2 { m } else { 0 };
        let vol = self.cell_volume();
        let mut out = Vec::new();
        for di in -m..=m {
            for dj in -rows..=rows {
                let w = self.weight(di, dj);
                if w > 0.0 {
                    out.push(Tap {
                        di,
                        dj,
                        mass: w * vol,
                    });
                }
            }
        }
        out
    }

    /// CSV of offsets and densities.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let m = self.half_width as isize;
        if self.dim == 1 {
            writeln!(w, "o0,weight")?;
            for di in -m..=m {
                writeln!(w, "{},{}", fmt17(di as f64 * self.h), fmt17(self.weight(di, 0)))?;
            }
        } else {
            writeln!(w, "o0,o1,weight")?;
            for di in -m..=m {
                for dj in -m..=m {
                    writeln!(
                        w,
                        "{},{},{}",
                        fmt17(di as f64 * self.h),
                        fmt17(dj as f64 * self.h),
                        fmt17(self.weight(di, dj))
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Continuum `∫|∇J|` when the source profile is W^{1,1} with a closed form.
    pub fn continuum_w11(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match (self.source, self.dim) {
            (KernelSource::Profile(Profile::Quartic { radius }), 2) => Some(16.0 / (5.0 * radius)),
            (KernelSource::Profile(Profile::Quartic { radius }), 1) => Some(15.0 / (8.0 * radius)),
            // Even unimodal marginals: ∫|J1'| = 2 J1(0).
            (KernelSource::Marginal(Profile::Quartic { radius }), _) => {
                Some(32.0 / (5.0 * PI * radius))
            }
            (KernelSource::Marginal(Profile::TopHat { radius }), _) => Some(4.0 / (PI * radius)),
            _ => None,
        }
    }

    /// `Σ |central-difference gradient| h^dim` over the offset table.
    pub fn discrete_w11(&self) -> f64 {
        let m = self.half_width as isize + 1;
        let rows = if self.dim == 2 { m } else { 0 };
        let mut terms = Vec::new();
        for di in -m..=m {
            for dj in -rows..=rows {
                let g0 = (self.weight(di + 1, dj) - self.weight(di - 1, dj)) / (2.0 * self.h);
                let g1 = if self.dim == 2 {
                    (self.weight(di, dj + 1) - self.weight(di, dj - 1)) / (2.0 * self.h)
                } else {
                    0.0
                };
                terms.push((g0 * g0 + g1 * g1).sqrt());
            }
        }
        pairwise_sum(&terms) * self.cell_volume()
    }

    /// `‖J(· + s) - J‖_{ℓ¹}` for a lattice shift `s = (s0, s1)` in cells.
    pub fn shift_difference(&self, s0: isize, s1: isize) -> f64 {
        let m = self.half_width as isize;
        let span0 = m + s0.abs();
        let span1 = if self.dim == 2 { m + s1.abs() } else { 0 };
        let mut terms = Vec::new();
        for di in -span0..=span0 {
            for dj in -span1..=span1 {
                let d = self.weight(di + s0, dj + s1) - self.weight(di, dj);
                if d != 0.0 {
                    terms.push(d.abs());
                }
            }
        }
        pairwise_sum(&terms) * self.cell_volume()
    }

    /// Discrete Nikol'skii seminorm `sup_s ‖J(·+s) - J‖₁ / |s|^α`.
    ///
    /// Every lattice shift with `|s| <= 2 R_J + h` is probed. Past `2 R_J` the
    /// supports are disjoint and the numerator equals twice the mass, so the
    /// plateau value `2 / (2 R_J)^α` bounds all longer shifts.
    pub fn nikolskii(&self, alpha: f64) -> f64 {
        let reach = ((2.0 * self.radius) / self.h).floor() as isize + 1;
        let rows = if self.dim == 2 { reach } else { 0 };
        let mut best = 2.0 * self.mass() / (2.0 * self.radius).powf(alpha);
        for s0 in 0..=reach {
            for s1 in -rows..=rows {
                if (s0 == 0 && s1 <= 0) || s0 * s0 + s1 * s1 > reach * reach {
                    continue;
                }
                let len = self.h * ((s0 * s0 + s1 * s1) as f64).sqrt();
                let q = self.shift_difference(s0, s1) / len.powf(alpha);
                if q > best {
                    best = q;
                }
            }
        }
        best
    }
}

/// Constants derived from a kernel and a nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConstants {
    /// Continuum `∫|∇J|`, absent when the profile is not W^{1,1}.
    pub w11: Option<f64>,
    /// Central-difference estimate of `∫|∇J|`, reported alongside `w11`.
    pub w11_discrete: Option<f64>,
    /// Pairs `(α, [J]_α)`.
    pub nikolskii: Vec<(f64, f64)>,
    pub gamma: f64,
    /// `γ / w11`.
    pub delta0: Option<f64>,
    pub d0: f64,
}

impl KernelConstants {
    pub fn nikolskii_at(&self, alpha: f64) -> Option<f64> {
        self.nikolskii.iter().find(|(a, _)| *a == alpha).map(|&(_, v)| v)
    }
}

/// Left-hand side of the energy inequality defining `d0`.
pub fn d0_energy_lhs(radius_j: f64, r: f64, dim: usize) -> f64 {
    0.5 * (1.0 - (1.0 - radius_j / r).powi(dim as i32))
}

/// Smallest `R` with `d0_energy_lhs(R) < ∫f`, by bisection to `1e-6`.
pub fn d0_threshold(radius_j: f64, int_f: f64, dim: usize) -> Result<f64> {
    if int_f <= 0.0 {
        return precondition("integral of f must be positive");
    }
    if int_f >= 0.5 {
        return Ok(radius_j * (1.0 + 1e-6));
    }
    let mut lo = radius_j;
    let mut hi = radius_j * 2.0;
    while d0_energy_lhs(radius_j, hi, dim) >= int_f {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 5e-7 {
        let mid = 0.5 * (lo + hi);
        if d0_energy_lhs(radius_j, mid, dim) < int_f {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn kernel_constants(k: &Kernel, f: &Bistable, alphas: &[f64]) -> Result<KernelConstants> {
    let st = stiffness(f)?;
    for &a in alphas {
        if !(a > 0.0 && a <= 1.0) {
            return precondition(format!("Nikol'skii exponent must lie in (0,1], got {a}"));
        }
    }
    let w11 = k.continuum_w11();
    let w11_discrete = w11.map(|_| k.discrete_w11());
    let nikolskii = alphas.iter().map(|&a| (a, k.nikolskii(a))).collect();
    let d0 = d0_threshold(k.radius(), st.int_f, k.dim())?;
    Ok(KernelConstants {
        w11,
        w11_discrete,
        nikolskii,
        gamma: st.gamma,
        delta0: w11.map(|w| st.gamma / w),
        d0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(h: f64) -> Grid {
        Grid::new(2, &[-1.0, -1.0], &[1.0, 1.0], h).unwrap()
    }

    #[test]
    fn unit_mass_all_profiles() {
        let g = grid2(1.0 / 16.0);
        for p in [
            Profile::TopHat { radius: 0.5 },
            Profile::Quartic { radius: 0.5 },
            Profile::Ring {
                inner: 0.25,
                outer: 0.5,
            },
        ] {
            let k = build_kernel(p, &g).unwrap();
            assert!((k.mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small_support_rejected() {
        let g = grid2(0.25);
        assert!(build_kernel(Profile::TopHat { radius: 0.4 }, &g).is_err());
        let g = grid2(1.0 / 16.0);
        assert!(build_kernel(
            Profile::Ring {
                inner: 0.45,
                outer: 0.5
            },
            &g
        )
        .is_err());
    }

    #[test]
    fn marginal_is_even_with_unit_mass() {
        let g = grid2(1.0 / 16.0);
        let k = build_kernel(Profile::Quartic { radius: 0.5 }, &g).unwrap();
        let j1 = marginal_j1(&k);
        assert_eq!(j1.dim(), 1);
        assert!((j1.mass() - 1.0).abs() < 1e-12);
        let m = j1.half_width() as isize;
        for i in 0..=m {
            assert_eq!(j1.weight(i, 0), j1.weight(-i, 0));
        }
    }

    #[test]
    fn d0_two_dimensional_reference() {
        let d0 = d0_threshold(0.5, 1.0 / 30.0, 2).unwrap();
        assert!(d0_energy_lhs(0.5, d0 + 1e-6, 2) < 1.0 / 30.0);
        assert!(d0_energy_lhs(0.5, (d0 - 1e-6).max(0.5), 2) >= 1.0 / 30.0);
    }

    #[test]
    fn tophat_has_no_w11() {
        let g = grid2(1.0 / 16.0);
        let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
        let f = crate::nonlinearity::make_bistable(0.3, 1.0).unwrap();
        let c = kernel_constants(&k, &f, &[1.0]).unwrap();
        assert!(c.w11.is_none() && c.delta0.is_none());
        assert!(c.nikolskii_at(1.0).unwrap().is_finite());
    }
}
