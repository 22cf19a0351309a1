//! Uniform cell-centered grids, masked fields, and deterministic reductions.

use std::io::Write;

use crate::error::{precondition, Result};

/// Uniform Cartesian lattice in one or two dimensions.
///
/// Cell `i` along axis `a` has center `lo[a] + (i + 1/2) h`. Cells are stored
/// row-major with flat index `i0 * n1 + i1`; in one dimension `n1 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    h: f64,
    n: [usize; 2],
}

impl Grid {
    /// Builds a grid covering `[lo, hi]` per axis with spacing `h`.
    pub fn new(dim: usize, lo: &[f64], hi: &[f64], h: f64) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return precondition(format!("grid dimension must be 1 or 2, got {dim}"));
        }
        if lo.len() != dim || hi.len() != dim {
            return precondition("extent length does not match dimension");
        }
        if !(h.is_finite() && h > 0.0) {
            return precondition(format!("spacing must be positive, got {h}"));
        }
        let mut g = Grid {
            dim,
            lo: [0.0; 2],
            hi: [h; 2],
            h,
            n: [1; 2],
        };
        for a in 0..dim {
            let span = hi[a] - lo[a];
            if !(span.is_finite() && span > 0.0) {
                return precondition(format!("empty extent on axis {a}"));
            }
            let count = (span / h).round();
            if count < 1.0 || (lo[a] + count * h - hi[a]).abs() >= 1e-12 * h {
                return precondition(format!("extent on axis {a} is not a multiple of h = {h}"));
            }
            g.lo[a] = lo[a];
            g.hi[a] = hi[a];
            g.n[a] = count as usize;
        }
        Ok(g)
    }

    /// Builds a grid from its lower corner and cell counts.
    pub fn from_counts(dim: usize, lo: [f64; 2], h: f64, counts: [usize; 2]) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return precondition(format!("grid dimension must be 1 or 2, got {dim}"));
        }
        if !(h.is_finite() && h > 0.0) || counts[0] == 0 || (dim == 2 && counts[1] == 0) {
            return precondition("invalid spacing or counts");
        }
        let mut n = counts;
        let mut lo = lo;
        if dim == 1 {
            n[1] = 1;
            lo[1] = 0.0;
        }
        let hi = [lo[0] + n[0] as f64 * h, lo[1] + n[1] as f64 * h];
        Ok(Grid { dim, lo, hi, h, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Cell counts; the second entry is 1 for one-dimensional grids.
    pub fn counts(&self) -> [usize; 2] {
        self.n
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell volume `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.n[1] + i1
    }

    pub fn coords(&self, flat: usize) -> (usize, usize) {
        (flat / self.n[1], flat % self.n[1])
    }

    /// Center of a cell; the second coordinate is 0 in one dimension.
    pub fn center(&self, flat: usize) -> [f64; 2] {
        let (i0, i1) = self.coords(flat);
        let x0 = self.lo[0] + (i0 as f64 + 0.5) * self.h;
        if self.dim == 1 {
            [x0, 0.0]
        } else {
            [x0, self.lo[1] + (i1 as f64 + 0.5) * self.h]
        }
    }

    /// Euclidean distance from a cell center to the nearest box face.
    pub fn distance_to_boundary(&self, flat: usize) -> f64 {
        let x = self.center(flat);
        let mut d = f64::INFINITY;
        for a in 0..self.dim {
            d = d.min(x[a] - self.lo[a]).min(self.hi[a] - x[a]);
        }
        d
    }

    /// Whether two grids share the same lattice.
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.h == other.h && self.lo == other.lo
    }
}

/// Real samples on a grid plus a domain mask.
///
/// Masked-out cells carry the value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Samples `f` at cell centers where `mask` holds.
pub fn make_field(
    grid: &Grid,
    f: impl Fn([f64; 2]) -> f64,
    mask: impl Fn([f64; 2]) -> bool,
) -> Result<Field> {
    let n = grid.len();
    let mut values = vec![0.0; n];
    let mut m = vec![false; n];
    for i in 0..n {
        let x = grid.center(i);
        if mask(x) {
            let v = f(x);
            if !v.is_finite() {
                return precondition(format!("non-finite sample {v} at {:?}", &x[..grid.dim()]));
            }
            values[i] = v;
            m[i] = true;
        }
    }
    Ok(Field {
        grid: grid.clone(),
        values,
        mask: m,
    })
}

impl Field {
    /// Builds a field from raw parts, zeroing masked-out values.
    pub fn from_parts(grid: Grid, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Field> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return precondition("field length does not match grid");
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = 0.0;
            }
        }
        Ok(Field { grid, values, mask })
    }

    pub fn constant(grid: &Grid, c: f64, mask: Vec<bool>) -> Result<Field> {
        Field::from_parts(grid.clone(), vec![c; grid.len()], mask)
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn min(&self) -> f64 {
        self.masked_values().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.masked_values().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute value over masked-in cells.
    pub fn sup_norm(&self) -> f64 {
        self.masked_values().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn masked_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
    }

    /// Writes the `x0[,x1],value,mask` CSV export.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        if self.grid.dim() == 1 {
            writeln!(w, "x0,value,mask")?;
        } else {
            writeln!(w, "x0,x1,value,mask")?;
        }
        for i in 0..self.grid.len() {
            let x = self.grid.center(i);
            if self.grid.dim() == 1 {
                write!(w, "{},", fmt17(x[0]))?;
            } else {
                write!(w, "{},{},", fmt17(x[0]), fmt17(x[1]))?;
            }
            writeln!(w, "{},{}", fmt17(self.values[i]), u8::from(self.mask[i]))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Result of [`sup_metrics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupMetrics {
    pub sup_diff: f64,
    pub min_a: f64,
    pub max_a: f64,
}

pub fn sup_metrics(a: &Field, b: &Field) -> Result<SupMetrics> {
    if !a.grid.same_lattice(&b.grid) || a.mask != b.mask {
        return precondition("sup_metrics requires identical grids and masks");
    }
    let sup_diff = a
        .values
        .iter()
        .zip(&b.values)
        .zip(&a.mask)
        .filter(|(_, &m)| m)
        .fold(0.0f64, |acc, ((x, y), _)| acc.max((x - y).abs()));
    Ok(SupMetrics {
        sup_diff,
        min_a: a.min(),
        max_a: a.max(),
    })
}

/// Estimate of a discrete Hölder seminorm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub value: f64,
    /// False when only a subsample of pairs was examined; `value` is then a lower bound.
    pub exact: bool,
    pub pairs: u64,
}

/// Discrete Hölder seminorm `max |u(x)-u(y)| / |x-y|^alpha` over masked-in pairs.
///
/// When the pair count exceeds `max_pairs`, the estimate covers every pair of
/// cells at most two cells apart, plus all pairs in the coarsest power-of-two
/// sublattice whose pair count fits the remaining budget. Raising `max_pairs`
/// only adds pairs, so the estimate is monotone in it.
pub fn holder_quotient(u: &Field, alpha: f64, max_pairs: u64) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return precondition(format!("Hölder exponent must lie in (0,1], got {alpha}"));
    }
    let cells: Vec<usize> = (0..u.grid.len()).filter(|&i| u.mask[i]).collect();
    let m = cells.len() as u64;
    if m < 2 {
        return precondition("Hölder quotient needs at least two masked-in cells");
    }
    let total = m * (m - 1) / 2;
    if total <= max_pairs {
        let value = pair_max(u, &cells, alpha);
        return Ok(HolderEstimate {
            value,
            exact: true,
            pairs: total,
        });
    }

    let g = &u.grid;
    let [n0, n1] = g.counts();
    let h = g.spacing();
    let dim = g.dim();
    let mut best = 0.0f64;
    let mut pairs = 0u64;
    let reach: isize = 2;
    let r1 = if dim == 2 { reach } else { 0 };
    for &i in &cells {
        let (a, b) = g.coords(i);
        for da in -reach..=reach {
            for db in -r1..=r1 {
                if (da, db) <= (0, 0) {
                    continue;
                }
                let (ja, jb) = (a as isize + da, b as isize + db);
                if ja < 0 || jb < 0 || ja >= n0 as isize || jb >= n1 as isize {
                    continue;
                }
                let j = g.index(ja as usize, jb as usize);
                if !u.mask[j] {
                    continue;
                }
                let dist = h * ((da * da + db * db) as f64).sqrt();
                best = best.max((u.values[i] - u.values[j]).abs() / dist.powf(alpha));
                pairs += 1;
            }
        }
    }

    let budget = max_pairs.saturating_sub(pairs);
    let mut stride = 1usize;
    loop {
        let sub = sublattice(u, stride);
        let c = sub.len() as u64;
        if c * c.saturating_sub(1) / 2 <= budget || c < 2 {
            best = best.max(pair_max(u, &sub, alpha));
            pairs += c * c.saturating_sub(1) / 2;
            break;
        }
        stride *= 2;
    }
    Ok(HolderEstimate {
        value: best,
        exact: false,
        pairs,
    })
}

fn sublattice(u: &Field, stride: usize) -> Vec<usize> {
    let g = &u.grid;
    (0..g.len())
        .filter(|&i| {
            let (a, b) = g.coords(i);
            u.mask[i] && a % stride == 0 && (g.dim() == 1 || b % stride == 0)
        })
        .collect()
}

fn pair_max(u: &Field, cells: &[usize], alpha: f64) -> f64 {
    let g = &u.grid;
    let pts: Vec<([f64; 2], f64)> = cells.iter().map(|&i| (g.center(i), u.values[i])).collect();
    let mut best = 0.0f64;
    for (k, &(x, vx)) in pts.iter().enumerate() {
        for &(y, vy) in &pts[k + 1..] {
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            let q = (vx - vy).abs() / d.powf(alpha);
            if q > best {
                best = q;
            }
        }
    }
    best
}

/// Open half-space `{x : x·e > offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: [f64; 2], offset: f64) -> Result<HalfSpace> {
        let len = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
        if (len - 1.0).abs() > 1e-12 {
            return precondition(format!("half-space normal must be a unit vector, |e| = {len}"));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        x[0] * self.normal[0] + x[1] * self.normal[1] > self.offset
    }
}

/// Pairwise (tree) summation with a fixed split pattern.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_samples() {
        let g = Grid::new(1, &[0.0], &[1.0], 0.25).unwrap();
        let f = make_field(&g, |x| x[0], |_| true).unwrap();
        assert_eq!(f.values, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn rejects_non_multiple_extent() {
        assert!(Grid::new(1, &[0.0], &[1.0], 0.3).is_err());
    }

    #[test]
    fn non_finite_sample_rejected() {
        let g = Grid::new(1, &[0.0], &[1.0], 0.25).unwrap();
        let err = make_field(&g, |x| if x[0] > 0.5 { f64::NAN } else { 0.0 }, |_| true);
        assert!(err.is_err());
    }

    #[test]
    fn linear_function_quotient_is_one() {
        let g = Grid::new(1, &[0.0], &[4.0], 0.125).unwrap();
        let f = make_field(&g, |x| x[0], |_| true).unwrap();
        let q = holder_quotient(&f, 1.0, u64::MAX).unwrap();
        assert!(q.exact);
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subsampled_quotient_flagged() {
        let g = Grid::new(2, &[0.0, 0.0], &[2.0, 2.0], 0.0625).unwrap();
        let f = make_field(&g, |x| x[0] * x[1], |_| true).unwrap();
        let q = holder_quotient(&f, 0.5, 10_000).unwrap();
        assert!(!q.exact);
        assert!(q.value > 0.0);
    }

    #[test]
    fn half_space_normalization() {
        assert!(HalfSpace::new([1.0, 1.0], 0.0).is_err());
        let hs = HalfSpace::new([0.6, 0.8], 1.0).unwrap();
        assert!(hs.contains([2.0, 2.0]));
        assert!(!hs.contains([0.0, 0.0]));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Grid::new(2, &[0.0, 0.0], &[1.0, 1.0], 0.5).unwrap();
        let f = make_field(&g, |_| 1.0, |x| x[0] < 0.5).unwrap();
        let s = f.to_csv_string();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x0,x1,value,mask");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with(",1"));
        assert!(lines[4].ends_with(",0"));
    }
}
