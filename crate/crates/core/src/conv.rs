//! Linear convolution of grid data against a kernel table, by explicit
//! summation or by zero-padded real FFT.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{numerical, Result};
use crate::kernel::{Kernel, Tap};

/// How convolutions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvPath {
    Direct,
    Fast,
    /// Evaluate both and fail if they differ by more than [`PATH_TOL`].
    Both,
}

/// Largest sup-norm disagreement tolerated between the two paths.
pub const PATH_TOL: f64 = 1e-10;

impl ConvPath {
    pub fn parse(s: &str) -> Option<ConvPath> {
        match s {
            "direct" => Some(ConvPath::Direct),
            "fast" => Some(ConvPath::Fast),
            "both" => Some(ConvPath::Both),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConvPath::Direct => "direct",
            ConvPath::Fast => "fast",
            ConvPath::Both => "both",
        }
    }
}

/// Smallest 5-smooth integer that is at least `n`.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

struct FftPlan {
    p0: usize,
    p1: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Option<Arc<dyn Fft<f64>>>,
    col_inv: Option<Arc<dyn Fft<f64>>>,
    /// Kernel spectrum, layout `[p0][p1/2+1]` (or `[p0/2+1]` in 1-D).
    spectrum: Vec<Complex<f64>>,
}

/// Convolution engine bound to one grid shape and one kernel.
///
/// Values outside the grid are treated as zero.
pub struct Convolver {
    dim: usize,
    n: [usize; 2],
    m: usize,
    taps: Vec<Tap>,
    plan: std::sync::OnceLock<FftPlan>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("taps", &self.taps.len())
            .finish()
    }
}

impl Clone for Convolver {
    fn clone(&self) -> Self {
        Convolver {
            dim: self.dim,
            n: self.n,
            m: self.m,
            taps: self.taps.clone(),
            plan: std::sync::OnceLock::new(),
        }
    }
}

impl Convolver {
    pub fn new(dim: usize, n: [usize; 2], kernel: &Kernel) -> Convolver {
        Convolver {
            dim,
            n: if dim == 1 { [n[0], 1] } else { n },
            m: kernel.half_width(),
            taps: kernel.taps(),
            plan: std::sync::OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// `out[x] = Σ_o mass(o) · input[x + o]`.
    pub fn apply(&self, path: ConvPath, input: &[f64], out: &mut [f64]) -> Result<()> {
        match path {
            ConvPath::Direct => self.direct(input, out),
            ConvPath::Fast => self.fast(input, out),
            ConvPath::Both => {
                self.direct(input, out);
                let mut other = vec![0.0; out.len()];
                self.fast(input, &mut other);
                let diff = out
                    .iter()
                    .zip(&other)
                    .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
                if diff > PATH_TOL {
                    return numerical(format!(
                        "direct and fast convolution differ by {diff:e} > {PATH_TOL:e}"
                    ));
                }
            }
        }
        Ok(())
    }

    fn padded(&self) -> (Vec<f64>, usize, usize) {
        let m = self.m;
        let m1 = if self.dim == 2 { m } else { 0 };
        let w = self.n[1] + 2 * m1;
        (vec![0.0; (self.n[0] + 2 * m) * w], w, m1)
    }

    /// Explicit summation in fixed tap order.
    pub fn direct(&self, input: &[f64], out: &mut [f64]) {
        let [n0, n1] = self.n;
        let m = self.m;
        let (mut buf, w, m1) = self.padded();
        for i in 0..n0 {
            let row = (i + m) * w + m1;
            buf[row..row + n1].copy_from_slice(&input[i * n1..(i + 1) * n1]);
        }
        let deltas: Vec<(isize, f64)> = self
            .taps
            .iter()
            .map(|t| (t.di * w as isize + t.dj, t.mass))
            .collect();
        let row_kernel = |i: usize, out_row: &mut [f64]| {
            let base = ((i + m) * w + m1) as isize;
            for (j, o) in out_row.iter_mut().enumerate() {
                let c = base + j as isize;
                let mut s = 0.0;
                for &(d, wt) in &deltas {
                    s += wt * buf[(c + d) as usize];
                }
                *o = s;
            }
        };
        for_each_row(out, n1, row_kernel);
    }

    /// `out[x] = Σ_o mass(o) · mask[x+o] · (u[x+o] - u[x])`, the literal masked difference form.
    ///
    /// Cells outside the grid count as masked out.
    pub fn direct_masked_difference(&self, u: &[f64], mask: &[bool], out: &mut [f64]) {
        let [n0, n1] = self.n;
        let m = self.m;
        let (mut ubuf, w, m1) = self.padded();
        let mut mbuf = vec![0.0; ubuf.len()];
        for i in 0..n0 {
            for j in 0..n1 {
                let c = (i + m) * w + m1 + j;
                if mask[i * n1 + j] {
                    ubuf[c] = u[i * n1 + j];
                    mbuf[c] = 1.0;
                }
            }
        }
        let deltas: Vec<(isize, f64)> = self
            .taps
            .iter()
            .map(|t| (t.di * w as isize + t.dj, t.mass))
            .collect();
        let row_kernel = |i: usize, out_row: &mut [f64]| {
            let base = ((i + m) * w + m1) as isize;
            for (j, o) in out_row.iter_mut().enumerate() {
                let c = base + j as isize;
                let ux = u[i * n1 + j];
                let mut s = 0.0;
                for &(d, wt) in &deltas {
                    let y = (c + d) as usize;
                    s += wt * mbuf[y] * (ubuf[y] - ux);
                }
                *o = s;
            }
        };
        for_each_row(out, n1, row_kernel);
    }

    fn plan(&self) -> &FftPlan {
        self.plan.get_or_init(|| self.build_plan())
    }

    fn build_plan(&self) -> FftPlan {
        let [n0, n1] = self.n;
        let m = self.m;
        let p0 = smooth_size(n0 + m);
        let p1 = if self.dim == 2 { smooth_size(n1 + m) } else { 1 };
        let line = if self.dim == 2 { p1 } else { p0 };
        let mut rp = RealFftPlanner::<f64>::new();
        let r2c = rp.plan_fft_forward(line);
        let c2r = rp.plan_fft_inverse(line);
        let (col_fwd, col_inv) = if self.dim == 2 {
            let mut cp = FftPlanner::<f64>::new();
            (Some(cp.plan_fft_forward(p0)), Some(cp.plan_fft_inverse(p0)))
        } else {
            (None, None)
        };
        let mut plan = FftPlan {
            p0,
            p1,
            r2c,
            c2r,
            col_fwd,
            col_inv,
            spectrum: Vec::new(),
        };
        let mut kbuf = vec![0.0; p0 * p1];
        for t in &self.taps {
            // Correlation against a symmetric kernel equals convolution.
            let a = (-t.di).rem_euclid(p0 as isize) as usize;
            let b = if self.dim == 2 {
                (-t.dj).rem_euclid(p1 as isize) as usize
            } else {
                0
            };
            kbuf[a * p1 + b] += t.mass;
        }
        plan.spectrum = forward(&plan, self.dim, &mut kbuf);
        plan
    }

    /// Zero-padded FFT convolution.
    pub fn fast(&self, input: &[f64], out: &mut [f64]) {
        let plan = self.plan();
        let [n0, n1] = self.n;
        let (p0, p1) = (plan.p0, plan.p1);
        let mut buf = vec![0.0; p0 * p1];
        for i in 0..n0 {
            buf[i * p1..i * p1 + n1].copy_from_slice(&input[i * n1..(i + 1) * n1]);
        }
        let mut spec = forward(plan, self.dim, &mut buf);
        for (s, k) in spec.iter_mut().zip(&plan.spectrum) {
            *s *= *k;
        }
        inverse(plan, self.dim, &mut spec, &mut buf);
        let scale = 1.0 / (p0 * p1) as f64;
        for i in 0..n0 {
            for j in 0..n1 {
                out[i * n1 + j] = buf[i * p1 + j] * scale;
            }
        }
    }
}

fn forward(plan: &FftPlan, dim: usize, buf: &mut [f64]) -> Vec<Complex<f64>> {
    let (p0, p1) = (plan.p0, plan.p1);
    if dim == 1 {
        let mut spec = plan.r2c.make_output_vec();
        plan.r2c.process(buf, &mut spec).expect("fft length");
        return spec;
    }
    let q = p1 / 2 + 1;
    let mut spec = vec![Complex::new(0.0, 0.0); p0 * q];
    let mut scratch_out = plan.r2c.make_output_vec();
    for i in 0..p0 {
        plan.r2c
            .process(&mut buf[i * p1..(i + 1) * p1], &mut scratch_out)
            .expect("fft length");
        spec[i * q..(i + 1) * q].copy_from_slice(&scratch_out);
    }
    columns(plan.col_fwd.as_ref().expect("2-D plan"), &mut spec, p0, q);
    spec
}

fn inverse(plan: &FftPlan, dim: usize, spec: &mut [Complex<f64>], out: &mut [f64]) {
    let (p0, p1) = (plan.p0, plan.p1);
    if dim == 1 {
        spec[0].im = 0.0;
        if p0 % 2 == 0 {
            spec[p0 / 2].im = 0.0;
        }
        plan.c2r.process(spec, out).expect("fft length");
        return;
    }
    let q = p1 / 2 + 1;
    columns(plan.col_inv.as_ref().expect("2-D plan"), spec, p0, q);
    let mut row = plan.c2r.make_input_vec();
    for i in 0..p0 {
        row.copy_from_slice(&spec[i * q..(i + 1) * q]);
        row[0].im = 0.0;
        if p1 % 2 == 0 {
            row[q - 1].im = 0.0;
        }
        plan.c2r
            .process(&mut row, &mut out[i * p1..(i + 1) * p1])
            .expect("fft length");
    }
}

fn columns(fft: &Arc<dyn Fft<f64>>, spec: &mut [Complex<f64>], p0: usize, q: usize) {
    let mut col = vec![Complex::new(0.0, 0.0); p0];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for j in 0..q {
        for i in 0..p0 {
            col[i] = spec[i * q + j];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..p0 {
            spec[i * q + j] = col[i];
        }
    }
}

/// Runs `f(row_index, row)` over the rows of `out`, in parallel when enabled.
///
/// Each row is computed independently, so the result does not depend on the
/// number of threads.
pub(crate) fn for_each_row(out: &mut [f64], width: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in out.chunks_mut(width).enumerate() {
            f(i, row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::{build_kernel, Profile};

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(263), 270);
        assert_eq!(smooth_size(1), 1);
    }

    #[test]
    fn paths_agree_on_spike() {
        let g = Grid::new(2, &[-2.0, -2.0], &[2.0, 1.5], 0.125).unwrap();
        let k = build_kernel(Profile::Quartic { radius: 0.5 }, &g).unwrap();
        let c = Convolver::new(2, g.counts(), &k);
        let mut input = vec![0.0; g.len()];
        input[g.index(3, 5)] = 1.0;
        input[g.index(20, 1)] = -2.0;
        let mut a = vec![0.0; g.len()];
        let mut b = vec![0.0; g.len()];
        c.direct(&input, &mut a);
        c.fast(&input, &mut b);
        let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn paths_agree_in_one_dimension() {
        let g = Grid::new(1, &[-3.0], &[3.0], 0.0625).unwrap();
        let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
        let c = Convolver::new(1, g.counts(), &k);
        let input: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
        let mut a = vec![0.0; g.len()];
        let mut b = vec![0.0; g.len()];
        c.direct(&input, &mut a);
        c.fast(&input, &mut b);
        let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-13, "{diff}");
    }
}
