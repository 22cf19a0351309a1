use crate::error::{numerical, precondition, Result};
use crate::grid::Field;
use crate::solver::FrontProfile;

/// Ordering slack of the sliding test `φ(x·e - r) <= u(x) + SLIDE_TOL`.
pub const SLIDE_TOL: f64 = 1e-10;
/// The profile is capped at `1 - PROFILE_CAP` so that fields equal to 1 up to
/// solver tolerance do not block sliding through an infinitely long tail.
pub const PROFILE_CAP: f64 = 1e-6;

/// Result of [`sliding_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sliding {
    /// The plane wave fits below `u` at `r = -limit`, the whole box along `e`.
    BelowBox { limit: f64 },
    /// Smallest fitting shift, to resolution `h/4`.
    Finite(f64),
}

impl Sliding {
    pub fn is_below_box(&self) -> bool {
        matches!(self, Sliding::BelowBox { .. })
    }

    /// `r*`, with `-limit` standing in for the sentinel.
    pub fn value(&self) -> f64 {
        match *self {
            Sliding::BelowBox { limit } => -limit,
            Sliding::Finite(r) => r,
        }
    }
}

/// `r* = inf { r : φ(x·e - r) <= u(x) on every domain cell }` by bisection.
pub fn sliding_radius(u: &Field, e: [f64; 2], phi: &FrontProfile) -> Result<Sliding> {
    let norm = (e[0] * e[0] + e[1] * e[1]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return precondition(format!("direction must be a unit vector, |e| = {norm}"));
    }
    if !phi.is_monotone() {
        return precondition("front profile is not monotone");
    }
    let g = &u.grid;
    let h = g.spacing();
    let cells: Vec<(f64, f64)> = (0..g.len())
        .filter(|&i| u.mask[i])
        .map(|i| {
            let x = g.center(i);
            (x[0] * e[0] + x[1] * e[1], u.values[i])
        })
        .collect();
    let limit = cells.iter().fold(0.0f64, |a, &(s, _)| a.max(s.abs())) + h / 2.0;
    let cap = 1.0 - PROFILE_CAP;
    let fits = |r: f64| cells.iter().all(|&(s, val)| phi.eval(s - r).min(cap) <= val + SLIDE_TOL);
    if fits(-limit) {
        return Ok(Sliding::BelowBox { limit });
    }
    let reach = phi.pin as f64 * phi.grid.spacing();
    let mut hi = limit + reach + h;
    if !fits(hi) {
        return numerical("plane wave does not fit below the field even past the profile's left end");
    }
    let mut lo = -limit;
    while hi - lo > h / 4.0 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Sliding::Finite(hi))
}
