//! Cubic bistable nonlinearities, their extensions outside `[0,1]`, and stiffness constants.

use crate::error::{precondition, Result};

/// `f(s) = a s (s - θ)(1 - s)`, validated against the bistable sign structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bistable {
    theta: f64,
    amplitude: f64,
}

const SCAN_POINTS: usize = 10_000;
const SCAN_TOL: f64 = 1e-10;

/// Validates `a s (s - theta)(1 - s)` with `a = amplitude`.
pub fn make_bistable(theta: f64, amplitude: f64) -> Result<Bistable> {
    if !(theta > 0.0 && theta < 1.0) {
        return precondition(format!("theta must lie in (0,1), got {theta}"));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return precondition(format!("amplitude must be positive, got {amplitude}"));
    }
    let f = Bistable { theta, amplitude };
    if f.integral() <= 0.0 {
        return precondition(format!(
            "integral of f over [0,1] is {} <= 0 (theta must be below 1/2)",
            f.integral()
        ));
    }
    f.scan()?;
    Ok(f)
}

impl Bistable {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.amplitude * s * (s - self.theta) * (1.0 - s)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.amplitude * (-3.0 * s * s + 2.0 * (1.0 + self.theta) * s - self.theta)
    }

    /// Antiderivative `F(t) = ∫_0^t f`.
    pub fn antideriv(&self, t: f64) -> f64 {
        let th = self.theta;
        self.amplitude * t * t * (-t * t / 4.0 + (1.0 + th) * t / 3.0 - th / 2.0)
    }

    pub fn integral(&self) -> f64 {
        self.amplitude * (1.0 / 12.0 - self.theta / 6.0)
    }

    /// Location of the maximum of `f'`.
    pub fn argmax_deriv(&self) -> f64 {
        (1.0 + self.theta) / 3.0
    }

    fn scan(&self) -> Result<()> {
        let th = self.theta;
        for (s, name) in [(0.0, "f(0) = 0"), (th, "f(theta) = 0"), (1.0, "f(1) = 0")] {
            if self.eval(s).abs() > SCAN_TOL {
                return precondition(format!("violated: {name}"));
            }
        }
        if self.deriv(0.0) >= 0.0 {
            return precondition("violated: f'(0) < 0");
        }
        if self.deriv(th) <= 0.0 {
            return precondition("violated: f'(theta) > 0");
        }
        if self.deriv(1.0) >= 0.0 {
            return precondition("violated: f'(1) < 0");
        }
        for i in 1..SCAN_POINTS {
            let s = i as f64 / SCAN_POINTS as f64;
            let v = self.eval(s);
            if s < th - SCAN_TOL && v >= 0.0 {
                return precondition(format!("violated: f < 0 on (0, theta) at s = {s}"));
            }
            if s > th + SCAN_TOL && v <= 0.0 {
                return precondition(format!("violated: f > 0 on (theta, 1) at s = {s}"));
            }
        }
        for i in 0..=SCAN_POINTS {
            let s = i as f64 / SCAN_POINTS as f64;
            if self.deriv(s) >= 1.0 {
                return precondition(format!("violated: f' < 1 on [0,1] at s = {s}"));
            }
        }
        if self.deriv(self.argmax_deriv()) >= 1.0 {
            return precondition("violated: f' < 1 on [0,1]");
        }
        Ok(())
    }
}

/// Derived stiffness constants of a validated nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stiffness {
    /// `max_{[0,1]} f'`.
    pub maxfp: f64,
    /// Location of that maximum.
    pub argmax: f64,
    /// `min_{[0,1]} (1 - f')`.
    pub gamma: f64,
    /// `∫_0^1 f`.
    pub int_f: f64,
    /// `max_{[0,1]} |f'|`.
    pub max_abs_fp: f64,
}

pub fn stiffness(f: &Bistable) -> Result<Stiffness> {
    let argmax = f.argmax_deriv().clamp(0.0, 1.0);
    let maxfp = f.deriv(argmax);
    if maxfp >= 1.0 {
        return precondition(format!("max f' = {maxfp} >= 1"));
    }
    let max_abs_fp = [f.deriv(0.0), f.deriv(1.0), maxfp]
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(Stiffness {
        maxfp,
        argmax,
        gamma: 1.0 - maxfp,
        int_f: f.integral(),
        max_abs_fp,
    })
}

impl Stiffness {
    /// Constants `(c0, c1)` with `f' <= -c1` on `[1 - c0, +∞)` for the extended nonlinearity.
    ///
    /// `c0` is half the distance from 1 to the right root of `f'`.
    pub fn well_constants(f: &Bistable) -> (f64, f64) {
        let th = f.theta();
        let disc = ((1.0 + th) * (1.0 + th) - 3.0 * th).sqrt();
        let right_root = (1.0 + th + disc) / 3.0;
        let c0 = 0.5 * (1.0 - right_root);
        let c1 = -f.deriv(1.0 - c0);
        (c0, c1)
    }
}

/// Extension of `f` outside `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtensionMode {
    /// `-f(-s)` for `s <= 0`, `f'(1)(s-1)` for `s >= 1`.
    Odd,
    /// `f'(0) s` for `s <= 0`, `f'(1)(s-1)` for `s >= 1`.
    LinearTails,
    /// `0` for `s <= 0`, `f'(1)(s-1)` for `s >= 1`.
    ZeroLeft,
}

impl ExtensionMode {
    pub fn parse(s: &str) -> Option<ExtensionMode> {
        match s {
            "odd" => Some(ExtensionMode::Odd),
            "linear-tails" => Some(ExtensionMode::LinearTails),
            "zero-left" => Some(ExtensionMode::ZeroLeft),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExtensionMode::Odd => "odd",
            ExtensionMode::LinearTails => "linear-tails",
            ExtensionMode::ZeroLeft => "zero-left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedNonlinearity {
    pub base: Bistable,
    pub mode: ExtensionMode,
}

pub fn extend(f: &Bistable, mode: ExtensionMode) -> ExtendedNonlinearity {
    ExtendedNonlinearity { base: *f, mode }
}

impl ExtendedNonlinearity {
    pub fn eval(&self, s: f64) -> f64 {
        let b = &self.base;
        if s > 1.0 {
            b.deriv(1.0) * (s - 1.0)
        } else if s >= 0.0 {
            b.eval(s)
        } else {
            match self.mode {
                ExtensionMode::Odd => -self.eval(-s),
                ExtensionMode::LinearTails => b.deriv(0.0) * s,
                ExtensionMode::ZeroLeft => 0.0,
            }
        }
    }

    /// Derivative (one-sided at the junctions where the extension has a kink).
    pub fn deriv(&self, s: f64) -> f64 {
        let b = &self.base;
        if s > 1.0 {
            b.deriv(1.0)
        } else if s >= 0.0 {
            b.deriv(s)
        } else {
            match self.mode {
                ExtensionMode::Odd => self.deriv(-s),
                ExtensionMode::LinearTails => b.deriv(0.0),
                ExtensionMode::ZeroLeft => 0.0,
            }
        }
    }

    /// `∫_0^t f̃`.
    pub fn antideriv(&self, t: f64) -> f64 {
        let b = &self.base;
        if t > 1.0 {
            b.antideriv(1.0) + 0.5 * b.deriv(1.0) * (t - 1.0) * (t - 1.0)
        } else if t >= 0.0 {
            b.antideriv(t)
        } else {
            match self.mode {
                ExtensionMode::Odd => self.antideriv(-t),
                ExtensionMode::LinearTails => 0.5 * b.deriv(0.0) * t * t,
                ExtensionMode::ZeroLeft => 0.0,
            }
        }
    }

    /// `sup_ℝ f̃'`, used to pick the shift of the monotone scheme.
    pub fn max_deriv(&self) -> f64 {
        let interior = self.base.deriv(self.base.argmax_deriv().clamp(0.0, 1.0));
        let left = match self.mode {
            ExtensionMode::Odd => interior,
            ExtensionMode::LinearTails => self.base.deriv(0.0),
            ExtensionMode::ZeroLeft => 0.0,
        };
        interior.max(left).max(self.base.deriv(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_extension_value() {
        let f = make_bistable(0.3, 1.0).unwrap();
        let e = extend(&f, ExtensionMode::Odd);
        assert!((e.eval(-0.2) - 0.016).abs() < 1e-15);
    }

    #[test]
    fn tails_and_zero_left() {
        let f = make_bistable(0.3, 1.0).unwrap();
        for mode in [ExtensionMode::Odd, ExtensionMode::LinearTails, ExtensionMode::ZeroLeft] {
            let e = extend(&f, mode);
            assert_eq!(e.eval(1.5), f.deriv(1.0) * 0.5);
        }
        assert_eq!(extend(&f, ExtensionMode::ZeroLeft).eval(-5.0), 0.0);
    }

    #[test]
    fn rejects_wrong_theta() {
        assert!(make_bistable(0.6, 1.0).is_err());
        assert!(make_bistable(0.0, 1.0).is_err());
        assert!(make_bistable(0.3, -1.0).is_err());
    }

    #[test]
    fn rejects_steep_cubic() {
        // max f' = a (1 - θ + θ²)/3 exceeds 1 for a = 5.
        assert!(make_bistable(0.3, 5.0).is_err());
    }

    #[test]
    fn well_constants_bound_derivative() {
        let f = make_bistable(0.3, 1.0).unwrap();
        let (c0, c1) = Stiffness::well_constants(&f);
        assert!(c0 > 0.0 && c1 > 0.0);
        let e = extend(&f, ExtensionMode::ZeroLeft);
        for i in 0..=1000 {
            let s = 1.0 - c0 + 2.0 * c0 * i as f64 / 1000.0;
            assert!(e.deriv(s) <= -c1 + 1e-15);
        }
    }

    #[test]
    fn scheme_shift_for_zero_left() {
        let f = make_bistable(0.3, 1.0).unwrap();
        let e = extend(&f, ExtensionMode::ZeroLeft);
        assert!((e.max_deriv() - 79.0 / 300.0).abs() < 1e-15);
    }
}
