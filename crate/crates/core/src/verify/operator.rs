use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::conv::{ConvPath, PATH_TOL};
use crate::error::Result;
use crate::kernel::{build_kernel, Profile};
use crate::obstacle::{build_obstacle, Shape};
use crate::operator::Problem;

use super::Report;

/// Direct against fast evaluation of `L` on seeded random fields, for every
/// kernel profile at the configured radius, with the configured obstacle and without one.
pub fn operator_suite(cfg: &Config, trials: usize, seed: u64) -> Result<Report> {
    let mut inputs = cfg.entries();
    inputs.push(("seed".into(), seed.to_string()));
    let mut r = Report::new("operator", inputs);
    let grid = cfg.build_grid()?;
    let radius = cfg.kernel.radius;
    let profiles = [
        Profile::TopHat { radius },
        Profile::Quartic { radius },
        Profile::Ring {
            inner: cfg.kernel.inner_radius,
            outer: radius,
        },
    ];
    let shapes = [("none", Shape::None), ("obstacle", cfg.shape()?)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for profile in profiles {
        let kernel = build_kernel(profile, &grid)?;
        for (tag, shape) in &shapes {
            let obstacle = build_obstacle(shape.clone(), &grid, cfg.margin())?;
            let p = Problem::new(kernel.clone(), obstacle, cfg.nonlinearity()?, cfg.clamp_width())?;
            let mut worst = 0.0f64;
            for _ in 0..trials {
                let u: Vec<f64> = p
                    .domain
                    .iter()
                    .map(|&m| if m { rng.gen::<f64>() } else { 0.0 })
                    .collect();
                let a = p.apply_l_values(&u, ConvPath::Direct)?;
                let b = p.apply_l_values(&u, ConvPath::Fast)?;
                let d = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                worst = worst.max(d);
            }
            r.check_le(&format!("{}.{tag}.sup_diff", profile.name()), worst, 0.0, PATH_TOL);
        }
    }
    r.meta("trials", trials);
    Ok(r)
}
