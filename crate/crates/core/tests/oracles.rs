//! Reference values computed independently of the library code paths.

use std::f64::consts::PI;

mod common;

use nonlocal_liouville::conv::ConvPath;
use nonlocal_liouville::grid::Grid;
use nonlocal_liouville::kernel::{build_kernel, kernel_constants, marginal_j1, Profile};
use nonlocal_liouville::nonlinearity::{extend, make_bistable, stiffness, ExtensionMode};
use nonlocal_liouville::obstacle::{build_obstacle, Shape};
use nonlocal_liouville::operator::Problem;
use nonlocal_liouville::solver::{front_profile, FrontOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kernel density from the profile formula, normalized over the lattice.
fn naive_density(profile: Profile, h: f64, dim: usize) -> impl Fn(f64, f64) -> f64 {
    let m = (profile.radius() / h).ceil() as i64 + 1;
    let mut total = 0.0;
    for a in -m..=m {
        for b in if dim == 2 { -m..=m } else { 0..=0 } {
            total += profile.shape(h * ((a * a + b * b) as f64).sqrt());
        }
    }
    let vol = h.powi(dim as i32);
    move |dx: f64, dy: f64| profile.shape((dx * dx + dy * dy).sqrt()) / total / vol
}

#[test]
fn operator_equals_naive_double_sum() {
    let h = 0.125;
    let grid = Grid::new(2, &[-2.0, -2.0], &[2.0, 2.0], h).unwrap();
    let f = extend(&make_bistable(0.3, 1.0).unwrap(), ExtensionMode::ZeroLeft);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for profile in [
        Profile::TopHat { radius: 0.5 },
        Profile::Quartic { radius: 0.6 },
        Profile::Ring { inner: 0.25, outer: 0.5 },
    ] {
        let k = build_kernel(profile, &grid).unwrap();
        let obstacle = build_obstacle(Shape::Ball { center: [0.1, -0.2], radius: 0.6 }, &grid, 0.7).unwrap();
        let p = Problem::new(k, obstacle, f, 0.6).unwrap();
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
        let j = naive_density(profile, h, 2);
        let vol = h * h;
        for path in [ConvPath::Direct, ConvPath::Fast] {
            let lu = p.apply_l_values(&u, path).unwrap();
            for x in (0..grid.len()).filter(|&x| p.active[x]) {
                let cx = grid.center(x);
                let mut s = 0.0;
                for y in (0..grid.len()).filter(|&y| p.domain[y]) {
                    let cy = grid.center(y);
                    s += j(cx[0] - cy[0], cx[1] - cy[1]) * (u[y] - u[x]) * vol;
                }
                assert!((lu[x] - s).abs() <= 1e-12, "{profile:?} {path:?} cell {x}: {} vs {s}", lu[x]);
            }
        }
    }
}

#[test]
fn quartic_w11_by_radial_quadrature() {
    // ∫|∇J| = 2π ∫_0^R |J'(r)| r dr with J = A (1 - r²/R²)².
    for radius in [0.5, 1.0, 2.0] {
        let a = 3.0 / (PI * radius * radius);
        let n = 200_000;
        let dr = radius / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                let dj = a * 2.0 * (1.0 - r * r / (radius * radius)) * (2.0 * r / (radius * radius));
                2.0 * PI * dj * r * dr
            })
            .sum();
        let grid = Grid::new(2, &[-4.0, -4.0], &[4.0, 4.0], 0.0625).unwrap();
        let k = build_kernel(Profile::Quartic { radius }, &grid).unwrap();
        let f = make_bistable(0.3, 1.0).unwrap();
        let c = kernel_constants(&k, &f, &[1.0]).unwrap();
        assert!((c.w11.unwrap() - integral).abs() < 1e-8, "{} vs {integral}", c.w11.unwrap());
        // The central-difference estimate approaches it from below.
        let wd = c.w11_discrete.unwrap();
        assert!(wd < integral && wd > 0.9 * integral, "discrete {wd}");
    }
}

#[test]
fn reference_d0_and_delta0() {
    // 2-D: ½(1 - (1 - R_J/R)²) = ∫f  =>  R = R_J / (1 - sqrt(1 - 2∫f)).
    let f = make_bistable(0.3, 1.0).unwrap();
    let int_f = 1.0 / 12.0 - 0.3 / 6.0;
    let st = stiffness(&f).unwrap();
    assert!((st.int_f - int_f).abs() < 1e-14);
    let grid = Grid::new(2, &[-2.0, -2.0], &[2.0, 2.0], 0.0625).unwrap();
    let k = build_kernel(Profile::Quartic { radius: 0.5 }, &grid).unwrap();
    let c = kernel_constants(&k, &f, &[1.0]).unwrap();
    let d0 = 0.5 / (1.0 - (1.0 - 2.0 * int_f).sqrt());
    assert!((c.d0 - d0).abs() < 1e-5, "{} vs {d0}", c.d0);
    assert!((d0 - 14.7457).abs() < 1e-4);
    // max f' at s = (1+θ)/3, γ = 1 - max f'.
    let s = 1.3 / 3.0;
    let maxfp = -3.0 * s * s + 2.0 * 1.3 * s - 0.3;
    let delta0 = (1.0 - maxfp) / (16.0 / (5.0 * 0.5));
    assert!((c.delta0.unwrap() - delta0).abs() < 1e-12);
    assert!((delta0 - 0.1151).abs() < 1e-4);
    // 1-D: ½ R_J / R = ∫f.
    let g1 = Grid::new(1, &[-2.0], &[2.0], 0.0625).unwrap();
    let k1 = build_kernel(Profile::Quartic { radius: 0.5 }, &g1).unwrap();
    let c1 = kernel_constants(&k1, &f, &[1.0]).unwrap();
    assert!((c1.d0 - 0.5 / (2.0 * int_f)).abs() < 1e-5);
}

#[test]
fn tophat_nikolskii_in_one_dimension() {
    // 15 equal taps (|offset| < 8 cells): a shift by k cells moves 2k/15 of the mass.
    let h = 0.0625;
    let g = Grid::new(1, &[-4.0], &[4.0], h).unwrap();
    let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
    assert_eq!(k.taps().len(), 15);
    assert!((k.nikolskii(1.0) - 2.0 / (15.0 * h)).abs() < 1e-12);
    assert!((k.nikolskii(0.5) - 2.0 / (15.0 * h).sqrt()).abs() < 1e-12);
}

#[test]
fn front_matches_parabolic_evolution() {
    let h = 0.0625;
    let g = Grid::new(2, &[-2.0, -2.0], &[2.0, 2.0], h).unwrap();
    let k = build_kernel(Profile::TopHat { radius: 0.5 }, &g).unwrap();
    let j1 = marginal_j1(&k);
    let f = make_bistable(0.3, 1.0).unwrap();
    let phi = front_profile(&j1, &f, &FrontOptions::default()).unwrap();
    // About 500 time units of travel before the front reaches cell 340.
    let target = 340;
    let u = common::parabolic_front(&j1, 0.3, 960, target);
    let mut worst = 0.0f64;
    for k in -240isize..=240 {
        let a = u[(target as isize + k) as usize];
        let b = phi.phi[(phi.pin as isize + k) as usize];
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 1e-4, "front vs parabolic oracle: {worst:e}");
}
