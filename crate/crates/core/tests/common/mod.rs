//! Oracles shared by the integration tests.

use nonlocal_liouville::kernel::Kernel;
use nonlocal_liouville::nonlinearity::make_bistable;

/// Method-of-lines RK4 for `u_t = J₁⋆u - u + f(u)` with constant extension past
/// the ends, stopped (by linear interpolation in time) when cell `target` reaches `θ`.
pub fn parabolic_front(j1: &Kernel, theta: f64, n: usize, target: usize) -> Vec<f64> {
    let f = make_bistable(theta, 1.0).unwrap();
    let taps = j1.taps();
    let start = 3 * n / 4;
    let mut u: Vec<f64> = (0..n).map(|i| if i >= start { 1.0 } else { 0.0 }).collect();
    let rhs = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for t in &taps {
                    let j = i as isize + t.di;
                    let v = if j < 0 {
                        0.0
                    } else if j as usize >= n {
                        1.0
                    } else {
                        u[j as usize]
                    };
                    s += t.mass * v;
                }
                s - u[i] + f.eval(u[i])
            })
            .collect()
    };
    let dt = 0.05;
    for _ in 0..1_000_000 {
        let k1 = rhs(&u);
        let a: Vec<f64> = (0..n).map(|i| u[i] + 0.5 * dt * k1[i]).collect();
        let k2 = rhs(&a);
        let b: Vec<f64> = (0..n).map(|i| u[i] + 0.5 * dt * k2[i]).collect();
        let k3 = rhs(&b);
        let c: Vec<f64> = (0..n).map(|i| u[i] + dt * k3[i]).collect();
        let k4 = rhs(&c);
        let next: Vec<f64> = (0..n)
            .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next[target] >= theta {
            let s = (theta - u[target]) / (next[target] - u[target]);
            return (0..n).map(|i| (1.0 - s) * u[i] + s * next[i]).collect();
        }
        u = next;
    }
    panic!("front never reached the target cell");
}
