//! Browser bindings: mass map, relaxation from a chosen datum, and the front profile.

use wasm_bindgen::prelude::*;

use nonlocal_liouville::config::{Config, Initial};
use nonlocal_liouville::conv::ConvPath;
use nonlocal_liouville::grid::Field;
use nonlocal_liouville::kernel::marginal_j1;
use nonlocal_liouville::operator::Problem;
use nonlocal_liouville::solver::{evolve_step, front_profile, max_dt, FrontOptions};
use nonlocal_liouville::verify::initial_field;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse(config: &str) -> Result<Config, JsError> {
    Config::parse(config).map_err(js)
}

/// Values with obstacle cells replaced by NaN, in the grid's flat order
/// (`index = i0 * height + i1`).
fn masked(u: &Field) -> Vec<f64> {
    u.values
        .iter()
        .zip(&u.mask)
        .map(|(&v, &m)| if m { v } else { f64::NAN })
        .collect()
}

/// A two-dimensional problem and a field being relaxed on it.
#[wasm_bindgen]
pub struct Scene {
    problem: Problem,
    u: Field,
    dt: f64,
    steps: usize,
    residual: f64,
}

#[wasm_bindgen]
impl Scene {
    /// Builds the problem from INI text; `initial` is `hostile`, `ones` or `counterexample`.
    #[wasm_bindgen(constructor)]
    pub fn new(config: &str, initial: &str) -> Result<Scene, JsError> {
        let cfg = parse(config)?;
        if cfg.grid.dim != 2 {
            return Err(JsError::new("the demo draws two-dimensional grids only"));
        }
        let init = Initial::parse(initial).ok_or_else(|| JsError::new("unknown initial datum"))?;
        let problem = cfg.build_problem().map_err(js)?;
        let u = initial_field(&problem, init).map_err(js)?;
        let dt = max_dt(&problem);
        Ok(Scene {
            problem,
            u,
            dt,
            steps: 0,
            residual: f64::NAN,
        })
    }

    /// Cells along the first axis.
    pub fn width(&self) -> usize {
        self.problem.grid().counts()[0]
    }

    /// Cells along the second axis.
    pub fn height(&self) -> usize {
        self.problem.grid().counts()[1]
    }

    /// `𝒥(x)`, NaN on the obstacle.
    pub fn mass_map(&self) -> Vec<f64> {
        masked(&self.problem.jmass)
    }

    pub fn min_mass(&self) -> f64 {
        self.problem.min_jmass()
    }

    pub fn convex(&self) -> bool {
        self.problem.obstacle.convex
    }

    /// Advances `n` explicit steps and returns the residual before the last one.
    pub fn relax(&mut self, n: usize) -> Result<f64, JsError> {
        for _ in 0..n {
            self.residual = evolve_step(&self.problem, &mut self.u, self.dt, ConvPath::Fast).map_err(js)?;
            self.steps += 1;
        }
        Ok(self.residual)
    }

    /// Current field, NaN on the obstacle.
    pub fn field(&self) -> Vec<f64> {
        masked(&self.u)
    }

    pub fn min_u(&self) -> f64 {
        self.u.min()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// Monotone front of the marginal kernel.
#[wasm_bindgen]
pub struct Front {
    values: Vec<f64>,
    spacing: f64,
    pin: usize,
    speed: f64,
}

#[wasm_bindgen]
impl Front {
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Index of the cell where `φ = θ`.
    pub fn pin(&self) -> usize {
        self.pin
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }
}

#[wasm_bindgen]
pub fn front(config: &str) -> Result<Front, JsError> {
    let cfg = parse(config)?;
    let grid = cfg.build_grid().map_err(js)?;
    let k = cfg.build_kernel(&grid).map_err(js)?;
    let f = cfg.bistable().map_err(js)?;
    let phi = front_profile(&marginal_j1(&k), &f, &FrontOptions::default()).map_err(js)?;
    Ok(Front {
        spacing: phi.grid.spacing(),
        pin: phi.pin,
        speed: phi.speed,
        values: phi.phi,
    })
}
