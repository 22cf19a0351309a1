//! INI run configuration: `[section]` headers with `key = value` lines.
//!
//! Every key has a default; unknown sections or keys are rejected. The
//! resolved configuration is echoed into reports by [`Config::entries`].

use ini::Ini;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::{build_kernel, Kernel, Profile};
use crate::nonlinearity::{extend, make_bistable, Bistable, ExtendedNonlinearity, ExtensionMode};
use crate::obstacle::{build_obstacle, Obstacle, Psi, Shape};
use crate::operator::Problem;

/// Starting field for `evolve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    /// 0 on the domain, 1 on the clamp band.
    Hostile,
    Ones,
    /// 0 inside the annulus hole, 1 elsewhere.
    Counterexample,
}

impl Initial {
    pub fn parse(s: &str) -> Option<Initial> {
        match s {
            "hostile" => Some(Initial::Hostile),
            "ones" => Some(Initial::Ones),
            "counterexample" => Some(Initial::Counterexample),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Initial::Hostile => "hostile",
            Initial::Ones => "ones",
            Initial::Counterexample => "counterexample",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub profile: String,
    pub radius: f64,
    pub inner_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FConfig {
    pub theta: f64,
    pub amplitude: f64,
    pub extension: ExtensionMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleConfig {
    pub family: String,
    pub center: [f64; 2],
    pub radius: f64,
    pub semi_axes: [f64; 2],
    pub angle: f64,
    pub vertices: Vec<[f64; 2]>,
    pub inner: f64,
    pub outer: f64,
    pub amplitude: f64,
    pub lobes: u32,
    /// Base family of a `deformed` obstacle: `ball` or `ellipse`.
    pub base: String,
    pub epsilon: f64,
    pub psi: Psi,
    /// Thickening radius applied after construction (0 = none).
    pub delta: f64,
    /// Required distance to the box boundary; 0 means `R_J + 1`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Time step; 0 means the stability bound `0.9 / (max 𝒥 + max|f'|)`.
    pub dt: f64,
    pub tol: f64,
    pub max_steps: usize,
    /// Clamp band width; 0 means the kernel radius.
    pub clamp_width: f64,
    pub initial: Initial,
    pub log_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionConfig {
    /// Cone parameter; 0 means `δ₀ / 2`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Repeat the run at `h / 2` and compare.
    pub refine: bool,
    pub mode: String,
    /// Ball radius of the swept sub-solutions.
    pub sweep_radius: f64,
    pub max_pairs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub f: FConfig,
    pub obstacle: ObstacleConfig,
    pub solver: SolverConfig,
    pub ball: BallConfig,
    pub subsolution: SubsolutionConfig,
    pub experiment: ExperimentConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grid: GridConfig {
                dim: 2,
                lo: [-8.0, -8.0],
                hi: [8.0, 8.0],
                h: 0.0625,
            },
            kernel: KernelConfig {
                profile: "tophat".into(),
                radius: 0.5,
                inner_radius: 0.25,
            },
            f: FConfig {
                theta: 0.3,
                amplitude: 1.0,
                extension: ExtensionMode::ZeroLeft,
            },
            obstacle: ObstacleConfig {
                family: "ball".into(),
                center: [0.0, 0.0],
                radius: 1.0,
                semi_axes: [2.0, 0.8],
                angle: 0.0,
                vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
                inner: 1.0,
                outer: 2.0,
                amplitude: 0.3,
                lobes: 5,
                base: "ball".into(),
                epsilon: 0.05,
                psi: Psi::Cosine { lobes: 6 },
                delta: 0.0,
                margin: 0.0,
            },
            solver: SolverConfig {
                dt: 0.0,
                tol: 1e-11,
                max_steps: 100_000,
                clamp_width: 0.0,
                initial: Initial::Hostile,
                log_every: 50,
            },
            ball: BallConfig {
                center: [0.0, 0.0],
                radius: 20.0,
            },
            subsolution: SubsolutionConfig { delta: 0.0 },
            experiment: ExperimentConfig {
                trials: 100,
                alphas: vec![0.5, 1.0],
                epsilons: vec![1.0, 0.5, 0.2, 0.1, 0.05],
                refine: false,
                mode: "normal".into(),
                sweep_radius: 2.0,
                max_pairs: 4_000_000,
            },
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value `{value}` for key `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|p| num(key, p)).collect()
}

fn pair(key: &str, value: &str) -> Result<[f64; 2]> {
    match list(key, value)?.as_slice() {
        [a] => Ok([*a, 0.0]),
        [a, b] => Ok([*a, *b]),
        _ => Err(bad(key, value)),
    }
}

fn points(key: &str, value: &str) -> Result<Vec<[f64; 2]>> {
    value.split(';').map(|p| pair(key, p)).collect()
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = Config::default();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let full = match section {
                    Some(s) => format!("{s}.{key}"),
                    None => key.to_string(),
                };
                cfg.set(&full, value)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Sets one `section.key`; unknown keys are an error naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "grid.dim" => self.grid.dim = num(key, v)?,
            "grid.lo" => self.grid.lo = pair(key, v)?,
            "grid.hi" => self.grid.hi = pair(key, v)?,
            "grid.h" => self.grid.h = num(key, v)?,
            "kernel.profile" => self.kernel.profile = v.into(),
            "kernel.radius" => self.kernel.radius = num(key, v)?,
            "kernel.inner_radius" => self.kernel.inner_radius = num(key, v)?,
            "f.theta" => self.f.theta = num(key, v)?,
            "f.amplitude" => self.f.amplitude = num(key, v)?,
            "f.extension" => self.f.extension = ExtensionMode::parse(v).ok_or_else(|| bad(key, v))?,
            "obstacle.family" => self.obstacle.family = v.into(),
            "obstacle.center" => self.obstacle.center = pair(key, v)?,
            "obstacle.radius" => self.obstacle.radius = num(key, v)?,
            "obstacle.semi_axes" => self.obstacle.semi_axes = pair(key, v)?,
            "obstacle.angle" => self.obstacle.angle = num(key, v)?,
            "obstacle.vertices" => self.obstacle.vertices = points(key, v)?,
            "obstacle.inner" => self.obstacle.inner = num(key, v)?,
            "obstacle.outer" => self.obstacle.outer = num(key, v)?,
            "obstacle.amplitude" => self.obstacle.amplitude = num(key, v)?,
            "obstacle.lobes" => self.obstacle.lobes = num(key, v)?,
            "obstacle.base" => self.obstacle.base = v.into(),
            "obstacle.epsilon" => self.obstacle.epsilon = num(key, v)?,
            "obstacle.psi" => self.obstacle.psi = Psi::parse(v).map_err(|_| bad(key, v))?,
            "obstacle.delta" => self.obstacle.delta = num(key, v)?,
            "obstacle.margin" => self.obstacle.margin = num(key, v)?,
            "solver.dt" => self.solver.dt = num(key, v)?,
            "solver.tol" => self.solver.tol = num(key, v)?,
            "solver.max_steps" => self.solver.max_steps = num(key, v)?,
            "solver.clamp_width" => self.solver.clamp_width = num(key, v)?,
            "solver.initial" => self.solver.initial = Initial::parse(v).ok_or_else(|| bad(key, v))?,
            "solver.log_every" => self.solver.log_every = num(key, v)?,
            "ball.center" => self.ball.center = pair(key, v)?,
            "ball.radius" => self.ball.radius = num(key, v)?,
            "subsolution.delta" => self.subsolution.delta = num(key, v)?,
            "experiment.trials" => self.experiment.trials = num(key, v)?,
            "experiment.alphas" => self.experiment.alphas = list(key, v)?,
            "experiment.epsilons" => self.experiment.epsilons = list(key, v)?,
            "experiment.refine" => self.experiment.refine = boolean(key, v)?,
            "experiment.mode" => match v {
                "normal" | "sweep" => self.experiment.mode = v.into(),
                _ => return Err(bad(key, v)),
            },
            "experiment.sweep_radius" => self.experiment.sweep_radius = num(key, v)?,
            "experiment.max_pairs" => self.experiment.max_pairs = num(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Fully resolved configuration, one `(section.key, value)` per key in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let g = &self.grid;
        let k = &self.kernel;
        let o = &self.obstacle;
        let s = &self.solver;
        let e = &self.experiment;
        let d = g.dim;
        let p2 = |p: [f64; 2]| join(&p[..d.min(2)]);
        let verts = o
            .vertices
            .iter()
            .map(|p| join(p))
            .collect::<Vec<_>>()
            .join(";");
        let rows: Vec<(&str, String)> = vec![
            ("grid.dim", d.to_string()),
            ("grid.lo", p2(g.lo)),
            ("grid.hi", p2(g.hi)),
            ("grid.h", g.h.to_string()),
            ("kernel.profile", k.profile.clone()),
            ("kernel.radius", k.radius.to_string()),
            ("kernel.inner_radius", k.inner_radius.to_string()),
            ("f.theta", self.f.theta.to_string()),
            ("f.amplitude", self.f.amplitude.to_string()),
            ("f.extension", self.f.extension.name().into()),
            ("obstacle.family", o.family.clone()),
            ("obstacle.center", p2(o.center)),
            ("obstacle.radius", o.radius.to_string()),
            ("obstacle.semi_axes", join(&o.semi_axes)),
            ("obstacle.angle", o.angle.to_string()),
            ("obstacle.vertices", verts),
            ("obstacle.inner", o.inner.to_string()),
            ("obstacle.outer", o.outer.to_string()),
            ("obstacle.amplitude", o.amplitude.to_string()),
            ("obstacle.lobes", o.lobes.to_string()),
            ("obstacle.base", o.base.clone()),
            ("obstacle.epsilon", o.epsilon.to_string()),
            ("obstacle.psi", o.psi.describe()),
            ("obstacle.delta", o.delta.to_string()),
            ("obstacle.margin", self.margin().to_string()),
            ("solver.dt", s.dt.to_string()),
            ("solver.tol", s.tol.to_string()),
            ("solver.max_steps", s.max_steps.to_string()),
            ("solver.clamp_width", self.clamp_width().to_string()),
            ("solver.initial", s.initial.name().into()),
            ("solver.log_every", s.log_every.to_string()),
            ("ball.center", p2(self.ball.center)),
            ("ball.radius", self.ball.radius.to_string()),
            ("subsolution.delta", self.subsolution.delta.to_string()),
            ("experiment.trials", e.trials.to_string()),
            ("experiment.alphas", join(&e.alphas)),
            ("experiment.epsilons", join(&e.epsilons)),
            ("experiment.refine", e.refine.to_string()),
            ("experiment.mode", e.mode.clone()),
            ("experiment.sweep_radius", e.sweep_radius.to_string()),
            ("experiment.max_pairs", e.max_pairs.to_string()),
        ];
        rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The resolved configuration as INI text; parsing it back gives the same config.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        let entries = self.entries();
        for (key, value) in &entries {
            let (section, name) = key.split_once('.').expect("sectioned key");
            if section != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{name} = {value}\n"));
        }
        out
    }

    pub fn margin(&self) -> f64 {
        if self.obstacle.margin > 0.0 {
            self.obstacle.margin
        } else {
            self.kernel.radius + 1.0
        }
    }

    pub fn clamp_width(&self) -> f64 {
        if self.solver.clamp_width > 0.0 {
            self.solver.clamp_width
        } else {
            self.kernel.radius
        }
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let d = self.grid.dim;
        if !(d == 1 || d == 2) {
            return Err(Error::Config(format!("grid.dim must be 1 or 2, got {d}")));
        }
        Grid::new(d, &self.grid.lo[..d], &self.grid.hi[..d], self.grid.h)
    }

    pub fn profile(&self) -> Result<Profile> {
        Profile::parse(&self.kernel.profile, self.kernel.radius, self.kernel.inner_radius)
    }

    pub fn build_kernel(&self, grid: &Grid) -> Result<Kernel> {
        build_kernel(self.profile()?, grid)
    }

    pub fn bistable(&self) -> Result<Bistable> {
        make_bistable(self.f.theta, self.f.amplitude)
    }

    pub fn nonlinearity(&self) -> Result<ExtendedNonlinearity> {
        Ok(extend(&self.bistable()?, self.f.extension))
    }

    fn simple_shape(&self, family: &str) -> Result<Shape> {
        let o = &self.obstacle;
        Ok(match family {
            "none" => Shape::None,
            "ball" => Shape::Ball {
                center: o.center,
                radius: o.radius,
            },
            "ellipse" => Shape::Ellipse {
                center: o.center,
                semi_axes: o.semi_axes,
                angle: o.angle,
            },
            "polygon" => Shape::Polygon {
                vertices: o.vertices.clone(),
            },
            "annulus" => Shape::Annulus {
                center: o.center,
                inner: o.inner,
                outer: o.outer,
            },
            "star" => Shape::Star {
                center: o.center,
                radius: o.radius,
                amplitude: o.amplitude,
                lobes: o.lobes,
            },
            other => return Err(Error::Config(format!("unknown obstacle family `{other}`"))),
        })
    }

    /// Obstacle shape from the `[obstacle]` section, thickening included.
    pub fn shape(&self) -> Result<Shape> {
        let o = &self.obstacle;
        let shape = if o.family == "deformed" {
            if !matches!(o.base.as_str(), "ball" | "ellipse") {
                return Err(Error::Config(format!(
                    "obstacle.base must be ball or ellipse, got `{}`",
                    o.base
                )));
            }
            Shape::Deformed {
                base: Box::new(self.simple_shape(&o.base)?),
                epsilon: o.epsilon,
                psi: o.psi,
            }
        } else {
            self.simple_shape(&o.family)?
        };
        Ok(if o.delta > 0.0 {
            Shape::Thickened {
                base: Box::new(shape),
                delta: o.delta,
            }
        } else {
            shape
        })
    }

    pub fn build_obstacle(&self, grid: &Grid) -> Result<Obstacle> {
        build_obstacle(self.shape()?, grid, self.margin())
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let grid = self.build_grid()?;
        self.build_problem_on(&grid)
    }

    /// Problem on an explicit grid (used for resolution studies).
    pub fn build_problem_on(&self, grid: &Grid) -> Result<Problem> {
        let kernel = self.build_kernel(grid)?;
        let obstacle = self.build_obstacle(grid)?;
        Problem::new(kernel, obstacle, self.nonlinearity()?, self.clamp_width())
    }

    /// Same configuration at half the spacing.
    pub fn refined(&self) -> Config {
        let mut c = self.clone();
        c.grid.h /= 2.0;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_rejected() {
        let err = Config::parse("[grid]\nspacing = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("grid.spacing"));
        assert!(Config::parse("[solver]\ndt = fast\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = Config::default();
        c.set("obstacle.family", "polygon").unwrap();
        c.set("obstacle.vertices", "-1,-1; 1,-1; 0,1").unwrap();
        c.set("experiment.alphas", "0.25, 1").unwrap();
        let back = Config::parse(&c.to_ini()).unwrap();
        assert_eq!(back.entries(), c.entries());
        assert_eq!(back.obstacle.vertices.len(), 3);
    }

    #[test]
    fn defaults_fill_derived_widths() {
        let c = Config::default();
        assert_eq!(c.clamp_width(), 0.5);
        assert_eq!(c.margin(), 1.5);
    }
}
