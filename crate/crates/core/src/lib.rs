//! Solvers and property checks for stationary nonlocal bistable
//! reaction-diffusion on perforated domains `ℝᴺ ∖ K`.

#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod conv;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod nonlinearity;
pub mod obstacle;
pub mod operator;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
