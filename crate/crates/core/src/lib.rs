pub mod bad_approx;
pub mod cli;
pub mod dani_flow;
pub mod dimension_lab;
pub mod error;
pub mod game_engine;
pub mod lattice;
pub mod linalg;
pub mod number_field;
pub mod real;
pub mod stats;

pub use error::{Error, Result};
