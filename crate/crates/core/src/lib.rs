//! Set-based state estimation and active fault diagnosis with line zonotopes.

pub mod afd;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod reduction;
pub mod sets;
pub mod solver;

pub use error::{Error, Result};
