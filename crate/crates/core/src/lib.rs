//! Multi-pulse standing waves of the cubic NLS on metric graphs.

pub mod asymptotic;
pub mod emit;
mod error;
pub mod graph;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod phase;
pub mod quad;
pub mod scenario;
pub mod solver;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
