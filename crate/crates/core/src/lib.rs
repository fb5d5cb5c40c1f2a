//! Simulation and optimal control of a three-population maritime model:
//! commercial ships, pirates and coast guards.
//!
//! The crate covers the microscopic system, its averaged and mean-field
//! limits, Wasserstein-1 diagnostics and cost minimisation over
//! piecewise-constant guard controls.

pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod meanfield;
pub mod measure;
pub mod micro;
pub mod par;
pub mod stochastic;

pub use error::{Error, Result};
pub use geometry::Vec2;
