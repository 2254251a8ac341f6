//! Simulation engine for chemotactic agents that steer by the gradient and
//! curvature of a self-produced field on the torus.

pub mod azimuthal;
pub mod config;
pub mod error;
pub mod execute;
pub mod fd;
pub mod geometry;
pub mod kernels;
pub mod model;
pub mod particles;
pub mod presets;
pub mod spectral;

pub use error::{Error, Result};
