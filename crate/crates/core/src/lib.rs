//! Trace finite elements for surface PDEs on implicitly defined closed
//! surfaces: Laplace-Beltrami, surface Cahn-Hilliard, surface
//! Navier-Stokes and the coupled Navier-Stokes-Cahn-Hilliard system.

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod fe_space;
pub mod geometry;
pub mod io;
pub mod models;
pub mod physics;
pub mod scenarios;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
