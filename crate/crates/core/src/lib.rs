//! Hawking energy of small surfaces in 3-dimensional initial data sets, area-constrained
//! critical spheres found by a discrete Lyapunov–Schmidt reduction, and closed-form
//! small-sphere expansions along geodesic spheres and light cuts.

pub mod background_geometry;
pub mod cli;
pub mod el_operator;
pub mod error;
pub mod finite_difference;
pub mod functionals;
pub mod harmonics;
pub mod reduction_solver;
pub mod smallsphere;
pub mod surface;

pub use error::{GeomError, Result};
