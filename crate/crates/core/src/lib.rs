//! A compressive-sensing laboratory built around incoherent, isotropic
//! random sensing.
//!
//! * [`ensembles`] samples sensing rows and computes their coherence.
//! * [`solvers`] recovers signals by basis pursuit, the LASSO and the
//!   Dantzig selector, and evaluates the matching error-bound formulas.
//! * [`certificates`] builds inexact dual certificates with the golfing
//!   scheme and checks exact and inexact duality.
//! * [`estimates`] evaluates Bernstein-type tail bounds and compares them
//!   against Monte Carlo event frequencies.
//! * [`harness`] runs seeded, reproducible experiment grids.

pub mod dense_io;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod certificates;
pub mod estimates;
pub mod harness;

pub use error::{Error, Result};
