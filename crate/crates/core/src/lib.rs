//! Period problem, Weierstrass integration and meshing for a three-parameter family of
//! minimal surfaces with helicoidal ends, built on the torus `w² = z⁴ + 1 − 2z² cos ρ`.

pub mod error;
pub mod builder;
pub mod forms;
pub mod period_solver;
pub mod quadrature;
pub mod surface_domain;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
