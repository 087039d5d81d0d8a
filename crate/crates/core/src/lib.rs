//! Numerical toolkit for the semitoric transition family
//! F_t = (ell_12, t ell_34^2 + (1 - t) ell_45^2) on pentagon spaces.

pub mod error;
pub mod fd;
pub mod geom;
pub mod hamiltonians;
pub mod linalg;
pub mod moment;
pub mod parallel;
pub mod reduction;
pub mod singularities;
pub mod transition;

pub use error::{Error, Result};
