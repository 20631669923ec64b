//! Numerical toolkit for weighted Orlicz–Poincaré inequalities in one
//! dimension: Young functions, gauge norms, characterizing constants, and
//! empirical verification against Lipschitz test functions.

pub mod error;
pub mod ext;
pub mod constants;
pub mod function;
pub mod gauge;
pub mod grid;
pub mod measure;
pub mod quadrature;
pub mod showcase;
pub mod verify;
pub mod young;

pub use error::{Error, Result};
