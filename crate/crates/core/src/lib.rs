//! Generalized grand Morrey norms and operator bounds on finite quasimetric measure spaces.

pub mod certify;
pub mod cli;
pub mod error;
pub mod norms;
pub mod operators;
pub mod scales;
pub mod space;

pub use error::{Error, Result};
