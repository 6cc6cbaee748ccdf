//! Lattice attacks on noisy polynomial interpolation over short intervals
//! in prime fields, with the exceptional polynomials that defeat them.

pub mod analysis;
pub mod attacks;
pub mod error;
pub mod exceptional;
pub mod fpcore;
pub mod lattice;
pub mod observe;

pub use error::{Error, Result};
