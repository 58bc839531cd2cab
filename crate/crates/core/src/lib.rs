//! Weighted dyadic square functions, Haar multipliers and weight
//! characteristics on truncated dyadic trees.
//!
//! All objects live on the dyadic tree of `[0,1)` truncated at a finite depth
//! `N`: step weights and step functions are constant on the `2^N` leaf cells,
//! and every supremum over dyadic intervals is an exhaustive maximum.

pub mod characteristics;
pub mod dyadic;
pub mod error;
pub mod factory;
pub mod haar;
pub mod io;
pub mod norms;
pub mod operators;
pub mod sequence;
pub mod verify;

pub use dyadic::{DyadicIndex, DyadicTree, StepFunction, StepWeight};
pub use error::{Error, Result};
