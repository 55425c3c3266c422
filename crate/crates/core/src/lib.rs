//! Quantitative De Giorgi chain for parabolic De Giorgi classes.
//!
//! [`constants`] computes every explicit constant from the class parameters
//! down to a Hölder exponent; [`solver`] produces rough-coefficient
//! solutions; [`verify`] checks each lemma-level inequality on them.

pub mod cli;
pub mod constants;
pub mod corpus;
pub mod error;
pub mod fields;
pub mod iterate;
pub mod par;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use par::Execution;
