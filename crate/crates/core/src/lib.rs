//! Waring and Waring–Goldbach subbases: base-set sieves, regularly varying
//! targets, singular series, exponential sums, representation counting,
//! random subbasis sampling and the verification harness built on them.

pub mod basesets;
pub mod budget;
pub mod error;
pub mod expsums;
pub mod numerics;
pub mod regvar;
pub mod repcount;
pub mod report;
pub mod sampler;
pub mod singular;
pub mod verify;

pub use budget::Budget;
pub use error::{Error, Result};
