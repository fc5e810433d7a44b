//! Gaudy images, linear optimal experimental design, and session-based
//! training protocols for neural response models.
// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod image;
pub mod models;
pub mod oed;
pub mod rng;
pub mod stats;
pub mod transforms;

pub use error::{Error, Result};
