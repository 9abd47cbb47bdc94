//! Sliding-window coresets for fair (k,z)-clustering.
//!
//! The pipeline: a [`meyerson`] sketch gives online centers, the [`coreset`]
//! module samples each dyadic ring around them with inverse-probability
//! weights, and [`sliding`] runs merge-and-reduce over reversed timestamps so
//! the prefix property of the online coreset yields a coreset of the active
//! window. Costs under assignment and fairness constraints are evaluated
//! exactly in [`assignment`]; [`solver`] finds fair center sets on coresets and
//! [`harness`] replays streams against baselines.

pub mod assignment;
pub mod coreset;
pub mod error;
pub mod harness;
pub mod meyerson;
pub mod point;
pub mod sliding;
pub mod solver;
mod prf;

pub use error::{Error, Result};
