//! Importance-weighted active learning and sample-reusability experiments.
//!
//! The crate is organised around five pieces: [`datasets`] (generators,
//! CSV ingestion, splits), [`learners`] (the online selector and the weighted
//! consumers), [`selection`] (random, uncertainty and IWAL strategies),
//! [`experiments`] (repetition engine and statistics) and the `reuselab`
//! binary.

pub mod datasets;
pub mod error;
pub mod experiments;
pub mod learners;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
