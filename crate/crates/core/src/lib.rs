//! Stochastic epidemic simulation and early-warning analysis.
//!
//! The crate covers the whole pipeline: deterministic SIR/SEIR models
//! ([`models`]), Euler–Maruyama integration under additive, environmental
//! and demographic noise ([`sde`], [`noise`]), labeled scenario generation
//! ([`scenario`], [`dataset`]), generic indicators ([`indicators`]), a
//! trainable two-class indicator ([`learned`]), ROC evaluation
//! ([`evaluation`]) and case-count ingestion with reproduction-number
//! estimation ([`empirical`]).

// `!(x > 0.0)` is how NaN is rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dataset;
pub mod empirical;
pub mod error;
pub mod evaluation;
pub mod indicators;
pub mod learned;
pub mod models;
pub mod noise;
pub mod scenario;
pub mod sde;
pub mod stream;

pub use error::{Error, Result};
