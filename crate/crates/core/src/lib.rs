// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod floorfield;
pub mod geometry;
pub mod metrics;
pub mod potential;
pub mod scenario;
pub mod seed;
pub mod spatial;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
