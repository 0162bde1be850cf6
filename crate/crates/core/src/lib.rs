//! Noise reduction for non-stationary force records by ensemble empirical
//! mode decomposition, interval thresholding and partial reconstruction.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod baseline;
pub mod cli;
pub mod eemd;
pub mod emd;
pub mod envelope;
pub mod error;
pub mod metrics;
pub mod reconstruct;
pub mod series;
pub mod synth;
pub mod threshold;

pub use error::{Error, Result};
