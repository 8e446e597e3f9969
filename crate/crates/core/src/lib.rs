//! Asynchronous distributed MIMO radar: signal model, the NCD/ACD/CD/HD
//! detectors, their closed-form false-alarm and detection probabilities,
//! and a seeded Monte Carlo engine to cross-check the analysis.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod analysis;
pub mod detectors;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod scene;
pub mod specfun;
pub mod waveforms;

pub use error::{Error, Result};
pub use specfun::Probability;
