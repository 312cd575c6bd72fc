#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Multi-model mimicry: choose among candidate models, nested or not, by
//! how well data simulated under each candidate reproduces the observed
//! goodness-of-fit pattern.
//!
//! The pipeline is
//! 1. fit every candidate to bootstrap resamples of the data and simulate
//!    under each fit ([`engine`]),
//! 2. refit and score every candidate on every simulation ([`gof`]),
//! 3. classify the observed goodness-of-fit vector against the simulated
//!    clouds with Gaussian discriminants ([`classify`]).

pub mod classify;
pub mod distributions;
pub mod engine;
mod error;
pub mod gof;
pub mod mathcore;
mod par;
pub mod rng;

pub use distributions::{Dataset, Family, Params, Provenance};
pub use error::{Error, Result};
pub use gof::GofStatistic;
pub use par::Execution;
pub use rng::RngStream;
