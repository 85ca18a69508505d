//! Deterministic single-process simulator for server/worker convex
//! optimization under bidirectional communication compression.
//!
//! The crate is organized bottom-up:
//!
//! - [`problems`]: distributed objectives (synthetic quadratics, multiclass
//!   logistic regression), LIBSVM parsing, partitioning and smoothness
//!   constants.
//! - [`compressors`]: RandK / TopK / identity sparsifiers and the
//!   unbiased-to-biased scaling, driven by keyed [`rng`] streams.
//! - [`schedule`]: the learning-rate state machine shared by the
//!   accelerated methods, plus the `L̄` and `θ_min` formulas.
//! - [`algorithms`]: 2Direction, ADIANA, EF21-P + DIANA, GD and AGD as
//!   round-by-round state machines that charge a [`accounting::CommLedger`].
//! - [`accounting`]: exact coordinate metering and the `(p, τ)` selection
//!   rules.
//! - [`harness`]: experiment configuration, step-size sweeps, CSV traces,
//!   manifests and SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod algorithms;
pub mod compressors;
mod error;
pub mod harness;
pub mod linalg;
pub mod parallel;
pub mod problems;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
