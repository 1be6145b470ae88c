//! # wpunn
//!
//! Neural networks built around the windowed product unit: a weightless
//! layer that multiplies a sliding window of its inputs and uses the
//! product itself as the nonlinearity. The crate provides:
//!
//! - [`tensor`] — dense rank-1/2 f64 tensors and a seedable deterministic RNG
//! - [`autodiff`] — tape-based reverse-mode differentiation with a
//!   finite-difference gradient checker
//! - [`layers`] — dense, windowed product/max, product unit, activations,
//!   gated recurrent blocks, an LSTM baseline, and the network container
//! - [`training`] — Adam, NLL/MSE losses, mini-batch and truncated-BPTT
//!   training loops, closed-loop forecasting
//! - [`data`] — MNIST IDX parsing, synthetic polynomial tasks, an exact
//!   polynomial network constructor, and a monthly CO2 series loader
//! - [`experiments`] — the command-line experiment harness with CSV and
//!   SVG reporting

pub mod autodiff;
pub mod data;
pub mod error;
pub mod experiments;
pub mod layers;
pub mod plot;
pub mod report;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Shape, Tensor};
