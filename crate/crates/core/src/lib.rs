//! Forecasting chaotic time series with a differential LSTM.
//!
//! A single LSTM cell reads a window of past values and, separately, the
//! matching window of derivatives. Two linear heads map the concatenated
//! final hidden states to the next `H` values and the next `H` derivatives.
//! Training minimises the value MSE plus `lambda` times the derivative MSE.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod network;
pub mod numerics;
pub mod preprocess;

pub use error::{Error, Result};
