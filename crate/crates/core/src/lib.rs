//! Singing voice detection toolkit.
//!
//! Three frame-level detectors (hand-engineered features with a random
//! forest, a small CNN on mel spectrograms, and a bidirectional LSTM on
//! double-stage HPSS output), two stress-test generators (a synthetic vibrato
//! grid and SNR-controlled remixing), and frame-level evaluation.

pub mod audio;
pub mod cli;
pub mod config;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod hpss;
pub mod models;
pub mod pipeline;
pub mod stress;

pub use error::{Error, Result};
