//! Frame-level detectors and the shared post-filter.

pub mod cnn;
pub mod forest;
pub mod optim;
mod postprocess;
pub mod rnn;
pub mod serialize;

pub use forest::{forest_predict, forest_train, ForestModel, ForestParams};
pub use postprocess::{postprocess, smoothing_window, PredictionTrack};
pub use serialize::{ModelContainer, ModelKind};
