//! Time-frequency kernels shared by every pipeline.

mod biquad;
mod grid;
pub mod grid_io;
mod mel;
mod median;
mod mfcc;
mod stft;

pub use biquad::{biquad_apply, biquad_design, BiquadCoeffs, BiquadKind};
pub use grid::Grid;
pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, MelFilterbank, MelSpectrogram, DEFAULT_LOG_FLOOR};
pub use median::{median_filter_1d, median_filter_1d_bool, median_filter_2d};
pub use mfcc::{dct_ii, delta, idct_ii, mfcc};
pub use stft::{
    centered_pad, hann_window, istft, n_frames, stft, stft_centered, stft_centered_complex, stft_complex,
    ComplexSpectrogram, Spectrogram,
};
