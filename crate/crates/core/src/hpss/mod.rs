//! Median-filtering harmonic/percussive separation.
//!
//! A single stage smooths the magnitude spectrogram along time (harmonic
//! estimate) and along frequency (percussive estimate) and splits the input
//! with complementary soft masks. The double-stage variant first separates at
//! high frequency resolution, where a voice with vibrato looks unsteady and
//! lands in the percussive part, then separates that part again at low
//! frequency resolution, where the voice looks steady and lands in the
//! harmonic part.

mod double;

pub use double::{double_stage_hpss, DoubleStageConfig, DoubleStageHpss, StageConfig};

use crate::dsp::{median_filter_2d, Grid, Spectrogram};
use crate::error::{invalid, Result};

/// Harmonic and percussive magnitude spectrograms of the same shape as the input.
#[derive(Debug, Clone, PartialEq)]
pub struct HpssOutput {
    pub harmonic: Spectrogram,
    pub percussive: Spectrogram,
}

/// Soft masks `(M_h, M_p)` with `M_h = H^p / (H^p + P^p)` and `M_p = 1 − M_h`.
///
/// `harm_window` counts frames, `perc_window` counts bins. Where both
/// estimates vanish the mask is 0.5.
pub fn soft_masks(magnitudes: &Grid, harm_window: usize, perc_window: usize, power: f64) -> Result<(Grid, Grid)> {
    if !(power >= 1.0) {
        return Err(invalid(format!("mask power {power} must be >= 1")));
    }
    let h = median_filter_2d(magnitudes, harm_window, 1)?;
    let p = median_filter_2d(magnitudes, 1, perc_window)?;
    let mut mh = Grid::zeros(magnitudes.n_rows(), magnitudes.n_cols(), magnitudes.frame_rate);
    for ((m, &hv), &pv) in mh.as_mut_slice().iter_mut().zip(h.as_slice()).zip(p.as_slice()) {
        let (hp, pp) = (hv.powf(power), pv.powf(power));
        let den = hp + pp;
        *m = if den > 0.0 { hp / den } else { 0.5 };
    }
    let mp = mh.map(|m| 1.0 - m);
    Ok((mh, mp))
}

/// Single-stage separation of a magnitude spectrogram.
pub fn hpss(spec: &Spectrogram, harm_window: usize, perc_window: usize, power: f64) -> Result<HpssOutput> {
    let (mh, mp) = soft_masks(&spec.magnitudes, harm_window, perc_window, power)?;
    Ok(HpssOutput {
        harmonic: spec.with_magnitudes(spec.magnitudes.hadamard(&mh)?)?,
        percussive: spec.with_magnitudes(spec.magnitudes.hadamard(&mp)?)?,
    })
}
