use serde::{Deserialize, Serialize};

use super::soft_masks;
use crate::audio::AudioClip;
use crate::dsp::{istft, stft_complex, Grid, Spectrogram};
use crate::error::{invalid, Result};

/// Analysis and filter sizes of one separation stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub fft_size: usize,
    pub hop: usize,
    /// Time-axis median length in frames.
    pub harm_window: usize,
    /// Frequency-axis median length in bins.
    pub perc_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleStageConfig {
    pub stage1: StageConfig,
    pub stage2: StageConfig,
    /// Soft-mask exponent shared by both stages.
    pub power: f64,
}

impl Default for DoubleStageConfig {
    fn default() -> Self {
        Self {
            stage1: StageConfig {
                fft_size: 1024,
                hop: 256,
                harm_window: 17,
                perc_window: 3,
            },
            stage2: StageConfig {
                fft_size: 512,
                hop: 128,
                harm_window: 17,
                perc_window: 17,
            },
            power: 3.0,
        }
    }
}

/// Result of double-stage separation, with the masks kept so that any stem of
/// the analyzed mixture can be pushed through the same filtering.
#[derive(Debug, Clone)]
pub struct DoubleStageHpss {
    pub config: DoubleStageConfig,
    /// Voice-enhanced stage-2 harmonic part of the stage-1 percussive signal.
    pub h2: Spectrogram,
    /// Stage-2 percussive part.
    pub p2: Spectrogram,
    stage1_mask_p: Grid,
    stage2_mask_h: Grid,
    stage2_mask_p: Grid,
    signal_len: usize,
    sample_rate: u32,
}

impl DoubleStageHpss {
    /// Applies the frozen masks to `stem` and returns its `(h2, p2)` contributions.
    pub fn project(&self, stem: &AudioClip) -> Result<(Spectrogram, Spectrogram)> {
        if stem.len() != self.signal_len || stem.sample_rate != self.sample_rate {
            return Err(invalid("stem must match the analyzed mixture in length and rate"));
        }
        let s1 = &self.config.stage1;
        let s2 = &self.config.stage2;
        let p1 = istft(&stft_complex(stem, s1.fft_size, s1.hop)?.masked(&self.stage1_mask_p)?);
        let x2 = stft_complex(&p1, s2.fft_size, s2.hop)?.magnitude();
        let h = x2.with_magnitudes(x2.magnitudes.hadamard(&self.stage2_mask_h)?)?;
        let p = x2.with_magnitudes(x2.magnitudes.hadamard(&self.stage2_mask_p)?)?;
        Ok((h, p))
    }
}

pub fn double_stage_hpss(clip: &AudioClip, config: &DoubleStageConfig) -> Result<DoubleStageHpss> {
    let s1 = &config.stage1;
    let s2 = &config.stage2;
    if s1.fft_size <= s2.fft_size {
        return Err(invalid(format!(
            "stage-1 fft_size {} must exceed stage-2 fft_size {}",
            s1.fft_size, s2.fft_size
        )));
    }
    let x1 = stft_complex(clip, s1.fft_size, s1.hop)?;
    let (_, mp1) = soft_masks(&x1.magnitude().magnitudes, s1.harm_window, s1.perc_window, config.power)?;
    let p1 = istft(&x1.masked(&mp1)?);
    let x2 = stft_complex(&p1, s2.fft_size, s2.hop)?.magnitude();
    let (mh2, mp2) = soft_masks(&x2.magnitudes, s2.harm_window, s2.perc_window, config.power)?;
    let h2 = x2.with_magnitudes(x2.magnitudes.hadamard(&mh2)?)?;
    let p2 = x2.with_magnitudes(x2.magnitudes.hadamard(&mp2)?)?;
    Ok(DoubleStageHpss {
        config: *config,
        h2,
        p2,
        stage1_mask_p: mp1,
        stage2_mask_h: mh2,
        stage2_mask_p: mp2,
        signal_len: clip.len(),
        sample_rate: clip.sample_rate,
    })
}
