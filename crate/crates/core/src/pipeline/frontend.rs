//! Audio-to-input transforms of the three detectors.

use serde::{Deserialize, Serialize};

use crate::audio::{resample, AudioClip};
use crate::dsp::{centered_pad, mel_filterbank, mel_spectrogram, stft_centered, Grid, Spectrogram, DEFAULT_LOG_FLOOR};
use crate::error::{invalid, Result};
use crate::features::{assemble_features, FeatureConfig};
use crate::hpss::{double_stage_hpss, DoubleStageConfig};

/// Log-mel value of a silent frame; used to pad excerpts past the track edges.
pub fn silence_db() -> f64 {
    10.0 * DEFAULT_LOG_FLOOR.log10()
}

fn at_rate(clip: &AudioClip, rate: u32) -> Result<AudioClip> {
    if clip.sample_rate == rate {
        Ok(clip.clone())
    } else {
        resample(clip, rate)
    }
}

/// Per-frame feature rows (116 columns plus context) at the feature frame rate.
pub fn fe_frontend(clip: &AudioClip, cfg: &FeatureConfig) -> Result<Grid> {
    Ok(assemble_features(&at_rate(clip, cfg.sample_rate)?, cfg)?.rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelFrontend {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelFrontend {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            fft_size: 2048,
            hop: 315,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
        }
    }
}

impl MelFrontend {
    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }
}

fn log_mel(spec: &Spectrogram, n_mels: usize, fmin: f64, fmax: f64) -> Result<Grid> {
    let bank = mel_filterbank(n_mels, fmin, fmax, spec.fft_size, spec.sample_rate)?;
    Ok(mel_spectrogram(spec, &bank, DEFAULT_LOG_FLOOR)?.values)
}

/// Log-mel frames (`frames × n_mels`), frame `i` centered at `(i + 0.5) / frame_rate`.
pub fn mel_frontend(clip: &AudioClip, cfg: &MelFrontend) -> Result<Grid> {
    let clip = at_rate(clip, cfg.sample_rate)?;
    let spec = stft_centered(&clip, cfg.fft_size, cfg.hop)?;
    log_mel(&spec, cfg.n_mels, cfg.fmin, cfg.fmax)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpssFrontend {
    pub sample_rate: u32,
    pub hpss: DoubleStageConfig,
    /// Mel bands per component; the model input has twice as many columns.
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// Consecutive stage-2 frames averaged into one model frame.
    pub pool: usize,
}

impl Default for HpssFrontend {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            hpss: DoubleStageConfig::default(),
            n_mels: 40,
            fmin: 0.0,
            fmax: 11025.0,
            pool: 3,
        }
    }
}

impl HpssFrontend {
    pub fn hop(&self) -> usize {
        self.hpss.stage2.hop * self.pool.max(1)
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop() as f64
    }
}

/// Log-mel of the double-stage harmonic and percussive outputs side by side
/// (`frames × 2·n_mels`), pooled in time. The clip is padded so that frame
/// `i` is centered at `(i + 0.5) / frame_rate`.
pub fn hpss_frontend(clip: &AudioClip, cfg: &HpssFrontend) -> Result<Grid> {
    if cfg.pool == 0 {
        return Err(invalid("pool must be at least 1"));
    }
    let clip = at_rate(clip, cfg.sample_rate)?;
    let s2 = cfg.hpss.stage2;
    let left = centered_pad(s2.fft_size, s2.hop);
    let right = cfg.hpss.stage1.fft_size + s2.fft_size;
    let padded = clip.zero_padded(left, right);
    let sep = double_stage_hpss(&padded, &cfg.hpss)?;
    let n = clip.len() / s2.hop;
    let h = log_mel(&sep.h2, cfg.n_mels, cfg.fmin, cfg.fmax)?.slice_rows(0, n);
    let p = log_mel(&sep.p2, cfg.n_mels, cfg.fmin, cfg.fmax)?.slice_rows(0, n);
    let mut both = Grid::hstack(&[&h, &p])?;
    both.frame_rate = cfg.sample_rate as f64 / s2.hop as f64;
    Ok(both.pool_rows(cfg.pool))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(seconds: f64) -> AudioClip {
        let n = (seconds * 22050.0) as usize;
        AudioClip::new((0..n).map(|i| 0.5 * (i as f64 * 0.1).sin()).collect(), 22050).unwrap()
    }

    #[test]
    fn frame_counts_follow_hops() {
        let clip = tone(3.0);
        let mel = mel_frontend(&clip, &MelFrontend::default()).unwrap();
        assert_eq!(mel.shape(), (clip.len() / 315, 80));
        let hp = hpss_frontend(&clip, &HpssFrontend::default()).unwrap();
        assert_eq!(hp.shape(), (clip.len() / 384, 80));
        assert!((hp.frame_rate - 22050.0 / 384.0).abs() < 1e-9);
        assert!(hp.all_finite());
    }

    #[test]
    fn silence_maps_to_floor() {
        let mel = mel_frontend(&AudioClip::silence(1.0, 22050), &MelFrontend::default()).unwrap();
        assert!(mel.as_slice().iter().all(|&v| v == silence_db()));
    }

    #[test]
    fn other_rates_are_resampled() {
        let clip = AudioClip::new(vec![0.0; 44100], 44100).unwrap();
        let mel = mel_frontend(&clip, &MelFrontend::default()).unwrap();
        assert_eq!(mel.n_rows(), 22050 / 315);
    }
}
