//! Hand-engineered per-frame features for the random-forest detector.
//!
//! Six blocks per frame, in this order: fluctogram (17 bands), spectral
//! flatness (17), spectral contraction (17), vocal variance (5), MFCC (30) and
//! delta MFCC (30), for 116 values. The band-wise blocks are computed on a
//! magnitude spectrogram resampled to a log-frequency axis.

mod bands;
mod logspec;

pub use bands::{fluctogram, spectral_contraction, spectral_flatness, vocal_variance, EPS};
pub use logspec::{log_axis_len, log_resample, BandLayout, LogSpectrogram};

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::dsp::{delta, mel_filterbank, mel_spectrogram, mfcc, stft_centered, Grid, DEFAULT_LOG_FLOOR};
use crate::error::{invalid, Error, Result};

pub const N_FEATURES: usize = 116;
/// Shortest clip with enough frames for the context windows.
pub const MIN_CLIP_SECONDS: f64 = 2.0;

/// Named column slices of a feature row.
pub const FEATURE_BLOCKS: [(&str, usize); 6] = [
    ("fluctogram", 17),
    ("flatness", 17),
    ("contraction", 17),
    ("vocal_variance", 5),
    ("mfcc", 30),
    ("delta_mfcc", 30),
];

/// How temporal context is added to the per-frame rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    /// The 116 values alone.
    None,
    /// Values plus their least-squares slope over ±`context_frames` frames (232 columns).
    Delta,
    /// Values at offsets −`context_frames`, 0, +`context_frames` (348 columns).
    Stack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub bins_per_semitone: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub n_bands: usize,
    pub band_overlap: f64,
    pub max_lag: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub delta_span: usize,
    pub vv_window: usize,
    pub context: ContextMode,
    pub context_frames: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            fft_size: 2048,
            hop: 315,
            bins_per_semitone: 10,
            fmin: 164.0,
            fmax: 10548.0,
            n_bands: 17,
            band_overlap: 0.5,
            max_lag: 5,
            n_mels: 40,
            n_mfcc: 30,
            delta_span: 9,
            vv_window: 11,
            context: ContextMode::Delta,
            context_frames: 38,
        }
    }
}

impl FeatureConfig {
    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }

    /// Rejects settings that cannot produce the fixed 116-column layout.
    pub fn validate(&self) -> Result<()> {
        if self.n_bands != 17 || self.n_mfcc != 30 {
            return Err(invalid(format!(
                "feature layout needs 17 bands and 30 MFCCs, got {} and {}",
                self.n_bands, self.n_mfcc
            )));
        }
        if self.n_mels < self.n_mfcc {
            return Err(invalid("n_mels must be at least n_mfcc"));
        }
        if !self.fft_size.is_power_of_two() || self.hop == 0 || self.hop > self.fft_size {
            return Err(invalid("fft_size must be a power of two and 0 < hop <= fft_size"));
        }
        if self.fmax > self.sample_rate as f64 / 2.0 {
            return Err(invalid("fmax above Nyquist"));
        }
        Ok(())
    }

    pub fn n_columns(&self) -> usize {
        match self.context {
            ContextMode::None => N_FEATURES,
            ContextMode::Delta => 2 * N_FEATURES,
            ContextMode::Stack => 3 * N_FEATURES,
        }
    }
}

/// Per-frame feature rows with their column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Grid,
    /// `(name, start, end)` column slices.
    pub layout: Vec<(String, usize, usize)>,
}

impl FeatureMatrix {
    pub fn n_frames(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn slice(&self, name: &str) -> Option<(usize, usize)> {
        self.layout
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|&(_, a, b)| (a, b))
    }

    /// Columns `[start, end)` of every row.
    pub fn block(&self, name: &str) -> Option<Grid> {
        let (a, b) = self.slice(name)?;
        let data = self.rows.rows().flat_map(|r| r[a..b].iter().copied()).collect();
        Grid::from_vec(self.rows.n_rows(), b - a, data, self.rows.frame_rate).ok()
    }
}

fn base_layout() -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut c = 0;
    for (name, w) in FEATURE_BLOCKS {
        out.push((name.to_string(), c, c + w));
        c += w;
    }
    out
}

/// The six blocks, 116 columns, one row per frame centered at `(i + 0.5) / frame_rate`.
pub fn base_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    if clip.sample_rate != cfg.sample_rate {
        return Err(invalid(format!(
            "clip is {} Hz, features expect {} Hz",
            clip.sample_rate, cfg.sample_rate
        )));
    }
    if clip.duration() < MIN_CLIP_SECONDS {
        return Err(Error::TooShort(format!(
            "features need at least {MIN_CLIP_SECONDS} s of audio, got {:.3} s",
            clip.duration()
        )));
    }
    let spec = stft_centered(clip, cfg.fft_size, cfg.hop)?;
    let logspec = log_resample(&spec, cfg.bins_per_semitone, cfg.fmin, cfg.fmax)?;
    let layout = BandLayout::new(logspec.n_columns(), cfg.n_bands, cfg.band_overlap)?;
    let fl = fluctogram(&logspec.grid, &layout, cfg.max_lag)?;
    let flat = spectral_flatness(&logspec.grid, &layout)?;
    let contr = spectral_contraction(&logspec.grid, &layout)?;
    let bank = mel_filterbank(cfg.n_mels, 0.0, cfg.sample_rate as f64 / 2.0, cfg.fft_size, cfg.sample_rate)?;
    let mel = mel_spectrogram(&spec, &bank, DEFAULT_LOG_FLOOR)?;
    let mf = mfcc(&mel, cfg.n_mfcc)?;
    let vv = vocal_variance(&mf, cfg.vv_window)?;
    let dmf = delta(&mf, cfg.delta_span)?;
    let rows = Grid::hstack(&[&fl, &flat, &contr, &vv, &mf, &dmf])?;
    debug_assert_eq!(rows.n_cols(), N_FEATURES);
    Ok(FeatureMatrix {
        rows,
        layout: base_layout(),
    })
}

/// Appends temporal context according to `mode`.
pub fn add_context(base: &FeatureMatrix, mode: ContextMode, context_frames: usize) -> Result<FeatureMatrix> {
    let g = &base.rows;
    let n = g.n_rows();
    match mode {
        ContextMode::None => Ok(base.clone()),
        ContextMode::Delta => {
            let span = 2 * context_frames + 1;
            // Tracks shorter than the span fall back to the longest odd span that fits.
            let span = if span > n { (n.max(3) - 1) | 1 } else { span };
            if n < 3 {
                return Err(Error::TooShort(format!("{n} frames are too few for context")));
            }
            let d = delta(g, span)?;
            let mut layout = base.layout.clone();
            for (name, a, b) in &base.layout {
                layout.push((format!("ctx_{name}"), a + N_FEATURES, b + N_FEATURES));
            }
            Ok(FeatureMatrix {
                rows: Grid::hstack(&[g, &d])?,
                layout,
            })
        }
        ContextMode::Stack => {
            let k = context_frames as isize;
            let mut out = Grid::zeros(n, 3 * g.n_cols(), g.frame_rate);
            for t in 0..n as isize {
                let dst = out.row_mut(t as usize);
                for (slot, off) in [-k, 0, k].into_iter().enumerate() {
                    let src = g.row((t + off).clamp(0, n as isize - 1) as usize);
                    dst[slot * N_FEATURES..(slot + 1) * N_FEATURES].copy_from_slice(src);
                }
            }
            let mut layout = Vec::new();
            for (slot, tag) in ["prev", "cur", "next"].iter().enumerate() {
                for (name, a, b) in &base.layout {
                    layout.push((format!("{tag}_{name}"), a + slot * N_FEATURES, b + slot * N_FEATURES));
                }
            }
            Ok(FeatureMatrix { rows: out, layout })
        }
    }
}

/// Base features plus context.
pub fn assemble_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let base = base_features(clip, cfg)?;
    add_context(&base, cfg.context, cfg.context_frames)
}

/// Per-column mean and standard deviation fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &Grid) -> Result<Self> {
        let n = rows.n_rows();
        if n == 0 {
            return Err(invalid("cannot standardize an empty matrix"));
        }
        let c = rows.n_cols();
        let mut mean = vec![0.0; c];
        for r in rows.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; c];
        for r in rows.rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, rows: &Grid) -> Result<Grid> {
        if rows.n_cols() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "standardizer has {} columns, rows have {}",
                self.mean.len(),
                rows.n_cols()
            )));
        }
        let mut out = rows.clone();
        let c = self.mean.len();
        for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
            let j = i % c;
            *v = (*v - self.mean[j]) / self.std[j];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(seconds: f64) -> AudioClip {
        let n = (seconds * 22050.0) as usize;
        AudioClip::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 / 22050.0;
                    0.3 * (2.0 * PI * 330.0 * t + 2.0 * (2.0 * PI * 5.0 * t).sin()).sin()
                })
                .collect(),
            22050,
        )
        .unwrap()
    }

    #[test]
    fn layout_sums_to_116() {
        let total: usize = FEATURE_BLOCKS.iter().map(|b| b.1).sum();
        assert_eq!(total, N_FEATURES);
        let l = base_layout();
        assert_eq!(l.last().unwrap().2, 116);
    }

    #[test]
    fn base_features_shape() {
        let cfg = FeatureConfig::default();
        let f = base_features(&tone(2.0), &cfg).unwrap();
        assert_eq!(f.rows.n_cols(), 116);
        assert_eq!(f.n_frames(), 44100 / 315);
        assert!(f.rows.all_finite());
        assert_eq!(f.block("vocal_variance").unwrap().n_cols(), 5);
    }

    #[test]
    fn silence_features() {
        let f = base_features(&AudioClip::silence(2.0, 22050), &FeatureConfig::default()).unwrap();
        let zero = |name| f.block(name).unwrap().as_slice().iter().all(|&v| v == 0.0);
        assert!(zero("fluctogram"));
        assert!(zero("vocal_variance"));
        assert!(f.block("flatness").unwrap().as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(f.rows.all_finite());
    }

    #[test]
    fn context_widths() {
        let mut cfg = FeatureConfig::default();
        for (mode, width) in [(ContextMode::None, 116), (ContextMode::Delta, 232), (ContextMode::Stack, 348)] {
            cfg.context = mode;
            let f = assemble_features(&tone(2.0), &cfg).unwrap();
            assert_eq!(f.rows.n_cols(), width);
            assert_eq!(cfg.n_columns(), width);
        }
    }

    #[test]
    fn standardized_columns() {
        let f = base_features(&tone(2.0), &FeatureConfig::default()).unwrap();
        let s = Standardizer::fit(&f.rows).unwrap();
        let z = s.apply(&f.rows).unwrap();
        for c in 0..z.n_cols() {
            let col = z.column(c);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(m.abs() < 1e-9);
            // Constant columns are centered but left unscaled.
            assert!((sd - 1.0).abs() < 1e-6 || sd == 0.0, "column {c}: sd {sd}");
        }
    }

    #[test]
    fn inconsistent_config_rejected() {
        let cfg = FeatureConfig {
            n_bands: 16,
            ..FeatureConfig::default()
        };
        assert!(base_features(&tone(2.0), &cfg).is_err());
        let cfg = FeatureConfig {
            n_mels: 20,
            ..FeatureConfig::default()
        };
        assert!(base_features(&tone(2.0), &cfg).is_err());
        assert!(matches!(
            base_features(&tone(1.5), &FeatureConfig::default()),
            Err(Error::TooShort(_))
        ));
    }
}
