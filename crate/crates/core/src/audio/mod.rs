//! Audio and annotation I/O.
//!
//! Audio is held as mono `f64` samples in nominal range `[-1, 1]`. Annotations
//! are half-open `[start, end)` intervals in seconds; anything not covered by a
//! vocal interval counts as nonvocal.

mod labels;
mod resample;
mod wav;

pub use labels::{
    activations_to_labels, labels_to_frames, parse_activation_csv, parse_lab, parse_lab_str,
    read_activation_csv, write_lab, Activation, FrameLabels, Interval, LabelTrack, SegmentLabel,
};
pub use resample::{resample, resample_with_quality, DEFAULT_ZERO_CROSSINGS};
pub use wav::{read_wav, write_wav};

use crate::error::{invalid, Result};

/// A mono signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(invalid("sample rate must be positive"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(seconds: f64, sample_rate: u32) -> Self {
        let n = (seconds * sample_rate as f64).round() as usize;
        Self {
            samples: vec![0.0; n],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Mean power (mean of squared samples).
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// First `seconds` of the clip (or the whole clip if shorter).
    pub fn truncated(&self, seconds: f64) -> Self {
        let n = ((seconds * self.sample_rate as f64).round() as usize).min(self.samples.len());
        Self {
            samples: self.samples[..n].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Prepends `left` and appends `right` zero samples.
    pub fn zero_padded(&self, left: usize, right: usize) -> Self {
        let mut samples = vec![0.0; left];
        samples.extend_from_slice(&self.samples);
        samples.resize(samples.len() + right, 0.0);
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    /// Sample-wise sum; the result has the length of the longer input.
    pub fn mixed_with(&self, other: &AudioClip) -> Result<Self> {
        if self.sample_rate != other.sample_rate {
            return Err(invalid(format!(
                "cannot mix {} Hz with {} Hz",
                self.sample_rate, other.sample_rate
            )));
        }
        let n = self.len().max(other.len());
        let mut samples = vec![0.0; n];
        for (d, s) in samples.iter_mut().zip(&self.samples) {
            *d += s;
        }
        for (d, s) in samples.iter_mut().zip(&other.samples) {
            *d += s;
        }
        Ok(Self {
            samples,
            sample_rate: self.sample_rate,
        })
    }
}
