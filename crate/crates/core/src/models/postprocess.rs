use std::path::Path;

use crate::dsp::median_filter_1d_bool;
use crate::error::{invalid, Result};

/// Per-frame vocal probabilities and the smoothed binary decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrack {
    pub frame_rate: f64,
    pub probabilities: Vec<f64>,
    pub labels: Vec<bool>,
}

impl PredictionTrack {
    /// Track with labels from a plain 0.5 threshold.
    pub fn from_probabilities(frame_rate: f64, probabilities: Vec<f64>) -> Self {
        let labels = probabilities.iter().map(|&p| p >= 0.5).collect();
        Self {
            frame_rate,
            probabilities,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Writes `time_s,probability,label` rows, time being the frame center.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time_s", "probability", "label"])?;
        for (i, (p, l)) in self.probabilities.iter().zip(&self.labels).enumerate() {
            let t = (i as f64 + 0.5) / self.frame_rate;
            w.write_record([format!("{t:.6}"), format!("{p:.9}"), (*l as u8).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(crate::error::Error::FileNotFound(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path)?;
        let mut times = Vec::new();
        let mut probabilities = Vec::new();
        let mut labels = Vec::new();
        for rec in r.deserialize::<(f64, f64, u8)>() {
            let (t, p, l) = rec?;
            times.push(t);
            probabilities.push(p);
            labels.push(l != 0);
        }
        let frame_rate = if times.len() >= 2 {
            (times.len() - 1) as f64 / (times[times.len() - 1] - times[0])
        } else if let Some(&t) = times.first() {
            0.5 / t
        } else {
            return Err(invalid("prediction file is empty"));
        };
        Ok(Self {
            frame_rate,
            probabilities,
            labels,
        })
    }
}

/// Median-filter length in frames: the odd count nearest to `smooth_ms · frame_rate / 1000`
/// (ties go up), at least 1.
pub fn smoothing_window(smooth_ms: f64, frame_rate: f64) -> usize {
    let x = smooth_ms * frame_rate / 1000.0;
    let w = 2.0 * ((x - 1.0) / 2.0).round() + 1.0;
    if w < 1.0 {
        1
    } else {
        w as usize
    }
}

/// Thresholds the probabilities and median-filters the labels.
pub fn postprocess(track: &PredictionTrack, threshold: f64, smooth_ms: f64) -> Result<PredictionTrack> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold {threshold} must be in (0, 1)")));
    }
    if !(smooth_ms >= 0.0) {
        return Err(invalid("smoothing length must be non-negative"));
    }
    let raw: Vec<bool> = track.probabilities.iter().map(|&p| p >= threshold).collect();
    let labels = median_filter_1d_bool(&raw, smoothing_window(smooth_ms, track.frame_rate))?;
    Ok(PredictionTrack {
        frame_rate: track.frame_rate,
        probabilities: track.probabilities.clone(),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eight_hundred_ms_at_seventy_fps() {
        assert_eq!(smoothing_window(800.0, 70.0), 57);
        assert_eq!(smoothing_window(0.0, 70.0), 1);
        assert_eq!(smoothing_window(100.0, 10.0), 1);
        assert_eq!(smoothing_window(300.0, 10.0), 3);
    }

    #[test]
    fn isolated_positive_removed_and_zero_smoothing_thresholds() {
        let mut p = vec![0.1; 101];
        p[50] = 0.9;
        let t = PredictionTrack::from_probabilities(70.0, p);
        let out = postprocess(&t, 0.5, 800.0).unwrap();
        assert!(out.labels.iter().all(|&l| !l));
        let out = postprocess(&t, 0.5, 0.0).unwrap();
        assert!(out.labels[50] && out.labels.iter().filter(|&&l| l).count() == 1);
        assert!(postprocess(&t, 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        let t = postprocess(&PredictionTrack::from_probabilities(70.0, vec![0.2, 0.7, 0.9, 0.1]), 0.5, 0.0).unwrap();
        t.write_csv(&p).unwrap();
        let back = PredictionTrack::read_csv(&p).unwrap();
        assert_eq!(back.labels, t.labels);
        assert!((back.frame_rate - 70.0).abs() < 1e-3);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("time_s,probability,label\n0.007143,"));
    }

    proptest! {
        #[test]
        fn postprocess_is_idempotent(p in prop::collection::vec(0.0f64..1.0, 1..300), ms in 0.0f64..1500.0) {
            let t = PredictionTrack::from_probabilities(70.0, p);
            let once = postprocess(&t, 0.5, ms).unwrap();
            let twice = postprocess(&once, 0.5, ms).unwrap();
            prop_assert_eq!(once.labels.len(), t.len());
            prop_assert_eq!(once, twice);
        }
    }
}
