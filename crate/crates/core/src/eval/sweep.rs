use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion_slices, metrics, ConfusionCounts};
use crate::audio::{labels_to_frames, AudioClip, LabelTrack};
use crate::error::{invalid, Result};
use crate::models::PredictionTrack;
use crate::stress::snr::{mix_at_snr, SnrMixSpec};

/// Anything that turns a mixture into smoothed frame decisions.
pub trait Detector: Send + Sync {
    fn name(&self) -> String;
    fn detect(&self, clip: &AudioClip) -> Result<PredictionTrack>;
}

/// Separated stems with their reference annotation.
#[derive(Debug, Clone)]
pub struct SweepTrack {
    pub id: String,
    pub vocal: AudioClip,
    pub instrumental: AudioClip,
    pub truth: LabelTrack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub snr_db: f64,
    pub counts: ConfusionCounts,
    /// Percentages; rates are `None` when their denominator is zero.
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub error: f64,
}

/// Counts a detector's decisions on one mixture against the reference.
pub fn score_clip(det: &dyn Detector, mix: &AudioClip, truth: &LabelTrack) -> Result<ConfusionCounts> {
    let pred = det.detect(mix)?;
    let reference = labels_to_frames(truth, pred.frame_rate, pred.len())?;
    confusion_slices(&pred.labels, &reference.labels)
}

/// Remixes every track at every level and scores every detector. Rows are
/// ordered by detector, then by level as given.
pub fn snr_sweep(tracks: &[SweepTrack], detectors: &[&dyn Detector], levels: &[f64], mix: &SnrMixSpec) -> Result<Vec<SweepRow>> {
    if levels.is_empty() {
        return Err(invalid("SNR sweep needs at least one level"));
    }
    if tracks.is_empty() {
        return Err(invalid("SNR sweep needs at least one track"));
    }
    let jobs: Vec<(usize, usize)> = (0..levels.len())
        .flat_map(|l| (0..tracks.len()).map(move |t| (l, t)))
        .collect();
    let mixes: Vec<AudioClip> = jobs
        .par_iter()
        .map(|&(l, t)| {
            let spec = SnrMixSpec { target_snr_db: levels[l], ..*mix };
            let r = mix_at_snr(&tracks[t].vocal, &tracks[t].instrumental, &spec)?;
            log::debug!("{} at {} dB: achieved {:.3} dB", tracks[t].id, levels[l], r.achieved_snr_db);
            Ok(r.mix)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..detectors.len())
        .flat_map(|d| (0..levels.len()).map(move |l| (d, l)))
        .collect();
    pairs
        .par_iter()
        .map(|&(d, l)| {
            let det = detectors[d];
            let mut counts = ConfusionCounts::default();
            for (t, track) in tracks.iter().enumerate() {
                counts += score_clip(det, &mixes[l * tracks.len() + t], &track.truth)?;
            }
            let m = metrics(&counts)?;
            Ok(SweepRow {
                model: det.name(),
                snr_db: levels[l],
                counts,
                fpr: m.fpr,
                fnr: m.fnr,
                error: 100.0 - m.accuracy,
            })
        })
        .collect()
}

/// Columns `model,snr_db,fpr,fnr,error` in percent; undefined rates are empty.
pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "snr_db", "fpr", "fnr", "error"])?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.4}"));
    for r in rows {
        w.write_record([r.model.clone(), r.snr_db.to_string(), cell(r.fpr), cell(r.fnr), format!("{:.4}", r.error)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{Interval, SegmentLabel};

    /// Calls a 100 ms frame vocal when the mixture RMS exceeds a threshold.
    struct Loudness(f64);

    impl Detector for Loudness {
        fn name(&self) -> String {
            "loudness".into()
        }

        fn detect(&self, clip: &AudioClip) -> Result<PredictionTrack> {
            let hop = clip.sample_rate as usize / 10;
            let probs = clip
                .samples
                .chunks_exact(hop)
                .map(|c| {
                    let rms = (c.iter().map(|s| s * s).sum::<f64>() / c.len() as f64).sqrt();
                    if rms > self.0 { 1.0 } else { 0.0 }
                })
                .collect();
            Ok(PredictionTrack::from_probabilities(10.0, probs))
        }
    }

    fn track() -> SweepTrack {
        let sr = 8000;
        let vocal: Vec<f64> = (0..2 * sr)
            .map(|i| if i >= sr { (i as f64 * 0.3).sin() } else { 0.0 })
            .collect();
        let inst: Vec<f64> = (0..2 * sr).map(|i| 0.1 * (i as f64 * 0.05).sin()).collect();
        SweepTrack {
            id: "t".into(),
            vocal: AudioClip::new(vocal, sr as u32).unwrap(),
            instrumental: AudioClip::new(inst, sr as u32).unwrap(),
            truth: LabelTrack::new(vec![
                Interval { start: 0.0, end: 1.0, label: SegmentLabel::Nonvocal },
                Interval { start: 1.0, end: 2.0, label: SegmentLabel::Vocal },
            ])
            .unwrap(),
        }
    }

    #[test]
    fn one_model_one_level_one_row() {
        let det = Loudness(0.2);
        let rows = snr_sweep(&[track()], &[&det], &[0.0], &SnrMixSpec::new(0.0)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].counts.total(), 20);
        let dir = tempfile::tempdir().unwrap();
        write_sweep_csv(&rows, dir.path().join("s.csv")).unwrap();
    }

    #[test]
    fn louder_vocals_are_missed_less() {
        let det = Loudness(0.2);
        let rows = snr_sweep(&[track()], &[&det], &[-12.0, 12.0], &SnrMixSpec::new(0.0)).unwrap();
        assert_eq!(rows[0].snr_db, -12.0);
        assert!(rows[1].fnr.unwrap() < rows[0].fnr.unwrap());
        assert!(snr_sweep(&[track()], &[&det], &[], &SnrMixSpec::new(0.0)).is_err());
    }
}
