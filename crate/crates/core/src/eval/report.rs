use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics, ConfusionCounts, MetricsReport};
use crate::audio::FrameLabels;
use crate::error::{invalid, Error, Result};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongMetrics {
    pub song: String,
    pub counts: ConfusionCounts,
    pub metrics: MetricsReport,
}

/// Per-song metrics sorted by ascending accuracy, plus corpus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSongReport {
    pub songs: Vec<SongMetrics>,
    /// Metrics of the pooled frame counts.
    pub micro: MetricsReport,
    pub micro_counts: ConfusionCounts,
    /// Mean over songs of each metric the song defines.
    #[serde(rename = "macro")]
    pub macro_: MacroMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub accuracy: f64,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn mean_defined(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = vals.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Builds the report from already counted songs.
pub fn report_from_counts(songs: Vec<(String, ConfusionCounts)>) -> Result<PerSongReport> {
    if songs.is_empty() {
        return Err(invalid("per-song report needs at least one song"));
    }
    let mut seen = HashSet::new();
    for (id, _) in &songs {
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateSong(id.clone()));
        }
    }
    let mut rows: Vec<SongMetrics> = songs
        .into_iter()
        .map(|(song, counts)| Ok(SongMetrics { metrics: metrics(&counts)?, song, counts }))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.metrics.accuracy.total_cmp(&b.metrics.accuracy).then_with(|| a.song.cmp(&b.song)));
    let micro_counts: ConfusionCounts = rows.iter().map(|r| r.counts).sum();
    let m = |f: fn(&MetricsReport) -> Option<f64>| mean_defined(rows.iter().map(|r| f(&r.metrics)));
    let macro_ = MacroMetrics {
        accuracy: m(|r| Some(r.accuracy)).unwrap_or(0.0),
        recall: m(|r| r.recall),
        precision: m(|r| r.precision),
        f_measure: m(|r| r.f_measure),
        fpr: m(|r| r.fpr),
        fnr: m(|r| r.fnr),
    };
    Ok(PerSongReport {
        micro: metrics(&micro_counts)?,
        micro_counts,
        macro_,
        songs: rows,
    })
}

/// Per-song metrics from `(song id, prediction, reference)` triples.
pub fn per_song_report(tracks: &[(String, FrameLabels, FrameLabels)]) -> Result<PerSongReport> {
    let counts = tracks
        .iter()
        .map(|(id, p, t)| Ok((id.clone(), confusion(p, t)?)))
        .collect::<Result<Vec<_>>>()?;
    report_from_counts(counts)
}

impl PerSongReport {
    /// The `k` songs with the lowest accuracy.
    pub fn bottom(&self, k: usize) -> &[SongMetrics] {
        &self.songs[..k.min(self.songs.len())]
    }

    /// The `k` songs with the highest accuracy, best first.
    pub fn top(&self, k: usize) -> Vec<&SongMetrics> {
        self.songs.iter().rev().take(k).collect()
    }

    /// One row per song; undefined metrics are empty cells.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["song".to_string(), "frames".to_string()];
        header.extend(MetricsReport::COLUMNS.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for s in &self.songs {
            let mut rec = vec![s.song.clone(), s.counts.total().to_string()];
            rec.extend(s.metrics.values().iter().map(|v| v.map_or_else(String::new, |x| format!("{x:.4}"))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The JSON document written by an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub schema_version: u32,
    pub pipeline: String,
    pub threshold: f64,
    pub smooth_ms: f64,
    pub report: PerSongReport,
}

impl EvaluationSummary {
    pub fn new(pipeline: &str, threshold: f64, smooth_ms: f64, report: PerSongReport) -> Self {
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            pipeline: pipeline.to_string(),
            threshold,
            smooth_ms,
            report,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
