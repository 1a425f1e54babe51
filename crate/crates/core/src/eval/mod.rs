//! Frame-level evaluation: confusion counts, metric reports, per-song
//! breakdowns, vibrato heatmaps and SNR sweeps.

pub mod heatmap;
pub mod metrics;
pub mod report;
pub mod sweep;

pub use heatmap::{vibrato_heatmap, HeatmapGrid};
pub use metrics::{confusion, confusion_slices, fmt_opt, metrics, ConfusionCounts, MetricsReport};
pub use report::{per_song_report, EvaluationSummary, PerSongReport, SongMetrics, SUMMARY_SCHEMA_VERSION};
pub use sweep::{snr_sweep, write_sweep_csv, Detector, SweepRow, SweepTrack};
