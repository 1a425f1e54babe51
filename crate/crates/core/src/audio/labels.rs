use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentLabel {
    Vocal,
    Nonvocal,
}

/// Half-open time interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub label: SegmentLabel,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Sorted, non-overlapping labeled intervals. Adjacent intervals with equal labels are merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelTrack {
    intervals: Vec<Interval>,
}

impl LabelTrack {
    /// Validates and normalizes a list of intervals.
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        for iv in &intervals {
            if !(iv.start.is_finite() && iv.end.is_finite()) || iv.start < 0.0 || iv.start >= iv.end {
                return Err(invalid(format!(
                    "interval [{}, {}) violates 0 <= start < end",
                    iv.start, iv.end
                )));
            }
        }
        intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in intervals.windows(2) {
            if w[1].start < w[0].end - TIME_EPS {
                return Err(invalid(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(Self {
            intervals: merge_adjacent(intervals),
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn vocal_intervals(&self) -> impl Iterator<Item = &Interval> {
        self.intervals
            .iter()
            .filter(|iv| iv.label == SegmentLabel::Vocal)
    }

    pub fn is_vocal_at(&self, t: f64) -> bool {
        // Intervals are sorted; find the last one starting at or before t.
        let idx = self.intervals.partition_point(|iv| iv.start <= t);
        idx > 0 && {
            let iv = &self.intervals[idx - 1];
            iv.label == SegmentLabel::Vocal && iv.contains(t)
        }
    }

    /// Total vocal time in seconds.
    pub fn vocal_duration(&self) -> f64 {
        self.vocal_intervals().map(|iv| iv.end - iv.start).sum()
    }
}

fn merge_adjacent(intervals: Vec<Interval>) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match out.last_mut() {
            Some(last) if last.label == iv.label && (iv.start - last.end).abs() <= TIME_EPS => {
                last.end = last.end.max(iv.end);
            }
            _ => out.push(iv),
        }
    }
    out
}

/// Parses a whitespace-separated `start end label` annotation file.
pub fn parse_lab(path: impl AsRef<Path>, vocal_aliases: &HashSet<String>) -> Result<LabelTrack> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    parse_lab_str(&text, vocal_aliases, &path.display().to_string())
}

/// Like [`parse_lab`] but from an in-memory string; `source_name` appears in error messages.
pub fn parse_lab_str(
    text: &str,
    vocal_aliases: &HashSet<String>,
    source_name: &str,
) -> Result<LabelTrack> {
    let err = |line: usize, message: String| Error::Annotation {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut entries: Vec<(usize, Interval)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(s), Some(e), Some(label)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(line_no, format!("expected `start end label`, got {line:?}")));
        };
        let start: f64 = s
            .parse()
            .map_err(|_| err(line_no, format!("non-numeric start {s:?}")))?;
        let end: f64 = e
            .parse()
            .map_err(|_| err(line_no, format!("non-numeric end {e:?}")))?;
        if !(start.is_finite() && end.is_finite()) || start < 0.0 || start >= end {
            return Err(err(line_no, format!("start {start} must be >= 0 and < end {end}")));
        }
        let label = if vocal_aliases.contains(label) {
            SegmentLabel::Vocal
        } else {
            SegmentLabel::Nonvocal
        };
        entries.push((line_no, Interval { start, end, label }));
    }
    entries.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
    for w in entries.windows(2) {
        if w[1].1.start < w[0].1.end - TIME_EPS {
            return Err(err(
                w[1].0,
                format!(
                    "interval [{}, {}) overlaps the one on line {}",
                    w[1].1.start, w[1].1.end, w[0].0
                ),
            ));
        }
    }
    LabelTrack::new(entries.into_iter().map(|(_, iv)| iv).collect())
}

/// Writes a track in the `start end label` format using `vocal_name`/`nonvocal_name` labels.
pub fn write_lab(track: &LabelTrack, path: impl AsRef<Path>, vocal_name: &str, nonvocal_name: &str) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for iv in track.intervals() {
        let name = match iv.label {
            SegmentLabel::Vocal => vocal_name,
            SegmentLabel::Nonvocal => nonvocal_name,
        };
        writeln!(f, "{:.6} {:.6} {}", iv.start, iv.end, name)?;
    }
    f.flush()?;
    Ok(())
}

/// One row of an instrument-activation annotation.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct Activation {
    pub instrument: String,
    pub start: f64,
    pub end: f64,
}

/// Reads an activation CSV with header `instrument,start,end`.
pub fn read_activation_csv(path: impl AsRef<Path>) -> Result<Vec<Activation>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    parse_activation_csv(&text, &path.display().to_string())
}

pub fn parse_activation_csv(text: &str, source_name: &str) -> Result<Vec<Activation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Activation>().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let a = rec.map_err(|e| Error::Annotation {
            source_name: source_name.to_string(),
            line,
            message: e.to_string(),
        })?;
        if !(a.start.is_finite() && a.end.is_finite()) || a.start < 0.0 || a.start >= a.end {
            return Err(Error::Annotation {
                source_name: source_name.to_string(),
                line,
                message: format!("start {} must be >= 0 and < end {}", a.start, a.end),
            });
        }
        out.push(a);
    }
    Ok(out)
}

/// Unions the activations of the vocal instruments into a vocal/nonvocal track.
pub fn activations_to_labels(
    activations: &[Activation],
    vocal_instruments: &HashSet<String>,
) -> Result<LabelTrack> {
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for a in activations {
        if !(a.start.is_finite() && a.end.is_finite()) || a.start < 0.0 || a.start >= a.end {
            return Err(invalid(format!(
                "activation of {:?} has bad bounds [{}, {})",
                a.instrument, a.start, a.end
            )));
        }
        if vocal_instruments.contains(&a.instrument) {
            spans.push((a.start, a.end));
        }
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in spans {
        match merged.last_mut() {
            Some(last) if s <= last.1 + TIME_EPS => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    LabelTrack::new(
        merged
            .into_iter()
            .map(|(start, end)| Interval {
                start,
                end,
                label: SegmentLabel::Vocal,
            })
            .collect(),
    )
}

/// Per-frame vocal flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabels {
    pub frame_rate: f64,
    pub labels: Vec<bool>,
}

impl FrameLabels {
    pub fn new(frame_rate: f64, labels: Vec<bool>) -> Result<Self> {
        if !(frame_rate > 0.0) {
            return Err(invalid("frame rate must be positive"));
        }
        Ok(Self { frame_rate, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn vocal_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&v| v).count() as f64 / self.labels.len() as f64
    }
}

/// Frame `i` is vocal iff its center `(i + 0.5) / frame_rate` falls inside a vocal interval.
pub fn labels_to_frames(track: &LabelTrack, frame_rate: f64, n_frames: usize) -> Result<FrameLabels> {
    if !(frame_rate > 0.0) {
        return Err(invalid("frame rate must be positive"));
    }
    if n_frames == 0 {
        return Err(invalid("n_frames must be positive"));
    }
    let labels = (0..n_frames)
        .map(|i| track.is_vocal_at((i as f64 + 0.5) / frame_rate))
        .collect();
    FrameLabels::new(frame_rate, labels)
}
