use crate::dsp::{Grid, Spectrogram};
use crate::error::{invalid, Result};

/// Magnitudes on a geometric frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSpectrogram {
    /// `n_frames × n_columns`.
    pub grid: Grid,
    pub fmin: f64,
    pub bins_per_semitone: usize,
}

impl LogSpectrogram {
    /// Frequency of column `j`.
    pub fn column_hz(&self, j: usize) -> f64 {
        self.fmin * 2f64.powf(j as f64 / (12 * self.bins_per_semitone) as f64)
    }

    pub fn n_columns(&self) -> usize {
        self.grid.n_cols()
    }
}

/// Number of columns of a `bins_per_semitone` axis from `fmin` up to and including `fmax`.
pub fn log_axis_len(bins_per_semitone: usize, fmin: f64, fmax: f64) -> usize {
    ((12 * bins_per_semitone) as f64 * (fmax / fmin).log2() + 1e-9).floor() as usize + 1
}

/// Linearly interpolates each frame onto `fmin · 2^(j / (12 · bins_per_semitone))`.
pub fn log_resample(spec: &Spectrogram, bins_per_semitone: usize, fmin: f64, fmax: f64) -> Result<LogSpectrogram> {
    let nyq = spec.sample_rate as f64 / 2.0;
    if bins_per_semitone == 0 {
        return Err(invalid("bins_per_semitone must be positive"));
    }
    if !(fmin > 0.0 && fmin < fmax && fmax <= nyq) {
        return Err(invalid(format!(
            "log axis needs 0 < fmin < fmax <= {nyq}, got {fmin}..{fmax}"
        )));
    }
    let n_cols = log_axis_len(bins_per_semitone, fmin, fmax);
    let last_bin = spec.n_bins() - 1;
    // Precompute the interpolation taps.
    let taps: Vec<(usize, usize, f64)> = (0..n_cols)
        .map(|j| {
            let pos = fmin * 2f64.powf(j as f64 / (12 * bins_per_semitone) as f64) / spec.bin_hz;
            let lo = (pos.floor() as usize).min(last_bin);
            let hi = (lo + 1).min(last_bin);
            (lo, hi, (pos - lo as f64).clamp(0.0, 1.0))
        })
        .collect();
    let mut grid = Grid::zeros(spec.n_frames(), n_cols, spec.frame_rate());
    for t in 0..spec.n_frames() {
        let src = spec.magnitudes.row(t);
        for (d, &(lo, hi, w)) in grid.row_mut(t).iter_mut().zip(&taps) {
            *d = src[lo] * (1.0 - w) + src[hi] * w;
        }
    }
    Ok(LogSpectrogram {
        grid,
        fmin,
        bins_per_semitone,
    })
}

/// Equal-width, evenly overlapping bands over the log axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLayout {
    /// Half-open column ranges.
    pub bands: Vec<(usize, usize)>,
}

impl BandLayout {
    /// `n_bands` bands of equal width overlapping by `overlap` (a fraction in `[0, 1)`), spanning `n_columns`.
    pub fn new(n_columns: usize, n_bands: usize, overlap: f64) -> Result<Self> {
        if n_bands == 0 || !(0.0..1.0).contains(&overlap) {
            return Err(invalid("band layout needs n_bands >= 1 and overlap in [0, 1)"));
        }
        // n_bands·w − (n_bands − 1)·overlap·w = n_columns
        let span = n_bands as f64 - (n_bands - 1) as f64 * overlap;
        let width = (n_columns as f64 / span).floor() as usize;
        if width < 4 {
            return Err(invalid(format!(
                "{n_columns} columns are too few for {n_bands} bands"
            )));
        }
        let free = (n_columns - width) as f64;
        let bands = (0..n_bands)
            .map(|i| {
                let start = if n_bands == 1 {
                    0
                } else {
                    (free * i as f64 / (n_bands - 1) as f64).round() as usize
                };
                (start, start + width)
            })
            .collect();
        Ok(Self { bands })
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn check(&self, n_columns: usize) -> Result<()> {
        for &(a, b) in &self.bands {
            if a >= b || b > n_columns {
                return Err(invalid(format!(
                    "band {a}..{b} does not fit a {n_columns}-column grid"
                )));
            }
        }
        Ok(())
    }
}
