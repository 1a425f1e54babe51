use super::{Grid, Spectrogram};
use crate::error::{invalid, Error, Result};

/// Power floor applied before the logarithm (−100 dB).
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters, `n_mels × (fft_size / 2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Grid,
    /// `n_mels + 2` band edges in Hz; filter `k` spans `edges[k]..edges[k + 2]` and peaks at `edges[k + 1]`.
    pub edges_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.weights.n_rows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.n_cols()
    }
}

pub fn mel_filterbank(
    n_mels: usize,
    fmin: f64,
    fmax: f64,
    fft_size: usize,
    sample_rate: u32,
) -> Result<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(invalid(format!(
            "mel range needs 0 <= fmin < fmax <= {nyquist}, got {fmin}..{fmax}"
        )));
    }
    if n_mels == 0 || fft_size < 2 {
        return Err(invalid("mel filterbank needs n_mels >= 1 and fft_size >= 2"));
    }
    let n_bins = fft_size / 2 + 1;
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let mut weights = Grid::zeros(n_mels, n_bins, 0.0);
    for k in 0..n_mels {
        let (lo, c, hi) = (edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]);
        let row = weights.row_mut(k);
        for (b, w) in row.iter_mut().enumerate() {
            let f = b as f64 * bin_hz;
            let rise = (f - lo) / (c - lo);
            let fall = (hi - f) / (hi - c);
            *w = rise.min(fall).max(0.0);
        }
        if row.iter().all(|&w| w == 0.0) {
            return Err(invalid(format!(
                "{n_mels} mel bands are too many for fft_size {fft_size}: band {k} ({lo:.1}-{hi:.1} Hz) covers no bin"
            )));
        }
    }
    Ok(MelFilterbank { weights, edges_hz })
}

/// Log-power mel spectrogram in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// `n_frames × n_mels`.
    pub values: Grid,
    pub edges_hz: Vec<f64>,
}

impl MelSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.values.n_rows()
    }

    pub fn n_mels(&self) -> usize {
        self.values.n_cols()
    }

    pub fn frame_rate(&self) -> f64 {
        self.values.frame_rate
    }
}

/// `10·log10(max(bank · |X|², floor))` per frame.
pub fn mel_spectrogram(spec: &Spectrogram, bank: &MelFilterbank, floor: f64) -> Result<MelSpectrogram> {
    if bank.n_bins() != spec.n_bins() {
        return Err(Error::ShapeMismatch(format!(
            "filterbank has {} bins, spectrogram {}",
            bank.n_bins(),
            spec.n_bins()
        )));
    }
    if !(floor > 0.0) {
        return Err(invalid("log floor must be positive"));
    }
    let n_mels = bank.n_mels();
    // Each filter is nonzero only on a contiguous run of bins.
    let spans: Vec<(usize, usize)> = (0..n_mels)
        .map(|k| {
            let row = bank.weights.row(k);
            let first = row.iter().position(|&w| w > 0.0).unwrap_or(0);
            let last = row.iter().rposition(|&w| w > 0.0).map_or(0, |i| i + 1);
            (first, last)
        })
        .collect();
    let mut values = Grid::zeros(spec.n_frames(), n_mels, spec.frame_rate());
    let mut power = vec![0.0; spec.n_bins()];
    for t in 0..spec.n_frames() {
        for (p, &m) in power.iter_mut().zip(spec.magnitudes.row(t)) {
            *p = m * m;
        }
        let out = values.row_mut(t);
        for (k, &(a, b)) in spans.iter().enumerate() {
            let w = &bank.weights.row(k)[a..b];
            let e: f64 = w.iter().zip(&power[a..b]).map(|(w, p)| w * p).sum();
            out[k] = 10.0 * e.max(floor).log10();
        }
    }
    Ok(MelSpectrogram {
        values,
        edges_hz: bank.edges_hz.clone(),
    })
}
