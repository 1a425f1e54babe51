use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::Grid;
use crate::audio::AudioClip;
use crate::error::{invalid, Error, Result};

/// Magnitude STFT, one row per frame and `fft_size / 2 + 1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Grid,
    pub bin_hz: f64,
    pub fft_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.magnitudes.n_rows()
    }

    pub fn n_bins(&self) -> usize {
        self.magnitudes.n_cols()
    }

    pub fn frame_rate(&self) -> f64 {
        self.magnitudes.frame_rate
    }

    /// Same geometry with different magnitudes.
    pub fn with_magnitudes(&self, magnitudes: Grid) -> Result<Spectrogram> {
        self.magnitudes.check_same_shape(&magnitudes)?;
        Ok(Spectrogram {
            magnitudes,
            ..self.clone()
        })
    }
}

/// Complex STFT kept for resynthesis.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub n_frames: usize,
    pub n_bins: usize,
    pub bins: Vec<Complex64>,
    pub fft_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
    /// Length of the analyzed signal, used to size the resynthesis.
    pub signal_len: usize,
}

impl ComplexSpectrogram {
    pub fn magnitude(&self) -> Spectrogram {
        let data = self.bins.iter().map(|c| c.norm()).collect();
        Spectrogram {
            magnitudes: Grid::from_vec(
                self.n_frames,
                self.n_bins,
                data,
                self.sample_rate as f64 / self.hop as f64,
            )
            .expect("bin count matches shape"),
            bin_hz: self.sample_rate as f64 / self.fft_size as f64,
            fft_size: self.fft_size,
            hop: self.hop,
            sample_rate: self.sample_rate,
        }
    }

    /// Multiplies every bin by the matching entry of a real mask grid.
    pub fn masked(&self, mask: &Grid) -> Result<ComplexSpectrogram> {
        if mask.shape() != (self.n_frames, self.n_bins) {
            return Err(Error::ShapeMismatch(format!(
                "mask {:?} vs spectrogram {:?}",
                mask.shape(),
                (self.n_frames, self.n_bins)
            )));
        }
        let bins = self
            .bins
            .iter()
            .zip(mask.as_slice())
            .map(|(c, &m)| c * m)
            .collect();
        Ok(ComplexSpectrogram {
            bins,
            ..self.clone()
        })
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Number of full frames of `fft_size` at `hop` in `len` samples.
pub fn n_frames(len: usize, fft_size: usize, hop: usize) -> usize {
    if len < fft_size {
        0
    } else {
        (len - fft_size) / hop + 1
    }
}

fn check_params(clip: &AudioClip, fft_size: usize, hop: usize) -> Result<()> {
    if !fft_size.is_power_of_two() || fft_size < 2 {
        return Err(invalid(format!("fft_size {fft_size} is not a power of two")));
    }
    if hop == 0 || hop > fft_size {
        return Err(invalid(format!("hop {hop} must be in 1..={fft_size}")));
    }
    if clip.len() < fft_size {
        return Err(Error::TooShort(format!(
            "clip has {} samples, one frame needs {fft_size}",
            clip.len()
        )));
    }
    Ok(())
}

/// Hann-windowed complex STFT; frame `t` covers samples `[t·hop, t·hop + fft_size)`.
pub fn stft_complex(clip: &AudioClip, fft_size: usize, hop: usize) -> Result<ComplexSpectrogram> {
    check_params(clip, fft_size, hop)?;
    let n = n_frames(clip.len(), fft_size, hop);
    let n_bins = fft_size / 2 + 1;
    let window = hann_window(fft_size);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); fft_size];
    let mut bins = Vec::with_capacity(n * n_bins);
    for t in 0..n {
        let frame = &clip.samples[t * hop..t * hop + fft_size];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        bins.extend_from_slice(&buf[..n_bins]);
    }
    Ok(ComplexSpectrogram {
        n_frames: n,
        n_bins,
        bins,
        fft_size,
        hop,
        sample_rate: clip.sample_rate,
        signal_len: clip.len(),
    })
}

/// Magnitude STFT.
pub fn stft(clip: &AudioClip, fft_size: usize, hop: usize) -> Result<Spectrogram> {
    Ok(stft_complex(clip, fft_size, hop)?.magnitude())
}

/// Left padding that centers frame `i` at sample `(i + 0.5) · hop`.
pub fn centered_pad(fft_size: usize, hop: usize) -> usize {
    fft_size / 2 - hop / 2
}

/// STFT of a zero-padded clip with exactly `len / hop` frames, frame `i`
/// centered at time `(i + 0.5) · hop / sample_rate`.
pub fn stft_centered_complex(clip: &AudioClip, fft_size: usize, hop: usize) -> Result<ComplexSpectrogram> {
    if hop == 0 || hop > fft_size {
        return Err(invalid(format!("hop {hop} must be in 1..={fft_size}")));
    }
    let n = clip.len() / hop;
    if n == 0 {
        return Err(Error::TooShort(format!(
            "clip has {} samples, less than one hop of {hop}",
            clip.len()
        )));
    }
    let left = centered_pad(fft_size, hop);
    let total = (n - 1) * hop + fft_size;
    let padded = clip.zero_padded(left, total.saturating_sub(left + clip.len()));
    let mut spec = stft_complex(&padded, fft_size, hop)?;
    spec.n_frames = n;
    spec.bins.truncate(n * spec.n_bins);
    Ok(spec)
}

pub fn stft_centered(clip: &AudioClip, fft_size: usize, hop: usize) -> Result<Spectrogram> {
    Ok(stft_centered_complex(clip, fft_size, hop)?.magnitude())
}

/// Weighted overlap-add inverse of [`stft_complex`].
///
/// Samples where the summed squared window is negligible (the outermost edges
/// for hops close to the frame size) are set to zero.
pub fn istft(spec: &ComplexSpectrogram) -> AudioClip {
    let n_fft = spec.fft_size;
    let window = hann_window(n_fft);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);
    let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); n_fft];
    let len = spec.signal_len;
    let mut out = vec![0.0; len];
    let mut wsum = vec![0.0; len];
    for t in 0..spec.n_frames {
        let row = &spec.bins[t * spec.n_bins..(t + 1) * spec.n_bins];
        buf[..spec.n_bins].copy_from_slice(row);
        // Hermitian completion so the inverse is real.
        for k in spec.n_bins..n_fft {
            buf[k] = row[n_fft - k].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = t * spec.hop;
        for i in 0..n_fft {
            if start + i >= len {
                break;
            }
            out[start + i] += buf[i].re / n_fft as f64 * window[i];
            wsum[start + i] += window[i] * window[i];
        }
    }
    let wmax = wsum.iter().cloned().fold(0.0, f64::max);
    for (o, &w) in out.iter_mut().zip(&wsum) {
        *o = if w > 1e-3 * wmax { *o / w } else { 0.0 };
    }
    AudioClip {
        samples: out,
        sample_rate: spec.sample_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sine(freq: f64, sr: u32, n: usize) -> AudioClip {
        AudioClip::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .unwrap()
    }

    #[test]
    fn sine_peaks_at_expected_bin() {
        let s = stft(&sine(220.0, 22050, 22050), 1024, 256).unwrap();
        let expected = (220.0f64 * 1024.0 / 22050.0).round() as usize;
        assert_eq!(expected, 10);
        for row in s.magnitudes.rows() {
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, expected);
        }
    }

    #[test]
    fn silence_and_frame_count() {
        let s = stft(&AudioClip::silence(2.0, 22050), 1024, 315).unwrap();
        assert_eq!(s.n_frames(), (44100 - 1024) / 315 + 1);
        assert_eq!(s.n_frames(), 137);
        assert_eq!(s.n_bins(), 513);
        assert!(s.magnitudes.as_slice().iter().all(|&m| m == 0.0));
        assert!((s.frame_rate() - 70.0).abs() < 1e-12);
    }

    #[test]
    fn precondition_errors() {
        let c = AudioClip::silence(0.01, 22050);
        assert!(matches!(stft(&c, 1024, 256), Err(Error::TooShort(_))));
        let c = AudioClip::silence(1.0, 22050);
        assert!(stft(&c, 1000, 256).is_err());
        assert!(stft(&c, 1024, 0).is_err());
        assert!(stft(&c, 1024, 2048).is_err());
    }

    #[test]
    fn centered_frames_cover_the_clip() {
        let clip = sine(440.0, 22050, 22050 * 2 + 100);
        let s = stft_centered(&clip, 2048, 315).unwrap();
        assert_eq!(s.n_frames(), (22050 * 2 + 100) / 315);
        // A clip shorter than one frame still yields frames.
        let s = stft_centered(&sine(440.0, 22050, 1000), 2048, 315).unwrap();
        assert_eq!(s.n_frames(), 3);
    }

    #[test]
    fn istft_reconstructs_interior() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let clip = AudioClip::new((0..8000).map(|_| rng.gen_range(-1.0..1.0)).collect(), 8000).unwrap();
        for &(n, hop) in &[(512usize, 128usize), (256, 64)] {
            let back = istft(&stft_complex(&clip, n, hop).unwrap());
            assert_eq!(back.len(), clip.len());
            let last_full = n_frames(clip.len(), n, hop) * hop;
            for i in n..last_full {
                assert!((back.samples[i] - clip.samples[i]).abs() < 1e-9, "sample {i}");
            }
        }
    }

    #[test]
    fn white_noise_power_grows_linearly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let lens = [1.0, 2.0, 3.0, 4.0, 5.0];
        let powers: Vec<f64> = lens
            .iter()
            .map(|&sec| {
                let n = (sec * 8000.0) as usize;
                let c = AudioClip::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), 8000).unwrap();
                stft(&c, 256, 128).unwrap().magnitudes.energy()
            })
            .collect();
        let mx = lens.iter().sum::<f64>() / 5.0;
        let my = powers.iter().sum::<f64>() / 5.0;
        let sxy: f64 = lens.iter().zip(&powers).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = lens.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = powers.iter().map(|y| (y - my).powi(2)).sum();
        let r2 = sxy * sxy / (sxx * syy);
        assert!(r2 > 0.99, "r2 = {r2}");
    }
}
