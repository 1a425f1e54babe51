use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{invalid, Result};

/// Zero crossings of the interpolation kernel on each side of its center.
pub const DEFAULT_ZERO_CROSSINGS: usize = 16;

/// Band-limited resampling with the default kernel length.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    resample_with_quality(clip, target_rate, DEFAULT_ZERO_CROSSINGS)
}

/// Windowed-sinc (Blackman) resampling. `zero_crossings` trades speed for stop-band attenuation.
pub fn resample_with_quality(
    clip: &AudioClip,
    target_rate: u32,
    zero_crossings: usize,
) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(invalid("target sample rate must be positive"));
    }
    if zero_crossings == 0 {
        return Err(invalid("resampler needs at least one zero crossing"));
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let src_rate = clip.sample_rate as f64;
    let ratio = target_rate as f64 / src_rate;
    let n_out = (clip.len() as f64 * ratio).round() as usize;
    // Low-pass at the lower of the two Nyquist frequencies.
    let cutoff = ratio.min(1.0);
    let half_width = zero_crossings as f64 / cutoff;
    let x = &clip.samples;
    let n_in = x.len() as isize;

    let samples = (0..n_out)
        .map(|i| {
            let pos = i as f64 / ratio;
            let lo = (pos - half_width).ceil() as isize;
            let hi = (pos + half_width).floor() as isize;
            let mut acc = 0.0;
            for k in lo.max(0)..=hi.min(n_in - 1) {
                let d = pos - k as f64;
                acc += x[k as usize] * kernel(d, cutoff, half_width);
            }
            acc
        })
        .collect();
    AudioClip::new(samples, target_rate)
}

fn kernel(d: f64, cutoff: f64, half_width: f64) -> f64 {
    if d.abs() >= half_width {
        return 0.0;
    }
    let arg = PI * cutoff * d;
    let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
    // Blackman window over [-half_width, half_width].
    let u = (d / half_width + 1.0) * 0.5;
    let w = 0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos();
    cutoff * sinc * w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, sr: u32, seconds: f64) -> AudioClip {
        let n = (seconds * sr as f64) as usize;
        AudioClip::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .unwrap()
    }

    /// Peak of the DFT magnitude near `freq`, normalized to sine amplitude (Hann window).
    fn spectral_peak(clip: &AudioClip, freq: f64) -> (f64, f64) {
        let n = clip.len();
        let w: Vec<f64> = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
            .collect();
        let wsum: f64 = w.iter().sum();
        let bin_hz = clip.sample_rate as f64 / n as f64;
        let center = (freq / bin_hz).round() as usize;
        let mut best = (0.0, 0.0);
        for k in center.saturating_sub(3)..=center + 3 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, (&s, &wi)) in clip.samples.iter().zip(&w).enumerate() {
                let ph = 2.0 * PI * k as f64 * i as f64 / n as f64;
                re += s * wi * ph.cos();
                im -= s * wi * ph.sin();
            }
            let mag = 2.0 * (re * re + im * im).sqrt() / wsum;
            if mag > best.1 {
                best = (k as f64 * bin_hz, mag);
            }
        }
        best
    }

    #[test]
    fn identity_rate_is_exact_copy() {
        let c = sine(440.0, 22050, 0.1);
        assert_eq!(resample(&c, 22050).unwrap(), c);
    }

    #[test]
    fn downsampled_sine_keeps_frequency_and_amplitude() {
        let c = sine(1000.0, 44100, 0.5);
        let r = resample(&c, 22050).unwrap();
        assert_eq!(r.len(), 11025);
        // Trim kernel edge effects before measuring.
        let inner_in = AudioClip::new(c.samples[4410..17640].to_vec(), 44100).unwrap();
        let inner_out = AudioClip::new(r.samples[2205..8820].to_vec(), 22050).unwrap();
        let (f_in, a_in) = spectral_peak(&inner_in, 1000.0);
        let (f_out, a_out) = spectral_peak(&inner_out, 1000.0);
        assert!((f_in - 1000.0).abs() < 5.0 && (f_out - 1000.0).abs() < 5.0);
        assert!((a_out / a_in - 1.0).abs() < 0.01, "{a_in} {a_out}");
    }

    #[test]
    fn upsampled_silence_length() {
        let c = AudioClip::silence(2.0, 8000);
        let r = resample(&c, 22050).unwrap();
        assert_eq!(r.len(), 44100);
        assert!(r.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn zero_target_rate_rejected() {
        assert!(resample(&AudioClip::silence(0.1, 8000), 0).is_err());
    }
}
