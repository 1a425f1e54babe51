use std::f64::consts::PI;

use crate::audio::AudioClip;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiquadKind {
    /// Band-pass with unit gain at the center frequency.
    BandpassResonator,
    Lowpass,
}

/// Second-order section with `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    /// Largest pole modulus.
    pub fn pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc >= 0.0 {
            let s = disc.sqrt();
            ((-self.a1 + s) / 2.0).abs().max(((-self.a1 - s) / 2.0).abs())
        } else {
            // Complex-conjugate pair: |p|² = a2.
            self.a2.sqrt()
        }
    }

    pub fn is_stable(&self) -> bool {
        self.pole_radius() < 1.0
    }

    /// Magnitude response at `freq` Hz.
    pub fn gain_at(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let nr = self.b0 + self.b1 * c1 + self.b2 * c2;
        let ni = -(self.b1 * s1 + self.b2 * s2);
        let dr = 1.0 + self.a1 * c1 + self.a2 * c2;
        let di = -(self.a1 * s1 + self.a2 * s2);
        ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
    }
}

/// Audio-EQ-cookbook designs. `q` is center/bandwidth for the resonator and the
/// resonance for the low-pass (0.7071 for Butterworth).
pub fn biquad_design(kind: BiquadKind, freq: f64, q: f64, sample_rate: u32) -> Result<BiquadCoeffs> {
    let sr = sample_rate as f64;
    if !(freq > 0.0 && freq < sr / 2.0) {
        return Err(invalid(format!(
            "filter frequency {freq} Hz must lie in (0, {}) Hz",
            sr / 2.0
        )));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(invalid(format!("filter Q {q} must be positive")));
    }
    let w0 = 2.0 * PI * freq / sr;
    let (cw, sw) = (w0.cos(), w0.sin());
    let alpha = sw / (2.0 * q);
    let a0 = 1.0 + alpha;
    let (b0, b1, b2) = match kind {
        BiquadKind::BandpassResonator => (alpha, 0.0, -alpha),
        BiquadKind::Lowpass => ((1.0 - cw) / 2.0, 1.0 - cw, (1.0 - cw) / 2.0),
    };
    let c = BiquadCoeffs {
        b0: b0 / a0,
        b1: b1 / a0,
        b2: b2 / a0,
        a1: -2.0 * cw / a0,
        a2: (1.0 - alpha) / a0,
    };
    if !c.is_stable() {
        return Err(invalid(format!(
            "unstable biquad for {freq} Hz, Q {q} (pole radius {})",
            c.pole_radius()
        )));
    }
    Ok(c)
}

/// Transposed direct-form II filtering from zero state.
pub fn biquad_apply(c: &BiquadCoeffs, clip: &AudioClip) -> AudioClip {
    let (mut z1, mut z2) = (0.0, 0.0);
    let samples = clip
        .samples
        .iter()
        .map(|&x| {
            let y = c.b0 * x + z1;
            z1 = c.b1 * x - c.a1 * y + z2;
            z2 = c.b2 * x - c.a2 * y;
            y
        })
        .collect();
    AudioClip {
        samples,
        sample_rate: clip.sample_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine(freq: f64, sr: u32, n: usize) -> AudioClip {
        AudioClip::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .unwrap()
    }

    fn steady_peak(c: &AudioClip) -> f64 {
        c.samples[c.len() / 2..].iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    #[test]
    fn resonator_passes_center() {
        let c = biquad_design(BiquadKind::BandpassResonator, 1000.0, 5.0, 22050).unwrap();
        let y = biquad_apply(&c, &sine(1000.0, 22050, 22050));
        assert!((steady_peak(&y) - 1.0).abs() < 0.01);
        assert!((c.gain_at(1000.0, 22050.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonator_rejects_far_tone() {
        let c = biquad_design(BiquadKind::BandpassResonator, 1000.0, 5.0, 22050).unwrap();
        let y = biquad_apply(&c, &sine(4000.0, 22050, 22050));
        assert!(steady_peak(&y) < 0.25);
    }

    #[test]
    fn lowpass_keeps_dc() {
        let c = biquad_design(BiquadKind::Lowpass, 5000.0, std::f64::consts::FRAC_1_SQRT_2, 22050).unwrap();
        let y = biquad_apply(&c, &AudioClip::new(vec![0.3; 4000], 22050).unwrap());
        assert!((y.samples[3999] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn out_of_band_center_rejected() {
        assert!(biquad_design(BiquadKind::BandpassResonator, 12000.0, 5.0, 22050).is_err());
        assert!(biquad_design(BiquadKind::Lowpass, 0.0, 1.0, 22050).is_err());
        assert!(biquad_design(BiquadKind::Lowpass, 100.0, 0.0, 22050).is_err());
    }

    proptest! {
        #[test]
        fn designs_are_stable(f in 20.0f64..11000.0, q in 0.1f64..60.0, lp in any::<bool>()) {
            let kind = if lp { BiquadKind::Lowpass } else { BiquadKind::BandpassResonator };
            let c = biquad_design(kind, f, q, 22050).unwrap();
            prop_assert!(c.pole_radius() < 1.0);
        }
    }
}
