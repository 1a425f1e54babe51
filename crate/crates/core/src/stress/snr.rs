use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{invalid, Error, Result};

/// The remix levels of the SNR stress test, in dB.
pub const STANDARD_SNR_LEVELS: [f64; 5] = [-12.0, -6.0, 0.0, 6.0, 12.0];

/// Frames whose vocal power is below this level (dBFS) are ignored when measuring SNR.
pub const ACTIVITY_THRESHOLD_DBFS: f64 = -60.0;
/// Analysis frame for the activity decision, in samples.
pub const ACTIVITY_FRAME: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrMixSpec {
    pub target_snr_db: f64,
    /// Only the first `excerpt_seconds` of the stems are used; `None` keeps everything.
    pub excerpt_seconds: Option<f64>,
    /// Rescale the mix to a 0.99 peak when it would clip.
    pub peak_normalize: bool,
}

impl SnrMixSpec {
    pub fn new(target_snr_db: f64) -> Self {
        Self {
            target_snr_db,
            excerpt_seconds: Some(30.0),
            peak_normalize: false,
        }
    }
}

/// Mixed signal plus the numbers needed to audit it.
#[derive(Debug, Clone)]
pub struct SnrMixResult {
    pub mix: AudioClip,
    /// Gain applied to the vocal stem.
    pub gain: f64,
    pub input_snr_db: f64,
    /// SNR re-measured on the scaled vocal and the instrumental stem.
    pub achieved_snr_db: f64,
    pub clipped: bool,
    /// Factor applied to the whole mix by peak normalization (1 when none).
    pub normalization: f64,
}

/// Per-frame activity of `vocal`: true where its mean power exceeds the threshold.
pub fn vocal_activity(vocal: &AudioClip) -> Vec<bool> {
    let thresh = 10f64.powf(ACTIVITY_THRESHOLD_DBFS / 10.0);
    vocal
        .samples
        .chunks(ACTIVITY_FRAME)
        .map(|c| c.iter().map(|s| s * s).sum::<f64>() / c.len() as f64 > thresh)
        .collect()
}

/// Mean powers of both stems over the frames flagged in `active`.
fn active_powers(vocal: &AudioClip, instrumental: &AudioClip, active: &[bool]) -> (f64, f64, usize) {
    let (mut pv, mut pi, mut n) = (0.0, 0.0, 0usize);
    for (f, (v, i)) in vocal
        .samples
        .chunks(ACTIVITY_FRAME)
        .zip(instrumental.samples.chunks(ACTIVITY_FRAME))
        .enumerate()
    {
        if active.get(f).copied().unwrap_or(false) {
            pv += v.iter().map(|s| s * s).sum::<f64>();
            pi += i.iter().map(|s| s * s).sum::<f64>();
            n += v.len();
        }
    }
    (pv, pi, n)
}

fn snr_with_mask(vocal: &AudioClip, instrumental: &AudioClip, active: &[bool]) -> Result<f64> {
    let (pv, pi, n) = active_powers(vocal, instrumental, active);
    if n == 0 || pv <= 0.0 {
        return Err(Error::SnrUndefined("vocal stem is silent".into()));
    }
    if pi <= 0.0 {
        return Err(Error::SnrUndefined(
            "instrumental stem is silent where the vocal is active".into(),
        ));
    }
    Ok(10.0 * (pv / pi).log10())
}

fn check_stems(vocal: &AudioClip, instrumental: &AudioClip) -> Result<()> {
    if vocal.sample_rate != instrumental.sample_rate {
        return Err(invalid(format!(
            "stem rates differ: {} vs {}",
            vocal.sample_rate, instrumental.sample_rate
        )));
    }
    if vocal.len() != instrumental.len() {
        return Err(invalid(format!(
            "stem lengths differ: {} vs {}",
            vocal.len(),
            instrumental.len()
        )));
    }
    Ok(())
}

/// Vocal-to-instrumental power ratio in dB over the frames where the vocal is active.
pub fn measure_snr(vocal: &AudioClip, instrumental: &AudioClip) -> Result<f64> {
    check_stems(vocal, instrumental)?;
    snr_with_mask(vocal, instrumental, &vocal_activity(vocal))
}

/// Scales the vocal stem so that the vocal/instrumental SNR equals the target and sums the stems.
///
/// The activity frames are fixed by the unscaled vocal stem, so the
/// measurement region is the same before and after scaling.
pub fn mix_at_snr(vocal: &AudioClip, instrumental: &AudioClip, spec: &SnrMixSpec) -> Result<SnrMixResult> {
    if !spec.target_snr_db.is_finite() {
        return Err(invalid("target SNR must be finite"));
    }
    if vocal.sample_rate != instrumental.sample_rate {
        return Err(invalid(format!(
            "stem rates differ: {} vs {}",
            vocal.sample_rate, instrumental.sample_rate
        )));
    }
    let mut n = vocal.len().min(instrumental.len());
    if let Some(sec) = spec.excerpt_seconds {
        n = n.min((sec * vocal.sample_rate as f64).round() as usize);
    }
    let v = AudioClip::new(vocal.samples[..n].to_vec(), vocal.sample_rate)?;
    let i = AudioClip::new(instrumental.samples[..n].to_vec(), instrumental.sample_rate)?;

    let active = vocal_activity(&v);
    let current = snr_with_mask(&v, &i, &active)?;
    let gain = if spec.target_snr_db == current {
        1.0
    } else {
        10f64.powf((spec.target_snr_db - current) / 20.0)
    };
    let scaled = if gain == 1.0 { v } else { v.scaled(gain) };
    let achieved = snr_with_mask(&scaled, &i, &active)?;
    let mut mix = scaled.mixed_with(&i)?;
    let peak = mix.peak();
    let clipped = peak > 1.0;
    let mut normalization = 1.0;
    if clipped {
        if spec.peak_normalize {
            normalization = 0.99 / peak;
            mix = mix.scaled(normalization);
            log::info!("mix peak {peak:.3} normalized to 0.99");
        } else {
            log::warn!("mix at {:.1} dB clips (peak {peak:.3})", spec.target_snr_db);
        }
    }
    Ok(SnrMixResult {
        mix,
        gain,
        input_snr_db: current,
        achieved_snr_db: achieved,
        clipped,
        normalization,
    })
}
