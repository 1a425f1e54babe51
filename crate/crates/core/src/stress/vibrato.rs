use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioClip};
use crate::dsp::{biquad_apply, biquad_design, BiquadKind};
use crate::error::{invalid, Result};

pub const GRID_RATES: [f64; 7] = [0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0];
pub const GRID_DEVIATIONS: [f64; 8] = [0.01, 0.1, 0.3, 0.6, 1.0, 2.0, 4.0, 8.0];
pub const GRID_FORMANTS: [Option<Vowel>; 6] = [
    None,
    Some(Vowel::A),
    Some(Vowel::E),
    Some(Vowel::I),
    Some(Vowel::O),
    Some(Vowel::U),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vowel {
    A,
    E,
    I,
    O,
    U,
}

impl Vowel {
    pub fn name(self) -> &'static str {
        match self {
            Vowel::A => "a",
            Vowel::E => "e",
            Vowel::I => "i",
            Vowel::O => "o",
            Vowel::U => "u",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a" => Some(Vowel::A),
            "e" => Some(Vowel::E),
            "i" => Some(Vowel::I),
            "o" => Some(Vowel::O),
            "u" => Some(Vowel::U),
            _ => None,
        }
    }
}

/// Name of a formant condition as used in manifests (`none` for unfiltered).
pub fn formant_name(f: Option<Vowel>) -> &'static str {
    f.map_or("none", Vowel::name)
}

pub fn parse_formant(s: &str) -> Result<Option<Vowel>> {
    if s == "none" {
        return Ok(None);
    }
    Vowel::parse(s)
        .map(Some)
        .ok_or_else(|| invalid(format!("unknown formant condition {s:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Formant {
    pub center: f64,
    pub bandwidth: f64,
    pub gain: f64,
}

const fn formant(center: f64, bandwidth: f64) -> Formant {
    Formant {
        center,
        bandwidth,
        gain: 1.0,
    }
}

/// Three formants per vowel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormantTable {
    pub a: [Formant; 3],
    pub e: [Formant; 3],
    pub i: [Formant; 3],
    pub o: [Formant; 3],
    pub u: [Formant; 3],
}

impl Default for FormantTable {
    /// Average adult-male vowel formants.
    fn default() -> Self {
        Self {
            a: [formant(730.0, 80.0), formant(1090.0, 90.0), formant(2440.0, 120.0)],
            e: [formant(530.0, 80.0), formant(1840.0, 90.0), formant(2480.0, 120.0)],
            i: [formant(270.0, 80.0), formant(2290.0, 90.0), formant(3010.0, 120.0)],
            o: [formant(570.0, 80.0), formant(840.0, 90.0), formant(2410.0, 120.0)],
            u: [formant(300.0, 80.0), formant(870.0, 90.0), formant(2240.0, 120.0)],
        }
    }
}

impl FormantTable {
    pub fn get(&self, v: Vowel) -> &[Formant; 3] {
        match v {
            Vowel::A => &self.a,
            Vowel::E => &self.e,
            Vowel::I => &self.i,
            Vowel::O => &self.o,
            Vowel::U => &self.u,
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyq = sample_rate as f64 / 2.0;
        for v in [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U] {
            let row = self.get(v);
            for f in row {
                if !(f.center > 0.0 && f.center < nyq && f.bandwidth > 0.0 && f.gain.is_finite()) {
                    return Err(invalid(format!(
                        "vowel {}: formant {:?} unreachable at {sample_rate} Hz",
                        v.name(),
                        f
                    )));
                }
            }
            if !(row[0].center < row[1].center && row[1].center < row[2].center) {
                return Err(invalid(format!("vowel {}: formants not ordered", v.name())));
            }
        }
        Ok(())
    }
}

/// One vibrato tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibratoSpec {
    pub f0: f64,
    pub rate: f64,
    /// Peak excursion in semitones.
    pub deviation: f64,
    pub formant: Option<Vowel>,
    pub duration: f64,
}

impl VibratoSpec {
    pub fn new(rate: f64, deviation: f64, formant: Option<Vowel>, duration: f64) -> Self {
        Self {
            f0: 220.0,
            rate,
            deviation,
            formant,
            duration,
        }
    }

    /// Instantaneous frequency in Hz at time `t`.
    pub fn frequency_at(&self, t: f64) -> f64 {
        self.f0 * 2f64.powf(self.deviation * (2.0 * PI * self.rate * t).sin() / 12.0)
    }
}

/// Synthesis settings shared by every clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VibratoSynthConfig {
    /// Sawtooth harmonics stop here; also the one-pole low-pass cutoff.
    pub lowpass_hz: f64,
    pub peak: f64,
    pub formants: FormantTable,
}

impl Default for VibratoSynthConfig {
    fn default() -> Self {
        Self {
            lowpass_hz: 5000.0,
            peak: 0.9,
            formants: FormantTable::default(),
        }
    }
}

/// Band-limited sawtooth whose instantaneous frequency follows `freq[n]`.
///
/// Harmonic amplitudes are `1/k`, faded out linearly over the last 10% below
/// `cutoff` so that harmonics crossing the cutoff under modulation do not click.
pub fn bandlimited_sawtooth(freq: &[f64], sample_rate: u32, cutoff: f64) -> Vec<f64> {
    let sr = sample_rate as f64;
    let fade = 0.1 * cutoff;
    let mut phase = 0.0f64;
    freq.iter()
        .map(|&f| {
            // Phase at the sample, then advance by the integrated frequency.
            let (s1, c1) = phase.sin_cos();
            let (mut s_prev, mut s_k) = (0.0, s1);
            let mut acc = 0.0;
            let mut k = 1;
            while (k as f64) * f < cutoff {
                let g = ((cutoff - k as f64 * f) / fade).min(1.0);
                acc += g * s_k / k as f64;
                let s_next = 2.0 * c1 * s_k - s_prev;
                s_prev = s_k;
                s_k = s_next;
                k += 1;
            }
            phase = (phase + 2.0 * PI * f / sr) % (2.0 * PI);
            acc
        })
        .collect()
}

pub fn synth_vibrato(spec: &VibratoSpec, sample_rate: u32) -> Result<AudioClip> {
    synth_vibrato_with(spec, sample_rate, &VibratoSynthConfig::default())
}

pub fn synth_vibrato_with(spec: &VibratoSpec, sample_rate: u32, cfg: &VibratoSynthConfig) -> Result<AudioClip> {
    if !(spec.f0 > 0.0 && spec.rate > 0.0 && spec.deviation > 0.0 && spec.duration > 0.0) {
        return Err(invalid("vibrato f0, rate, deviation and duration must be positive"));
    }
    let sr = sample_rate as f64;
    if !(cfg.lowpass_hz > 0.0 && cfg.lowpass_hz < sr / 2.0) {
        return Err(invalid(format!("low-pass cutoff {} Hz outside (0, Nyquist)", cfg.lowpass_hz)));
    }
    let fmax = spec.f0 * 2f64.powf(spec.deviation / 12.0);
    if fmax >= cfg.lowpass_hz {
        return Err(invalid(format!(
            "peak frequency {fmax:.1} Hz is not below the {} Hz cutoff",
            cfg.lowpass_hz
        )));
    }
    let n = (spec.duration * sr).round() as usize;
    let freq: Vec<f64> = (0..n).map(|i| spec.frequency_at(i as f64 / sr)).collect();
    let mut x = bandlimited_sawtooth(&freq, sample_rate, cfg.lowpass_hz);

    let a = (-2.0 * PI * cfg.lowpass_hz / sr).exp();
    let mut y = 0.0;
    for s in x.iter_mut() {
        y = (1.0 - a) * *s + a * y;
        *s = y;
    }
    let mut clip = AudioClip::new(x, sample_rate)?;

    if let Some(v) = spec.formant {
        let mut sum = vec![0.0; clip.len()];
        for f in cfg.formants.get(v) {
            if !(f.center < sr / 2.0) {
                return Err(invalid(format!("formant at {} Hz is above Nyquist", f.center)));
            }
            let c = biquad_design(BiquadKind::BandpassResonator, f.center, f.center / f.bandwidth, sample_rate)?;
            for (d, s) in sum.iter_mut().zip(biquad_apply(&c, &clip).samples) {
                *d += f.gain * s;
            }
        }
        clip.samples = sum;
    }
    let peak = clip.peak();
    if peak > 0.0 {
        clip = clip.scaled(cfg.peak / peak);
    }
    Ok(clip)
}

/// One row of the vibrato-grid manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibratoClipInfo {
    pub filename: String,
    pub rate: f64,
    pub deviation: f64,
    pub formant: String,
}

impl VibratoClipInfo {
    pub fn formant_condition(&self) -> Result<Option<Vowel>> {
        parse_formant(&self.formant)
    }
}

/// All 336 grid conditions in manifest order (formant, then rate, then deviation).
pub fn grid_conditions(duration: f64) -> Vec<(VibratoSpec, VibratoClipInfo)> {
    let mut out = Vec::with_capacity(336);
    for formant in GRID_FORMANTS {
        for rate in GRID_RATES {
            for deviation in GRID_DEVIATIONS {
                let spec = VibratoSpec::new(rate, deviation, formant, duration);
                let filename = format!("vib_{}_r{}_d{}.wav", formant_name(formant), rate, deviation);
                out.push((
                    spec,
                    VibratoClipInfo {
                        filename,
                        rate,
                        deviation,
                        formant: formant_name(formant).to_string(),
                    },
                ));
            }
        }
    }
    out
}

pub const VIBRATO_MANIFEST: &str = "manifest.csv";

/// Writes the 336 grid clips and `manifest.csv` into `out_dir`. All clips are nonvocal.
pub fn gen_vibrato_grid(
    duration: f64,
    sample_rate: u32,
    out_dir: impl AsRef<Path>,
    cfg: &VibratoSynthConfig,
) -> Result<Vec<VibratoClipInfo>> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    cfg.formants.validate(sample_rate)?;
    let conditions = grid_conditions(duration);
    conditions
        .par_iter()
        .map(|(spec, info)| {
            let clip = synth_vibrato_with(spec, sample_rate, cfg)?;
            write_wav(&clip, out_dir.join(&info.filename))
        })
        .collect::<Result<Vec<()>>>()?;
    let infos: Vec<VibratoClipInfo> = conditions.into_iter().map(|(_, i)| i).collect();
    write_vibrato_manifest(&infos, out_dir.join(VIBRATO_MANIFEST))?;
    Ok(infos)
}

pub fn write_vibrato_manifest(infos: &[VibratoClipInfo], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in infos {
        w.serialize(i)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vibrato_manifest(path: impl AsRef<Path>) -> Result<Vec<VibratoClipInfo>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(crate::error::Error::FileNotFound(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Into::into)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft;

    #[test]
    fn frequency_extremes() {
        let s = VibratoSpec::new(1.0, 12.0, None, 1.0);
        assert!((s.frequency_at(0.25) - 440.0).abs() < 1e-9);
        assert!((s.frequency_at(0.75) - 110.0).abs() < 1e-9);
    }

    #[test]
    fn grid_has_336_distinct_conditions() {
        let g = grid_conditions(1.0);
        assert_eq!(g.len(), 336);
        let names: std::collections::HashSet<_> = g.iter().map(|(_, i)| i.filename.clone()).collect();
        assert_eq!(names.len(), 336);
    }

    #[test]
    fn near_zero_deviation_stays_in_bin() {
        let clip = synth_vibrato(&VibratoSpec::new(6.0, 0.001, None, 2.0), 22050).unwrap();
        let spec = stft(&clip, 2048, 512).unwrap();
        let bin = (220.0f64 * 2048.0 / 22050.0).round() as i64;
        for row in spec.magnitudes.rows() {
            let arg = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0 as i64;
            assert!((arg - bin).abs() <= 1, "argmax {arg} vs {bin}");
        }
    }

    #[test]
    fn output_is_finite_and_normalized() {
        for f in GRID_FORMANTS {
            let c = synth_vibrato(&VibratoSpec::new(10.0, 8.0, f, 0.5), 22050).unwrap();
            assert!(c.samples.iter().all(|s| s.is_finite()));
            assert!((c.peak() - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn sawtooth_has_one_over_k_harmonics() {
        let sr = 8000u32;
        let x = bandlimited_sawtooth(&vec![100.0; 8000], sr, 3000.0);
        // Project onto harmonic 3 over one second (integer number of periods).
        let (mut re, mut im) = (0.0, 0.0);
        for (i, s) in x.iter().enumerate() {
            let ph = 2.0 * PI * 300.0 * i as f64 / sr as f64;
            re += s * ph.cos();
            im += s * ph.sin();
        }
        let amp = 2.0 * (re * re + im * im).sqrt() / x.len() as f64;
        assert!((amp - 1.0 / 3.0).abs() < 1e-6, "{amp}");
    }

    #[test]
    fn unreachable_settings_rejected() {
        let s = VibratoSpec::new(6.0, 60.0, None, 0.5);
        assert!(synth_vibrato(&s, 22050).is_err());
        let mut cfg = VibratoSynthConfig::default();
        cfg.formants.a[2].center = 20000.0;
        assert!(cfg.formants.validate(22050).is_err());
        assert!(synth_vibrato_with(&VibratoSpec::new(6.0, 1.0, Some(Vowel::A), 0.5), 22050, &cfg).is_err());
    }
}
