//! Seeded synthetic stand-in for a vocal/instrumental music corpus.
//!
//! Each track is an instrumental bed (filtered noise, steady pitched notes,
//! a click-train beat) plus legato vocal-like phrases: formant-filtered
//! band-limited sawtooths with human-range vibrato. Vocal phrases are the
//! vocal intervals; everything else is nonvocal.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::snr::{mix_at_snr, SnrMixSpec};
use super::vibrato::{bandlimited_sawtooth, FormantTable, Vowel};
use crate::audio::{read_wav, write_wav, AudioClip, Interval, LabelTrack, SegmentLabel};
use crate::dsp::{biquad_apply, biquad_design, BiquadKind};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub track_seconds: f64,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub vibrato_rate_min: f64,
    pub vibrato_rate_max: f64,
    pub vibrato_dev_min: f64,
    pub vibrato_dev_max: f64,
    pub min_vocal_fraction: f64,
    pub max_vocal_fraction: f64,
    /// Every `test_every`-th track (1-based) goes to the test split.
    pub test_every: usize,
    pub formants: FormantTable,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            track_seconds: 10.0,
            snr_min_db: -6.0,
            snr_max_db: 6.0,
            f0_min: 150.0,
            f0_max: 400.0,
            vibrato_rate_min: 5.5,
            vibrato_rate_max: 8.0,
            vibrato_dev_min: 0.6,
            vibrato_dev_max: 2.0,
            min_vocal_fraction: 0.3,
            max_vocal_fraction: 0.7,
            test_every: 4,
            formants: FormantTable::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct CorpusTrack {
    pub id: String,
    pub split: Split,
    pub vocal: AudioClip,
    pub instrumental: AudioClip,
    pub mix: AudioClip,
    pub labels: LabelTrack,
    pub snr_db: f64,
}

impl CorpusTrack {
    pub fn vocal_fraction(&self) -> f64 {
        self.labels.vocal_duration() / self.mix.duration()
    }
}

/// One manifest row of a written corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub split: Split,
    pub snr_db: f64,
    pub mix: String,
    pub vocal: String,
    pub instrumental: String,
    pub labels: String,
}

pub const CORPUS_MANIFEST: &str = "manifest.csv";

struct Phrase {
    start: usize,
    end: usize,
}

fn track_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn phrase_layout(rng: &mut ChaCha8Rng, n: usize, sr: f64, cfg: &CorpusConfig) -> Vec<Phrase> {
    let lo = (cfg.min_vocal_fraction * n as f64) as usize;
    let hi = (cfg.max_vocal_fraction * n as f64) as usize;
    loop {
        let mut phrases = Vec::new();
        let mut t = (rng.gen_range(0.2..1.5) * sr) as usize;
        loop {
            let len = (rng.gen_range(1.2..3.5) * sr) as usize;
            if t + len > n.saturating_sub((0.1 * sr) as usize) {
                break;
            }
            phrases.push(Phrase { start: t, end: t + len });
            t += len + (rng.gen_range(0.8..2.5) * sr) as usize;
        }
        let total: usize = phrases.iter().map(|p| p.end - p.start).sum();
        if total >= lo && total <= hi {
            return phrases;
        }
    }
}

fn raised_cosine_edges(x: &mut [f64], ramp: usize) {
    let n = x.len();
    let ramp = ramp.min(n / 2);
    for i in 0..ramp {
        let g = 0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos();
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

fn one_pole_lowpass(x: &mut [f64], cutoff: f64, sr: f64) {
    let a = (-2.0 * PI * cutoff / sr).exp();
    let mut y = 0.0;
    for s in x.iter_mut() {
        y = (1.0 - a) * *s + a * y;
        *s = y;
    }
}

fn formant_filter(x: &[f64], formants: &[super::vibrato::Formant; 3], sr: u32) -> Result<Vec<f64>> {
    let clip = AudioClip::new(x.to_vec(), sr)?;
    let mut out = vec![0.0; x.len()];
    for f in formants {
        let c = biquad_design(BiquadKind::BandpassResonator, f.center, f.center / f.bandwidth, sr)?;
        for (o, s) in out.iter_mut().zip(biquad_apply(&c, &clip).samples) {
            *o += f.gain * s;
        }
    }
    Ok(out)
}

/// A legato phrase of 2–5 notes sharing one vowel and one vibrato setting.
fn vocal_phrase(rng: &mut ChaCha8Rng, len: usize, sr: u32, cfg: &CorpusConfig) -> Result<Vec<f64>> {
    let srf = sr as f64;
    let rate = rng.gen_range(cfg.vibrato_rate_min..=cfg.vibrato_rate_max);
    let dev = rng.gen_range(cfg.vibrato_dev_min..=cfg.vibrato_dev_max);
    let vowel = [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U][rng.gen_range(0..5)];
    let n_notes = rng.gen_range(2..=5usize);
    let mut bounds: Vec<usize> = (1..n_notes).map(|_| rng.gen_range(0..len)).collect();
    bounds.sort_unstable();
    bounds.insert(0, 0);
    bounds.push(len);
    let lmin = cfg.f0_min.ln();
    let lmax = (cfg.f0_max.min(5000.0 / 2f64.powf(dev / 12.0)) - 1.0).ln();
    let vib_phase = rng.gen_range(0.0..2.0 * PI);
    let mut freq = Vec::with_capacity(len);
    for w in bounds.windows(2) {
        let f0 = rng.gen_range(lmin..lmax).exp();
        for i in w[0]..w[1] {
            let t = i as f64 / srf;
            freq.push(f0 * 2f64.powf(dev * (2.0 * PI * rate * t + vib_phase).sin() / 12.0));
        }
    }
    let mut x = bandlimited_sawtooth(&freq, sr, 5000.0);
    one_pole_lowpass(&mut x, 5000.0, srf);
    let mut y = formant_filter(&x, cfg.formants.get(vowel), sr)?;
    let peak = y.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        y.iter_mut().for_each(|s| *s /= peak);
    }
    raised_cosine_edges(&mut y, (0.03 * srf) as usize);
    Ok(y)
}

/// A random active span `[start, end)` of a layer covering at least half the track.
fn section(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    if rng.gen_bool(0.3) {
        return (0, n);
    }
    let len = rng.gen_range(n / 2..=n);
    let start = rng.gen_range(0..=n - len);
    (start, start + len)
}

fn instrumental_bed(rng: &mut ChaCha8Rng, n: usize, sr: u32) -> Result<Vec<f64>> {
    let srf = sr as f64;
    let mut bed = vec![0.0; n];

    // Low-passed noise floor over one section of the track.
    let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lp = biquad_design(BiquadKind::Lowpass, rng.gen_range(800.0..4000.0), 0.707, sr)?;
    let mut noise = biquad_apply(&lp, &AudioClip::new(noise, sr)?).samples;
    let (a, b) = section(rng, n);
    raised_cosine_edges(&mut noise[a..b], (0.05 * srf) as usize);
    let noise_gain = rng.gen_range(0.02..0.08);
    for (bv, s) in bed[a..b].iter_mut().zip(&noise[a..b]) {
        *bv += noise_gain * s;
    }

    // Steady pitched notes: plain, through one resonator, or through three
    // body resonances in the vowel-formant ranges.
    let n_notes = rng.gen_range(3..=7usize);
    for _ in 0..n_notes {
        let len = ((rng.gen_range(0.8..4.0) * srf) as usize).min(n);
        let start = rng.gen_range(0..=n - len);
        let f0 = rng.gen_range(80.0f64.ln()..700.0f64.ln()).exp();
        let mut x = bandlimited_sawtooth(&vec![f0; len], sr, rng.gen_range(2000.0..6000.0));
        match rng.gen_range(0..4) {
            0 => {}
            1 => {
                let fc = rng.gen_range(400.0..3000.0);
                let c = biquad_design(BiquadKind::BandpassResonator, fc, rng.gen_range(1.5..5.0), sr)?;
                x = biquad_apply(&c, &AudioClip::new(x, sr)?).samples;
            }
            _ => {
                let body = [
                    (rng.gen_range(250.0..900.0), rng.gen_range(60.0..150.0)),
                    (rng.gen_range(700.0..2500.0), rng.gen_range(60.0..150.0)),
                    (rng.gen_range(2200.0..3300.0), rng.gen_range(80.0..200.0)),
                ];
                let formants = body.map(|(center, bandwidth)| super::vibrato::Formant { center, bandwidth, gain: 1.0 });
                x = formant_filter(&x, &formants, sr)?;
            }
        }
        let peak = x.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-12);
        let gain = rng.gen_range(0.15..0.4) / peak;
        raised_cosine_edges(&mut x, (0.02 * srf) as usize);
        for (bv, s) in bed[start..start + len].iter_mut().zip(&x) {
            *bv += gain * s;
        }
    }

    // Click-train percussion over its own section.
    let period = (60.0 / rng.gen_range(90.0..150.0) / 2.0 * srf) as usize;
    let click_gain = rng.gen_range(0.2..0.6);
    let decay = rng.gen_range(20.0..60.0);
    let (a, b) = section(rng, n);
    let mut t = a + rng.gen_range(0..period);
    while t < b {
        let len = (6.0 * decay) as usize;
        for i in 0..len.min(b - t) {
            bed[t + i] += click_gain * rng.gen_range(-1.0..1.0) * (-(i as f64) / decay).exp();
        }
        t += period;
    }
    Ok(bed)
}

/// Generates one track; a pure function of `(seed, index, config)`.
pub fn synth_corpus_track(seed: u64, index: usize, sample_rate: u32, cfg: &CorpusConfig) -> Result<CorpusTrack> {
    let mut rng = track_rng(seed, index);
    let sr = sample_rate as f64;
    let n = (cfg.track_seconds * sr).round() as usize;
    let phrases = phrase_layout(&mut rng, n, sr, cfg);
    let mut vocal = vec![0.0; n];
    let mut intervals = Vec::new();
    for p in &phrases {
        let x = vocal_phrase(&mut rng, p.end - p.start, sample_rate, cfg)?;
        vocal[p.start..p.end].copy_from_slice(&x);
        intervals.push(Interval {
            start: p.start as f64 / sr,
            end: p.end as f64 / sr,
            label: SegmentLabel::Vocal,
        });
    }
    let bed = instrumental_bed(&mut rng, n, sample_rate)?;
    let snr_db = rng.gen_range(cfg.snr_min_db..=cfg.snr_max_db);
    let vocal = AudioClip::new(vocal, sample_rate)?;
    let bed = AudioClip::new(bed, sample_rate)?;
    let mixed = mix_at_snr(
        &vocal,
        &bed,
        &SnrMixSpec {
            target_snr_db: snr_db,
            excerpt_seconds: None,
            peak_normalize: true,
        },
    )?;
    // Keep headroom for 16-bit storage; the same factor scales both stems.
    let norm = 0.8 * mixed.normalization / mixed.mix.peak().max(1e-12);
    let vocal = vocal.scaled(mixed.gain * norm);
    let instrumental = bed.scaled(norm);
    let mix = vocal.mixed_with(&instrumental)?;
    let split = if (index + 1) % cfg.test_every.max(1) == 0 {
        Split::Test
    } else {
        Split::Train
    };
    Ok(CorpusTrack {
        id: format!("track_{index:03}"),
        split,
        vocal,
        instrumental,
        mix,
        labels: LabelTrack::new(intervals)?,
        snr_db,
    })
}

pub fn gen_synthetic_corpus(seed: u64, n_tracks: usize, sample_rate: u32, cfg: &CorpusConfig) -> Result<Vec<CorpusTrack>> {
    if n_tracks < 4 {
        return Err(invalid(format!("corpus needs at least 4 tracks, got {n_tracks}")));
    }
    if !(cfg.min_vocal_fraction < cfg.max_vocal_fraction && cfg.track_seconds >= 4.0) {
        return Err(invalid("corpus vocal-fraction bounds or track length invalid"));
    }
    (0..n_tracks)
        .into_par_iter()
        .map(|i| synth_corpus_track(seed, i, sample_rate, cfg))
        .collect()
}

/// Writes stems, mixes, `.lab` annotations and `manifest.csv`.
pub fn write_corpus(tracks: &[CorpusTrack], dir: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let entries: Vec<CorpusEntry> = tracks
        .par_iter()
        .map(|t| {
            let e = CorpusEntry {
                id: t.id.clone(),
                split: t.split,
                snr_db: t.snr_db,
                mix: format!("{}_mix.wav", t.id),
                vocal: format!("{}_vocal.wav", t.id),
                instrumental: format!("{}_inst.wav", t.id),
                labels: format!("{}.lab", t.id),
            };
            write_wav(&t.mix, dir.join(&e.mix))?;
            write_wav(&t.vocal, dir.join(&e.vocal))?;
            write_wav(&t.instrumental, dir.join(&e.instrumental))?;
            crate::audio::write_lab(&t.labels, dir.join(&e.labels), "sing", "nosing")?;
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_path(dir.join(CORPUS_MANIFEST))?;
    for e in &entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(entries)
}

pub fn read_corpus_manifest(dir: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let path = dir.as_ref().join(CORPUS_MANIFEST);
    if !path.exists() {
        return Err(Error::FileNotFound(path));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Into::into)).collect()
}

/// Loads a corpus written by [`write_corpus`].
pub fn read_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusTrack>> {
    let dir = dir.as_ref();
    let aliases = ["sing".to_string()].into_iter().collect();
    read_corpus_manifest(dir)?
        .into_iter()
        .map(|e| {
            Ok(CorpusTrack {
                mix: read_wav(dir.join(&e.mix))?,
                vocal: read_wav(dir.join(&e.vocal))?,
                instrumental: read_wav(dir.join(&e.instrumental))?,
                labels: crate::audio::parse_lab(dir.join(&e.labels), &aliases)?,
                id: e.id,
                split: e.split,
                snr_db: e.snr_db,
            })
        })
        .collect()
}
