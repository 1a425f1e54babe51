//! Stem-projection checks of double-stage HPSS: each stem of a known mixture
//! is pushed through the masks computed on the mixture.

use rand::{Rng, SeedableRng};
use vdlab::audio::AudioClip;
use vdlab::dsp::stft;
use vdlab::hpss::{double_stage_hpss, DoubleStageConfig};
use vdlab::stress::{synth_vibrato, VibratoSpec, Vowel};

fn clicks(seconds: f64, sr: u32, seed: u64) -> AudioClip {
    let n = (seconds * sr as f64) as usize;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let period = sr as usize / 4;
    for start in (0..n).step_by(period) {
        for i in 0..200.min(n - start) {
            x[start + i] += rng.gen_range(-1.0..1.0) * (-(i as f64) / 30.0).exp();
        }
    }
    AudioClip::new(x, sr).unwrap()
}

/// Fraction of each stem's stage-2 energy routed to (h2, p2).
fn routing(stems: &[&AudioClip], cfg: &DoubleStageConfig) -> Vec<(f64, f64)> {
    let mut mix = stems[0].clone();
    for s in &stems[1..] {
        mix = mix.mixed_with(s).unwrap();
    }
    let sep = double_stage_hpss(&mix, cfg).unwrap();
    stems
        .iter()
        .map(|s| {
            let total = stft(s, cfg.stage2.fft_size, cfg.stage2.hop).unwrap().magnitudes.energy();
            let (h, p) = sep.project(s).unwrap();
            (h.magnitudes.energy() / total, p.magnitudes.energy() / total)
        })
        .collect()
}

#[test]
fn fm_vowel_goes_to_h2_and_clicks_to_p2() {
    let cfg = DoubleStageConfig::default();
    let tone = synth_vibrato(&VibratoSpec::new(6.0, 1.0, Some(Vowel::A), 3.0), 22050).unwrap();
    let c = clicks(3.0, 22050, 0);
    // 0 dB: equal power.
    let c = c.scaled((tone.power() / c.power()).sqrt());
    let r = routing(&[&tone, &c], &cfg);
    eprintln!("tone {:?} clicks {:?}", r[0], r[1]);
    assert!(r[0].0 >= 0.6, "tone energy in h2: {}", r[0].0);
    assert!(r[1].1 >= 0.6, "click energy in p2: {}", r[1].1);
}

#[test]
fn stationary_sine_mostly_leaves_h2() {
    let cfg = DoubleStageConfig::default();
    let n = 3 * 22050;
    let sine = AudioClip::new(
        (0..n)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 220.0 * i as f64 / 22050.0).sin())
            .collect(),
        22050,
    )
    .unwrap();
    let r = routing(&[&sine], &cfg);
    eprintln!("sine {:?}", r[0]);
    assert!(r[0].0 < 0.25, "sine energy in h2: {}", r[0].0);
}
