//! Single- and double-stage harmonic/percussive separation of a vowel over clicks.
//!
//! cargo run --example hpss_separation [out_dir]

use vdlab::audio::{write_wav, AudioClip};
use vdlab::dsp::{istft, stft, stft_complex};
use vdlab::hpss::{double_stage_hpss, hpss, soft_masks, DoubleStageConfig};
use vdlab::stress::vibrato::{synth_vibrato, VibratoSpec, Vowel};

fn clicks(n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for start in (0..n).step_by(5512) {
        for i in 0..150.min(n - start) {
            x[start + i] = (if i % 2 == 0 { 1.0 } else { -1.0 }) * (-(i as f64) / 25.0).exp();
        }
    }
    x
}

fn share(a: f64, b: f64) -> f64 {
    100.0 * a / (a + b)
}

fn main() -> vdlab::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("vdlab_hpss"));
    std::fs::create_dir_all(&out)?;

    let voice = synth_vibrato(&VibratoSpec::new(6.0, 1.0, Some(Vowel::A), 3.0), 22050)?;
    let drums = AudioClip::new(clicks(voice.len()), 22050)?;
    let drums = drums.scaled((voice.power() / drums.power()).sqrt());
    let mix = voice.mixed_with(&drums)?;

    // Single stage: median filters across time (harmonic) and frequency (percussive).
    let spec = stft(&mix, 1024, 256)?;
    let single = hpss(&spec, 17, 17, 2.0)?;
    let (h, p) = (single.harmonic.magnitudes.energy(), single.percussive.magnitudes.energy());
    println!("single stage: {:.1}% harmonic, {:.1}% percussive", share(h, p), share(p, h));

    // Resynthesize both parts with the soft masks.
    let complex = stft_complex(&mix, 1024, 256)?;
    let (mh, mp) = soft_masks(&complex.magnitude().magnitudes, 17, 17, 2.0)?;
    write_wav(&istft(&complex.masked(&mh)?), out.join("harmonic.wav"))?;
    write_wav(&istft(&complex.masked(&mp)?), out.join("percussive.wav"))?;

    // Double stage: the percussive part of a long-window pass is split again with a
    // short window, which pulls the fluctuating voice into H2.
    let cfg = DoubleStageConfig::default();
    let sep = double_stage_hpss(&mix, &cfg)?;
    for (name, stem) in [("voice", &voice), ("clicks", &drums)] {
        let (h2, p2) = sep.project(stem)?;
        let (a, b) = (h2.magnitudes.energy(), p2.magnitudes.energy());
        println!("double stage, {name}: {:.1}% in H2, {:.1}% in P2", share(a, b), share(b, a));
    }
    println!("H2 {} frames x {} bins; wavs in {}", sep.h2.n_frames(), sep.h2.n_bins(), out.display());
    Ok(())
}
