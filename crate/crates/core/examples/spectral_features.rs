//! STFT, mel spectrogram and MFCCs of a synthetic vowel.
//!
//! cargo run --example spectral_features

use vdlab::dsp::{delta, mel_filterbank, mel_spectrogram, mfcc, stft, DEFAULT_LOG_FLOOR};
use vdlab::stress::vibrato::{synth_vibrato, VibratoSpec, Vowel};

fn main() -> vdlab::Result<()> {
    let clip = synth_vibrato(&VibratoSpec::new(5.5, 0.5, Some(Vowel::O), 2.0), 22050)?;
    let spec = stft(&clip, 2048, 315)?;
    println!("stft: {} frames x {} bins at {:.1} fps", spec.n_frames(), spec.n_bins(), spec.frame_rate());

    let bank = mel_filterbank(40, 0.0, 11025.0, 2048, 22050)?;
    let mel = mel_spectrogram(&spec, &bank, DEFAULT_LOG_FLOOR)?;
    println!("mel: {} frames x {} bands", mel.n_frames(), mel.n_mels());

    let c = mfcc(&mel, 13)?;
    let d = delta(&c, 3)?;
    let mid = c.n_rows() / 2;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:7.2}")).collect::<Vec<_>>().join("");
    println!("mfcc[{mid}]  {}", fmt(c.row(mid)));
    println!("delta[{mid}] {}", fmt(d.row(mid)));

    // Strongest bins of the middle frame: the harmonics of a 220 Hz sawtooth shaped by the vowel.
    let row = spec.magnitudes.row(mid);
    let mut peaks: Vec<usize> = (1..row.len() - 1).filter(|&k| row[k] > row[k - 1] && row[k] >= row[k + 1]).collect();
    peaks.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    let hz: Vec<String> = peaks.iter().take(6).map(|&k| format!("{:.0}", k as f64 * 22050.0 / 2048.0)).collect();
    println!("strongest spectral peaks (Hz): {}", hz.join(", "));
    Ok(())
}
