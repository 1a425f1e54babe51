//! Writes a clip and its `.lab` annotation, reads both back and frames the labels.
//!
//! cargo run --example wav_and_labels [out_dir]

use std::collections::HashSet;

use vdlab::audio::{labels_to_frames, parse_lab, read_wav, resample, write_lab, write_wav, AudioClip, Interval, LabelTrack, SegmentLabel};

fn main() -> vdlab::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("vdlab_wav_and_labels"));
    std::fs::create_dir_all(&out)?;

    // One second of silence, one of a 330 Hz tone, one of silence.
    let sr = 22050;
    let samples: Vec<f64> = (0..3 * sr as usize)
        .map(|i| {
            let t = i as f64 / sr as f64;
            if (1.0..2.0).contains(&t) { 0.3 * (2.0 * std::f64::consts::PI * 330.0 * t).sin() } else { 0.0 }
        })
        .collect();
    let clip = AudioClip::new(samples, sr)?;
    let labels = LabelTrack::new(vec![
        Interval { start: 0.0, end: 1.0, label: SegmentLabel::Nonvocal },
        Interval { start: 1.0, end: 2.0, label: SegmentLabel::Vocal },
        Interval { start: 2.0, end: 3.0, label: SegmentLabel::Nonvocal },
    ])?;

    let wav = out.join("tone.wav");
    let lab = out.join("tone.lab");
    write_wav(&clip, &wav)?;
    write_lab(&labels, &lab, "sing", "nosing")?;

    let back = read_wav(&wav)?;
    let aliases: HashSet<String> = ["sing".to_string()].into();
    let labels_back = parse_lab(&lab, &aliases)?;
    println!("{}: {} samples at {} Hz, peak {:.3}", wav.display(), back.len(), back.sample_rate, back.peak());
    println!("{}: {:.2} s vocal", lab.display(), labels_back.vocal_duration());

    let frames = labels_to_frames(&labels_back, 70.0, (back.duration() * 70.0) as usize)?;
    println!("{} frames at 70 fps, {:.1}% vocal", frames.len(), 100.0 * frames.vocal_fraction());

    let down = resample(&back, 16000)?;
    println!("resampled to {} Hz: {:.3} s", down.sample_rate, down.duration());
    Ok(())
}
