//! Round trips through every on-disk format: WAV, annotations, grid dumps, model files.

use std::collections::HashSet;

use vdlab::audio::{parse_lab, read_wav, resample, write_lab, write_wav, AudioClip, Interval, LabelTrack, SegmentLabel};
use vdlab::dsp::grid_io::{read_grid, write_grid};
use vdlab::error::Error;
use vdlab::features::{assemble_features, FeatureConfig};
use vdlab::pipeline::{corpus_split, train_detector, Pipeline, PipelineConfig, TrainedModel};
use vdlab::stress::corpus::{gen_synthetic_corpus, read_corpus, write_corpus, CorpusConfig, Split};

fn sine(seconds: f64, sr: u32) -> AudioClip {
    let n = (seconds * sr as f64) as usize;
    AudioClip::new((0..n).map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / sr as f64).sin()).collect(), sr).unwrap()
}

fn small_corpus() -> CorpusConfig {
    CorpusConfig { track_seconds: 5.0, ..CorpusConfig::default() }
}

#[test]
fn wav_round_trip_within_one_quantization_step() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.wav");
    let clip = sine(0.5, 22050);
    write_wav(&clip, &p).unwrap();
    let back = read_wav(&p).unwrap();
    assert_eq!(back.sample_rate, 22050);
    assert_eq!(back.len(), clip.len());
    let worst = clip.samples.iter().zip(&back.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1.0 / 32768.0, "{worst}");
}

#[test]
fn float_wav_is_read_exactly_at_f32_precision() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.wav");
    let spec = hound::WavSpec { channels: 1, sample_rate: 16000, bits_per_sample: 32, sample_format: hound::SampleFormat::Float };
    let mut w = hound::WavWriter::create(&p, spec).unwrap();
    for v in [0.25f32, -0.5, 0.125] {
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();
    assert_eq!(read_wav(&p).unwrap().samples, vec![0.25, -0.5, 0.125]);
}

#[test]
fn resampled_file_keeps_duration() {
    let clip = sine(1.0, 44100);
    let r = resample(&clip, 22050).unwrap();
    assert_eq!(r.len(), 22050);
    assert_eq!(r.sample_rate, 22050);
}

#[test]
fn lab_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.lab");
    let track = LabelTrack::new(vec![
        Interval { start: 0.0, end: 1.25, label: SegmentLabel::Nonvocal },
        Interval { start: 1.25, end: 3.5, label: SegmentLabel::Vocal },
    ])
    .unwrap();
    write_lab(&track, &p, "sing", "nosing").unwrap();
    let aliases: HashSet<String> = ["sing".to_string()].into_iter().collect();
    let back = parse_lab(&p, &aliases).unwrap();
    assert_eq!(back.vocal_duration(), 2.25);
    assert!(back.is_vocal_at(2.0) && !back.is_vocal_at(1.0));
}

#[test]
fn feature_grid_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.vdg");
    let m = assemble_features(&sine(2.5, 22050), &FeatureConfig::default()).unwrap();
    write_grid(&m.rows, &p).unwrap();
    let back = read_grid(&p).unwrap();
    assert_eq!(back.shape(), m.rows.shape());
    for (a, b) in m.rows.as_slice().iter().zip(back.as_slice()) {
        assert_eq!(*a as f32, *b as f32);
    }
}

#[test]
fn written_corpus_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let tracks = gen_synthetic_corpus(5, 4, 22050, &small_corpus()).unwrap();
    write_corpus(&tracks, dir.path()).unwrap();
    let back = read_corpus(dir.path()).unwrap();
    assert_eq!(back.len(), 4);
    for (a, b) in tracks.iter().zip(&back) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.split, b.split);
        assert!((a.labels.vocal_duration() - b.labels.vocal_duration()).abs() < 1e-5);
        let worst = a.mix.samples.iter().zip(&b.mix.samples).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 1.0 / 32768.0);
    }
}

#[test]
fn saved_model_predicts_like_the_original() {
    let tracks = gen_synthetic_corpus(5, 4, 22050, &small_corpus()).unwrap();
    let train = corpus_split(&tracks, Split::Train);
    let mut cfg = PipelineConfig::default();
    cfg.fe.forest.n_trees = 4;
    let model = train_detector(Pipeline::Fe, &cfg, &train, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.vdm");
    model.save(&p).unwrap();
    let back = TrainedModel::load(&p).unwrap();
    assert_eq!(back, model);
    let clip = &tracks[3].mix;
    assert_eq!(back.probabilities(clip).unwrap(), model.probabilities(clip).unwrap());

    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(TrainedModel::load(&p), Err(Error::Format(_))));
    assert!(matches!(TrainedModel::load(dir.path().join("none.vdm")), Err(Error::FileNotFound(_))));
}
