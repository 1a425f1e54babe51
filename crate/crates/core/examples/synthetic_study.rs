//! The full study on a 40-track synthetic corpus: trains each detector, scores
//! the held-out split, sweeps the vocal-to-instrumental ratio and runs the
//! vibrato grid. Takes a few minutes in release mode.
//!
//! cargo run --release --example synthetic_study [fe|cnn|rnn ...]

use std::time::Instant;

use vdlab::eval::{fmt_opt, snr_sweep, Detector, SweepTrack};
use vdlab::pipeline::{corpus_split, evaluate_detector, stress_vibrato_clips, train_detector, Pipeline, PipelineConfig};
use vdlab::stress::corpus::{gen_synthetic_corpus, CorpusConfig, Split};
use vdlab::stress::snr::{SnrMixSpec, STANDARD_SNR_LEVELS};
use vdlab::stress::vibrato::{grid_conditions, synth_vibrato_with, VibratoSynthConfig};

fn main() -> vdlab::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VDLAB_LOG", "warn")).init();
    let which: Vec<Pipeline> = std::env::args().skip(1).map(|a| a.parse()).collect::<vdlab::Result<_>>()?;
    let which = if which.is_empty() { Pipeline::ALL.to_vec() } else { which };

    let seed = 7;
    let t0 = Instant::now();
    let corpus = gen_synthetic_corpus(seed, 40, 22050, &CorpusConfig::default())?;
    let train = corpus_split(&corpus, Split::Train);
    let test = corpus_split(&corpus, Split::Test);
    println!("corpus: {} train, {} test tracks ({:.1} s)", train.len(), test.len(), t0.elapsed().as_secs_f64());

    // Desk-scale capacities for the two networks; the feature pipeline keeps its defaults.
    let mut cfg = PipelineConfig::default();
    cfg.cnn.frontend.n_mels = 32;
    cfg.cnn.channels = vec![8, 8, 16, 16];
    cfg.cnn.dense = 32;
    cfg.cnn.train.epochs = 6;
    cfg.cnn.train.max_windows_per_epoch = 3000;
    cfg.rnn.inference_hop = 27;
    cfg.rnn.train.epochs = 10;

    let sweep_tracks: Vec<SweepTrack> = corpus
        .iter()
        .filter(|t| t.split == Split::Test)
        .map(|t| SweepTrack { id: t.id.clone(), vocal: t.vocal.clone(), instrumental: t.instrumental.clone(), truth: t.labels.clone() })
        .collect();
    let vib_cfg = VibratoSynthConfig::default();
    let vib: Vec<_> = grid_conditions(4.0)
        .into_iter()
        .map(|(spec, info)| Ok((info, synth_vibrato_with(&spec, 22050, &vib_cfg)?)))
        .collect::<vdlab::Result<_>>()?;
    let sweep_spec = SnrMixSpec { peak_normalize: true, ..SnrMixSpec::new(0.0) };

    for p in which {
        let t = Instant::now();
        let model = train_detector(p, &cfg, &train, seed)?;
        let train_s = t.elapsed().as_secs_f64();
        let rep = evaluate_detector(&model, &test)?;
        println!("\n{p}: trained in {train_s:.0} s");
        println!("{}", rep.micro.to_table());

        let det: &dyn Detector = &model;
        let rows = snr_sweep(&sweep_tracks, &[det], &STANDARD_SNR_LEVELS, &sweep_spec)?;
        println!("{:>8} {:>7} {:>7}", "SNR dB", "FPR %", "FNR %");
        for r in &rows {
            println!("{:>8} {:>7} {:>7}", r.snr_db, fmt_opt(r.fpr), fmt_opt(r.fnr));
        }

        let h = stress_vibrato_clips(&model, &vib)?;
        let singer = h.region_mean(|r, d| (4.0..=8.0).contains(&r) && (0.6..=2.0).contains(&d)).unwrap();
        let extreme = h.region_mean(|r, d| r <= 1.0 || d >= 4.0).unwrap();
        println!("vibrato miss rate: {singer:.3} at 4-8 Hz and 0.6-2 st, {extreme:.3} at <= 1 Hz or >= 4 st");
    }
    Ok(())
}
