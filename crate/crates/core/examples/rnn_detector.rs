//! Trains a bidirectional LSTM on double-stage HPSS mel frames.
//!
//! cargo run --release --example rnn_detector

use vdlab::audio::labels_to_frames;
use vdlab::eval::{confusion_slices, metrics};
use vdlab::models::rnn::{rnn_predict_track, rnn_train, RnnConfig, RnnTrack, RnnTrainConfig};
use vdlab::models::{postprocess, PredictionTrack};
use vdlab::pipeline::{hpss_frontend, HpssFrontend};
use vdlab::stress::corpus::{gen_synthetic_corpus, CorpusConfig, Split};

fn main() -> vdlab::Result<()> {
    let corpus = gen_synthetic_corpus(5, 10, 22050, &CorpusConfig { track_seconds: 30.0, ..CorpusConfig::default() })?;
    let frontend = HpssFrontend::default();
    let fps = frontend.frame_rate();
    let tracks = |split: Split| -> vdlab::Result<Vec<RnnTrack>> {
        corpus
            .iter()
            .filter(|t| t.split == split)
            .map(|t| {
                let frames = hpss_frontend(&t.mix, &frontend)?;
                let labels = labels_to_frames(&t.labels, fps, frames.n_rows())?.labels;
                Ok(RnnTrack { frames, labels })
            })
            .collect()
    };
    let (train, test) = (tracks(Split::Train)?, tracks(Split::Test)?);
    println!("{:.2} fps, {} columns (H2 and P2 mel bands)", fps, train[0].frames.n_cols());

    let config = RnnConfig { input_dim: 2 * frontend.n_mels, ..RnnConfig::default() };
    let schedule = RnnTrainConfig { epochs: 6, seed: 4, ..RnnTrainConfig::default() };
    let model = rnn_train(&train, &config, &schedule)?;
    println!("hidden {:?}, window {} frames, {} parameters", config.hidden, config.window, model.n_params());

    let mut counts = Vec::new();
    for t in &test {
        let raw = PredictionTrack::from_probabilities(fps, rnn_predict_track(&model, &t.frames, 27)?);
        counts.push(confusion_slices(&postprocess(&raw, 0.5, 800.0)?.labels, &t.labels)?);
    }
    println!("held-out, {} tracks:\n{}", test.len(), metrics(&counts.into_iter().sum())?.to_table());
    Ok(())
}
