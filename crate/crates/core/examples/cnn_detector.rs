//! Trains a small mel-spectrogram CNN, saves it, reloads it and scores held-out tracks.
//!
//! cargo run --release --example cnn_detector [out_dir]

use vdlab::audio::labels_to_frames;
use vdlab::eval::{confusion_slices, metrics};
use vdlab::models::cnn::{cnn_predict_track, cnn_train, CnnConfig, CnnModel, CnnTrack, CnnTrainConfig};
use vdlab::models::{postprocess, ModelContainer, PredictionTrack};
use vdlab::pipeline::{mel_frontend, silence_db, MelFrontend};
use vdlab::stress::corpus::{gen_synthetic_corpus, CorpusConfig, Split};

fn main() -> vdlab::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("vdlab_cnn"));
    std::fs::create_dir_all(&out)?;
    let corpus = gen_synthetic_corpus(5, 10, 22050, &CorpusConfig { track_seconds: 30.0, ..CorpusConfig::default() })?;

    let frontend = MelFrontend { n_mels: 32, ..MelFrontend::default() };
    let fps = frontend.frame_rate();
    let tracks = |split: Split| -> vdlab::Result<Vec<CnnTrack>> {
        corpus
            .iter()
            .filter(|t| t.split == split)
            .map(|t| {
                let mel = mel_frontend(&t.mix, &frontend)?;
                let labels = labels_to_frames(&t.labels, fps, mel.n_rows())?.labels;
                Ok(CnnTrack { mel, labels })
            })
            .collect()
    };
    let (train, test) = (tracks(Split::Train)?, tracks(Split::Test)?);

    let config = CnnConfig { n_mels: 32, channels: vec![8, 8, 16, 16], dense: 32, ..CnnConfig::default() };
    println!("layer shapes {:?}", config.shape_chain()?);
    let schedule = CnnTrainConfig { epochs: 3, max_windows_per_epoch: 1500, seed: 2, ..CnnTrainConfig::default() };
    let model = cnn_train(&train, &config, &schedule, silence_db())?;
    println!("{} parameters, excerpt of {} frames ({:.2} s)", model.n_params(), config.n_frames, config.n_frames as f64 / fps);

    let path = out.join("cnn.vdm");
    model.to_container()?.save(&path)?;
    let model = CnnModel::from_container(&ModelContainer::load(&path)?)?;

    let mut counts = Vec::new();
    for t in &test {
        let raw = PredictionTrack::from_probabilities(fps, cnn_predict_track(&model, &t.mel)?);
        let smoothed = postprocess(&raw, 0.5, 800.0)?;
        counts.push(confusion_slices(&smoothed.labels, &t.labels)?);
    }
    println!("held-out, {} tracks:\n{}", test.len(), metrics(&counts.into_iter().sum())?.to_table());
    Ok(())
}
