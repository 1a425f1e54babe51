//! Trains the feature pipeline's random forest on a small synthetic corpus.
//!
//! cargo run --release --example random_forest

use vdlab::audio::labels_to_frames;
use vdlab::dsp::Grid;
use vdlab::eval::{confusion_slices, metrics};
use vdlab::features::{assemble_features, FeatureConfig};
use vdlab::models::{forest_predict, forest_train, postprocess, smoothing_window, ForestParams, PredictionTrack};
use vdlab::stress::corpus::{gen_synthetic_corpus, CorpusConfig, Split};

fn main() -> vdlab::Result<()> {
    let corpus = gen_synthetic_corpus(3, 12, 22050, &CorpusConfig { track_seconds: 30.0, ..CorpusConfig::default() })?;
    let cfg = FeatureConfig::default();
    let fps = cfg.frame_rate();

    let frames = |split: Split| -> vdlab::Result<(Grid, Vec<bool>)> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut n_cols = 0;
        for t in corpus.iter().filter(|t| t.split == split) {
            let x = assemble_features(&t.mix, &cfg)?;
            n_cols = x.rows.n_cols();
            rows.extend_from_slice(x.rows.as_slice());
            labels.extend(labels_to_frames(&t.labels, fps, x.n_frames())?.labels);
        }
        Ok((Grid::from_vec(labels.len(), n_cols, rows, fps)?, labels))
    };
    let (x_train, y_train) = frames(Split::Train)?;
    let (x_test, y_test) = frames(Split::Test)?;
    println!("train {} frames, test {} frames, {} features", x_train.n_rows(), x_test.n_rows(), x_train.n_cols());

    let forest = forest_train(&x_train, &y_train, &ForestParams { n_trees: 30, seed: 1, ..ForestParams::default() })?;
    let depth = forest.trees.iter().map(|t| t.depth()).max().unwrap_or(0);
    println!("{} trees, deepest {depth}", forest.trees.len());

    let raw = PredictionTrack::from_probabilities(fps, forest_predict(&forest, &x_test)?);
    let smoothed = postprocess(&raw, 0.5, 800.0)?;
    println!("median filter of {} frames", smoothing_window(800.0, fps));
    for (name, track) in [("raw", &raw), ("smoothed", &smoothed)] {
        let m = metrics(&confusion_slices(&track.labels, &y_test)?)?;
        println!("{name}:\n{}", m.to_table());
    }
    Ok(())
}
