//! Writes the 7 x 8 x 6 vibrato grid and scores a trained detector on it.
//!
//! cargo run --release --example vibrato_grid [out_dir]

use vdlab::pipeline::{corpus_split, stress_vibrato, train_detector, Pipeline, PipelineConfig};
use vdlab::stress::corpus::{gen_synthetic_corpus, CorpusConfig, Split};
use vdlab::stress::vibrato::{gen_vibrato_grid, VibratoSynthConfig, GRID_DEVIATIONS, GRID_RATES};

fn main() -> vdlab::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("vdlab_vibrato"));
    let grid = out.join("grid");
    let infos = gen_vibrato_grid(4.0, 22050, &grid, &VibratoSynthConfig::default())?;
    println!("{} clips in {}, e.g. {}", infos.len(), grid.display(), infos[0].filename);

    let corpus = gen_synthetic_corpus(7, 12, 22050, &CorpusConfig { track_seconds: 30.0, ..CorpusConfig::default() })?;
    let mut cfg = PipelineConfig::default();
    cfg.fe.forest.n_trees = 20;
    let model = train_detector(Pipeline::Fe, &cfg, &corpus_split(&corpus, Split::Train), 7)?;

    // Every clip is a sung vowel, so a cell holds the fraction of frames called nonvocal.
    let heat = stress_vibrato(&model, &grid)?;
    let written = heat.write(out.join("heatmaps"))?;
    println!("{} heatmap files in {}", written.len(), out.join("heatmaps").display());
    let dev_header: Vec<String> = GRID_DEVIATIONS.iter().map(|d| format!("{d:>5}")).collect();
    for (f, name) in heat.formants.iter().enumerate() {
        println!("{name}: miss rate by rate (rows) and deviation in semitones (columns)");
        println!("       {}", dev_header.join(""));
        for (r, rate) in GRID_RATES.iter().enumerate().rev() {
            let row: Vec<String> = heat.cells[f][r].iter().map(|v| format!("{v:5.2}")).collect();
            println!("  {rate:>4} {}", row.join(""));
        }
    }
    Ok(())
}
