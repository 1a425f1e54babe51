//! The 116-column frame feature stack and its context expansion.
//!
//! cargo run --example fe_feature_stack

use std::time::Instant;

use vdlab::features::{add_context, assemble_features, base_features, ContextMode, FeatureConfig};
use vdlab::stress::corpus::{synth_corpus_track, CorpusConfig};

fn main() -> vdlab::Result<()> {
    let track = synth_corpus_track(1, 0, 22050, &CorpusConfig { track_seconds: 20.0, ..CorpusConfig::default() })?;
    let cfg = FeatureConfig::default();

    let t = Instant::now();
    let base = base_features(&track.mix, &cfg)?;
    println!("{} frames x {} columns at {:.0} fps ({:.2} s)", base.n_frames(), base.rows.n_cols(), cfg.frame_rate(), t.elapsed().as_secs_f64());
    for (name, start, end) in &base.layout {
        let block = base.block(name).unwrap();
        let mean = block.as_slice().iter().sum::<f64>() / block.as_slice().len() as f64;
        println!("  {name:<22} columns {start:>3}..{end:<3} mean {mean:9.3}");
    }

    for mode in [ContextMode::Delta, ContextMode::Stack] {
        let ctx = add_context(&base, mode, cfg.context_frames)?;
        println!("{mode:?} context: {} columns", ctx.rows.n_cols());
    }
    let full = assemble_features(&track.mix, &cfg)?;
    println!("configured stack ({:?}): {} columns", cfg.context, full.rows.n_cols());
    Ok(())
}
