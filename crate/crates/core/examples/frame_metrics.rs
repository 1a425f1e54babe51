//! Frame-level confusion counts, the six metrics and a per-song report.
//!
//! cargo run --example frame_metrics

use vdlab::audio::FrameLabels;
use vdlab::eval::{confusion, fmt_opt, metrics, per_song_report, MetricsReport};

fn main() -> vdlab::Result<()> {
    let truth = |pattern: &str| FrameLabels::new(70.0, pattern.chars().map(|c| c == '1').collect());
    let songs = [
        ("clean", truth("0011111100")?, truth("0011111100")?),
        ("late onset", truth("0000111100")?, truth("0011111100")?),
        ("false alarm", truth("1111111111")?, truth("0011111100")?),
        ("instrumental", truth("0000000000")?, truth("0000000000")?),
    ];
    println!("{:<13} {:>3} {:>3} {:>3} {:>3}  {}", "song", "tp", "fp", "tn", "fn", MetricsReport::COLUMNS.join(" "));
    for (id, pred, gold) in &songs {
        let c = confusion(pred, gold)?;
        let m = metrics(&c)?;
        let values: Vec<String> = m
            .values()
            .iter()
            .zip(MetricsReport::COLUMNS)
            .map(|(v, name)| format!("{:>w$}", fmt_opt(*v), w = name.len()))
            .collect();
        println!("{id:<13} {:>3} {:>3} {:>3} {:>3}  {}", c.tp, c.fp, c.tn, c.fn_, values.join(" "));
    }

    // Rates with a zero denominator stay absent instead of reading as 0.
    let report = per_song_report(&songs.iter().map(|(id, p, t)| (id.to_string(), p.clone(), t.clone())).collect::<Vec<_>>())?;
    println!("\npooled over all frames:\n{}", report.micro.to_table());
    println!("lowest accuracy: {}", report.bottom(1)[0].song);
    Ok(())
}
