//! Remixes separated stems at fixed vocal-to-instrumental ratios.
//!
//! cargo run --example snr_mixing [out_dir]

use vdlab::audio::write_wav;
use vdlab::stress::corpus::{synth_corpus_track, CorpusConfig};
use vdlab::stress::snr::{measure_snr, mix_at_snr, SnrMixSpec, STANDARD_SNR_LEVELS};

fn main() -> vdlab::Result<()> {
    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("vdlab_snr"));
    std::fs::create_dir_all(&out)?;
    let track = synth_corpus_track(9, 0, 22050, &CorpusConfig { track_seconds: 20.0, ..CorpusConfig::default() })?;
    println!("stems as generated: {:.2} dB over vocal-active frames", measure_snr(&track.vocal, &track.instrumental)?);

    println!("{:>8} {:>9} {:>8} {:>8} {:>6}", "target", "achieved", "gain", "norm", "clip");
    for level in STANDARD_SNR_LEVELS {
        let spec = SnrMixSpec { peak_normalize: true, ..SnrMixSpec::new(level) };
        let r = mix_at_snr(&track.vocal, &track.instrumental, &spec)?;
        println!("{level:>8.1} {:>9.3} {:>8.3} {:>8.3} {:>6}", r.achieved_snr_db, r.gain, r.normalization, r.clipped);
        write_wav(&r.mix, out.join(format!("mix_snr{level:+}dB.wav")))?;
    }
    println!("mixes in {}", out.display());
    Ok(())
}
