//! The SNR sweep machinery against a detector whose behaviour is known:
//! an energy threshold misses fewer vocal frames as the voice gets louder.

mod support;

use vdlab::eval::{snr_sweep, Detector, SweepTrack};
use vdlab::stress::corpus::{gen_synthetic_corpus, CorpusConfig, Split};
use vdlab::stress::snr::{SnrMixSpec, STANDARD_SNR_LEVELS};

#[test]
fn energy_detector_fnr_falls_with_snr() {
    let cfg = CorpusConfig { track_seconds: 6.0, ..CorpusConfig::default() };
    let tracks: Vec<SweepTrack> = gen_synthetic_corpus(11, 8, 22050, &cfg)
        .unwrap()
        .into_iter()
        .filter(|t| t.split == Split::Test)
        .map(|t| SweepTrack { id: t.id, vocal: t.vocal, instrumental: t.instrumental, truth: t.labels })
        .collect();
    let det = support::EnergyDetector { frame_rate: 70.0 };
    let dets: [&dyn Detector; 1] = [&det];
    let rows = snr_sweep(&tracks, &dets, &STANDARD_SNR_LEVELS, &SnrMixSpec { peak_normalize: true, ..SnrMixSpec::new(0.0) }).unwrap();
    assert_eq!(rows.len(), 5);
    let fnr: Vec<f64> = rows.iter().map(|r| r.fnr.unwrap()).collect();
    assert!(fnr[4] < fnr[0], "{fnr:?}");
    for r in &rows {
        assert_eq!(r.counts.total() as usize, rows[0].counts.total() as usize);
    }
}
