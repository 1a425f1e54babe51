//! Stress-test generators: the synthetic vibrato grid, SNR-controlled remixing
//! and a labeled synthetic corpus for end-to-end experiments.

pub mod corpus;
pub mod snr;
pub mod vibrato;

pub use corpus::{gen_synthetic_corpus, CorpusConfig, CorpusTrack, Split};
pub use snr::{measure_snr, mix_at_snr, SnrMixResult, SnrMixSpec, STANDARD_SNR_LEVELS};
pub use vibrato::{gen_vibrato_grid, synth_vibrato, synth_vibrato_with, FormantTable, VibratoClipInfo, VibratoSpec, VibratoSynthConfig, Vowel};
