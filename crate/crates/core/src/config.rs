//! Experiment configuration: one TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::stress::corpus::CorpusConfig;
use crate::stress::snr::{SnrMixSpec, STANDARD_SNR_LEVELS};
use crate::stress::vibrato::VibratoSynthConfig;

/// Where labeled audio comes from. Either a generated corpus directory, or
/// audio and annotation directories per split (`<name>.wav` next to `<name>.lab`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub corpus_dir: Option<PathBuf>,
    pub train_audio: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_audio: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Annotation labels counted as vocal; everything else is nonvocal.
    pub vocal_labels: Vec<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            corpus_dir: None,
            train_audio: None,
            train_labels: None,
            test_audio: None,
            test_labels: None,
            vocal_labels: vec!["sing".into(), "vocal".into()],
        }
    }
}

impl DataConfig {
    fn paths(&self) -> impl Iterator<Item = (&'static str, &PathBuf)> {
        [
            ("data.corpus_dir", &self.corpus_dir),
            ("data.train_audio", &self.train_audio),
            ("data.train_labels", &self.train_labels),
            ("data.test_audio", &self.test_audio),
            ("data.test_labels", &self.test_labels),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_ref().map(|p| (k, p)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusGenConfig {
    pub n_tracks: usize,
    pub sample_rate: u32,
    pub synth: CorpusConfig,
}

impl Default for CorpusGenConfig {
    fn default() -> Self {
        Self {
            n_tracks: 40,
            sample_rate: 22050,
            synth: CorpusConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VibratoGenConfig {
    pub duration: f64,
    pub sample_rate: u32,
    pub synth: VibratoSynthConfig,
}

impl Default for VibratoGenConfig {
    fn default() -> Self {
        Self {
            duration: 4.0,
            sample_rate: 22050,
            synth: VibratoSynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnrConfig {
    pub levels: Vec<f64>,
    /// Only this many leading seconds of each stem pair are mixed; 0 keeps everything.
    pub excerpt_seconds: f64,
    pub peak_normalize: bool,
}

impl Default for SnrConfig {
    fn default() -> Self {
        Self {
            levels: STANDARD_SNR_LEVELS.to_vec(),
            excerpt_seconds: 30.0,
            peak_normalize: true,
        }
    }
}

impl SnrConfig {
    pub fn mix_spec(&self, target_snr_db: f64) -> SnrMixSpec {
        SnrMixSpec {
            target_snr_db,
            excerpt_seconds: (self.excerpt_seconds > 0.0).then_some(self.excerpt_seconds),
            peak_normalize: self.peak_normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub pipeline: Pipeline,
    pub out: PathBuf,
    pub data: DataConfig,
    pub detector: PipelineConfig,
    pub corpus: CorpusGenConfig,
    pub vibrato: VibratoGenConfig,
    pub snr: SnrConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            pipeline: Pipeline::Fe,
            out: PathBuf::from("runs/default"),
            data: DataConfig::default(),
            detector: PipelineConfig::default(),
            corpus: CorpusGenConfig::default(),
            vibrato: VibratoGenConfig::default(),
            snr: SnrConfig::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Parses the right-hand side of an override as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets a dotted `key=value` override inside a TOML table, creating sections as needed.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key {key:?}: '{p}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text, applies overrides in order, and checks referenced paths.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path` (defaults when `None`) with overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => {
                if !p.exists() {
                    return Err(Error::FileNotFound(p.to_path_buf()));
                }
                std::fs::read_to_string(p)?
            }
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, p) in self.data.paths() {
            if !p.exists() {
                return Err(Error::Config(format!("{key} = {} does not exist", p.display())));
            }
        }
        if self.data.corpus_dir.is_some() && (self.data.train_audio.is_some() || self.data.test_audio.is_some()) {
            return Err(Error::Config("set either data.corpus_dir or the per-split audio directories, not both".into()));
        }
        for (a, l, split) in [
            (&self.data.train_audio, &self.data.train_labels, "train"),
            (&self.data.test_audio, &self.data.test_labels, "test"),
        ] {
            if a.is_some() != l.is_some() {
                return Err(Error::Config(format!("data.{split}_audio and data.{split}_labels go together")));
            }
        }
        if self.snr.levels.is_empty() {
            return Err(Error::Config("snr.levels is empty".into()));
        }
        Ok(())
    }

    /// The fully resolved configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    /// SHA-256 of [`Self::to_toml`], lowercase hex.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
