//! End-to-end detectors: front-end, model and post-filter behind one interface,
//! plus training, corpus evaluation and the two stress procedures.

pub mod frontend;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use frontend::{fe_frontend, hpss_frontend, mel_frontend, silence_db, HpssFrontend, MelFrontend};

use crate::audio::{labels_to_frames, read_wav, AudioClip, LabelTrack};
use crate::dsp::Grid;
use crate::error::{invalid, Error, Result};
use crate::eval::{per_song_report, vibrato_heatmap, Detector, HeatmapGrid, PerSongReport};
use crate::features::FeatureConfig;
use crate::models::cnn::{cnn_predict_track, cnn_train, CnnConfig, CnnModel, CnnTrack, CnnTrainConfig};
use crate::models::rnn::{rnn_predict_track, rnn_train, RnnConfig, RnnModel, RnnTrack, RnnTrainConfig};
use crate::models::{forest_predict, forest_train, postprocess, ForestModel, ForestParams, ModelContainer, ModelKind, PredictionTrack};
use crate::stress::corpus::{CorpusTrack, Split};
use crate::stress::vibrato::read_vibrato_manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Fe,
    Cnn,
    Rnn,
}

impl Pipeline {
    pub const ALL: [Pipeline; 3] = [Pipeline::Fe, Pipeline::Cnn, Pipeline::Rnn];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Fe => "fe",
            Pipeline::Cnn => "cnn",
            Pipeline::Rnn => "rnn",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fe" => Ok(Pipeline::Fe),
            "cnn" => Ok(Pipeline::Cnn),
            "rnn" => Ok(Pipeline::Rnn),
            _ => Err(invalid(format!("unknown pipeline {s:?} (expected fe, cnn or rnn)"))),
        }
    }
}

/// Threshold and median smoothing applied to every detector's probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostConfig {
    pub threshold: f64,
    pub smooth_ms: f64,
}

impl Default for PostConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            smooth_ms: 800.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FePipelineConfig {
    pub features: FeatureConfig,
    pub forest: ForestParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnPipelineConfig {
    pub frontend: MelFrontend,
    pub n_frames: usize,
    pub channels: Vec<usize>,
    pub pool_after: Vec<usize>,
    pub dense: usize,
    pub train: CnnTrainConfig,
}

impl Default for CnnPipelineConfig {
    fn default() -> Self {
        let m = CnnConfig::default();
        Self {
            frontend: MelFrontend::default(),
            n_frames: m.n_frames,
            channels: m.channels,
            pool_after: m.pool_after,
            dense: m.dense,
            train: CnnTrainConfig::default(),
        }
    }
}

impl CnnPipelineConfig {
    pub fn model_config(&self) -> CnnConfig {
        CnnConfig {
            n_mels: self.frontend.n_mels,
            n_frames: self.n_frames,
            channels: self.channels.clone(),
            pool_after: self.pool_after.clone(),
            dense: self.dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnPipelineConfig {
    pub frontend: HpssFrontend,
    pub hidden: Vec<usize>,
    pub window: usize,
    /// Offset between overlapping excerpts at prediction time.
    pub inference_hop: usize,
    pub train: RnnTrainConfig,
}

impl Default for RnnPipelineConfig {
    fn default() -> Self {
        let m = RnnConfig::default();
        Self {
            frontend: HpssFrontend::default(),
            hidden: m.hidden,
            window: m.window,
            inference_hop: 1,
            train: RnnTrainConfig::default(),
        }
    }
}

impl RnnPipelineConfig {
    pub fn model_config(&self) -> RnnConfig {
        RnnConfig {
            input_dim: 2 * self.frontend.n_mels,
            hidden: self.hidden.clone(),
            window: self.window,
        }
    }
}

/// Settings of all three detectors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub post: PostConfig,
    pub fe: FePipelineConfig,
    pub cnn: CnnPipelineConfig,
    pub rnn: RnnPipelineConfig,
}

/// A clip with its reference annotation.
#[derive(Debug, Clone)]
pub struct LabeledClip {
    pub id: String,
    pub clip: AudioClip,
    pub labels: LabelTrack,
}

impl LabeledClip {
    pub fn from_corpus(t: &CorpusTrack) -> Self {
        Self {
            id: t.id.clone(),
            clip: t.mix.clone(),
            labels: t.labels.clone(),
        }
    }
}

/// Corpus tracks of one split as labeled mixtures.
pub fn corpus_split(tracks: &[CorpusTrack], split: Split) -> Vec<LabeledClip> {
    tracks.iter().filter(|t| t.split == split).map(LabeledClip::from_corpus).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Fe {
        features: FeatureConfig,
        model: ForestModel,
        post: PostConfig,
    },
    Cnn {
        frontend: MelFrontend,
        model: CnnModel,
        post: PostConfig,
    },
    Rnn {
        frontend: HpssFrontend,
        model: RnnModel,
        inference_hop: usize,
        post: PostConfig,
    },
}

fn finish(probabilities: Vec<f64>, frame_rate: f64, post: &PostConfig) -> Result<PredictionTrack> {
    postprocess(&PredictionTrack::from_probabilities(frame_rate, probabilities), post.threshold, post.smooth_ms)
}

impl TrainedModel {
    pub fn pipeline(&self) -> Pipeline {
        match self {
            TrainedModel::Fe { .. } => Pipeline::Fe,
            TrainedModel::Cnn { .. } => Pipeline::Cnn,
            TrainedModel::Rnn { .. } => Pipeline::Rnn,
        }
    }

    pub fn frame_rate(&self) -> f64 {
        match self {
            TrainedModel::Fe { features, .. } => features.frame_rate(),
            TrainedModel::Cnn { frontend, .. } => frontend.frame_rate(),
            TrainedModel::Rnn { frontend, .. } => frontend.frame_rate(),
        }
    }

    pub fn post(&self) -> PostConfig {
        match self {
            TrainedModel::Fe { post, .. } | TrainedModel::Cnn { post, .. } | TrainedModel::Rnn { post, .. } => *post,
        }
    }

    /// Same model with a different post-filter.
    pub fn with_post(mut self, new: PostConfig) -> Self {
        match &mut self {
            TrainedModel::Fe { post, .. } | TrainedModel::Cnn { post, .. } | TrainedModel::Rnn { post, .. } => *post = new,
        }
        self
    }

    /// Raw per-frame probabilities before thresholding.
    pub fn probabilities(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Fe { features, model, .. } => forest_predict(model, &fe_frontend(clip, features)?),
            TrainedModel::Cnn { frontend, model, .. } => cnn_predict_track(model, &mel_frontend(clip, frontend)?),
            TrainedModel::Rnn { frontend, model, inference_hop, .. } => {
                rnn_predict_track(model, &hpss_frontend(clip, frontend)?, *inference_hop)
            }
        }
    }

    pub fn to_container(&self) -> Result<ModelContainer> {
        let (mut c, frontend) = match self {
            TrainedModel::Fe { features, model, .. } => (model.to_container()?, serde_json::to_value(features)?),
            TrainedModel::Cnn { frontend, model, .. } => (model.to_container()?, serde_json::to_value(frontend)?),
            TrainedModel::Rnn { frontend, model, inference_hop, .. } => {
                let mut c = model.to_container()?;
                c.hyperparams["inference_hop"] = serde_json::json!(inference_hop);
                (c, serde_json::to_value(frontend)?)
            }
        };
        c.hyperparams["frontend"] = frontend;
        c.hyperparams["post"] = serde_json::to_value(self.post())?;
        Ok(c)
    }

    pub fn from_container(c: &ModelContainer) -> Result<Self> {
        let field = |k: &str| -> Result<serde_json::Value> {
            c.hyperparams
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Format(format!("model file lacks '{k}'")))
        };
        let post: PostConfig = serde_json::from_value(field("post")?)?;
        Ok(match c.kind {
            ModelKind::Forest => TrainedModel::Fe {
                features: serde_json::from_value(field("frontend")?)?,
                model: ForestModel::from_container(c)?,
                post,
            },
            ModelKind::Cnn => TrainedModel::Cnn {
                frontend: serde_json::from_value(field("frontend")?)?,
                model: CnnModel::from_container(c)?,
                post,
            },
            ModelKind::Rnn => TrainedModel::Rnn {
                frontend: serde_json::from_value(field("frontend")?)?,
                inference_hop: serde_json::from_value(field("inference_hop")?)?,
                model: RnnModel::from_container(c)?,
                post,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container()?.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&ModelContainer::load(path)?)
    }
}

impl Detector for TrainedModel {
    fn name(&self) -> String {
        self.pipeline().name().to_string()
    }

    fn detect(&self, clip: &AudioClip) -> Result<PredictionTrack> {
        finish(self.probabilities(clip)?, self.frame_rate(), &self.post())
    }
}

/// Front-end output and frame labels of every clip, computed in parallel.
fn prepare(data: &[LabeledClip], f: impl Fn(&AudioClip) -> Result<Grid> + Sync, fps: f64) -> Result<Vec<(Grid, Vec<bool>)>> {
    data.par_iter()
        .map(|d| {
            let x = f(&d.clip)?;
            let y = labels_to_frames(&d.labels, fps, x.n_rows())?.labels;
            Ok((x, y))
        })
        .collect()
}

/// Trains one detector on labeled clips. `seed` drives every random choice.
pub fn train_detector(pipeline: Pipeline, cfg: &PipelineConfig, data: &[LabeledClip], seed: u64) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(invalid("no training clips"));
    }
    match pipeline {
        Pipeline::Fe => {
            let features = cfg.fe.features.clone();
            let prepared = prepare(data, |c| fe_frontend(c, &features), features.frame_rate())?;
            let n_cols = prepared[0].0.n_cols();
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (x, y) in prepared {
                rows.extend_from_slice(x.as_slice());
                labels.extend(y);
            }
            let x = Grid::from_vec(labels.len(), n_cols, rows, features.frame_rate())?;
            let params = ForestParams { seed, ..cfg.fe.forest.clone() };
            log::info!("training forest on {} frames x {} features", x.n_rows(), n_cols);
            Ok(TrainedModel::Fe {
                model: forest_train(&x, &labels, &params)?,
                features,
                post: cfg.post,
            })
        }
        Pipeline::Cnn => {
            let frontend = cfg.cnn.frontend.clone();
            let tracks: Vec<CnnTrack> = prepare(data, |c| mel_frontend(c, &frontend), frontend.frame_rate())?
                .into_iter()
                .map(|(mel, labels)| CnnTrack { mel, labels })
                .collect();
            let train = CnnTrainConfig { seed, ..cfg.cnn.train.clone() };
            Ok(TrainedModel::Cnn {
                model: cnn_train(&tracks, &cfg.cnn.model_config(), &train, silence_db())?,
                frontend,
                post: cfg.post,
            })
        }
        Pipeline::Rnn => {
            let frontend = cfg.rnn.frontend.clone();
            let tracks: Vec<RnnTrack> = prepare(data, |c| hpss_frontend(c, &frontend), frontend.frame_rate())?
                .into_iter()
                .map(|(frames, labels)| RnnTrack { frames, labels })
                .collect();
            let train = RnnTrainConfig { seed, ..cfg.rnn.train.clone() };
            Ok(TrainedModel::Rnn {
                model: rnn_train(&tracks, &cfg.rnn.model_config(), &train)?,
                frontend,
                inference_hop: cfg.rnn.inference_hop.max(1),
                post: cfg.post,
            })
        }
    }
}

/// Predictions for every clip, in input order.
pub fn predict_all(det: &dyn Detector, clips: &[LabeledClip]) -> Result<Vec<PredictionTrack>> {
    clips.par_iter().map(|c| det.detect(&c.clip)).collect()
}

/// Per-song and aggregate metrics of a detector on labeled clips.
pub fn evaluate_detector(det: &dyn Detector, clips: &[LabeledClip]) -> Result<PerSongReport> {
    let preds = predict_all(det, clips)?;
    let triples = clips
        .iter()
        .zip(preds)
        .map(|(c, p)| {
            let truth = labels_to_frames(&c.labels, p.frame_rate, p.len())?;
            let pred = crate::audio::FrameLabels::new(p.frame_rate, p.labels)?;
            Ok((c.id.clone(), pred, truth))
        })
        .collect::<Result<Vec<_>>>()?;
    per_song_report(&triples)
}

/// Runs a detector over a generated vibrato grid directory (clips plus `manifest.csv`).
pub fn stress_vibrato(det: &dyn Detector, dir: impl AsRef<Path>) -> Result<HeatmapGrid> {
    let dir = dir.as_ref();
    let manifest = read_vibrato_manifest(dir.join("manifest.csv"))?;
    let preds: Vec<(String, Vec<bool>)> = manifest
        .par_iter()
        .map(|c| {
            let clip = read_wav(dir.join(&c.filename))?;
            Ok((c.filename.clone(), det.detect(&clip)?.labels))
        })
        .collect::<Result<_>>()?;
    vibrato_heatmap(&manifest, &preds.into_iter().collect::<BTreeMap<_, _>>())
}

/// Same as [`stress_vibrato`] on clips held in memory.
pub fn stress_vibrato_clips(det: &dyn Detector, clips: &[(crate::stress::VibratoClipInfo, AudioClip)]) -> Result<HeatmapGrid> {
    let preds: Vec<(String, Vec<bool>)> = clips
        .par_iter()
        .map(|(info, clip)| Ok((info.filename.clone(), det.detect(clip)?.labels)))
        .collect::<Result<_>>()?;
    let manifest: Vec<_> = clips.iter().map(|(i, _)| i.clone()).collect();
    vibrato_heatmap(&manifest, &preds.into_iter().collect::<BTreeMap<_, _>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
        }
        assert!("svm".parse::<Pipeline>().is_err());
    }

    #[test]
    fn model_configs_follow_frontends() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.cnn.model_config(), CnnConfig::default());
        assert_eq!(cfg.rnn.model_config(), RnnConfig::default());
        assert!((cfg.fe.features.frame_rate() - 70.0).abs() < 1e-12);
    }
}
