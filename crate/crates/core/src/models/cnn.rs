//! Small convolutional detector on mel-spectrogram excerpts.
//!
//! Valid 3×3 convolutions with ReLU, 3×3 max-pooling (floor) after selected
//! layers, one dense ReLU layer and a sigmoid output that scores the center
//! frame of the excerpt. Feature maps are `[channel][mel][time]` with time
//! contiguous.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{bce_with_logit, he_uniform, sigmoid, Sgd, SgdConfig};
use super::serialize::{ModelContainer, ModelKind};
use crate::dsp::Grid;
use crate::error::{invalid, Error, Result};

pub const POOL: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    pub n_mels: usize,
    /// Excerpt length in frames; the prediction belongs to the center frame.
    pub n_frames: usize,
    pub channels: Vec<usize>,
    /// Zero-based conv layer indices followed by a max-pool.
    pub pool_after: Vec<usize>,
    pub dense: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            n_mels: 80,
            n_frames: 115,
            channels: vec![32, 32, 64, 64],
            pool_after: vec![1, 3],
            dense: 128,
        }
    }
}

impl CnnConfig {
    /// `(height, width)` after every conv and pool stage, input first.
    pub fn shape_chain(&self) -> Result<Vec<(usize, usize)>> {
        let mut shapes = vec![(self.n_mels, self.n_frames)];
        let (mut h, mut w) = (self.n_mels, self.n_frames);
        for l in 0..self.channels.len() {
            if h < 3 || w < 3 {
                return Err(invalid(format!("conv layer {l} gets a {h}x{w} input, smaller than 3x3")));
            }
            h -= 2;
            w -= 2;
            shapes.push((h, w));
            if self.pool_after.contains(&l) {
                h /= POOL;
                w /= POOL;
                if h == 0 || w == 0 {
                    return Err(invalid(format!("pooling after layer {l} leaves an empty map")));
                }
                shapes.push((h, w));
            }
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) || self.dense == 0 {
            return Err(invalid("CNN needs at least one conv layer and nonzero widths"));
        }
        if self.pool_after.iter().any(|&l| l >= self.channels.len()) {
            return Err(invalid("pool_after names a layer that does not exist"));
        }
        self.shape_chain().map(|_| ())
    }

    fn center(&self) -> usize {
        self.n_frames / 2
    }
}

#[derive(Debug, Clone)]
struct ConvSlot {
    cin: usize,
    cout: usize,
    w: usize,
    b: usize,
    pool: bool,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone)]
struct Layout {
    convs: Vec<ConvSlot>,
    final_shape: (usize, usize, usize),
    flat: usize,
    dense_w: usize,
    dense_b: usize,
    out_w: usize,
    out_b: usize,
    total: usize,
}

impl Layout {
    fn new(cfg: &CnnConfig) -> Result<Self> {
        cfg.validate()?;
        let chain = cfg.shape_chain()?;
        let (fh, fw) = *chain.last().unwrap();
        let mut at = 0;
        let mut convs = Vec::new();
        let mut cin = 1;
        for (l, &cout) in cfg.channels.iter().enumerate() {
            let w = at;
            at += cout * cin * 9;
            let b = at;
            at += cout;
            convs.push(ConvSlot { cin, cout, w, b, pool: cfg.pool_after.contains(&l) });
            cin = cout;
        }
        let flat = cin * fh * fw;
        let dense_w = at;
        at += cfg.dense * flat;
        let dense_b = at;
        at += cfg.dense;
        let out_w = at;
        at += cfg.dense;
        let out_b = at;
        at += 1;
        Ok(Self {
            convs,
            final_shape: (cin, fh, fw),
            flat,
            dense_w,
            dense_b,
            out_w,
            out_b,
            total: at,
        })
    }
}

/// A `[c][h][w]` tensor.
#[derive(Debug, Clone, PartialEq)]
struct Map {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Map {
    fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w, data: vec![0.0; c * h * w] }
    }

    fn row(&self, c: usize, y: usize) -> &[f64] {
        let s = (c * self.h + y) * self.w;
        &self.data[s..s + self.w]
    }

    /// Columns `[x0, x0 + width)` of every row.
    fn crop_w(&self, x0: usize, width: usize) -> Map {
        let mut out = Map::zeros(self.c, self.h, width);
        for c in 0..self.c {
            for y in 0..self.h {
                let d = (c * self.h + y) * width;
                out.data[d..d + width].copy_from_slice(&self.row(c, y)[x0..x0 + width]);
            }
        }
        out
    }
}

/// Valid 3×3 convolution followed by ReLU.
fn conv_forward(input: &Map, p: &[f64], slot: &ConvSlot) -> Map {
    let (oh, ow) = (input.h - 2, input.w - 2);
    let mut out = Map::zeros(slot.cout, oh, ow);
    for co in 0..slot.cout {
        let bias = p[slot.b + co];
        let plane = &mut out.data[co * oh * ow..(co + 1) * oh * ow];
        plane.iter_mut().for_each(|v| *v = bias);
        for ci in 0..slot.cin {
            for dy in 0..3 {
                for dx in 0..3 {
                    let k = p[slot.w + ((co * slot.cin + ci) * 3 + dy) * 3 + dx];
                    for y in 0..oh {
                        let src = &input.row(ci, y + dy)[dx..dx + ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += k * s;
                        }
                    }
                }
            }
        }
    }
    out.data.iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Backward through ReLU and convolution. `dout` is the gradient at the ReLU output.
fn conv_backward(input: &Map, output: &Map, dout: &mut Map, p: &[f64], slot: &ConvSlot, grad: &mut [f64]) -> Map {
    for (d, o) in dout.data.iter_mut().zip(&output.data) {
        if *o <= 0.0 {
            *d = 0.0;
        }
    }
    let (oh, ow) = (output.h, output.w);
    let mut din = Map::zeros(input.c, input.h, input.w);
    for co in 0..slot.cout {
        let plane = &dout.data[co * oh * ow..(co + 1) * oh * ow];
        grad[slot.b + co] += plane.iter().sum::<f64>();
        for ci in 0..slot.cin {
            for dy in 0..3 {
                for dx in 0..3 {
                    let wi = slot.w + ((co * slot.cin + ci) * 3 + dy) * 3 + dx;
                    let k = p[wi];
                    let mut acc = 0.0;
                    for y in 0..oh {
                        let g = &plane[y * ow..(y + 1) * ow];
                        let src = &input.row(ci, y + dy)[dx..dx + ow];
                        acc += g.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                        let s = (ci * input.h + y + dy) * input.w + dx;
                        for (d, gv) in din.data[s..s + ow].iter_mut().zip(g) {
                            *d += k * gv;
                        }
                    }
                    grad[wi] += acc;
                }
            }
        }
    }
    din
}

/// Non-overlapping 3×3 max-pool; the time axis starts at `phase`. Returns argmax indices too.
fn pool_forward(input: &Map, phase: usize) -> (Map, Vec<usize>) {
    let oh = input.h / POOL;
    let ow = input.w.saturating_sub(phase) / POOL;
    let mut out = Map::zeros(input.c, oh, ow);
    let mut arg = vec![0; out.data.len()];
    for c in 0..input.c {
        for i in 0..oh {
            for j in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut bi = 0;
                for dy in 0..POOL {
                    let base = (c * input.h + POOL * i + dy) * input.w + phase + POOL * j;
                    for dx in 0..POOL {
                        let v = input.data[base + dx];
                        if v > best {
                            best = v;
                            bi = base + dx;
                        }
                    }
                }
                let o = (c * oh + i) * ow + j;
                out.data[o] = best;
                arg[o] = bi;
            }
        }
    }
    (out, arg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub config: CnnConfig,
    /// Per-band normalization applied to raw mel values.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Raw mel value used to pad excerpts beyond the track edges.
    pub pad_value: f64,
    pub params: Vec<f64>,
}

/// Cached activations of one forward pass.
struct Trace {
    /// Input of every conv layer, then its output, then the pooled map if any.
    conv_in: Vec<Map>,
    conv_out: Vec<Map>,
    pooled: Vec<Option<(Map, Vec<usize>)>>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    logit: f64,
}

impl CnnModel {
    /// Zero weights and biases, identity normalization.
    pub fn zeros(config: CnnConfig) -> Result<Self> {
        let layout = Layout::new(&config)?;
        Ok(Self {
            mean: vec![0.0; config.n_mels],
            std: vec![1.0; config.n_mels],
            pad_value: 0.0,
            params: vec![0.0; layout.total],
            config,
        })
    }

    /// He-uniform weights, zero biases.
    pub fn init(config: CnnConfig, seed: u64) -> Result<Self> {
        let layout = Layout::new(&config)?;
        let mut m = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &layout.convs {
            he_uniform(&mut rng, &mut m.params[s.w..s.b], s.cin * 9);
        }
        he_uniform(&mut rng, &mut m.params[layout.dense_w..layout.dense_b], layout.flat);
        he_uniform(&mut rng, &mut m.params[layout.out_w..layout.out_b], m.config.dense);
        Ok(m)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.config).expect("validated at construction")
    }

    /// Normalizes a `frames × n_mels` grid into a `[1][mel][time]` map.
    fn to_map(&self, frames: &Grid) -> Map {
        let (t, m) = frames.shape();
        let mut map = Map::zeros(1, m, t);
        for f in 0..t {
            for (b, &v) in frames.row(f).iter().enumerate() {
                map.data[b * t + f] = (v - self.mean[b]) / self.std[b];
            }
        }
        map
    }

    fn check_window(&self, window: &Grid) -> Result<()> {
        if window.shape() != (self.config.n_frames, self.config.n_mels) {
            return Err(Error::ShapeMismatch(format!(
                "CNN expects {}x{} (frames x mels), got {}x{}",
                self.config.n_frames,
                self.config.n_mels,
                window.n_rows(),
                window.n_cols()
            )));
        }
        Ok(())
    }

    fn head(&self, layout: &Layout, flat: &[f64]) -> (Vec<f64>, f64) {
        let p = &self.params;
        let hidden: Vec<f64> = (0..self.config.dense)
            .map(|u| {
                let w = &p[layout.dense_w + u * layout.flat..layout.dense_w + (u + 1) * layout.flat];
                let z = p[layout.dense_b + u] + w.iter().zip(flat).map(|(a, b)| a * b).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let logit = p[layout.out_b]
            + hidden
                .iter()
                .zip(&p[layout.out_w..layout.out_b])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        (hidden, logit)
    }

    fn forward_map(&self, layout: &Layout, input: Map) -> Trace {
        let mut conv_in = Vec::new();
        let mut conv_out = Vec::new();
        let mut pooled = Vec::new();
        let mut cur = input;
        for slot in &layout.convs {
            let out = conv_forward(&cur, &self.params, slot);
            conv_in.push(cur);
            if slot.pool {
                let (pm, arg) = pool_forward(&out, 0);
                cur = pm.clone();
                pooled.push(Some((pm, arg)));
            } else {
                cur = out.clone();
                pooled.push(None);
            }
            conv_out.push(out);
        }
        let flat = cur.data;
        let (hidden, logit) = self.head(layout, &flat);
        Trace { conv_in, conv_out, pooled, flat, hidden, logit }
    }

    /// Logit for one `n_frames × n_mels` window of raw mel values.
    pub fn logit(&self, window: &Grid) -> Result<f64> {
        self.check_window(window)?;
        let layout = self.layout();
        Ok(self.forward_map(&layout, self.to_map(window)).logit)
    }

    /// Loss and its gradient for one window with binary target.
    pub fn loss_and_grad(&self, window: &Grid, target: bool) -> Result<(f64, Vec<f64>)> {
        self.check_window(window)?;
        let layout = self.layout();
        Ok(self.map_loss_and_grad(&layout, self.to_map(window), target))
    }

    fn map_loss_and_grad(&self, layout: &Layout, input: Map, target: bool) -> (f64, Vec<f64>) {
        let p = &self.params;
        let tr = self.forward_map(layout, input);
        let y = target as u8 as f64;
        let loss = bce_with_logit(tr.logit, y);
        let dz = sigmoid(tr.logit) - y;
        let mut g = vec![0.0; layout.total];
        g[layout.out_b] = dz;
        let mut dflat = vec![0.0; layout.flat];
        for u in 0..self.config.dense {
            g[layout.out_w + u] = dz * tr.hidden[u];
            if tr.hidden[u] <= 0.0 {
                continue;
            }
            let dh = dz * p[layout.out_w + u];
            g[layout.dense_b + u] = dh;
            let row = layout.dense_w + u * layout.flat;
            for k in 0..layout.flat {
                g[row + k] = dh * tr.flat[k];
                dflat[k] += dh * p[row + k];
            }
        }
        let (c, h, w) = layout.final_shape;
        let mut dcur = Map { c, h, w, data: dflat };
        for (l, slot) in layout.convs.iter().enumerate().rev() {
            let out = &tr.conv_out[l];
            let mut dout = match &tr.pooled[l] {
                Some((_, arg)) => {
                    let mut d = Map::zeros(out.c, out.h, out.w);
                    for (gv, &a) in dcur.data.iter().zip(arg) {
                        d.data[a] += gv;
                    }
                    d
                }
                None => dcur,
            };
            dcur = conv_backward(&tr.conv_in[l], out, &mut dout, p, slot, &mut g);
        }
        (loss, g)
    }
}

/// Vocal probability for one `n_frames × n_mels` excerpt of raw mel values.
pub fn cnn_forward(model: &CnnModel, window: &Grid) -> Result<f64> {
    Ok(sigmoid(model.logit(window)?))
}

impl CnnModel {
    /// Normalized `[1][mel][time]` map of a whole track, padded so that every
    /// frame is the center of one excerpt.
    fn padded_track(&self, mel: &Grid) -> Result<Map> {
        if mel.n_cols() != self.config.n_mels {
            return Err(Error::ShapeMismatch(format!(
                "CNN expects {} mel bands, got {}",
                self.config.n_mels,
                mel.n_cols()
            )));
        }
        let left = self.config.center();
        let right = self.config.n_frames - 1 - left;
        let t = mel.n_rows() + left + right;
        let mut padded = Grid::filled(t, self.config.n_mels, self.pad_value, mel.frame_rate);
        for f in 0..mel.n_rows() {
            padded.row_mut(left + f).copy_from_slice(mel.row(f));
        }
        Ok(self.to_map(&padded))
    }

    /// Runs every layer over the whole track once, splitting by pool phase so
    /// each excerpt sees exactly what a per-excerpt forward pass would.
    fn sliding_logits(&self, layout: &Layout, map: Map, starts: Vec<(usize, usize)>, layer: usize, width: usize, out: &mut [f64]) {
        let mut cur = map;
        let mut width = width;
        for l in layer..layout.convs.len() {
            let slot = &layout.convs[l];
            cur = conv_forward(&cur, &self.params, slot);
            width -= 2;
            if slot.pool {
                for phase in 0..POOL {
                    let group: Vec<(usize, usize)> = starts
                        .iter()
                        .filter(|(s, _)| s % POOL == phase)
                        .map(|&(s, i)| ((s - phase) / POOL, i))
                        .collect();
                    if group.is_empty() {
                        continue;
                    }
                    let (pm, _) = pool_forward(&cur, phase);
                    self.sliding_logits(layout, pm, group, l + 1, width / POOL, out);
                }
                return;
            }
        }
        for (s, i) in starts {
            let flat = cur.crop_w(s, width).data;
            out[i] = self.head(layout, &flat).1;
        }
    }
}

/// Probability for every frame of a `frames × n_mels` track, each frame
/// scored as the center of its own excerpt.
pub fn cnn_predict_track(model: &CnnModel, mel: &Grid) -> Result<Vec<f64>> {
    let layout = model.layout();
    let map = model.padded_track(mel)?;
    let n = mel.n_rows();
    let mut logits = vec![0.0; n];
    model.sliding_logits(&layout, map, (0..n).map(|i| (i, i)).collect(), 0, model.config.n_frames, &mut logits);
    Ok(logits.into_iter().map(sigmoid).collect())
}

/// One training track: raw mel frames and per-frame labels.
#[derive(Debug, Clone)]
pub struct CnnTrack {
    pub mel: Grid,
    pub labels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Cap on balanced excerpts drawn per epoch (split evenly between classes).
    pub max_windows_per_epoch: usize,
    pub sgd: SgdConfig,
    pub seed: u64,
}

impl Default for CnnTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 8,
            batch_size: 32,
            max_windows_per_epoch: 4000,
            sgd: SgdConfig {
                learning_rate: 0.01,
                ..SgdConfig::default()
            },
            seed: 0,
        }
    }
}

/// Per-band mean and standard deviation over every training frame.
fn band_stats(tracks: &[CnnTrack], n_mels: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; n_mels];
    let mut sq = vec![0.0; n_mels];
    let mut n = 0usize;
    for t in tracks {
        for row in t.mel.rows() {
            for (b, &v) in row.iter().enumerate() {
                sum[b] += v;
                sq[b] += v * v;
            }
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let var = (q / n - m * m).max(0.0);
            if var > 1e-12 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

/// Class-balanced excerpt centers `(track, frame)`: every epoch undersamples the majority class.
fn balanced_epoch(pos: &[(usize, usize)], neg: &[(usize, usize)], cap: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, bool)> {
    let per_class = pos.len().min(neg.len()).min((cap / 2).max(1));
    let mut p = pos.to_vec();
    let mut n = neg.to_vec();
    p.shuffle(rng);
    n.shuffle(rng);
    let mut out: Vec<(usize, usize, bool)> = p[..per_class]
        .iter()
        .map(|&(t, f)| (t, f, true))
        .chain(n[..per_class].iter().map(|&(t, f)| (t, f, false)))
        .collect();
    out.shuffle(rng);
    out
}

/// Mini-batch momentum SGD on binary cross-entropy. Per-excerpt gradients
/// are computed in parallel and summed in batch order, so the result does not
/// depend on the thread count.
pub fn cnn_train(tracks: &[CnnTrack], config: &CnnConfig, train: &CnnTrainConfig, pad_value: f64) -> Result<CnnModel> {
    if tracks.is_empty() {
        return Err(invalid("no training tracks"));
    }
    for t in tracks {
        if t.mel.n_cols() != config.n_mels || t.mel.n_rows() != t.labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "track is {}x{} with {} labels, CNN expects {} mel bands",
                t.mel.n_rows(),
                t.mel.n_cols(),
                t.labels.len(),
                config.n_mels
            )));
        }
    }
    if train.batch_size == 0 {
        return Err(invalid("batch_size must be positive"));
    }
    let mut model = CnnModel::init(config.clone(), train.seed)?;
    let (mean, std) = band_stats(tracks, config.n_mels);
    model.mean = mean;
    model.std = std;
    model.pad_value = pad_value;
    let layout = model.layout();
    let maps: Vec<Map> = tracks.iter().map(|t| model.padded_track(&t.mel)).collect::<Result<_>>()?;

    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (f, &l) in t.labels.iter().enumerate() {
            if l {
                pos.push((ti, f));
            } else {
                neg.push((ti, f));
            }
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(invalid("training data contains a single class"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    rng.set_stream(1);
    let mut opt = Sgd::new(train.sgd.clone(), layout.total);
    let mut iteration = 0;
    for epoch in 0..train.epochs {
        let order = balanced_epoch(&pos, &neg, train.max_windows_per_epoch, &mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(train.batch_size) {
            let results: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&(t, f, y)| model.map_loss_and_grad(&layout, maps[t].crop_w(f, config.n_frames), y))
                .collect();
            let mut grad = vec![0.0; layout.total];
            let mut loss = 0.0;
            for (l, g) in &results {
                loss += l;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            loss *= scale;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { iteration });
            }
            epoch_loss += loss * batch.len() as f64;
            opt.step(&mut model.params, &grad, epoch);
            iteration += 1;
        }
        log::info!("cnn epoch {epoch}: mean loss {:.4}", epoch_loss / order.len().max(1) as f64);
    }
    Ok(model)
}

impl CnnModel {
    pub fn to_container(&self) -> Result<ModelContainer> {
        let mut c = ModelContainer::new(
            ModelKind::Cnn,
            serde_json::json!({ "config": self.config, "pad_value": self.pad_value }),
        );
        c.push("mean", self.mean.clone());
        c.push("std", self.std.clone());
        c.push("params", self.params.clone());
        Ok(c)
    }

    pub fn from_container(c: &ModelContainer) -> Result<Self> {
        c.expect_kind(ModelKind::Cnn)?;
        let config: CnnConfig = serde_json::from_value(c.hyperparams["config"].clone())?;
        let pad_value = c.hyperparams["pad_value"]
            .as_f64()
            .ok_or_else(|| Error::Format("CNN pad_value missing".into()))?;
        let layout = Layout::new(&config).map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self {
            mean: c.blob_sized("mean", config.n_mels)?.to_vec(),
            std: c.blob_sized("std", config.n_mels)?.to_vec(),
            params: c.blob_sized("params", layout.total)?.to_vec(),
            pad_value,
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_config() -> CnnConfig {
        CnnConfig {
            n_mels: 8,
            n_frames: 9,
            channels: vec![2, 3],
            pool_after: vec![1],
            dense: 4,
        }
    }

    fn random_grid(rows: usize, cols: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(), 70.0).unwrap()
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = CnnModel::zeros(CnnConfig::default()).unwrap();
        assert_eq!(cnn_forward(&m, &random_grid(115, 80, 1)).unwrap(), 0.5);
    }

    #[test]
    fn default_shape_chain() {
        let chain = CnnConfig::default().shape_chain().unwrap();
        assert_eq!(
            chain,
            vec![(80, 115), (78, 113), (76, 111), (25, 37), (23, 35), (21, 33), (7, 11)]
        );
    }

    #[test]
    fn window_shape_checked() {
        let m = CnnModel::zeros(toy_config()).unwrap();
        assert!(cnn_forward(&m, &random_grid(9, 7, 1)).is_err());
        let tiny = CnnConfig { n_mels: 4, ..toy_config() };
        assert!(CnnModel::zeros(tiny).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = CnnModel::init(toy_config(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Non-zero biases keep the ReLUs away from their kinks.
        for v in m.params.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
        let x = random_grid(9, 8, 5);
        for target in [true, false] {
            let (_, g) = m.loss_and_grad(&x, target).unwrap();
            let eps = 1e-5;
            let loss = |m: &CnnModel| {
                let z = m.logit(&x).unwrap();
                bce_with_logit(z, target as u8 as f64)
            };
            for i in 0..m.n_params() {
                let orig = m.params[i];
                m.params[i] = orig + eps;
                let up = loss(&m);
                m.params[i] = orig - eps;
                let down = loss(&m);
                m.params[i] = orig;
                let num = (up - down) / (2.0 * eps);
                let rel = (num - g[i]).abs() / num.abs().max(g[i].abs()).max(1e-6);
                assert!(rel < 1e-4, "param {i}: analytic {} numeric {num}", g[i]);
            }
        }
    }

    #[test]
    fn sliding_prediction_equals_per_window() {
        let cfg = CnnConfig {
            n_mels: 26,
            n_frames: 25,
            channels: vec![2, 2, 3, 2],
            pool_after: vec![1, 3],
            dense: 5,
        };
        let mut m = CnnModel::init(cfg.clone(), 7).unwrap();
        m.pad_value = -3.0;
        m.mean = (0..26).map(|b| b as f64 * 0.1).collect();
        m.std = (0..26).map(|b| 1.0 + b as f64 * 0.05).collect();
        let track = random_grid(40, 26, 8);
        let fast = cnn_predict_track(&m, &track).unwrap();
        let padded = {
            let mut g = Grid::filled(40 + 24, 26, -3.0, 70.0);
            for f in 0..40 {
                g.row_mut(12 + f).copy_from_slice(track.row(f));
            }
            g
        };
        for (i, p) in fast.iter().enumerate() {
            let slow = cnn_forward(&m, &padded.slice_rows(i, i + 25)).unwrap();
            assert!((p - slow).abs() < 1e-12, "frame {i}: {p} vs {slow}");
        }
    }

    fn learnable_tracks() -> Vec<CnnTrack> {
        // Vocal frames carry a bright upper band.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..4)
            .map(|_| {
                let labels: Vec<bool> = (0..60).map(|f| (f / 15) % 2 == 1).collect();
                let mut mel = Grid::zeros(60, 8, 70.0);
                for f in 0..60 {
                    for b in 0..8 {
                        let boost = if labels[f] && b >= 4 { 2.0 } else { 0.0 };
                        mel.set(f, b, boost + rng.gen_range(-0.3..0.3));
                    }
                }
                CnnTrack { mel, labels }
            })
            .collect()
    }

    #[test]
    fn training_learns_and_is_deterministic() {
        let tracks = learnable_tracks();
        let cfg = CnnConfig { n_mels: 8, n_frames: 9, channels: vec![3, 3], pool_after: vec![1], dense: 6 };
        let tc = CnnTrainConfig { epochs: 15, batch_size: 8, max_windows_per_epoch: 200, seed: 2, ..Default::default() };
        let a = cnn_train(&tracks, &cfg, &tc, 0.0).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| cnn_train(&tracks, &cfg, &tc, 0.0)).unwrap();
        assert_eq!(a, b);
        let p = cnn_predict_track(&a, &tracks[0].mel).unwrap();
        let correct = p.iter().zip(&tracks[0].labels).filter(|(p, &l)| (**p >= 0.5) == l).count();
        assert!(correct >= 50, "{correct}/60");
    }

    #[test]
    fn container_round_trip() {
        let m = CnnModel::init(toy_config(), 1).unwrap();
        let c = ModelContainer::from_bytes(&m.to_container().unwrap().to_bytes().unwrap()).unwrap();
        assert_eq!(CnnModel::from_container(&c).unwrap(), m);
    }

    #[test]
    fn diverging_training_reports_iteration() {
        let tracks = learnable_tracks();
        let cfg = CnnConfig { n_mels: 8, n_frames: 9, channels: vec![3, 3], pool_after: vec![1], dense: 6 };
        let sgd = SgdConfig { learning_rate: 1e200, clip_norm: 0.0, ..Default::default() };
        let tc = CnnTrainConfig { epochs: 5, batch_size: 8, max_windows_per_epoch: 100, sgd, seed: 2 };
        match cnn_train(&tracks, &cfg, &tc, 0.0) {
            Err(Error::NonFiniteLoss { iteration }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
