//! Stacked bidirectional LSTM with a shared per-frame sigmoid output.
//!
//! Gate order inside every weight matrix is input, forget, cell, output.
//! Each layer's output at frame t is `[h_forward(t); h_backward(t)]`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{bce_with_logit, he_uniform, sigmoid, Sgd, SgdConfig};
use super::serialize::{ModelContainer, ModelKind};
use crate::dsp::Grid;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    /// Frames per excerpt.
    pub window: usize,
}

impl Default for RnnConfig {
    fn default() -> Self {
        Self {
            input_dim: 80,
            hidden: vec![30, 20, 40],
            window: 218,
        }
    }
}

impl RnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.is_empty() || self.hidden.contains(&0) || self.window == 0 {
            return Err(invalid("RNN needs a positive input size, window and hidden sizes"));
        }
        Ok(())
    }
}

/// Offsets of one direction of one layer in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct DirSlot {
    input: usize,
    hidden: usize,
    w: usize,
    b: usize,
}

impl DirSlot {
    fn cols(&self) -> usize {
        self.input + self.hidden
    }
}

#[derive(Debug, Clone)]
struct Layout {
    /// `[forward, backward]` per layer.
    layers: Vec<[DirSlot; 2]>,
    out_w: usize,
    out_b: usize,
    total: usize,
}

impl Layout {
    fn new(cfg: &RnnConfig) -> Result<Self> {
        cfg.validate()?;
        let mut at = 0;
        let mut input = cfg.input_dim;
        let mut layers = Vec::new();
        for &h in &cfg.hidden {
            let mut dir = || {
                let w = at;
                at += 4 * h * (input + h);
                let b = at;
                at += 4 * h;
                DirSlot { input, hidden: h, w, b }
            };
            let pair = [dir(), dir()];
            layers.push(pair);
            input = 2 * h;
        }
        let out_w = at;
        at += input;
        let out_b = at;
        at += 1;
        Ok(Self { layers, out_w, out_b, total: at })
    }
}

/// States of one direction over a sequence, in processing order.
struct DirTrace {
    /// Gate activations `[i, f, g, o]` per step.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

fn run_direction(p: &[f64], s: &DirSlot, xs: &[&[f64]]) -> DirTrace {
    let h_n = s.hidden;
    let cols = s.cols();
    let mut h_prev = vec![0.0; h_n];
    let mut c_prev = vec![0.0; h_n];
    let mut tr = DirTrace {
        gates: Vec::with_capacity(xs.len()),
        c: Vec::with_capacity(xs.len()),
        h: Vec::with_capacity(xs.len()),
    };
    let mut z = vec![0.0; 4 * h_n];
    for x in xs {
        for (r, zr) in z.iter_mut().enumerate() {
            let row = &p[s.w + r * cols..s.w + (r + 1) * cols];
            let (wx, wh) = row.split_at(s.input);
            *zr = p[s.b + r]
                + wx.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>()
                + wh.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
        }
        let mut gates = vec![0.0; 4 * h_n];
        let mut c = vec![0.0; h_n];
        let mut h = vec![0.0; h_n];
        for k in 0..h_n {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[h_n + k]);
            let g = z[2 * h_n + k].tanh();
            let o = sigmoid(z[3 * h_n + k]);
            c[k] = f * c_prev[k] + i * g;
            h[k] = o * c[k].tanh();
            gates[k] = i;
            gates[h_n + k] = f;
            gates[2 * h_n + k] = g;
            gates[3 * h_n + k] = o;
        }
        tr.gates.push(gates);
        c_prev.clone_from(&c);
        h_prev.clone_from(&h);
        tr.c.push(c);
        tr.h.push(h);
    }
    tr
}

/// Backpropagates `dh` (per step, processing order) through one direction.
/// Returns the input gradients in processing order.
fn back_direction(p: &[f64], s: &DirSlot, xs: &[&[f64]], tr: &DirTrace, dh_out: &[Vec<f64>], grad: &mut [f64]) -> Vec<Vec<f64>> {
    let h_n = s.hidden;
    let cols = s.cols();
    let n = xs.len();
    let mut dx = vec![vec![0.0; s.input]; n];
    let mut dh_next = vec![0.0; h_n];
    let mut dc_next = vec![0.0; h_n];
    let zeros = vec![0.0; h_n];
    let mut dz = vec![0.0; 4 * h_n];
    for t in (0..n).rev() {
        let g = &tr.gates[t];
        let c_prev = if t > 0 { &tr.c[t - 1] } else { &zeros };
        let h_prev = if t > 0 { &tr.h[t - 1] } else { &zeros };
        for k in 0..h_n {
            let (i, f, gg, o) = (g[k], g[h_n + k], g[2 * h_n + k], g[3 * h_n + k]);
            let dh = dh_out[t][k] + dh_next[k];
            let tc = tr.c[t][k].tanh();
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dz[k] = dc * gg * i * (1.0 - i);
            dz[h_n + k] = dc * c_prev[k] * f * (1.0 - f);
            dz[2 * h_n + k] = dc * i * (1.0 - gg * gg);
            dz[3 * h_n + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (r, &d) in dz.iter().enumerate() {
            grad[s.b + r] += d;
            if d == 0.0 {
                continue;
            }
            let base = s.w + r * cols;
            for (j, &xv) in xs[t].iter().enumerate() {
                grad[base + j] += d * xv;
                dx[t][j] += d * p[base + j];
            }
            for (j, &hv) in h_prev.iter().enumerate() {
                grad[base + s.input + j] += d * hv;
                dh_next[j] += d * p[base + s.input + j];
            }
        }
    }
    dx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    pub config: RnnConfig,
    /// Per-column normalization applied to raw inputs.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub params: Vec<f64>,
}

struct LayerTrace {
    input: Vec<Vec<f64>>,
    fwd: DirTrace,
    bwd: DirTrace,
}

impl RnnModel {
    pub fn zeros(config: RnnConfig) -> Result<Self> {
        let layout = Layout::new(&config)?;
        Ok(Self {
            mean: vec![0.0; config.input_dim],
            std: vec![1.0; config.input_dim],
            params: vec![0.0; layout.total],
            config,
        })
    }

    /// He-uniform weights, zero biases except a forget-gate bias of 1.
    pub fn init(config: RnnConfig, seed: u64) -> Result<Self> {
        let layout = Layout::new(&config)?;
        let mut m = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for pair in &layout.layers {
            for s in pair {
                he_uniform(&mut rng, &mut m.params[s.w..s.b], s.cols());
                m.params[s.b + s.hidden..s.b + 2 * s.hidden].iter_mut().for_each(|v| *v = 1.0);
            }
        }
        he_uniform(&mut rng, &mut m.params[layout.out_w..layout.out_b], layout.out_b - layout.out_w);
        Ok(m)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.config).expect("validated at construction")
    }

    fn normalize(&self, frames: &Grid) -> Result<Vec<Vec<f64>>> {
        if frames.n_cols() != self.config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "RNN expects {} input columns, got {}",
                self.config.input_dim,
                frames.n_cols()
            )));
        }
        Ok(frames
            .rows()
            .map(|r| r.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect())
            .collect())
    }

    fn forward_seq(&self, layout: &Layout, xs: Vec<Vec<f64>>) -> (Vec<LayerTrace>, Vec<f64>) {
        let p = &self.params;
        let mut traces = Vec::new();
        let mut cur = xs;
        for pair in &layout.layers {
            let refs: Vec<&[f64]> = cur.iter().map(Vec::as_slice).collect();
            let fwd = run_direction(p, &pair[0], &refs);
            let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
            let bwd = run_direction(p, &pair[1], &rev);
            let n = cur.len();
            let next: Vec<Vec<f64>> = (0..n)
                .map(|t| {
                    let mut v = fwd.h[t].clone();
                    v.extend_from_slice(&bwd.h[n - 1 - t]);
                    v
                })
                .collect();
            traces.push(LayerTrace { input: cur, fwd, bwd });
            cur = next;
        }
        let w = &p[layout.out_w..layout.out_b];
        let logits = cur
            .iter()
            .map(|h| p[layout.out_b] + w.iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        // Keep the top layer output for the dense gradient.
        traces.push(LayerTrace {
            input: cur,
            fwd: DirTrace { gates: vec![], c: vec![], h: vec![] },
            bwd: DirTrace { gates: vec![], c: vec![], h: vec![] },
        });
        (traces, logits)
    }

    /// Per-frame logits for raw (unnormalized) input frames.
    pub fn logits(&self, frames: &Grid) -> Result<Vec<f64>> {
        let layout = self.layout();
        Ok(self.forward_seq(&layout, self.normalize(frames)?).1)
    }

    /// Weighted cross-entropy over frames and its gradient. `weights[t] = 0` masks frame t.
    fn seq_loss_and_grad(&self, layout: &Layout, xs: Vec<Vec<f64>>, targets: &[bool], weights: &[f64]) -> (f64, Vec<f64>) {
        let p = &self.params;
        let (traces, logits) = self.forward_seq(layout, xs);
        let mut g = vec![0.0; layout.total];
        let mut loss = 0.0;
        let top = &traces.last().unwrap().input;
        let n = logits.len();
        let width = layout.out_b - layout.out_w;
        let mut dcur: Vec<Vec<f64>> = vec![vec![0.0; width]; n];
        for t in 0..n {
            if weights[t] == 0.0 {
                continue;
            }
            let y = targets[t] as u8 as f64;
            loss += weights[t] * bce_with_logit(logits[t], y);
            let dz = weights[t] * (sigmoid(logits[t]) - y);
            g[layout.out_b] += dz;
            for j in 0..width {
                g[layout.out_w + j] += dz * top[t][j];
                dcur[t][j] = dz * p[layout.out_w + j];
            }
        }
        for (l, pair) in layout.layers.iter().enumerate().rev() {
            let tr = &traces[l];
            let h = pair[0].hidden;
            let dh_f: Vec<Vec<f64>> = dcur.iter().map(|d| d[..h].to_vec()).collect();
            let dh_b: Vec<Vec<f64>> = dcur.iter().rev().map(|d| d[h..].to_vec()).collect();
            let refs: Vec<&[f64]> = tr.input.iter().map(Vec::as_slice).collect();
            let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
            let dx_f = back_direction(p, &pair[0], &refs, &tr.fwd, &dh_f, &mut g);
            let dx_b = back_direction(p, &pair[1], &rev, &tr.bwd, &dh_b, &mut g);
            dcur = dx_f
                .into_iter()
                .zip(dx_b.into_iter().rev())
                .map(|(a, b)| a.iter().zip(&b).map(|(x, y)| x + y).collect())
                .collect();
        }
        (loss, g)
    }

    /// Unweighted summed loss and gradient for raw frames; used to verify backpropagation.
    pub fn loss_and_grad(&self, frames: &Grid, targets: &[bool]) -> Result<(f64, Vec<f64>)> {
        if targets.len() != frames.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} targets for {} frames",
                targets.len(),
                frames.n_rows()
            )));
        }
        let layout = self.layout();
        let xs = self.normalize(frames)?;
        Ok(self.seq_loss_and_grad(&layout, xs, targets, &vec![1.0; targets.len()]))
    }

    /// The same network with the roles of the two directions exchanged. On a
    /// time-reversed input it produces the time-reversed output.
    pub fn mirrored(&self) -> RnnModel {
        let layout = self.layout();
        let mut out = self.clone();
        for (l, pair) in layout.layers.iter().enumerate() {
            let [f, b] = *pair;
            let len = b.b + 4 * b.hidden - b.w;
            for k in 0..len {
                out.params[f.w + k] = self.params[b.w + k];
                out.params[b.w + k] = self.params[f.w + k];
            }
            if l > 0 {
                // The input of this layer is [forward; backward] of the layer below.
                let half = f.input / 2;
                for s in pair {
                    for r in 0..4 * s.hidden {
                        let row = s.w + r * s.cols();
                        for j in 0..half {
                            out.params.swap(row + j, row + half + j);
                        }
                    }
                }
            }
        }
        let half = (layout.out_b - layout.out_w) / 2;
        for j in 0..half {
            out.params.swap(layout.out_w + j, layout.out_w + half + j);
        }
        out
    }
}

/// Per-frame vocal probabilities for one excerpt of raw input frames.
pub fn rnn_forward(model: &RnnModel, window: &Grid) -> Result<Vec<f64>> {
    Ok(model.logits(window)?.into_iter().map(sigmoid).collect())
}

/// Excerpt start offsets covering `n` frames with the given hop; the last excerpt ends at the track end.
pub fn window_starts(n: usize, window: usize, hop: usize) -> Vec<usize> {
    if n <= window {
        return vec![0];
    }
    let last = n - window;
    let mut starts: Vec<usize> = (0..=last).step_by(hop.max(1)).collect();
    if *starts.last().unwrap() != last {
        starts.push(last);
    }
    starts
}

/// Zero-pads a normalized excerpt to the full window length.
fn pad_window(xs: &[Vec<f64>], window: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut v = xs.to_vec();
    v.resize(window, vec![0.0; dim]);
    v
}

/// Probabilities for every frame of a track, averaging over all excerpts that
/// contain the frame. Tracks shorter than the window run as one padded excerpt.
pub fn rnn_predict_track(model: &RnnModel, frames: &Grid, hop: usize) -> Result<Vec<f64>> {
    let layout = model.layout();
    let xs = model.normalize(frames)?;
    let n = xs.len();
    let w = model.config.window;
    let starts = window_starts(n, w, hop);
    let per_window: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let end = (s + w).min(n);
            let seq = pad_window(&xs[s..end], w, model.config.input_dim);
            model.forward_seq(&layout, seq).1
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (&s, logits) in starts.iter().zip(&per_window) {
        for (k, z) in logits.iter().enumerate().take(n.saturating_sub(s).min(w)) {
            sum[s + k] += sigmoid(*z);
            count[s + k] += 1;
        }
    }
    Ok(sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect())
}

/// One training track: raw input frames and per-frame labels.
#[derive(Debug, Clone)]
pub struct RnnTrack {
    pub frames: Grid,
    pub labels: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnTrainConfig {
    pub epochs: usize,
    /// Excerpts per gradient step.
    pub batch_size: usize,
    /// Offset between training excerpts.
    pub train_hop: usize,
    pub sgd: SgdConfig,
    pub seed: u64,
}

impl Default for RnnTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 4,
            train_hop: 109,
            sgd: SgdConfig {
                learning_rate: 0.05,
                clip_norm: 1.0,
                ..SgdConfig::default()
            },
            seed: 0,
        }
    }
}

fn column_stats(tracks: &[RnnTrack], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    let mut n = 0usize;
    for t in tracks {
        for row in t.frames.rows() {
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

/// Truncated-window backpropagation through time with momentum SGD and
/// gradient-norm clipping. Frames are weighted so both classes carry equal
/// total weight; padded frames carry none. Per-excerpt gradients are summed
/// in a fixed order.
pub fn rnn_train(tracks: &[RnnTrack], config: &RnnConfig, train: &RnnTrainConfig) -> Result<RnnModel> {
    if tracks.is_empty() {
        return Err(invalid("no training tracks"));
    }
    for t in tracks {
        if t.frames.n_cols() != config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "track has {} columns, RNN expects {}",
                t.frames.n_cols(),
                config.input_dim
            )));
        }
        if t.frames.n_rows() != t.labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask/window mismatch: {} frames, {} labels",
                t.frames.n_rows(),
                t.labels.len()
            )));
        }
    }
    if train.batch_size == 0 {
        return Err(invalid("batch_size must be positive"));
    }
    let mut model = RnnModel::init(config.clone(), train.seed)?;
    let (mean, std) = column_stats(tracks, config.input_dim);
    model.mean = mean;
    model.std = std;
    let layout = model.layout();
    let normalized: Vec<Vec<Vec<f64>>> = tracks.iter().map(|t| model.normalize(&t.frames)).collect::<Result<_>>()?;

    let n_pos = tracks.iter().flat_map(|t| &t.labels).filter(|&&l| l).count();
    let n_all: usize = tracks.iter().map(|t| t.labels.len()).sum();
    let n_neg = n_all - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(invalid("training data contains a single class"));
    }
    let w_pos = n_all as f64 / (2.0 * n_pos as f64);
    let w_neg = n_all as f64 / (2.0 * n_neg as f64);

    let w = config.window;
    let mut excerpts: Vec<(usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for s in window_starts(t.labels.len(), w, train.train_hop) {
            excerpts.push((ti, s));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    rng.set_stream(1);
    let mut opt = Sgd::new(train.sgd.clone(), layout.total);
    let mut iteration = 0;
    for epoch in 0..train.epochs {
        let mut order = excerpts.clone();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_frames = 0.0;
        for batch in order.chunks(train.batch_size) {
            let results: Vec<(f64, f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&(ti, s)| {
                    let n = tracks[ti].labels.len();
                    let end = (s + w).min(n);
                    let xs = pad_window(&normalized[ti][s..end], w, config.input_dim);
                    let mut targets = tracks[ti].labels[s..end].to_vec();
                    targets.resize(w, false);
                    let weights: Vec<f64> = (0..w)
                        .map(|k| match (k < end - s, targets[k]) {
                            (false, _) => 0.0,
                            (true, true) => w_pos,
                            (true, false) => w_neg,
                        })
                        .collect();
                    let total: f64 = weights.iter().sum();
                    let (l, g) = model.seq_loss_and_grad(&layout, xs, &targets, &weights);
                    (l, total, g)
                })
                .collect();
            let mut grad = vec![0.0; layout.total];
            let mut loss = 0.0;
            let mut weight = 0.0;
            for (l, wt, g) in &results {
                loss += l;
                weight += wt;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let scale = 1.0 / weight.max(1e-12);
            grad.iter_mut().for_each(|g| *g *= scale);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { iteration });
            }
            epoch_loss += loss;
            epoch_frames += weight;
            opt.step(&mut model.params, &grad, epoch);
            iteration += 1;
        }
        log::info!("rnn epoch {epoch}: mean loss {:.4}", epoch_loss / epoch_frames.max(1e-12));
    }
    Ok(model)
}

impl RnnModel {
    pub fn to_container(&self) -> Result<ModelContainer> {
        let mut c = ModelContainer::new(ModelKind::Rnn, serde_json::json!({ "config": self.config }));
        c.push("mean", self.mean.clone());
        c.push("std", self.std.clone());
        c.push("params", self.params.clone());
        Ok(c)
    }

    pub fn from_container(c: &ModelContainer) -> Result<Self> {
        c.expect_kind(ModelKind::Rnn)?;
        let config: RnnConfig = serde_json::from_value(c.hyperparams["config"].clone())?;
        let layout = Layout::new(&config).map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self {
            mean: c.blob_sized("mean", config.input_dim)?.to_vec(),
            std: c.blob_sized("std", config.input_dim)?.to_vec(),
            params: c.blob_sized("params", layout.total)?.to_vec(),
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_grid(rows: usize, cols: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(), 57.0).unwrap()
    }

    fn grad_check(config: RnnConfig, seed: u64) {
        let len = 6;
        let mut m = RnnModel::init(config.clone(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        for v in m.params.iter_mut() {
            *v += rng.gen_range(-0.2..0.2);
        }
        let x = random_grid(len, config.input_dim, seed + 2);
        let targets: Vec<bool> = (0..len).map(|t| t % 3 != 0).collect();
        let (_, g) = m.loss_and_grad(&x, &targets).unwrap();
        let eps = 1e-5;
        let loss = |m: &RnnModel| m.loss_and_grad(&x, &targets).unwrap().0;
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

    #[test]
    fn gradient_check_single_layer() {
        grad_check(RnnConfig { input_dim: 3, hidden: vec![4], window: 6 }, 1);
    }

    #[test]
    fn gradient_check_stacked_layers() {
        grad_check(RnnConfig { input_dim: 3, hidden: vec![3, 2], window: 6 }, 5);
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = RnnModel::zeros(RnnConfig::default()).unwrap();
        let p = rnn_forward(&m, &random_grid(218, 80, 1)).unwrap();
        assert_eq!(p.len(), 218);
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn mirrored_model_reverses_output() {
        let mut m = RnnModel::init(RnnConfig { input_dim: 4, hidden: vec![3, 5, 2], window: 12 }, 3).unwrap();
        m.mean = vec![0.1, -0.2, 0.3, 0.0];
        m.std = vec![1.0, 2.0, 0.5, 1.5];
        let x = random_grid(12, 4, 4);
        let rows: Vec<Vec<f64>> = (0..12).rev().map(|r| x.row(r).to_vec()).collect();
        let rev = Grid::from_rows(&rows, 57.0).unwrap();
        let a = rnn_forward(&m, &x).unwrap();
        let b = rnn_forward(&m.mirrored(), &rev).unwrap();
        for (p, q) in a.iter().zip(b.iter().rev()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert_eq!(m.mirrored().mirrored(), m);
    }

    #[test]
    fn excerpt_starts_cover_track() {
        assert_eq!(window_starts(5, 10, 1), vec![0]);
        assert_eq!(window_starts(10, 4, 3), vec![0, 3, 6]);
        assert_eq!(window_starts(11, 4, 3), vec![0, 3, 6, 7]);
    }

    #[test]
    fn track_prediction_averages_windows() {
        let cfg = RnnConfig { input_dim: 2, hidden: vec![3], window: 5 };
        let m = RnnModel::init(cfg, 9).unwrap();
        let x = random_grid(8, 2, 2);
        let p = rnn_predict_track(&m, &x, 1).unwrap();
        // Frame 2 appears in excerpts starting at 0, 1 and 2.
        let mut expect = 0.0;
        for s in 0..3 {
            expect += rnn_forward(&m, &x.slice_rows(s, s + 5)).unwrap()[2 - s];
        }
        assert!((p[2] - expect / 3.0).abs() < 1e-12);
        let short = rnn_predict_track(&m, &x.slice_rows(0, 3), 1).unwrap();
        assert_eq!(short.len(), 3);
        assert!(rnn_predict_track(&m, &random_grid(8, 3, 1), 1).is_err());
    }

    fn learnable_tracks() -> Vec<RnnTrack> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..3)
            .map(|_| {
                let labels: Vec<bool> = (0..50).map(|f| (f / 10) % 2 == 1).collect();
                let rows: Vec<Vec<f64>> = labels
                    .iter()
                    .map(|&l| vec![if l { 1.0 } else { -1.0 } + rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0)])
                    .collect();
                RnnTrack { frames: Grid::from_rows(&rows, 57.0).unwrap(), labels }
            })
            .collect()
    }

    #[test]
    fn training_learns_and_is_deterministic() {
        let tracks = learnable_tracks();
        let cfg = RnnConfig { input_dim: 2, hidden: vec![4], window: 20 };
        let tc = RnnTrainConfig { epochs: 30, batch_size: 2, train_hop: 10, seed: 4, ..Default::default() };
        let a = rnn_train(&tracks, &cfg, &tc).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| rnn_train(&tracks, &cfg, &tc)).unwrap();
        assert_eq!(a, b);
        let p = rnn_predict_track(&a, &tracks[0].frames, 5).unwrap();
        let correct = p.iter().zip(&tracks[0].labels).filter(|(p, &l)| (**p >= 0.5) == l).count();
        assert!(correct >= 45, "{correct}/50");
    }

    #[test]
    fn label_length_mismatch_rejected() {
        let mut tracks = learnable_tracks();
        tracks[0].labels.pop();
        let cfg = RnnConfig { input_dim: 2, hidden: vec![4], window: 20 };
        assert!(rnn_train(&tracks, &cfg, &RnnTrainConfig::default()).is_err());
    }

    #[test]
    fn container_round_trip() {
        let m = RnnModel::init(RnnConfig { input_dim: 3, hidden: vec![2, 2], window: 8 }, 1).unwrap();
        let c = ModelContainer::from_bytes(&m.to_container().unwrap().to_bytes().unwrap()).unwrap();
        assert_eq!(RnnModel::from_container(&c).unwrap(), m);
    }
}
