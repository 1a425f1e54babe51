//! Independent oracles shared by integration tests and the acceptance suite.
#![allow(dead_code)]

use vdlab::audio::AudioClip;
use vdlab::eval::Detector;
use vdlab::models::PredictionTrack;

/// Least-squares coefficients `(c, a, b)` of `c + a·sin(2πrt) + b·cos(2πrt)`.
fn sine_coefs(track: &[(f64, f64)], rate: f64) -> (f64, f64, f64) {
    let w = 2.0 * std::f64::consts::PI * rate;
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for &(t, y) in track {
        let basis = [1.0, (w * t).sin(), (w * t).cos()];
        for i in 0..3 {
            v[i] += basis[i] * y;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    let coef = solve3(m, v);
    (coef[0], coef[1], coef[2])
}

/// Residual sum of squares and amplitude of the fit at `rate`.
fn sine_fit(track: &[(f64, f64)], rate: f64) -> (f64, f64) {
    let w = 2.0 * std::f64::consts::PI * rate;
    let (c0, c1, c2) = sine_coefs(track, rate);
    let coef = [c0, c1, c2];
    let resid: f64 = track
        .iter()
        .map(|&(t, y)| (y - coef[0] - coef[1] * (w * t).sin() - coef[2] * (w * t).cos()).powi(2))
        .sum();
    (resid, coef[1].hypot(coef[2]))
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        v.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in 0..3 {
                    m[r][k] -= f * m[col][k];
                }
                v[r] -= f * v[col];
            }
        }
    }
    [v[0] / m[0][0], v[1] / m[1][1], v[2] / m[2][2]]
}

/// Prediction-error signal of an order-`p` autocorrelation LPC fit; flattens
/// resonances so that periodicity analysis sees the excitation. A -30 dB
/// white-noise correction keeps the inverse filter from amplifying empty bands.
pub fn lpc_residual(x: &[f64], p: usize) -> Vec<f64> {
    let mut r: Vec<f64> = (0..=p).map(|k| x[k..].iter().zip(x).map(|(a, b)| a * b).sum()).collect();
    r[0] *= 1.0 + 1e-3;
    let mut a = vec![0.0; p + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=p {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
    }
    (0..x.len())
        .map(|n| (0..=p.min(n)).map(|j| a[j] * x[n - j]).sum())
        .collect()
}

/// Pitch from excitation instants: one residual pulse per period, located to
/// sub-sample precision; `(time_s, f0_hz)` at the midpoint of each period.
pub fn pulse_track(x: &[f64], sr: u32, fmin: f64, fmax: f64) -> Vec<(f64, f64)> {
    let e = lpc_residual(x, 16);
    let (hi, lo) = e.iter().fold((0.0f64, 0.0f64), |(h, l), &v| (h.max(v), l.min(v)));
    let s: Vec<f64> = if hi >= -lo { e } else { e.iter().map(|v| -v).collect() };
    let guard = (0.6 * sr as f64 / fmax) as usize;
    let reach = (1.5 * sr as f64 / fmin) as usize;
    let n = s.len();
    let mut marks: Vec<f64> = Vec::new();
    for i in guard..n.saturating_sub(guard) {
        let v = s[i];
        if !(v > 0.0) || s[i - guard..=i + guard].iter().any(|&u| u > v) {
            continue;
        }
        let wide = s[i.saturating_sub(reach)..(i + reach).min(n)].iter().fold(0.0f64, |m, &u| m.max(u));
        if v < 0.4 * wide {
            continue;
        }
        let (a, b, c) = (s[i - 1], s[i], s[i + 1]);
        let den = a - 2.0 * b + c;
        let shift = if den.abs() > 1e-300 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
        marks.push(i as f64 + shift);
    }
    let srf = sr as f64;
    marks
        .windows(2)
        .map(|w| (0.5 * (w[0] + w[1]) / srf, srf / (w[1] - w[0])))
        .filter(|&(_, f)| f >= fmin && f <= fmax)
        .collect()
}

/// Best-fitting vibrato rate: coarse residual scan, then golden-section refinement.
fn best_rate(track: &[(f64, f64)]) -> f64 {
    let mut best = (f64::INFINITY, 0.3);
    let mut r = 0.3;
    while r <= 15.0 {
        let (res, _) = sine_fit(track, r);
        if res < best.0 {
            best = (res, r);
        }
        r += 0.05;
    }
    let (mut lo, mut hi) = (best.1 - 0.05, best.1 + 0.05);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if sine_fit(track, a).0 < sine_fit(track, b).0 {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Vibrato rate (Hz) and peak-to-peak excursion (semitones) recovered from a
/// clip. Periods whose pitch strays from the fitted sinusoid by more than
/// three scaled median absolute deviations are dropped and the fit repeated.
pub fn recover_vibrato(clip: &AudioClip, f0: f64, max_dev: f64) -> (f64, f64) {
    let span = 2f64.powf((max_dev + 1.0) / 12.0);
    let all: Vec<(f64, f64)> = pulse_track(&clip.samples, clip.sample_rate, f0 / span, f0 * span)
        .into_iter()
        .map(|(t, f)| (t, 12.0 * (f / f0).log2()))
        .collect();
    let mut kept = all.clone();
    let mut rate = best_rate(&kept);
    for _ in 0..3 {
        let w = 2.0 * std::f64::consts::PI * rate;
        let (a, b, c) = sine_coefs(&kept, rate);
        let resid: Vec<f64> = all.iter().map(|&(t, y)| y - a - b * (w * t).sin() - c * (w * t).cos()).collect();
        let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let limit = (3.0 * 1.4826 * abs[abs.len() / 2]).max(1e-6);
        kept = all.iter().zip(&resid).filter(|(_, r)| r.abs() <= limit).map(|(p, _)| *p).collect();
        rate = best_rate(&kept);
    }
    (rate, 2.0 * sine_fit(&kept, rate).1)
}

/// Calls a frame vocal when its energy exceeds the clip's mean log-energy.
pub struct EnergyDetector {
    pub frame_rate: f64,
}

impl Detector for EnergyDetector {
    fn name(&self) -> String {
        "energy".into()
    }

    fn detect(&self, clip: &AudioClip) -> vdlab::Result<PredictionTrack> {
        let hop = (clip.sample_rate as f64 / self.frame_rate).round() as usize;
        let db: Vec<f64> = clip
            .samples
            .chunks(hop)
            .filter(|c| c.len() == hop)
            .map(|c| 10.0 * (c.iter().map(|s| s * s).sum::<f64>() / hop as f64 + 1e-12).log10())
            .collect();
        let mean = db.iter().sum::<f64>() / db.len().max(1) as f64;
        let labels = db.iter().map(|&v| v > mean).collect();
        Ok(PredictionTrack {
            frame_rate: self.frame_rate,
            probabilities: db.iter().map(|&v| if v > mean { 1.0 } else { 0.0 }).collect(),
            labels,
        })
    }
}

/// Runs the `vdlab` binary in `cwd`; returns (exit code, stdout, stderr).
pub fn vdlab(cwd: &std::path::Path, args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_vdlab"))
        .args(args)
        .current_dir(cwd)
        .env("VDLAB_LOG", "error")
        .output()
        .expect("vdlab binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Runs `vdlab` and panics with its stderr unless it exits 0.
pub fn vdlab_ok(cwd: &std::path::Path, args: &[&str]) -> String {
    let (code, stdout, stderr) = vdlab(cwd, args);
    assert_eq!(code, 0, "vdlab {args:?} failed: {stderr}");
    stdout
}

/// Files of two run directories that differ, ignoring the run manifests.
pub fn differing_files(a: &std::path::Path, b: &std::path::Path) -> Vec<String> {
    let list = |d: &std::path::Path| {
        let mut v: Vec<String> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n != "manifest.json" && n != "config.effective.toml")
            .collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    if la != lb {
        return vec![format!("file lists differ: {la:?} vs {lb:?}")];
    }
    la.into_iter()
        .filter(|n| std::fs::read(a.join(n)).unwrap() != std::fs::read(b.join(n)).unwrap())
        .collect()
}

/// `--set` overrides that shrink each detector to a seconds-scale toy.
pub fn tiny_overrides(pipeline: &str) -> Vec<&'static str> {
    match pipeline {
        "fe" => vec!["--set", "detector.fe.forest.n_trees=4"],
        "cnn" => vec![
            "--set", "detector.cnn.frontend.n_mels=32",
            "--set", "detector.cnn.channels=[2,2,2,2]",
            "--set", "detector.cnn.dense=4",
            "--set", "detector.cnn.train.epochs=1",
            "--set", "detector.cnn.train.max_windows_per_epoch=64",
        ],
        _ => vec![
            "--set", "detector.rnn.hidden=[4]",
            "--set", "detector.rnn.train.epochs=1",
            "--set", "detector.rnn.inference_hop=50",
        ],
    }
}
