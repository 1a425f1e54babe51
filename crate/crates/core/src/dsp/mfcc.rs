use std::f64::consts::PI;

use super::{Grid, MelSpectrogram};
use crate::error::{invalid, Error, Result};

fn dct_basis(n: usize, n_out: usize) -> Vec<f64> {
    let mut basis = Vec::with_capacity(n * n_out);
    for k in 0..n_out {
        let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            basis.push(s * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos());
        }
    }
    basis
}

/// Orthonormal DCT-II.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let basis = dct_basis(n, n);
    basis
        .chunks_exact(n.max(1))
        .take(n)
        .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
        .collect()
}

/// Inverse of [`dct_ii`] (the orthonormal DCT-III).
pub fn idct_ii(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let basis = dct_basis(n, n);
    (0..n)
        .map(|i| (0..n).map(|k| basis[k * n + i] * c[k]).sum())
        .collect()
}

/// First `n_coeffs` DCT-II coefficients of each mel frame.
pub fn mfcc(mel: &MelSpectrogram, n_coeffs: usize) -> Result<Grid> {
    let n_mels = mel.n_mels();
    if n_coeffs == 0 || n_coeffs > n_mels {
        return Err(invalid(format!(
            "n_coeffs {n_coeffs} must be in 1..={n_mels}"
        )));
    }
    let basis = dct_basis(n_mels, n_coeffs);
    let mut out = Grid::zeros(mel.n_frames(), n_coeffs, mel.frame_rate());
    for t in 0..mel.n_frames() {
        let frame = mel.values.row(t);
        for (k, o) in out.row_mut(t).iter_mut().enumerate() {
            *o = basis[k * n_mels..(k + 1) * n_mels]
                .iter()
                .zip(frame)
                .map(|(b, x)| b * x)
                .sum();
        }
    }
    Ok(out)
}

/// Least-squares slope of each column over a centered window of `span` frames, edges replicated.
pub fn delta(rows: &Grid, span: usize) -> Result<Grid> {
    if span < 3 || span % 2 == 0 {
        return Err(invalid(format!("delta span {span} must be odd and >= 3")));
    }
    if span > rows.n_rows() {
        return Err(Error::TooShort(format!(
            "delta span {span} exceeds track length {}",
            rows.n_rows()
        )));
    }
    let h = (span / 2) as isize;
    let denom: f64 = (-h..=h).map(|k| (k * k) as f64).sum();
    let n = rows.n_rows() as isize;
    let mut out = Grid::zeros(rows.n_rows(), rows.n_cols(), rows.frame_rate);
    for t in 0..n {
        let dst = out.row_mut(t as usize);
        for k in -h..=h {
            if k == 0 {
                continue;
            }
            let src = rows.row((t + k).clamp(0, n - 1) as usize);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += k as f64 * s;
            }
        }
        for d in dst.iter_mut() {
            *d /= denom;
        }
    }
    Ok(out)
}
