use super::logspec::BandLayout;
use crate::dsp::Grid;
use crate::error::{invalid, Result};

/// Added to magnitudes and energies so that silent bands stay defined.
pub const EPS: f64 = 1e-12;

/// Pearson correlation of `a` and `b`; `None` when either has zero variance.
fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Lag order used for tie-breaking: 0, −1, +1, −2, +2, …
fn lag_order(max_lag: usize) -> Vec<isize> {
    let mut v = vec![0isize];
    for l in 1..=max_lag as isize {
        v.push(-l);
        v.push(l);
    }
    v
}

/// Shift (in columns) that best aligns the previous frame with the current one, per band.
///
/// A positive lag means the spectrum moved up: `cur[j] ≈ prev[j − lag]`.
/// Only lags whose shifted band stays inside the grid are considered; ties go
/// to the smaller |lag|, then to the negative one. Frame 0 and flat bands give 0.
pub fn fluctogram(grid: &Grid, layout: &BandLayout, max_lag: usize) -> Result<Grid> {
    if max_lag == 0 {
        return Err(invalid("fluctogram max_lag must be >= 1"));
    }
    layout.check(grid.n_cols())?;
    let n_cols = grid.n_cols() as isize;
    let lags = lag_order(max_lag);
    let mut out = Grid::zeros(grid.n_rows(), layout.len(), grid.frame_rate);
    for t in 1..grid.n_rows() {
        let (prev, cur) = (grid.row(t - 1), grid.row(t));
        for (b, &(lo, hi)) in layout.bands.iter().enumerate() {
            let band = &cur[lo..hi];
            let mut best: Option<(f64, isize)> = None;
            for &lag in &lags {
                let (plo, phi) = (lo as isize - lag, hi as isize - lag);
                if plo < 0 || phi > n_cols {
                    continue;
                }
                if let Some(r) = pearson(band, &prev[plo as usize..phi as usize]) {
                    if best.map_or(true, |(br, _)| r > br) {
                        best = Some((r, lag));
                    }
                }
            }
            out.set(t, b, best.map_or(0.0, |(_, lag)| lag as f64));
        }
    }
    Ok(out)
}

/// Geometric over arithmetic mean of `magnitude + EPS` per band.
pub fn spectral_flatness(grid: &Grid, layout: &BandLayout) -> Result<Grid> {
    layout.check(grid.n_cols())?;
    let mut out = Grid::zeros(grid.n_rows(), layout.len(), grid.frame_rate);
    for t in 0..grid.n_rows() {
        let row = grid.row(t);
        for (b, &(lo, hi)) in layout.bands.iter().enumerate() {
            let n = (hi - lo) as f64;
            let (mut log_sum, mut sum) = (0.0, 0.0);
            for &m in &row[lo..hi] {
                let v = m + EPS;
                log_sum += v.ln();
                sum += v;
            }
            let f = (log_sum / n).exp() / (sum / n);
            out.set(t, b, f.min(1.0));
        }
    }
    Ok(out)
}

/// Energy in the central half of each band over the energy of the whole band.
pub fn spectral_contraction(grid: &Grid, layout: &BandLayout) -> Result<Grid> {
    layout.check(grid.n_cols())?;
    let mut out = Grid::zeros(grid.n_rows(), layout.len(), grid.frame_rate);
    for t in 0..grid.n_rows() {
        let row = grid.row(t);
        for (b, &(lo, hi)) in layout.bands.iter().enumerate() {
            let w = hi - lo;
            let (clo, chi) = (lo + w / 4, lo + w / 4 + w / 2);
            let (mut center, mut total) = (0.0, 0.0);
            for (j, &m) in row[lo..hi].iter().enumerate() {
                let e = m * m + EPS;
                total += e;
                if (clo..chi).contains(&(lo + j)) {
                    center += e;
                }
            }
            out.set(t, b, center / total);
        }
    }
    Ok(out)
}

/// Variance of MFCC coefficients 1–5 over a centered window, edges replicated.
pub fn vocal_variance(mfcc: &Grid, window: usize) -> Result<Grid> {
    if window == 0 || window % 2 == 0 {
        return Err(invalid(format!("vocal-variance window {window} must be odd")));
    }
    if mfcc.n_cols() < 6 {
        return Err(invalid("vocal variance needs at least 6 MFCC coefficients"));
    }
    if window > mfcc.n_rows() {
        return Err(crate::error::Error::TooShort(format!(
            "vocal-variance window {window} exceeds {} frames",
            mfcc.n_rows()
        )));
    }
    let n = mfcc.n_rows() as isize;
    let h = (window / 2) as isize;
    let mut out = Grid::zeros(mfcc.n_rows(), 5, mfcc.frame_rate);
    for t in 0..n {
        for c in 0..5 {
            let (mut s, mut s2) = (0.0, 0.0);
            for k in -h..=h {
                let v = mfcc.get((t + k).clamp(0, n - 1) as usize, c + 1);
                s += v;
                s2 += v * v;
            }
            let m = s / window as f64;
            out.set(t as usize, c, (s2 / window as f64 - m * m).max(0.0));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_band(width: usize, _n_cols: usize, start: usize) -> BandLayout {
        BandLayout {
            bands: vec![(start, start + width)],
        }
    }

    /// Brute-force best lag over all candidate lags, no tie subtleties.
    fn brute_lag(prev: &[f64], cur: &[f64], lo: usize, hi: usize, max_lag: isize) -> isize {
        let mut best = (f64::NEG_INFINITY, 0isize);
        for lag in -max_lag..=max_lag {
            let (plo, phi) = (lo as isize - lag, hi as isize - lag);
            if plo < 0 || phi > prev.len() as isize {
                continue;
            }
            let r = pearson(&cur[lo..hi], &prev[plo as usize..phi as usize]).unwrap_or(f64::NEG_INFINITY);
            if r > best.0 + 1e-12 || ((r - best.0).abs() <= 1e-12 && lag.abs() < best.1.abs()) {
                best = (r, lag);
            }
        }
        best.1
    }

    fn peak_row(n: usize, center: f64) -> Vec<f64> {
        (0..n).map(|j| (-(j as f64 - center).powi(2) / 8.0).exp()).collect()
    }

    #[test]
    fn stationary_tone_gives_zero() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| peak_row(60, 30.0)).collect();
        let g = Grid::from_rows(&rows, 70.0).unwrap();
        let f = fluctogram(&g, &one_band(30, 60, 15), 5).unwrap();
        assert!(f.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rising_glide_gives_plus_one() {
        let rows: Vec<Vec<f64>> = (0..6).map(|t| peak_row(60, 25.0 + t as f64)).collect();
        let g = Grid::from_rows(&rows, 70.0).unwrap();
        let f = fluctogram(&g, &one_band(30, 60, 15), 5).unwrap();
        assert_eq!(f.get(0, 0), 0.0);
        for t in 1..6 {
            assert_eq!(f.get(t, 0), 1.0);
            assert_eq!(brute_lag(g.row(t - 1), g.row(t), 15, 45, 5), 1);
        }
    }

    #[test]
    fn semitone_step_gives_bins_per_semitone() {
        // 3 columns per semitone; the tone climbs one semitone per frame.
        let rows: Vec<Vec<f64>> = (0..4).map(|t| peak_row(80, 30.0 + 3.0 * t as f64)).collect();
        let g = Grid::from_rows(&rows, 70.0).unwrap();
        let f = fluctogram(&g, &one_band(40, 80, 20), 5).unwrap();
        assert!((1..4).all(|t| f.get(t, 0) == 3.0));
    }

    #[test]
    fn ties_prefer_small_then_negative_lag() {
        // A periodic pattern with period 2 correlates equally at every even lag
        // and equally (negatively) at odd lags.
        let row: Vec<f64> = (0..40).map(|j| (j % 2) as f64).collect();
        let g = Grid::from_rows(&[row.clone(), row], 70.0).unwrap();
        let f = fluctogram(&g, &one_band(20, 40, 10), 4).unwrap();
        assert_eq!(f.get(1, 0), 0.0);
        // Shift the current frame by one so lags ±1 tie for the maximum.
        let a: Vec<f64> = (0..40).map(|j| (j % 2) as f64).collect();
        let b: Vec<f64> = (0..40).map(|j| ((j + 1) % 2) as f64).collect();
        let g = Grid::from_rows(&[a, b], 70.0).unwrap();
        assert_eq!(fluctogram(&g, &one_band(20, 40, 10), 4).unwrap().get(1, 0), -1.0);
    }

    #[test]
    fn flatness_and_contraction_extremes() {
        let layout = one_band(8, 8, 0);
        let flat = Grid::filled(1, 8, 3.0, 1.0);
        assert!((spectral_flatness(&flat, &layout).unwrap().get(0, 0) - 1.0).abs() < 1e-12);
        assert!((spectral_contraction(&flat, &layout).unwrap().get(0, 0) - 0.5).abs() < 1e-12);
        let mut spike = Grid::zeros(1, 8, 1.0);
        spike.set(0, 3, 1.0);
        assert!(spectral_flatness(&spike, &layout).unwrap().get(0, 0) < 1e-3);
        assert!((spectral_contraction(&spike, &layout).unwrap().get(0, 0) - 1.0).abs() < 1e-9);
        let silent = Grid::zeros(1, 8, 1.0);
        assert_eq!(spectral_flatness(&silent, &layout).unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn vocal_variance_cases() {
        let c = Grid::filled(20, 30, 2.0, 70.0);
        assert!(vocal_variance(&c, 11).unwrap().as_slice().iter().all(|&v| v.abs() < 1e-12));
        let mut alt = Grid::filled(40, 30, 1.0, 70.0);
        for t in 0..40 {
            alt.set(t, 1, if t % 2 == 0 { 1.0 } else { -1.0 });
        }
        let vv = vocal_variance(&alt, 11).unwrap();
        assert_eq!(vv.n_cols(), 5);
        for t in 5..35 {
            // Eleven alternating values: mean ±1/11, variance 1 − 1/121.
            assert!((vv.get(t, 0) - (1.0 - 1.0 / 121.0)).abs() < 1e-12);
            assert!(vv.row(t)[1..].iter().all(|&v| v.abs() < 1e-12));
        }
        assert!(vocal_variance(&c, 4).is_err());
        assert!(vocal_variance(&c, 21).is_err());
    }

    proptest! {
        #[test]
        fn fluctogram_matches_brute_force(
            prev in prop::collection::vec(0.0f64..1.0, 50),
            cur in prop::collection::vec(0.0f64..1.0, 50),
        ) {
            let g = Grid::from_rows(&[prev.clone(), cur.clone()], 70.0).unwrap();
            let f = fluctogram(&g, &one_band(30, 50, 10), 5).unwrap();
            prop_assert_eq!(f.get(1, 0) as isize, brute_lag(&prev, &cur, 10, 40, 5));
        }

        #[test]
        fn ratios_bounded_and_gain_invariant(
            vals in prop::collection::vec(0.01f64..10.0, 16), gain in 0.1f64..100.0,
        ) {
            let layout = BandLayout { bands: vec![(0, 8), (4, 12), (8, 16)] };
            let g = Grid::from_vec(1, 16, vals, 1.0).unwrap();
            let scaled = g.map(|v| v * gain);
            for (a, b) in [
                (spectral_flatness(&g, &layout).unwrap(), spectral_flatness(&scaled, &layout).unwrap()),
                (spectral_contraction(&g, &layout).unwrap(), spectral_contraction(&scaled, &layout).unwrap()),
            ] {
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    prop_assert!((0.0..=1.0).contains(x));
                    prop_assert!((x - y).abs() < 1e-6);
                }
            }
        }
    }
}
