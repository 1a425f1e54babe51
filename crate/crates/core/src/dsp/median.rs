use super::Grid;
use crate::error::{invalid, Result};

fn check_odd(name: &str, w: usize) -> Result<()> {
    if w == 0 || w % 2 == 0 {
        return Err(invalid(format!("{name} window {w} must be odd and >= 1")));
    }
    Ok(())
}

fn median_in_place(buf: &mut [f64]) -> f64 {
    let mid = buf.len() / 2;
    *buf.select_nth_unstable_by(mid, |a, b| a.total_cmp(b)).1
}

/// Running median with edge replication; output length equals input length.
pub fn median_filter_1d(values: &[f64], window: usize) -> Result<Vec<f64>> {
    check_odd("median", window)?;
    if window == 1 || values.is_empty() {
        return Ok(values.to_vec());
    }
    let h = (window / 2) as isize;
    let n = values.len() as isize;
    let mut buf = vec![0.0; window];
    Ok((0..n)
        .map(|i| {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = values[(i + j as isize - h).clamp(0, n - 1) as usize];
            }
            median_in_place(&mut buf)
        })
        .collect())
}

/// Running majority over booleans (the median of a binary sequence).
pub fn median_filter_1d_bool(values: &[bool], window: usize) -> Result<Vec<bool>> {
    check_odd("median", window)?;
    if window == 1 || values.is_empty() {
        return Ok(values.to_vec());
    }
    let n = values.len();
    let h = window / 2;
    // Prefix counts over the edge-replicated sequence.
    let at = |i: isize| values[i.clamp(0, n as isize - 1) as usize] as usize;
    let mut prefix = Vec::with_capacity(n + 2 * h + 1);
    prefix.push(0usize);
    for i in -(h as isize)..(n + h) as isize {
        let last = *prefix.last().unwrap();
        prefix.push(last + at(i));
    }
    Ok((0..n)
        .map(|i| prefix[i + window] - prefix[i] > h)
        .collect())
}

/// Per-element median over a `time_window × freq_window` neighborhood, edges replicated.
pub fn median_filter_2d(grid: &Grid, time_window: usize, freq_window: usize) -> Result<Grid> {
    check_odd("time", time_window)?;
    check_odd("frequency", freq_window)?;
    let (nr, nc) = grid.shape();
    let mut out = Grid::zeros(nr, nc, grid.frame_rate);
    if nr == 0 || nc == 0 {
        return Ok(out);
    }
    let ht = (time_window / 2) as isize;
    let hf = (freq_window / 2) as isize;
    let mut buf = Vec::with_capacity(time_window * freq_window);
    for r in 0..nr as isize {
        for c in 0..nc as isize {
            buf.clear();
            for dr in -ht..=ht {
                let rr = (r + dr).clamp(0, nr as isize - 1) as usize;
                let row = grid.row(rr);
                for dc in -hf..=hf {
                    buf.push(row[(c + dc).clamp(0, nc as isize - 1) as usize]);
                }
            }
            out.set(r as usize, c as usize, median_in_place(&mut buf));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alternating_sequence_window_three() {
        let out = median_filter_1d(&[1.0, 0.0, 1.0, 0.0, 1.0], 3).unwrap();
        assert_eq!(out, vec![1.0, 1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn trivial_cases() {
        let x = [3.0, -1.0, 7.0, 2.0];
        assert_eq!(median_filter_1d(&x, 1).unwrap(), x.to_vec());
        assert_eq!(median_filter_1d(&[4.0; 9], 5).unwrap(), vec![4.0; 9]);
        assert!(median_filter_1d(&x, 2).is_err());
        assert!(median_filter_2d(&Grid::zeros(2, 2, 1.0), 3, 2).is_err());
    }

    #[test]
    fn grid_degenerates_to_1d() {
        let vals = vec![5.0, 1.0, 9.0, 2.0, 2.0, 8.0, 0.0];
        // One row per frame, one column: time filtering only.
        let g = Grid::from_vec(vals.len(), 1, vals.clone(), 1.0).unwrap();
        let f = median_filter_2d(&g, 3, 1).unwrap();
        assert_eq!(f.into_vec(), median_filter_1d(&vals, 3).unwrap());
    }

    #[test]
    fn spike_removed_constant_kept() {
        let mut g = Grid::filled(5, 5, 2.0, 1.0);
        assert_eq!(median_filter_2d(&g, 3, 3).unwrap(), g);
        g.set(2, 2, 100.0);
        let f = median_filter_2d(&g, 3, 1).unwrap();
        assert!(f.as_slice().iter().all(|&v| v == 2.0));
    }

    // A window-3 median pass is not idempotent on arbitrary binary input
    // ([0,1,0,1,0,1] needs two passes), but repeated passes reach a root signal.
    #[test]
    fn window_three_needs_two_passes_here() {
        let x = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let once = median_filter_1d(&x, 3).unwrap();
        let twice = median_filter_1d(&once, 3).unwrap();
        assert_eq!(once, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(twice, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(median_filter_1d(&twice, 3).unwrap(), twice);
    }

    proptest! {
        #[test]
        fn bool_filter_matches_numeric(bits in prop::collection::vec(any::<bool>(), 1..60), half in 0usize..6) {
            let w = 2 * half + 1;
            let f: Vec<f64> = bits.iter().map(|&b| b as u8 as f64).collect();
            let expect: Vec<bool> = median_filter_1d(&f, w).unwrap().iter().map(|&v| v > 0.5).collect();
            prop_assert_eq!(median_filter_1d_bool(&bits, w).unwrap(), expect);
        }

        #[test]
        fn binary_window_three_reaches_root(bits in prop::collection::vec(any::<bool>(), 1..60)) {
            let mut cur = bits.clone();
            for _ in 0..bits.len() {
                let next = median_filter_1d_bool(&cur, 3).unwrap();
                if next == cur {
                    break;
                }
                cur = next;
            }
            prop_assert_eq!(median_filter_1d_bool(&cur, 3).unwrap(), cur);
        }

        #[test]
        fn length_preserved(v in prop::collection::vec(-10.0f64..10.0, 0..50), half in 0usize..5) {
            prop_assert_eq!(median_filter_1d(&v, 2 * half + 1).unwrap().len(), v.len());
        }
    }
}
