use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stress::vibrato::{formant_name, VibratoClipInfo, GRID_DEVIATIONS, GRID_FORMANTS, GRID_RATES};

/// Pixels per cell edge in the emitted images.
const CELL_PX: usize = 16;

/// Accuracy per `(formant, rate, deviation)` cell; 1.0 means no clip frame was called vocal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub formants: Vec<String>,
    pub rates: Vec<f64>,
    pub deviations: Vec<f64>,
    /// `cells[formant][rate][deviation]`.
    pub cells: Vec<Vec<Vec<f64>>>,
}

fn index_of(grid: &[f64], v: f64, what: &str) -> Result<usize> {
    grid.iter()
        .position(|&g| (g - v).abs() <= 1e-9 * g.abs().max(1.0))
        .ok_or_else(|| invalid(format!("{what} {v} is not on the vibrato grid")))
}

/// Averages per-clip accuracy (fraction of frames predicted nonvocal) into
/// grid cells. `predictions` maps manifest filenames to frame decisions.
pub fn vibrato_heatmap(manifest: &[VibratoClipInfo], predictions: &BTreeMap<String, Vec<bool>>) -> Result<HeatmapGrid> {
    let mut missing: Vec<String> = manifest
        .iter()
        .filter(|c| !predictions.contains_key(&c.filename))
        .map(|c| c.filename.clone())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingClips(missing));
    }
    let formants: Vec<String> = GRID_FORMANTS.iter().map(|&f| formant_name(f).to_string()).collect();
    let (nf, nr, nd) = (formants.len(), GRID_RATES.len(), GRID_DEVIATIONS.len());
    let mut sum = vec![vec![vec![0.0; nd]; nr]; nf];
    let mut count = vec![vec![vec![0usize; nd]; nr]; nf];
    for clip in manifest {
        let f = formants
            .iter()
            .position(|n| *n == clip.formant)
            .ok_or_else(|| invalid(format!("unknown formant condition {:?}", clip.formant)))?;
        let r = index_of(&GRID_RATES, clip.rate, "rate")?;
        let d = index_of(&GRID_DEVIATIONS, clip.deviation, "deviation")?;
        let frames = &predictions[&clip.filename];
        if frames.is_empty() {
            return Err(invalid(format!("no frames predicted for {}", clip.filename)));
        }
        let nonvocal = frames.iter().filter(|&&v| !v).count();
        sum[f][r][d] += nonvocal as f64 / frames.len() as f64;
        count[f][r][d] += 1;
    }
    let mut empty = Vec::new();
    let cells = (0..nf)
        .map(|f| {
            (0..nr)
                .map(|r| {
                    (0..nd)
                        .map(|d| {
                            if count[f][r][d] == 0 {
                                empty.push(format!("{} r{} d{}", formants[f], GRID_RATES[r], GRID_DEVIATIONS[d]));
                                0.0
                            } else {
                                sum[f][r][d] / count[f][r][d] as f64
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    if !empty.is_empty() {
        return Err(Error::MissingClips(empty));
    }
    Ok(HeatmapGrid {
        formants,
        rates: GRID_RATES.to_vec(),
        deviations: GRID_DEVIATIONS.to_vec(),
        cells,
    })
}

impl HeatmapGrid {
    /// Mean cell value over all formants for cells selected by `(rate, deviation)`.
    pub fn region_mean(&self, select: impl Fn(f64, f64) -> bool) -> Option<f64> {
        let mut acc = 0.0;
        let mut n = 0usize;
        for grid in &self.cells {
            for (r, row) in grid.iter().enumerate() {
                for (d, &v) in row.iter().enumerate() {
                    if select(self.rates[r], self.deviations[d]) {
                        acc += v;
                        n += 1;
                    }
                }
            }
        }
        (n > 0).then(|| acc / n as f64)
    }

    /// Writes `heatmap_{formant}.csv` and `heatmap_{formant}.ppm` per formant condition.
    /// CSV rows list rates in ascending order; images put the highest rate on top.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (f, name) in self.formants.iter().enumerate() {
            let csv_path = dir.join(format!("heatmap_{name}.csv"));
            let mut w = csv::Writer::from_path(&csv_path)?;
            let mut header = vec!["rate_hz".to_string()];
            header.extend(self.deviations.iter().map(|d| format!("dev_{d}")));
            w.write_record(&header)?;
            for (r, row) in self.cells[f].iter().enumerate() {
                let mut rec = vec![self.rates[r].to_string()];
                rec.extend(row.iter().map(|v| format!("{v:.6}")));
                w.write_record(&rec)?;
            }
            w.flush()?;
            written.push(csv_path);

            let ppm_path = dir.join(format!("heatmap_{name}.ppm"));
            std::fs::write(&ppm_path, self.ppm(f))?;
            written.push(ppm_path);
        }
        Ok(written)
    }

    /// Binary grayscale pixmap of one formant grid, 1.0 white and 0.0 black.
    pub fn ppm(&self, formant: usize) -> Vec<u8> {
        let grid = &self.cells[formant];
        let (nr, nd) = (grid.len(), self.deviations.len());
        let (width, height) = (nd * CELL_PX, nr * CELL_PX);
        let mut out = Vec::new();
        write!(out, "P6\n{width} {height}\n255\n").unwrap();
        for y in 0..height {
            let r = nr - 1 - y / CELL_PX;
            for x in 0..width {
                let v = (grid[r][x / CELL_PX].clamp(0.0, 1.0) * 255.0).round() as u8;
                out.extend_from_slice(&[v, v, v]);
            }
        }
        out
    }
}
