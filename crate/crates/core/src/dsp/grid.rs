//! Row-major real matrices indexed by (frame, column).

use crate::error::{Error, Result};

/// A dense `n_rows × n_cols` matrix of `f64`, one row per analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    /// Rows per second.
    pub frame_rate: f64,
}

impl Grid {
    pub fn zeros(n_rows: usize, n_cols: usize, frame_rate: f64) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
            frame_rate,
        }
    }

    pub fn filled(n_rows: usize, n_cols: usize, value: f64, frame_rate: f64) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![value; n_rows * n_cols],
            frame_rate,
        }
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>, frame_rate: f64) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot form a {}x{} grid",
                data.len(),
                n_rows,
                n_cols
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
            frame_rate,
        })
    }

    /// Builds a grid from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>], frame_rate: f64) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            data,
            frame_rate,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n_cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
            frame_rate: self.frame_rate,
        }
    }

    /// Element-wise product with a same-shaped grid.
    pub fn hadamard(&self, other: &Grid) -> Result<Grid> {
        self.check_same_shape(other)?;
        Ok(Grid {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
            frame_rate: self.frame_rate,
        })
    }

    pub fn check_same_shape(&self, other: &Grid) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Concatenates grids with equal row counts along the column axis.
    pub fn hstack(parts: &[&Grid]) -> Result<Grid> {
        let n_rows = parts.first().map_or(0, |g| g.n_rows);
        if parts.iter().any(|g| g.n_rows != n_rows) {
            return Err(Error::ShapeMismatch("hstack: row counts differ".into()));
        }
        let n_cols: usize = parts.iter().map(|g| g.n_cols).sum();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for g in parts {
                data.extend_from_slice(g.row(r));
            }
        }
        Ok(Grid {
            n_rows,
            n_cols,
            data,
            frame_rate: parts.first().map_or(0.0, |g| g.frame_rate),
        })
    }

    /// Sum of squared entries.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Returns rows `[start, end)` as a new grid.
    pub fn slice_rows(&self, start: usize, end: usize) -> Grid {
        let end = end.min(self.n_rows);
        let start = start.min(end);
        Grid {
            n_rows: end - start,
            n_cols: self.n_cols,
            data: self.data[start * self.n_cols..end * self.n_cols].to_vec(),
            frame_rate: self.frame_rate,
        }
    }

    /// Averages each group of `factor` consecutive rows; a trailing partial group is dropped.
    pub fn pool_rows(&self, factor: usize) -> Grid {
        if factor <= 1 {
            return self.clone();
        }
        let n_out = self.n_rows / factor;
        let mut out = Grid::zeros(n_out, self.n_cols, self.frame_rate / factor as f64);
        for i in 0..n_out {
            let dst = out.row_mut(i);
            for k in 0..factor {
                for (d, s) in dst.iter_mut().zip(self.row(i * factor + k)) {
                    *d += s;
                }
            }
            for d in dst.iter_mut() {
                *d /= factor as f64;
            }
        }
        out
    }
}
