//! Grid dumps: a little-endian binary format and CSV.
//!
//! Binary layout: `b"VDG1"`, `u32 n_rows`, `u32 n_cols`, `f32 frame_rate`,
//! then `n_rows · n_cols` `f32` values in row-major order.

use std::io::Write;
use std::path::Path;

use super::Grid;
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"VDG1";
const HEADER_LEN: usize = 16;

pub fn grid_to_bytes(grid: &Grid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * grid.as_slice().len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(grid.n_rows() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n_cols() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.frame_rate as f32).to_le_bytes());
    for &v in grid.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn grid_from_bytes(bytes: &[u8]) -> Result<Grid> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != GRID_MAGIC {
        return Err(Error::Format("not a VDG1 grid file".into()));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let n_rows = u32::from_le_bytes(word(4)) as usize;
    let n_cols = u32::from_le_bytes(word(8)) as usize;
    let frame_rate = f32::from_le_bytes(word(12)) as f64;
    let expected = n_rows
        .checked_mul(n_cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "grid {n_rows}x{n_cols} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Grid::from_vec(n_rows, n_cols, data, frame_rate)
}

pub fn write_grid(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, grid_to_bytes(grid))?;
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    grid_from_bytes(&std::fs::read(path)?)
}

/// One CSV row per frame, optionally with a header of column names.
pub fn write_grid_csv(grid: &Grid, path: impl AsRef<Path>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(std::fs::File::create(path)?));
    if let Some(h) = header {
        if h.len() != grid.n_cols() {
            return Err(Error::ShapeMismatch(format!(
                "{} header names for {} columns",
                h.len(),
                grid.n_cols()
            )));
        }
        w.write_record(h)?;
    }
    for row in grid.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a grid's column layout as `name start end` lines next to a dump.
pub fn write_descriptor(path: impl AsRef<Path>, slices: &[(String, usize, usize)]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for (name, start, end) in slices {
        writeln!(f, "{name} {start} {end}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_at_f32_precision() {
        let g = Grid::from_vec(2, 3, vec![0.5, -1.25, 3.0, 1e-3, 7.0, -0.0], 70.0).unwrap();
        let back = grid_from_bytes(&grid_to_bytes(&g)).unwrap();
        assert_eq!(back.shape(), (2, 3));
        assert_eq!(back.frame_rate, 70.0);
        for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn corrupt_input_rejected() {
        assert!(grid_from_bytes(b"nope").is_err());
        let mut bytes = grid_to_bytes(&Grid::zeros(2, 2, 1.0));
        bytes.pop();
        assert!(grid_from_bytes(&bytes).is_err());
    }

    #[test]
    fn csv_has_one_line_per_frame() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        let g = Grid::filled(4, 2, 1.5, 10.0);
        write_grid_csv(&g, &p, Some(&["a".to_string(), "b".to_string()])).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().nth(1), Some("1.5,1.5"));
    }
}
