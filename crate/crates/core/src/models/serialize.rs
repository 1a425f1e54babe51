//! Versioned binary model container.
//!
//! Layout (little-endian): `b"VDMD"`, `u32 version`, `u8 kind`,
//! `u32 len` + JSON hyperparameters, `u32 n_blobs`, then per blob
//! `u32 name_len`, name bytes, `u64 count`, `count` `f64` values.

use std::path::Path;

use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"VDMD";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Forest = 1,
    Cnn = 2,
    Rnn = 3,
}

impl ModelKind {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Self::Forest),
            2 => Ok(Self::Cnn),
            3 => Ok(Self::Rnn),
            _ => Err(Error::Format(format!("unknown model kind {v}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Forest => "forest",
            Self::Cnn => "cnn",
            Self::Rnn => "rnn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelContainer {
    pub kind: ModelKind,
    pub hyperparams: serde_json::Value,
    pub blobs: Vec<(String, Vec<f64>)>,
}

impl ModelContainer {
    pub fn new(kind: ModelKind, hyperparams: serde_json::Value) -> Self {
        Self {
            kind,
            hyperparams,
            blobs: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.blobs.push((name.into(), values));
    }

    pub fn blob(&self, name: &str) -> Result<&[f64]> {
        self.blobs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Format(format!("model blob '{name}' missing")))
    }

    /// Blob that must hold exactly `len` values.
    pub fn blob_sized(&self, name: &str, len: usize) -> Result<&[f64]> {
        let b = self.blob(name)?;
        if b.len() != len {
            return Err(Error::Format(format!("model blob '{name}' has {} values, expected {len}", b.len())));
        }
        Ok(b)
    }

    pub fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!(
                "expected a {} model, file holds a {} model",
                kind.name(),
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.push(self.kind as u8);
        let json = serde_json::to_vec(&self.hyperparams)?;
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(self.blobs.len() as u32).to_le_bytes());
        for (name, values) in &self.blobs {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a VDMD model file".into()));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let kind = ModelKind::from_u8(r.take(1)?[0])?;
        let json_len = r.u32()? as usize;
        let hyperparams = serde_json::from_slice(r.take(json_len)?)?;
        let n_blobs = r.u32()? as usize;
        let mut blobs = Vec::new();
        for _ in 0..n_blobs {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::Format("blob name is not UTF-8".into()))?;
            let count = r.u64()? as usize;
            let raw = r.take(count.checked_mul(8).ok_or_else(|| Error::Format("blob too large".into()))?)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            blobs.push((name, values));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after model blobs".into()));
        }
        Ok(Self {
            kind,
            hyperparams,
            blobs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("model file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelContainer {
        let mut c = ModelContainer::new(ModelKind::Cnn, serde_json::json!({"a": 1, "b": [2, 3]}));
        c.push("w", vec![1.5, -0.25, f64::MIN_POSITIVE]);
        c.push("empty", vec![]);
        c
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(&bytes[..4], MODEL_MAGIC);
        assert_eq!(ModelContainer::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn corrupt_files_rejected() {
        let bytes = sample().to_bytes().unwrap();
        assert!(ModelContainer::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(ModelContainer::from_bytes(&wrong).is_err());
        let mut kind = bytes.clone();
        kind[8] = 9;
        assert!(ModelContainer::from_bytes(&kind).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(ModelContainer::from_bytes(&extra).is_err());
    }

    #[test]
    fn blob_lookup() {
        let c = sample();
        assert_eq!(c.blob("w").unwrap().len(), 3);
        assert!(c.blob_sized("w", 4).is_err());
        assert!(c.blob("missing").is_err());
        assert!(c.expect_kind(ModelKind::Rnn).is_err());
    }
}
