//! FMAT feature files: `"FMAT"`, u32 version, u64 rows, u64 cols, then row-major
//! little-endian f32 values. Row ids live in a JSON sidecar next to the file
//! (`<file>.json`, `{"row_ids": [...], "source": "..."}`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 4] = b"FMAT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub row_ids: Vec<String>,
    pub source: String,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    row_ids: Vec<String>,
    source: String,
}

impl FeatureMatrix {
    pub fn new(values: Matrix, row_ids: Vec<String>, source: impl Into<String>) -> Result<Self> {
        if values.rows() != row_ids.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} row ids",
                values.rows(),
                row_ids.len()
            )));
        }
        if !values.all_finite() {
            return Err(Error::Numeric(
                "feature matrix contains non-finite values".into(),
            ));
        }
        Ok(Self {
            values,
            row_ids,
            source: source.into(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn encode_fmat(values: &Matrix) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 4 * values.as_slice().len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(values.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(values.cols() as u64).to_le_bytes());
    for &v in values.as_slice() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    bytes
}

pub fn decode_fmat(bytes: &[u8]) -> Result<Matrix> {
    let format_err = |offset: usize, message: String| Error::Format {
        offset: offset as u64,
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("truncated header ({} bytes)", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(0, "bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| format_err(8, format!("header {rows}x{cols} overflows")))?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload: header declares {rows}x{cols}, expected {expected} bytes"),
        ));
    }
    if actual > expected {
        return Err(format_err(
            expected as usize,
            format!(
                "{} trailing bytes after a {rows}x{cols} payload",
                actual - expected
            ),
        ));
    }
    let mut data = Vec::with_capacity((rows * cols) as usize);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(format_err(HEADER_LEN + 4 * i, "non-finite value".into()));
        }
        data.push(v as f64);
    }
    Matrix::from_vec(rows as usize, cols as usize, data)
}

pub fn store_feature_matrix(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_fmat(&matrix.values)).map_err(|e| Error::io(path, e))?;
    let sidecar = Sidecar {
        row_ids: matrix.row_ids.clone(),
        source: matrix.source.clone(),
    };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_string(&sidecar)?).map_err(|e| Error::io(side, e))
}

pub fn load_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let values = decode_fmat(&bytes)?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;
    FeatureMatrix::new(values, sidecar.row_ids, sidecar.source)
}
