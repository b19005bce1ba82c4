//! Featurizers that turn (possibly masked) documents into fixed-width rows.

pub mod fmat;
pub mod tfidf;
pub mod variants;

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::TokenizedSample;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use fmat::{load_feature_matrix, store_feature_matrix, FeatureMatrix};
pub use tfidf::TfIdfModel;
pub use variants::{
    build_variants, sample_negatives, variant_masks, RationaleVariantSet, VariantBatch,
};

/// Maps a document with some tokens removed to a feature row.
///
/// `mask[t] == true` keeps token `t`. An all-true mask must give the full-text row.
pub trait Featurizer: Sync {
    fn dim(&self) -> usize;

    fn features(&self, sample: &TokenizedSample, mask: &[bool]) -> Result<Vec<f64>>;

    fn full_features(&self, sample: &TokenizedSample) -> Result<Vec<f64>> {
        self.features(sample, &vec![true; sample.len()])
    }

    /// Whether the row for `row_id` (see [`variant_row_id`]) is available.
    fn covers(&self, _row_id: &str) -> bool {
        true
    }
}

impl Featurizer for TfIdfModel {
    fn dim(&self) -> usize {
        self.k()
    }

    fn features(&self, sample: &TokenizedSample, mask: &[bool]) -> Result<Vec<f64>> {
        check_mask(sample, mask)?;
        Ok(self.transform(sample.masked_tokens(mask)))
    }
}

/// Removes masked-out tokens and featurizes what is left.
pub fn mask_to_features(
    sample: &TokenizedSample,
    mask: &[bool],
    featurizer: &dyn Featurizer,
) -> Result<Vec<f64>> {
    featurizer.features(sample, mask)
}

fn check_mask(sample: &TokenizedSample, mask: &[bool]) -> Result<()> {
    if mask.len() != sample.len() {
        return Err(Error::Shape(format!(
            "mask of length {} for {} tokens in `{}`",
            mask.len(),
            sample.len(),
            sample.id
        )));
    }
    Ok(())
}

/// Stable identifier of a token mask: the first 16 hex digits of SHA-256 over
/// the mask written as ASCII `0`/`1`.
pub fn mask_hash(mask: &[bool]) -> String {
    let text: String = mask.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

/// Row id for a masked variant of a sample inside an FMAT sidecar. Full-text
/// rows use the bare sample id.
pub fn variant_row_id(sample_id: &str, mask: &[bool]) -> String {
    if mask.iter().all(|&b| b) {
        sample_id.to_owned()
    } else {
        format!("{sample_id}#{}", mask_hash(mask))
    }
}

/// A masked variant an external encoder has to featurize.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskRequest {
    pub sample_id: String,
    /// The mask as ASCII `0`/`1`, one character per token.
    pub mask: String,
    pub row_id: String,
}

impl MaskRequest {
    pub fn new(sample_id: &str, mask: &[bool]) -> Self {
        Self {
            sample_id: sample_id.to_owned(),
            mask: mask.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            row_id: variant_row_id(sample_id, mask),
        }
    }

    pub fn bits(&self) -> Result<Vec<bool>> {
        self.mask
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Schema(format!(
                    "mask character `{other}` in request for `{}`",
                    self.sample_id
                ))),
            })
            .collect()
    }
}

/// Writes one JSON object per line, dropping repeated row ids.
pub fn write_mask_requests(requests: &[MaskRequest], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut seen = std::collections::HashSet::new();
    for r in requests {
        if seen.insert(r.row_id.as_str()) {
            writeln!(out, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_mask_requests(path: &Path) -> Result<Vec<MaskRequest>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Features precomputed by an external encoder, looked up by row id.
#[derive(Clone, Debug)]
pub struct ImportedFeatures {
    rows: Matrix,
    index: HashMap<String, usize>,
}

impl ImportedFeatures {
    pub fn from_matrices(matrices: Vec<FeatureMatrix>) -> Result<Self> {
        let dim = matrices.first().map_or(0, FeatureMatrix::cols);
        let mut rows = Vec::new();
        let mut index = HashMap::new();
        for m in matrices {
            if m.cols() != dim {
                return Err(Error::Shape(format!(
                    "feature files disagree on width: {} vs {dim}",
                    m.cols()
                )));
            }
            for (i, id) in m.row_ids.iter().enumerate() {
                let row = m.values.row(i);
                // request lists overlap, so the same row may arrive twice
                if let Some(&seen) = index.get(id) {
                    let first: &Vec<f64> = &rows[seen];
                    if first.as_slice() != row {
                        return Err(Error::Schema(format!(
                            "conflicting feature rows for id `{id}`"
                        )));
                    }
                    continue;
                }
                index.insert(id.clone(), rows.len());
                rows.push(row.to_vec());
            }
        }
        Ok(Self {
            rows: Matrix::from_rows(&rows, dim)?,
            index,
        })
    }

    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let matrices = paths
            .iter()
            .map(|p| load_feature_matrix(p.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrices(matrices)
    }

    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }

    pub fn contains(&self, row_id: &str) -> bool {
        self.index.contains_key(row_id)
    }

    /// Requests whose rows are absent.
    pub fn missing<'a>(&self, requests: &'a [MaskRequest]) -> Vec<&'a MaskRequest> {
        requests
            .iter()
            .filter(|r| !self.contains(&r.row_id))
            .collect()
    }
}

impl Featurizer for ImportedFeatures {
    fn dim(&self) -> usize {
        self.rows.cols()
    }

    fn features(&self, sample: &TokenizedSample, mask: &[bool]) -> Result<Vec<f64>> {
        check_mask(sample, mask)?;
        let key = variant_row_id(&sample.id, mask);
        match self.index.get(&key) {
            Some(&i) => Ok(self.rows.row(i).to_vec()),
            None => Err(Error::Coverage {
                sample_id: sample.id.clone(),
                mask_hash: mask_hash(mask),
            }),
        }
    }

    fn covers(&self, row_id: &str) -> bool {
        self.contains(row_id)
    }
}
