//! Positive rationale rows and uniformly sampled negative rationales.

use rand::seq::index;

use crate::corpus::TokenizedSample;
use crate::error::{Error, Result};
use crate::featurize::Featurizer;
use crate::linalg::Matrix;
use crate::seed::keyed_rng;

const MAX_REDRAWS: usize = 100;

/// Ground-truth rationale row plus `m - 1` negative rows for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RationaleVariantSet {
    pub sample_id: String,
    pub label: usize,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

impl RationaleVariantSet {
    pub fn m(&self) -> usize {
        self.negatives.len() + 1
    }
}

/// Draws `m - 1` negative rationales as sorted position sets.
///
/// Each negative has as many positions as the rationale (at most `p`). A draw
/// equal to the rationale itself is redrawn up to 100 times and then kept.
pub fn sample_negatives(sample: &TokenizedSample, m: usize, seed: u64) -> Vec<Vec<usize>> {
    let p = sample.len();
    if m <= 1 || p == 0 {
        return Vec::new();
    }
    let size = sample.rationale_len().min(p);
    let positive: Vec<usize> = (0..p).filter(|&t| sample.rationale[t]).collect();
    let mut rng = keyed_rng(seed, &sample.id);
    (1..m)
        .map(|_| {
            let mut draw = Vec::new();
            for _ in 0..=MAX_REDRAWS {
                draw = index::sample(&mut rng, p, size).into_vec();
                draw.sort_unstable();
                if draw != positive {
                    break;
                }
            }
            draw
        })
        .collect()
}

/// Masks for a sample's variant set: the rationale first, then the negatives.
pub fn variant_masks(sample: &TokenizedSample, m: usize, seed: u64) -> Vec<Vec<bool>> {
    let p = sample.len();
    let mut masks = vec![sample.rationale.clone()];
    for positions in sample_negatives(sample, m, seed) {
        let mut mask = vec![false; p];
        for t in positions {
            mask[t] = true;
        }
        masks.push(mask);
    }
    masks
}

/// Featurizes rationale variants. Samples without a rationale are skipped.
pub fn build_variants(
    samples: &[TokenizedSample],
    featurizer: &dyn Featurizer,
    m: usize,
    seed: u64,
) -> Result<Vec<RationaleVariantSet>> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    samples
        .iter()
        .filter(|s| s.has_rationale())
        .map(|s| {
            let mut rows = variant_masks(s, m, seed)
                .into_iter()
                .map(|mask| featurizer.features(s, &mask))
                .collect::<Result<Vec<_>>>()?;
            let negatives = rows.split_off(1);
            Ok(RationaleVariantSet {
                sample_id: s.id.clone(),
                label: s.label,
                positive: rows.pop().expect("positive row"),
                negatives,
            })
        })
        .collect()
}

/// Variant sets flattened for the loss: `m` consecutive rows per set, positive first.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantBatch {
    m: usize,
    rows: Matrix,
    labels: Vec<usize>,
}

impl VariantBatch {
    pub fn empty(dim: usize, m: usize) -> Self {
        Self {
            m: m.max(1),
            rows: Matrix::zeros(0, dim),
            labels: Vec::new(),
        }
    }

    pub fn from_sets(sets: &[RationaleVariantSet], dim: usize, m: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(sets.len() * m);
        let mut labels = Vec::with_capacity(sets.len());
        for set in sets {
            if set.m() != m {
                return Err(Error::Shape(format!(
                    "variant set `{}` has {} rows, expected {m}",
                    set.sample_id,
                    set.m()
                )));
            }
            rows.push(set.positive.clone());
            rows.extend(set.negatives.iter().cloned());
            labels.push(set.label);
        }
        Ok(Self {
            m,
            rows: Matrix::from_rows(&rows, dim)?,
            labels,
        })
    }

    pub fn from_parts(m: usize, rows: Matrix, labels: Vec<usize>) -> Result<Self> {
        if m == 0 || rows.rows() != labels.len() * m {
            return Err(Error::Shape(format!(
                "{} rows cannot hold {} sets of {m}",
                rows.rows(),
                labels.len()
            )));
        }
        Ok(Self { m, rows, labels })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Rows of set `i`; row 0 is the positive rationale.
    pub fn set_rows(&self, i: usize) -> impl Iterator<Item = &[f64]> {
        (i * self.m..(i + 1) * self.m).map(move |r| self.rows.row(r))
    }
}
