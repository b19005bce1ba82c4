//! Model-agnostic token saliency: a perturbation surrogate (LIME-style) and a
//! permutation-sampling Shapley estimator. Both only see class probabilities
//! for token masks.

mod lime;
mod shapley;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lime::{
    draw_perturbations, fit_surrogate, lime_explain, lime_explain_classes, PerturbationConfig,
};
pub use shapley::{shapley_explain, shapley_values, ShapleyEstimate, DEFAULT_PERMUTATIONS};

/// Class probabilities of a document with some tokens removed (`mask[t] == false`).
pub trait MaskedPredictor {
    fn predict_masked(&self, mask: &[bool]) -> Result<Vec<f64>>;
}

impl<F> MaskedPredictor for F
where
    F: Fn(&[bool]) -> Vec<f64>,
{
    fn predict_masked(&self, mask: &[bool]) -> Result<Vec<f64>> {
        Ok(self(mask))
    }
}

/// Per-token scores for one sample and one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub sample_id: String,
    pub class_index: usize,
    pub scores: Vec<f64>,
}

pub fn write_explanations(explanations: &[Explanation], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for e in explanations {
        serde_json::to_writer(&mut writer, e)?;
        writer
            .write_all(b"\n")
            .map_err(|err| Error::io(path, err))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_explanations(path: &Path) -> Result<Vec<Explanation>> {
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
