//! Importer for corpora in the ERASER layout: a `docs/` directory of
//! whitespace-tokenized documents plus `train.jsonl`, `val.jsonl` and
//! `test.jsonl` annotation files whose evidences are token spans.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{tokenize_whitespace, LabelSpace, RawSample, Split};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct Annotation {
    annotation_id: String,
    classification: String,
    #[serde(default)]
    evidences: Vec<Vec<Evidence>>,
    #[serde(default)]
    docids: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct Evidence {
    docid: String,
    start_token: usize,
    end_token: usize,
}

/// Reads an ERASER-style directory. Validation annotations join the training
/// split. Every class is rationale-bearing; class names are sorted.
pub fn import_eraser(dir: &Path) -> Result<(Vec<RawSample>, LabelSpace)> {
    let mut samples = Vec::new();
    let mut classes = BTreeSet::new();
    for (file, split) in [
        ("train.jsonl", Split::Train),
        ("val.jsonl", Split::Train),
        ("test.jsonl", Split::Test),
    ] {
        let path = dir.join(file);
        if !path.exists() {
            if file == "val.jsonl" {
                continue;
            }
            return Err(Error::io(
                &path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "missing annotation file"),
            ));
        }
        let reader = BufReader::new(fs::File::open(&path).map_err(|e| Error::io(&path, e))?);
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let ann: Annotation = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })?;
            classes.insert(ann.classification.clone());
            samples.push(to_sample(dir, ann, split)?);
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let names: Vec<String> = classes.into_iter().collect();
    let bearing = (0..names.len()).collect();
    Ok((samples, LabelSpace::new(names, bearing)?))
}

fn to_sample(dir: &Path, ann: Annotation, split: Split) -> Result<RawSample> {
    let docid = ann
        .docids
        .as_ref()
        .and_then(|d| d.first().cloned())
        .unwrap_or_else(|| ann.annotation_id.clone());
    let doc_path = dir.join("docs").join(&docid);
    let text = fs::read_to_string(&doc_path).map_err(|e| Error::io(&doc_path, e))?;
    let tokens = tokenize_whitespace(&text);
    let mut mask = vec![false; tokens.len()];
    for ev in ann.evidences.iter().flatten() {
        if ev.docid != docid {
            continue;
        }
        if ev.start_token > ev.end_token || ev.end_token > tokens.len() {
            return Err(Error::Schema(format!(
                "evidence [{}, {}) outside document `{docid}` of {} tokens",
                ev.start_token,
                ev.end_token,
                tokens.len()
            )));
        }
        mask[ev.start_token..ev.end_token]
            .iter_mut()
            .for_each(|b| *b = true);
    }
    Ok(RawSample {
        id: ann.annotation_id,
        tokens,
        label_votes: vec![ann.classification],
        annotator_masks: vec![mask],
        split: Some(split),
    })
}
