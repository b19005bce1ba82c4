//! Rationale-annotated corpora: loading, annotator consensus, class filtering and splitting.
//!
//! The on-disk corpus is JSON lines, one record per document:
//!
//! ```json
//! {"id": "d1", "tokens": ["a", "b"], "label_votes": ["hate"], "annotator_masks": [[1, 0]], "split": "train"}
//! ```
//!
//! A `labels.json` sidecar lists class names in order and the rationale-bearing subset.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A multi-annotator record before consensus.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSample {
    pub id: String,
    pub tokens: Vec<String>,
    pub label_votes: Vec<String>,
    pub annotator_masks: Vec<Vec<bool>>,
    pub split: Option<Split>,
}

/// One document after consensus: tokens, a class index and a binary rationale mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenizedSample {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: usize,
    #[serde(with = "bit_vec")]
    pub rationale: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl TokenizedSample {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn rationale_len(&self) -> usize {
        self.rationale.iter().filter(|&&b| b).count()
    }

    pub fn has_rationale(&self) -> bool {
        self.rationale.iter().any(|&b| b)
    }

    /// Tokens whose mask entry is set, in original order.
    pub fn masked_tokens<'a>(&'a self, mask: &'a [bool]) -> impl Iterator<Item = &'a str> + 'a {
        self.tokens
            .iter()
            .zip(mask)
            .filter(|(_, &keep)| keep)
            .map(|(t, _)| t.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    names: Vec<String>,
    rationale_bearing: BTreeSet<usize>,
}

#[derive(Serialize, Deserialize)]
struct LabelFile {
    names: Vec<String>,
    rationale_bearing: Vec<String>,
}

impl LabelSpace {
    pub fn new(names: Vec<String>, rationale_bearing: BTreeSet<usize>) -> Result<Self> {
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Schema("class names must be unique".into()));
        }
        if let Some(&bad) = rationale_bearing.iter().find(|&&k| k >= names.len()) {
            return Err(Error::Schema(format!(
                "rationale-bearing class {bad} is out of range for {} classes",
                names.len()
            )));
        }
        Ok(Self {
            names,
            rationale_bearing,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn rationale_bearing(&self) -> &BTreeSet<usize> {
        &self.rationale_bearing
    }

    pub fn bears_rationale(&self, class: usize) -> bool {
        self.rationale_bearing.contains(&class)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: LabelFile = serde_json::from_str(&text)?;
        let mut bearing = BTreeSet::new();
        for name in &file.rationale_bearing {
            let idx = file
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Label(name.clone()))?;
            bearing.insert(idx);
        }
        Self::new(file.names, bearing)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = LabelFile {
            names: self.names.clone(),
            rationale_bearing: self
                .rationale_bearing
                .iter()
                .map(|&k| self.names[k].clone())
                .collect(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    tokens: Vec<String>,
    label_votes: Vec<String>,
    annotator_masks: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

impl RawRecord {
    fn into_sample(self, line: usize) -> Result<RawSample> {
        let p = self.tokens.len();
        if p == 0 {
            return Err(Error::Schema(format!(
                "line {line}: record `{}` has no tokens",
                self.id
            )));
        }
        if self.label_votes.is_empty() {
            return Err(Error::Schema(format!(
                "line {line}: record `{}` has no label votes",
                self.id
            )));
        }
        let mut masks = Vec::with_capacity(self.annotator_masks.len());
        for mask in self.annotator_masks {
            if mask.len() != p {
                return Err(Error::Schema(format!(
                    "line {line}: mask of length {} for {p} tokens in `{}`",
                    mask.len(),
                    self.id
                )));
            }
            let bits = mask
                .into_iter()
                .map(|b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    other => Err(Error::Schema(format!(
                        "line {line}: mask value {other} is not 0 or 1"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            masks.push(bits);
        }
        Ok(RawSample {
            id: self.id,
            tokens: self.tokens,
            label_votes: self.label_votes,
            annotator_masks: masks,
            split: self.split,
        })
    }

    fn from_sample(sample: &RawSample) -> Self {
        Self {
            id: sample.id.clone(),
            tokens: sample.tokens.clone(),
            label_votes: sample.label_votes.clone(),
            annotator_masks: sample
                .annotator_masks
                .iter()
                .map(|m| m.iter().map(|&b| b as u8).collect())
                .collect(),
            split: sample.split,
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<RawSample>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<RawSample>> {
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        samples.push(record.into_sample(line_no)?);
    }
    Ok(samples)
}

pub fn write_corpus<W: Write>(samples: &[RawSample], mut writer: W) -> Result<()> {
    for sample in samples {
        serde_json::to_writer(&mut writer, &RawRecord::from_sample(sample))?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<corpus writer>", e))?;
    }
    Ok(())
}

pub fn save_corpus(samples: &[RawSample], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_corpus(samples, &mut writer)?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes post-consensus samples as JSON lines.
pub fn save_tokenized(samples: &[TokenizedSample], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for sample in samples {
        serde_json::to_writer(&mut writer, sample)?;
        writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn load_tokenized(path: &Path) -> Result<Vec<TokenizedSample>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TokenizedSample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if sample.rationale.len() != sample.tokens.len() {
            return Err(Error::Schema(format!(
                "line {}: rationale length {} for {} tokens",
                idx + 1,
                sample.rationale.len(),
                sample.tokens.len()
            )));
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Merges annotators by strict majority. Returns `None` when no class wins more
/// than half of the votes.
pub fn consensus(sample: &RawSample, labels: &LabelSpace) -> Result<Option<TokenizedSample>> {
    let mut counts = vec![0usize; labels.len()];
    for vote in &sample.label_votes {
        let k = labels
            .index_of(vote)
            .ok_or_else(|| Error::Label(vote.clone()))?;
        counts[k] += 1;
    }
    let voters = sample.label_votes.len();
    let Some(label) = counts.iter().position(|&c| 2 * c > voters) else {
        return Ok(None);
    };

    let p = sample.tokens.len();
    let annotators = sample.annotator_masks.len();
    let rationale = (0..p)
        .map(|t| {
            let marks = sample.annotator_masks.iter().filter(|m| m[t]).count();
            annotators > 0 && 2 * marks > annotators
        })
        .collect();

    Ok(Some(TokenizedSample {
        id: sample.id.clone(),
        tokens: sample.tokens.clone(),
        label,
        rationale,
        split: sample.split,
    }))
}

/// Result of [`filter_classes`]: surviving samples relabelled densely.
#[derive(Clone, Debug)]
pub struct FilteredCorpus {
    pub samples: Vec<TokenizedSample>,
    pub labels: LabelSpace,
    /// old class index -> new class index
    pub mapping: BTreeMap<usize, usize>,
}

pub fn filter_classes(
    samples: Vec<TokenizedSample>,
    labels: &LabelSpace,
    keep: &BTreeSet<usize>,
) -> Result<FilteredCorpus> {
    if keep.is_empty() {
        return Err(Error::Config("at least one class must be kept".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= labels.len()) {
        return Err(Error::Label(format!("class index {bad}")));
    }
    let mapping: BTreeMap<usize, usize> = keep
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let names = keep.iter().map(|&k| labels.names()[k].clone()).collect();
    let bearing = labels
        .rationale_bearing()
        .iter()
        .filter_map(|k| mapping.get(k).copied())
        .collect();
    let new_labels = LabelSpace::new(names, bearing)?;

    let samples: Vec<_> = samples
        .into_iter()
        .filter_map(|mut s| {
            mapping.get(&s.label).map(|&new| {
                s.label = new;
                s
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(FilteredCorpus {
        samples,
        labels: new_labels,
        mapping,
    })
}

/// Assigns train/test to samples without an explicit split, stratified by label.
pub fn split(
    mut samples: Vec<TokenizedSample>,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<TokenizedSample>> {
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} is not in (0, 1)"
        )));
    }
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        if s.split.is_none() {
            by_label.entry(s.label).or_default().push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for indices in by_label.values_mut() {
        indices.shuffle(&mut rng);
        let n_train = (train_fraction * indices.len() as f64).round() as usize;
        for (pos, &i) in indices.iter().enumerate() {
            samples[i].split = Some(if pos < n_train {
                Split::Train
            } else {
                Split::Test
            });
        }
    }
    Ok(samples)
}

/// Splits text on whitespace and ASCII punctuation, keeping each punctuation
/// character as its own token.
pub fn tokenize_with_punctuation(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() || ch.is_ascii_punctuation() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if ch.is_ascii_punctuation() {
                tokens.push(ch.to_string());
            }
        } else {
            current.push(ch);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

pub fn tokenize_whitespace(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Serializes `Vec<bool>` as a JSON array of 0/1.
pub(crate) mod bit_vec {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(bits.iter().map(|&b| b as u8))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        Vec::<u8>::deserialize(d)?
            .into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(de::Error::custom(format!(
                    "mask value {other} is not 0 or 1"
                ))),
            })
            .collect()
    }
}
