//! Planted-rationale corpus: every document carries a few class words that
//! decide its label and form the gold rationale, plus a class-correlated
//! shortcut token and neutral filler.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{save_corpus, LabelSpace, RawSample};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub samples: usize,
    pub tokens_per_doc: usize,
    /// Class words inserted into each document.
    pub planted: usize,
    /// Size of each class's word pool.
    pub class_pool: usize,
    /// Size of the neutral filler vocabulary.
    pub background: usize,
    /// Shortcut slots per document.
    pub shortcuts: usize,
    /// Size of each class's shortcut pool.
    pub shortcut_pool: usize,
    /// Probability that a shortcut slot holds a word of the document's class.
    pub shortcut_rate: f64,
    /// Probability that a shortcut slot holds a word of the other class.
    pub shortcut_noise: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            tokens_per_doc: 30,
            planted: 3,
            class_pool: 10,
            background: 20000,
            shortcuts: 1,
            shortcut_pool: 1,
            shortcut_rate: 0.95,
            shortcut_noise: 0.05,
        }
    }
}

pub const CLASS_NAMES: [&str; 2] = ["alpha", "beta"];

fn class_word(class: usize, i: usize) -> String {
    format!("{}{i}", CLASS_NAMES[class])
}

fn shortcut_word(class: usize, i: usize) -> String {
    format!("tag{}{i}", CLASS_NAMES[class])
}

fn filler_word(i: usize) -> String {
    format!("w{i}")
}

/// Generates a balanced two-class corpus. Each sample has a single annotator
/// whose mask marks exactly the planted class words.
pub fn planted_corpus(cfg: &PlantedConfig, seed: u64) -> Result<(Vec<RawSample>, LabelSpace)> {
    if cfg.planted == 0 || cfg.class_pool == 0 || cfg.background == 0 || cfg.shortcut_pool == 0 {
        return Err(Error::Config(
            "planted count, pools and background must be positive".into(),
        ));
    }
    if cfg.tokens_per_doc < cfg.planted + cfg.shortcuts {
        return Err(Error::Config(format!(
            "{} tokens cannot hold {} planted words and {} shortcut slots",
            cfg.tokens_per_doc, cfg.planted, cfg.shortcuts
        )));
    }
    let (rate, noise) = (cfg.shortcut_rate, cfg.shortcut_noise);
    if !(rate >= 0.0 && noise >= 0.0 && rate + noise <= 1.0) {
        return Err(Error::Config(format!(
            "shortcut probabilities {rate} and {noise} are not a distribution"
        )));
    }
    let labels = LabelSpace::new(
        CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        BTreeSet::from([0, 1]),
    )?;
    let pools: Vec<Vec<String>> = (0..2)
        .map(|c| (0..cfg.class_pool).map(|i| class_word(c, i)).collect())
        .collect();
    let tags: Vec<Vec<String>> = (0..2)
        .map(|c| {
            (0..cfg.shortcut_pool)
                .map(|i| shortcut_word(c, i))
                .collect()
        })
        .collect();
    let filler: Vec<String> = (0..cfg.background).map(filler_word).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = cfg.tokens_per_doc;
    let samples = (0..cfg.samples)
        .map(|i| {
            let class = i % 2;
            let mut tokens: Vec<String> = (0..p)
                .map(|_| filler.choose(&mut rng).expect("filler").clone())
                .collect();
            let mut rationale = vec![false; p];
            let slots =
                rand::seq::index::sample(&mut rng, p, cfg.planted + cfg.shortcuts).into_vec();
            for &t in &slots[..cfg.planted] {
                tokens[t] = pools[class].choose(&mut rng).expect("pool").clone();
                rationale[t] = true;
            }
            for &t in &slots[cfg.planted..] {
                let u: f64 = rng.random();
                if u < rate {
                    tokens[t] = tags[class].choose(&mut rng).expect("tags").clone();
                } else if u < rate + noise {
                    tokens[t] = tags[1 - class].choose(&mut rng).expect("tags").clone();
                }
            }
            RawSample {
                id: format!("planted-{i:05}"),
                tokens,
                label_votes: vec![CLASS_NAMES[class].to_string()],
                annotator_masks: vec![rationale],
                split: None,
            }
        })
        .collect();
    Ok((samples, labels))
}

/// Writes `corpus.jsonl` and `labels.json` into `dir` and returns their paths.
pub fn write_planted_corpus(
    dir: &Path,
    cfg: &PlantedConfig,
    seed: u64,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (samples, labels) = planted_corpus(cfg, seed)?;
    let corpus_path = dir.join("corpus.jsonl");
    let labels_path = dir.join("labels.json");
    save_corpus(&samples, &corpus_path)?;
    labels.save(&labels_path)?;
    Ok((corpus_path, labels_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::consensus;

    #[test]
    fn planted_words_are_the_rationale() {
        let cfg = PlantedConfig {
            samples: 50,
            ..Default::default()
        };
        let (samples, labels) = planted_corpus(&cfg, 4).unwrap();
        for raw in &samples {
            let s = consensus(raw, &labels).unwrap().unwrap();
            assert_eq!(s.tokens.len(), 30);
            assert_eq!(s.rationale_len(), 3);
            let prefix = CLASS_NAMES[s.label];
            for (tok, &r) in s.tokens.iter().zip(&s.rationale) {
                let planted =
                    tok.starts_with(prefix) && tok[prefix.len()..].parse::<usize>().is_ok();
                assert_eq!(planted, r, "{tok}");
            }
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = PlantedConfig {
            samples: 20,
            ..Default::default()
        };
        assert_eq!(
            planted_corpus(&cfg, 1).unwrap().0,
            planted_corpus(&cfg, 1).unwrap().0
        );
        assert_ne!(
            planted_corpus(&cfg, 1).unwrap().0,
            planted_corpus(&cfg, 2).unwrap().0
        );
    }
}
