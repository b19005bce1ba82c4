use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::PerturbationConfig;
use crate::metrics::FaithfulnessBins;
use crate::model::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::moo::{DEFAULT_BUDGET, DEFAULT_GAP_TOL};

/// One experiment, read from a single JSON document. Relative paths are
/// resolved against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    /// Class names to keep; all classes when absent.
    #[serde(default)]
    pub keep_classes: Option<Vec<String>>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub featurizer: FeaturizerConfig,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub explainer: ExplainerConfig,
    #[serde(default)]
    pub bins: FaithfulnessBins,
    /// Number of test samples to explain; the whole test split when absent.
    #[serde(default)]
    pub subset: Option<usize>,
    #[serde(default)]
    pub faithfulness_class: ClassChoice,
    #[serde(default)]
    pub selection: SelectionPolicy,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_train_fraction() -> f64 {
    0.8
}
fn default_m() -> usize {
    3
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_gap_tol() -> f64 {
    DEFAULT_GAP_TOL
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_out() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeaturizerConfig {
    Tfidf {
        k: usize,
    },
    /// FMAT files holding full-text, variant and masked rows keyed by row id.
    Imported {
        files: Vec<PathBuf>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub svd: u64,
    pub negatives: u64,
    pub cv: u64,
    pub explain: u64,
    pub subset: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            split: seed,
            svd: seed,
            negatives: seed,
            cv: seed,
            explain: seed,
            subset: seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationConfig {
    /// Candidate `C_reg` values; the penalty strength is `1 / C_reg`.
    pub grid: Vec<f64>,
    pub folds: usize,
    /// Skips cross-validation when set.
    pub fixed: Option<f64>,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        Self {
            grid: vec![0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0],
            folds: 5,
            fixed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExplainerConfig {
    Lime {
        #[serde(default = "default_lime_samples")]
        num_samples: usize,
        #[serde(default = "default_kernel_width")]
        kernel_width: f64,
        #[serde(default = "default_ridge")]
        ridge_strength: f64,
    },
    Shapley {
        #[serde(default = "default_permutations")]
        permutations: usize,
    },
}

fn default_lime_samples() -> usize {
    PerturbationConfig::default().num_samples
}
fn default_kernel_width() -> f64 {
    PerturbationConfig::default().kernel_width
}
fn default_ridge() -> f64 {
    PerturbationConfig::default().ridge_strength
}
fn default_permutations() -> usize {
    crate::explain::DEFAULT_PERMUTATIONS
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig::Lime {
            num_samples: default_lime_samples(),
            kernel_width: default_kernel_width(),
            ridge_strength: default_ridge(),
        }
    }
}

impl ExplainerConfig {
    /// Default settings for an explainer given by name (`lime` or `shapley`).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "lime" => Ok(Self::default()),
            "shapley" | "shap" => Ok(ExplainerConfig::Shapley {
                permutations: default_permutations(),
            }),
            other => Err(Error::Config(format!("unknown explainer `{other}`"))),
        }
    }
}

/// Which class faithfulness is measured for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassChoice {
    #[default]
    Predicted,
    Gold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionPolicy {
    /// Largest tolerated accuracy loss against the baseline, as a fraction.
    pub max_acc_drop: f64,
    /// Frontier index to pick regardless of the policy.
    pub manual: Option<usize>,
    /// Lets points trained without cross-entropy be selected and reported.
    pub include_degenerate: bool,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self {
            max_acc_drop: 0.01,
            manual: None,
            include_degenerate: false,
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub budget: Option<usize>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub explainer: Option<String>,
    pub subset: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.labels);
        fix(&mut self.out);
        if let FeaturizerConfig::Imported { files } = &mut self.featurizer {
            files.iter_mut().for_each(fix);
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(b) = o.budget {
            self.budget = b;
        }
        if let Some(m) = o.m {
            self.m = m;
        }
        if let Some(s) = o.seed {
            self.seeds = Seeds::all(s);
        }
        if let Some(name) = &o.explainer {
            self.explainer = ExplainerConfig::by_name(name)?;
        }
        if let Some(n) = o.subset {
            self.subset = Some(n);
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.budget < 2 {
            return fail(format!("budget must be at least 2, got {}", self.budget));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "train_fraction {} is not in (0, 1)",
                self.train_fraction
            ));
        }
        if !(self.gap_tol >= 0.0) {
            return fail(format!("gap_tol {} must be >= 0", self.gap_tol));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return fail("tol must be positive and max_iter at least 1".into());
        }
        if let FeaturizerConfig::Tfidf { k: 0 } = self.featurizer {
            return fail("tfidf k must be at least 1".into());
        }
        if let FeaturizerConfig::Imported { files } = &self.featurizer {
            if files.is_empty() {
                return fail("imported featurizer needs at least one FMAT file".into());
            }
        }
        match self.regularization.fixed {
            Some(c) if !(c > 0.0 && c.is_finite()) => {
                return fail(format!("fixed C_reg {c} must be positive"))
            }
            None if self.regularization.grid.is_empty() => {
                return fail("regularization grid is empty".into())
            }
            None if self.regularization.folds < 2 => {
                return fail("cross-validation needs at least 2 folds".into())
            }
            _ => {}
        }
        self.perturbation_config(0).map(|_| ())?;
        if let ExplainerConfig::Shapley { permutations: 0 } = self.explainer {
            return fail("shapley needs at least one permutation".into());
        }
        self.bins.validate()?;
        if self.subset == Some(0) {
            return fail("subset must be at least 1".into());
        }
        if !(self.selection.max_acc_drop >= 0.0) {
            return fail("max_acc_drop must be >= 0".into());
        }
        Ok(())
    }

    /// LIME settings, or defaults when another explainer is configured.
    pub fn perturbation_config(&self, seed: u64) -> Result<PerturbationConfig> {
        let cfg = match self.explainer {
            ExplainerConfig::Lime {
                num_samples,
                kernel_width,
                ridge_strength,
            } => PerturbationConfig {
                num_samples,
                kernel_width,
                ridge_strength,
                seed,
            },
            ExplainerConfig::Shapley { .. } => PerturbationConfig {
                seed,
                ..Default::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
