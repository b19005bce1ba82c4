//! End-to-end experiment: prepare and featurize the corpus, pick the penalty by
//! cross-validation, trace the frontier, explain and score every model, then
//! select one and write the comparison report.
//!
//! Stages talk to each other only through files in the run directory, so each
//! can also be run on its own from the command line.

mod config;
mod report;
mod select;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, LabelSpace, Split, TokenizedSample};
use crate::error::{Error, Result};
use crate::explain::{self, lime_explain_classes, shapley_values, Explanation, MaskedPredictor};
use crate::featurize::{
    build_variants, store_feature_matrix, variant_masks, write_mask_requests, FeatureMatrix,
    Featurizer, ImportedFeatures, MaskRequest, TfIdfModel, VariantBatch,
};
use crate::linalg::Matrix;
use crate::metrics::{auprc, classification_report, faithfulness, MetricReport};
use crate::model::{
    contrastive_rationale_loss, cross_entropy, l2_penalty, predict, select_regularization, train,
    ClassifierWeights, TradeOff, TrainingProblem,
};
use crate::moo::{certify_frontier, nise, CertificationReport, Frontier, ObjectivePoint};

pub use config::{
    ClassChoice, ExperimentConfig, ExplainerConfig, FeaturizerConfig, Overrides,
    RegularizationConfig, Seeds, SelectionPolicy,
};
pub use report::{emit_report, ModelSummary, ReportRow, Summary};
pub use select::{select_model, Selection};

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// One entry of `frontier.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub w1: f64,
    pub w2: f64,
    pub train_ce: f64,
    pub train_crl: f64,
    /// L2 penalty at the solution. The frontier is traced over
    /// `train_ce + penalty` and `train_crl + penalty`.
    pub penalty: f64,
    /// Relative to the run directory.
    pub weights_file: String,
    pub degenerate: bool,
}

impl FrontierEntry {
    /// Stem shared by the weights and explanation files of this model.
    pub fn model_name(&self) -> &str {
        model_name(&self.weights_file)
    }
}

/// Every weighted solve, including those that did not make the frontier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub w1: f64,
    pub w2: f64,
    pub train_ce: f64,
    pub train_crl: f64,
    pub penalty: f64,
    pub weights_file: String,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiseSummary {
    pub c_reg: f64,
    pub cv_scores: Vec<(f64, f64)>,
    pub solver_budget_used: usize,
    pub max_gap_bound: f64,
    /// Interior points checked against the returned frontier.
    pub certification: CertificationReport,
    /// Interior points checked against every solve.
    pub certification_all_solves: CertificationReport,
    pub solves: Vec<SolveRecord>,
}

/// Test-set scores of one trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    /// Position in solve order; the cross-entropy-only model is 0.
    pub model_index: usize,
    /// Position in `frontier.json`, absent for a baseline that was filtered out.
    pub frontier_index: Option<usize>,
    pub weights_file: String,
    pub w1: f64,
    pub w2: f64,
    pub degenerate: bool,
    #[serde(flatten)]
    pub report: MetricReport,
    pub confusion: Vec<Vec<usize>>,
}

/// A run directory and the files inside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunArtifact {
    pub dir: PathBuf,
}

impl RunArtifact {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn config(&self) -> PathBuf {
        self.path("config.json")
    }
    pub fn prepared(&self) -> PathBuf {
        self.path("prepared.jsonl")
    }
    pub fn labels(&self) -> PathBuf {
        self.path("labels.json")
    }
    pub fn tfidf(&self) -> PathBuf {
        self.path("tfidf.json")
    }
    pub fn frontier(&self) -> PathBuf {
        self.path("frontier.json")
    }
    pub fn nise(&self) -> PathBuf {
        self.path("nise.json")
    }
    pub fn subset(&self) -> PathBuf {
        self.path("subset.json")
    }
    pub fn metrics(&self) -> PathBuf {
        self.path("metrics.json")
    }
    pub fn selection(&self) -> PathBuf {
        self.path("selection.json")
    }
    pub fn report(&self) -> PathBuf {
        self.path("report.csv")
    }
    pub fn summary(&self) -> PathBuf {
        self.path("summary.json")
    }
    pub fn incomplete_marker(&self) -> PathBuf {
        self.path(INCOMPLETE_MARKER)
    }
    pub fn explanations(&self, model_name: &str) -> PathBuf {
        self.dir
            .join("explanations")
            .join(format!("{model_name}.jsonl"))
    }
    pub fn requests(&self, kind: &str) -> PathBuf {
        self.dir.join("requests").join(format!("{kind}.jsonl"))
    }

    pub fn is_complete(&self) -> bool {
        self.frontier().exists() && self.report().exists() && !self.incomplete_marker().exists()
    }

    pub fn load_frontier(&self) -> Result<Vec<FrontierEntry>> {
        read_json(&self.frontier())
    }

    pub fn load_metrics(&self) -> Result<Vec<ModelMetrics>> {
        read_json(&self.metrics())
    }

    pub fn load_nise(&self) -> Result<NiseSummary> {
        read_json(&self.nise())
    }

    pub fn load_selection(&self) -> Result<Selection> {
        read_json(&self.selection())
    }

    pub fn load_weights(&self, weights_file: &str) -> Result<ClassifierWeights> {
        ClassifierWeights::load(&self.dir.join(weights_file))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Corpus after consensus, filtering and splitting, with its featurizer.
pub struct Prepared {
    pub samples: Vec<TokenizedSample>,
    pub labels: LabelSpace,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub featurizer: Box<dyn Featurizer + Send>,
}

impl Prepared {
    pub fn features(&self, indices: &[usize]) -> Result<Matrix> {
        let rows = indices
            .iter()
            .map(|&i| self.featurizer.full_features(&self.samples[i]))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(&rows, self.featurizer.dim())
    }

    pub fn labels_of(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.samples[i].label).collect()
    }

    /// Training samples that enter the rationale loss.
    pub fn rationale_train(&self) -> Vec<TokenizedSample> {
        self.train
            .iter()
            .map(|&i| &self.samples[i])
            .filter(|s| self.labels.bears_rationale(s.label) && s.has_rationale())
            .cloned()
            .collect()
    }

    fn from_parts(
        samples: Vec<TokenizedSample>,
        labels: LabelSpace,
        featurizer: Box<dyn Featurizer + Send>,
    ) -> Self {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            match s.split {
                Some(Split::Test) => test.push(i),
                _ => train.push(i),
            }
        }
        Self {
            samples,
            labels,
            train,
            test,
            featurizer,
        }
    }
}

/// Everything a later stage may need, loaded lazily from the run directory.
pub struct Context {
    pub config: ExperimentConfig,
    pub run: RunArtifact,
    prepared: Option<Prepared>,
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Self {
        let run = RunArtifact::new(config.out.clone());
        Self {
            config,
            run,
            prepared: None,
        }
    }

    pub fn prepared(&mut self) -> Result<&Prepared> {
        if self.prepared.is_none() {
            self.prepared = Some(load_prepared(&self.config, &self.run)?);
        }
        Ok(self.prepared.as_ref().expect("loaded"))
    }
}

fn load_featurizer(
    config: &ExperimentConfig,
    run: &RunArtifact,
) -> Result<Box<dyn Featurizer + Send>> {
    Ok(match &config.featurizer {
        FeaturizerConfig::Tfidf { .. } => Box::new(TfIdfModel::load(&run.tfidf())?),
        FeaturizerConfig::Imported { files } => Box::new(ImportedFeatures::load(files)?),
    })
}

fn load_prepared(config: &ExperimentConfig, run: &RunArtifact) -> Result<Prepared> {
    let samples = corpus::load_tokenized(&run.prepared())?;
    let labels = LabelSpace::load(&run.labels())?;
    Ok(Prepared::from_parts(
        samples,
        labels,
        load_featurizer(config, run)?,
    ))
}

/// Consensus, class filtering and splitting, without featurizing.
pub fn prepare_corpus(config: &ExperimentConfig) -> Result<(Vec<TokenizedSample>, LabelSpace)> {
    let raw = corpus::load_corpus(&config.corpus)?;
    let labels = LabelSpace::load(&config.labels)?;
    let mut samples = Vec::with_capacity(raw.len());
    for r in &raw {
        if let Some(s) = corpus::consensus(r, &labels)? {
            samples.push(s);
        }
    }
    if samples.len() < raw.len() {
        info!(
            "consensus dropped {} of {} samples",
            raw.len() - samples.len(),
            raw.len()
        );
    }
    let keep: BTreeSet<usize> = match &config.keep_classes {
        None => (0..labels.len()).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                labels
                    .index_of(n)
                    .ok_or_else(|| Error::Config(format!("keep_classes names unknown class `{n}`")))
            })
            .collect::<Result<_>>()?,
    };
    let filtered = corpus::filter_classes(samples, &labels, &keep)?;
    let samples = corpus::split(filtered.samples, config.train_fraction, config.seeds.split)?;
    Ok((samples, filtered.labels))
}

/// Full texts of every sample plus the rationale variants of training samples.
fn variant_requests(
    samples: &[TokenizedSample],
    labels: &LabelSpace,
    m: usize,
    seed: u64,
) -> Vec<MaskRequest> {
    let mut out: Vec<MaskRequest> = samples
        .iter()
        .map(|s| MaskRequest::new(&s.id, &vec![true; s.len()]))
        .collect();
    for s in samples.iter().filter(|s| {
        s.split != Some(Split::Test) && labels.bears_rationale(s.label) && s.has_rationale()
    }) {
        out.extend(
            variant_masks(s, m, seed)
                .iter()
                .map(|mask| MaskRequest::new(&s.id, mask)),
        );
    }
    out
}

/// Every mask the explainer will evaluate on the explanation subset. Masks do
/// not depend on the model, so one list serves all frontier models.
fn explain_requests(
    config: &ExperimentConfig,
    samples: &[TokenizedSample],
    subset: &[usize],
    classes: usize,
) -> Result<Vec<MaskRequest>> {
    let mut requests = Vec::new();
    let all: Vec<usize> = (0..classes).collect();
    for &i in subset {
        let s = &samples[i];
        let recorder = MaskRecorder {
            classes,
            masks: RefCell::new(Vec::new()),
        };
        run_explainer(config, &recorder, s, &all)?;
        requests.extend(
            recorder
                .masks
                .into_inner()
                .iter()
                .map(|m| MaskRequest::new(&s.id, m)),
        );
    }
    Ok(requests)
}

fn test_indices(samples: &[TokenizedSample]) -> Vec<usize> {
    (0..samples.len())
        .filter(|&i| samples[i].split == Some(Split::Test))
        .collect()
}

fn write_requests(run: &RunArtifact, kind: &str, requests: &[MaskRequest]) -> Result<()> {
    let path = run.requests(kind);
    create_dir(path.parent().expect("requests dir"))?;
    write_mask_requests(requests, &path)
}

/// Fails with a coverage error naming the first requested row the featurizer
/// lacks. Only imported features can lack rows.
fn check_coverage(
    featurizer: &dyn Featurizer,
    run: &RunArtifact,
    kind: &str,
    requests: &[MaskRequest],
) -> Result<()> {
    let missing: Vec<&MaskRequest> = requests
        .iter()
        .filter(|r| !featurizer.covers(&r.row_id))
        .collect();
    if let Some(first) = missing.first() {
        warn!(
            "{} of {} {kind} rows missing; see {}",
            missing.len(),
            requests.len(),
            run.requests(kind).display()
        );
        return Err(Error::Coverage {
            sample_id: first.sample_id.clone(),
            mask_hash: crate::featurize::mask_hash(&first.bits()?),
        });
    }
    Ok(())
}

/// Prepares the corpus, writes the mask request lists, fits or loads the
/// featurizer and writes the full-text feature matrices.
pub fn featurize_stage(ctx: &mut Context) -> Result<()> {
    let config = &ctx.config;
    let run = &ctx.run;
    create_dir(&run.dir)?;
    fs::write(run.config(), config.to_json()?).map_err(|e| Error::io(run.config(), e))?;
    let (samples, labels) = prepare_corpus(config)?;
    corpus::save_tokenized(&samples, &run.prepared())?;
    labels.save(&run.labels())?;

    let variants = variant_requests(&samples, &labels, config.m, config.seeds.negatives);
    write_requests(run, "variants", &variants)?;
    let subset = explanation_subset(&test_indices(&samples), config.subset, config.seeds.subset);
    let explain = explain_requests(config, &samples, &subset, labels.len())?;
    write_requests(run, "explain", &explain)?;

    let featurizer: Box<dyn Featurizer + Send> = match &config.featurizer {
        FeaturizerConfig::Tfidf { k } => {
            let docs: Vec<&[String]> = samples
                .iter()
                .filter(|s| s.split != Some(Split::Test))
                .map(|s| s.tokens.as_slice())
                .collect();
            let model = TfIdfModel::fit(&docs, *k, config.seeds.svd)?;
            model.save(&run.tfidf())?;
            Box::new(model)
        }
        FeaturizerConfig::Imported { files } => Box::new(ImportedFeatures::load(files)?),
    };
    check_coverage(featurizer.as_ref(), run, "variants", &variants)?;
    check_coverage(featurizer.as_ref(), run, "explain", &explain)?;
    let prepared = Prepared::from_parts(samples, labels, featurizer);

    let source = match &config.featurizer {
        FeaturizerConfig::Tfidf { k } => format!("tfidf k={k}"),
        FeaturizerConfig::Imported { .. } => "imported".to_string(),
    };
    for (name, indices) in [
        ("features_train.fmat", &prepared.train),
        ("features_test.fmat", &prepared.test),
    ] {
        let ids = indices
            .iter()
            .map(|&i| prepared.samples[i].id.clone())
            .collect();
        let fm = FeatureMatrix::new(prepared.features(indices)?, ids, source.clone())?;
        store_feature_matrix(&fm, &run.path(name))?;
    }
    info!(
        "prepared {} train / {} test samples, dimension {}",
        prepared.train.len(),
        prepared.test.len(),
        prepared.featurizer.dim()
    );
    ctx.prepared = Some(prepared);
    Ok(())
}

/// Selects the penalty, traces the frontier and stores one weights file per solve.
pub fn frontier_stage(ctx: &mut Context) -> Result<Vec<FrontierEntry>> {
    let config = ctx.config.clone();
    let run = ctx.run.clone();
    let prepared = ctx.prepared()?;
    let x = prepared.features(&prepared.train)?;
    let y = prepared.labels_of(&prepared.train);
    let nc = prepared.labels.len();
    let dim = prepared.featurizer.dim();
    let sets = build_variants(
        &prepared.rationale_train(),
        prepared.featurizer.as_ref(),
        config.m,
        config.seeds.negatives,
    )?;
    let variants = VariantBatch::from_sets(&sets, dim, config.m)?;
    info!(
        "{} training samples, {} variant sets of size {}",
        y.len(),
        sets.len(),
        config.m
    );

    let (c_reg, cv_scores) = match config.regularization.fixed {
        Some(c) => (c, Vec::new()),
        None => {
            let choice = select_regularization(
                &x,
                &y,
                nc,
                &config.regularization.grid,
                config.regularization.folds,
                config.seeds.cv,
                config.tol,
                config.max_iter,
            )?;
            (choice.c_reg, choice.scores)
        }
    };
    info!("C_reg = {c_reg}");
    let problem = TrainingProblem::new(
        x,
        y,
        nc,
        variants,
        1.0 / c_reg,
        TradeOff::CROSS_ENTROPY_ONLY,
    )?;

    let models_dir = run.path("models");
    create_dir(&models_dir)?;
    let mut solves: Vec<SolveRecord> = Vec::new();
    let mut solve = |w: TradeOff| -> Result<(f64, f64)> {
        let outcome = train(&problem.with_trade_off(w), config.tol, config.max_iter)?;
        if !outcome.converged {
            warn!(
                "solve at w1={} stopped after {} iterations, gradient norm {:.3e}",
                w.w1, outcome.iterations, outcome.grad_inf_norm
            );
        }
        let ce = cross_entropy(&outcome.weights, &problem.features, &problem.labels).value;
        let crl = contrastive_rationale_loss(&outcome.weights, &problem.variants).value;
        let penalty = l2_penalty(&outcome.weights, problem.l2_strength).value;
        let weights_file = format!("models/model_{:02}.json", solves.len());
        outcome.weights.save(&run.dir.join(&weights_file))?;
        solves.push(SolveRecord {
            w1: w.w1,
            w2: w.w2,
            train_ce: ce,
            train_crl: crl,
            penalty,
            weights_file,
            converged: outcome.converged,
            iterations: outcome.iterations,
        });
        // w1 + w2 = 1, so these objectives scalarize to exactly the trained loss
        Ok((ce + penalty, crl + penalty))
    };
    let frontier = if config.m == 1 || problem.variants.is_empty() {
        // the contrastive loss is identically zero: a single objective
        info!("contrastive loss is constant; solving the cross-entropy model only");
        let w = TradeOff::CROSS_ENTROPY_ONLY;
        let (f1, f2) = solve(w)?;
        let point = ObjectivePoint {
            f1,
            f2,
            w,
            solution_ref: 0,
        };
        Frontier {
            points: vec![point],
            evaluated: vec![point],
            solver_budget_used: 1,
            max_gap_bound: 0.0,
        }
    } else {
        nise(solve, config.budget, config.gap_tol)?
    };

    let entries: Vec<FrontierEntry> = frontier
        .points
        .iter()
        .map(|p| {
            let s = &solves[p.solution_ref];
            FrontierEntry {
                w1: p.w.w1,
                w2: p.w.w2,
                train_ce: s.train_ce,
                train_crl: s.train_crl,
                penalty: s.penalty,
                weights_file: s.weights_file.clone(),
                degenerate: p.is_degenerate(),
            }
        })
        .collect();
    write_json(&run.frontier(), &entries)?;
    let summary = NiseSummary {
        c_reg,
        cv_scores,
        solver_budget_used: frontier.solver_budget_used,
        max_gap_bound: frontier.max_gap_bound,
        certification: certify_frontier(&frontier.points),
        certification_all_solves: certify_frontier(&frontier.evaluated),
        solves,
    };
    if !summary.certification.is_clean() {
        warn!(
            "{} frontier points failed certification",
            summary.certification.violations.len()
        );
    }
    write_json(&run.nise(), &summary)?;
    Ok(entries)
}

/// A trained model restricted to one sample: class probabilities for token masks.
pub struct MaskedModel<'a> {
    pub weights: &'a ClassifierWeights,
    pub featurizer: &'a dyn Featurizer,
    pub sample: &'a TokenizedSample,
}

impl MaskedPredictor for MaskedModel<'_> {
    fn predict_masked(&self, mask: &[bool]) -> Result<Vec<f64>> {
        let x = self.featurizer.features(self.sample, mask)?;
        Ok(predict(self.weights, &x)?.probs)
    }
}

/// Records requested masks and answers with uniform probabilities.
struct MaskRecorder {
    classes: usize,
    masks: RefCell<Vec<Vec<bool>>>,
}

impl MaskedPredictor for MaskRecorder {
    fn predict_masked(&self, mask: &[bool]) -> Result<Vec<f64>> {
        self.masks.borrow_mut().push(mask.to_vec());
        Ok(vec![1.0 / self.classes as f64; self.classes])
    }
}

/// Test positions to explain: a seeded subset kept in test order, or the whole
/// test split when the subset is at least as large.
pub fn explanation_subset(test: &[usize], subset: Option<usize>, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    match subset {
        Some(n) if n < test.len() => {
            let mut rng = crate::seed::keyed_rng(seed, "explanation-subset");
            let mut positions: Vec<usize> = (0..test.len()).collect();
            positions.shuffle(&mut rng);
            positions.truncate(n);
            positions.sort_unstable();
            positions.into_iter().map(|p| test[p]).collect()
        }
        _ => test.to_vec(),
    }
}

/// A stored model that gets explained and scored.
#[derive(Clone, Debug)]
struct ScoredModel {
    model_index: usize,
    frontier_index: Option<usize>,
    weights_file: String,
    name: String,
    w1: f64,
    w2: f64,
    degenerate: bool,
}

/// Frontier models in frontier order (degenerate ones only on request),
/// preceded by the cross-entropy-only model when the filter dropped it.
fn models_to_score(config: &ExperimentConfig, run: &RunArtifact) -> Result<Vec<ScoredModel>> {
    let entries = run.load_frontier()?;
    let solves = run.load_nise()?.solves;
    let solve_of = |file: &str| {
        solves
            .iter()
            .position(|s| s.weights_file == file)
            .ok_or_else(|| {
                Error::Schema(format!(
                    "frontier model {file} is not among the recorded solves"
                ))
            })
    };
    let mut out = Vec::new();
    if !entries
        .iter()
        .any(|e| e.weights_file == solves[0].weights_file)
    {
        warn!("the cross-entropy-only model is dominated on the training objectives; scoring it as the baseline anyway");
        let s = &solves[0];
        out.push(ScoredModel {
            model_index: 0,
            frontier_index: None,
            weights_file: s.weights_file.clone(),
            name: model_name(&s.weights_file).to_string(),
            w1: s.w1,
            w2: s.w2,
            degenerate: s.w1 == 0.0,
        });
    }
    for (i, e) in entries.iter().enumerate() {
        if e.degenerate && !config.selection.include_degenerate {
            continue;
        }
        out.push(ScoredModel {
            model_index: solve_of(&e.weights_file)?,
            frontier_index: Some(i),
            weights_file: e.weights_file.clone(),
            name: e.model_name().to_string(),
            w1: e.w1,
            w2: e.w2,
            degenerate: e.degenerate,
        });
    }
    Ok(out)
}

fn model_name(weights_file: &str) -> &str {
    Path::new(weights_file)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(weights_file)
}

/// Classes explained for a sample: its gold class (for plausibility) and the
/// class faithfulness is measured at.
fn classes_to_explain(
    config: &ExperimentConfig,
    sample: &TokenizedSample,
    predicted: usize,
) -> Vec<usize> {
    let mut classes = vec![sample.label];
    if config.faithfulness_class == ClassChoice::Predicted && predicted != sample.label {
        classes.push(predicted);
    }
    classes
}

fn run_explainer<M: MaskedPredictor + ?Sized>(
    config: &ExperimentConfig,
    model: &M,
    sample: &TokenizedSample,
    classes: &[usize],
) -> Result<Vec<Explanation>> {
    let seed = config.seeds.explain;
    match config.explainer {
        ExplainerConfig::Lime { .. } => lime_explain_classes(
            model,
            &sample.id,
            sample.len(),
            classes,
            &config.perturbation_config(seed)?,
        ),
        ExplainerConfig::Shapley { permutations } => {
            let est = shapley_values(model, &sample.id, sample.len(), classes, permutations, seed)?;
            Ok(est
                .classes
                .iter()
                .zip(est.values)
                .map(|(&k, scores)| Explanation {
                    sample_id: sample.id.clone(),
                    class_index: k,
                    scores,
                })
                .collect())
        }
    }
}

fn predicted_class(
    weights: &ClassifierWeights,
    featurizer: &dyn Featurizer,
    sample: &TokenizedSample,
) -> Result<usize> {
    Ok(predict(weights, &featurizer.full_features(sample)?)?.argmax())
}

/// Explains the subset of test samples under every scored frontier model.
pub fn explain_stage(ctx: &mut Context) -> Result<()> {
    let config = ctx.config.clone();
    let run = ctx.run.clone();
    let models = models_to_score(&config, &run)?;
    let prepared = ctx.prepared()?;
    let subset = explanation_subset(&prepared.test, config.subset, config.seeds.subset);
    let ids: Vec<&str> = subset
        .iter()
        .map(|&i| prepared.samples[i].id.as_str())
        .collect();
    write_json(&run.subset(), &ids)?;
    let featurizer = prepared.featurizer.as_ref();

    let requests = explain_requests(&config, &prepared.samples, &subset, prepared.labels.len())?;
    write_requests(&run, "explain", &requests)?;
    check_coverage(featurizer, &run, "explain", &requests)?;

    create_dir(&run.path("explanations"))?;
    for entry in &models {
        let weights = run.load_weights(&entry.weights_file)?;
        let per_sample = subset
            .par_iter()
            .map(|&i| {
                let sample = &prepared.samples[i];
                let model = MaskedModel {
                    weights: &weights,
                    featurizer,
                    sample,
                };
                let predicted = predicted_class(&weights, featurizer, sample)?;
                run_explainer(
                    &config,
                    &model,
                    sample,
                    &classes_to_explain(&config, sample, predicted),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let flat: Vec<Explanation> = per_sample.into_iter().flatten().collect();
        explain::write_explanations(&flat, &run.explanations(&entry.name))?;
        info!("explained {} samples under {}", subset.len(), entry.name);
    }
    Ok(())
}

fn find_explanation<'a>(
    explanations: &'a [Explanation],
    sample: &TokenizedSample,
    class: usize,
    model: &str,
) -> Result<&'a [f64]> {
    explanations
        .iter()
        .find(|e| e.sample_id == sample.id && e.class_index == class)
        .map(|e| e.scores.as_slice())
        .ok_or_else(|| {
            Error::Schema(format!(
                "no explanation of `{}` for class {class} in {model}",
                sample.id
            ))
        })
}

/// (sample, class, scores) for the faithfulness evaluation of one model.
fn faithfulness_inputs<'a>(
    config: &ExperimentConfig,
    prepared: &'a Prepared,
    weights: &ClassifierWeights,
    explanations: &'a [Explanation],
    subset: &[usize],
    model: &str,
) -> Result<Vec<(&'a TokenizedSample, usize, &'a [f64])>> {
    subset
        .iter()
        .map(|&i| {
            let s = &prepared.samples[i];
            let class = match config.faithfulness_class {
                ClassChoice::Gold => s.label,
                ClassChoice::Predicted => {
                    predicted_class(weights, prepared.featurizer.as_ref(), s)?
                }
            };
            Ok((s, class, find_explanation(explanations, s, class, model)?))
        })
        .collect()
}

/// Scores every explained model on the test split.
pub fn evaluate_stage(ctx: &mut Context) -> Result<Vec<ModelMetrics>> {
    let config = ctx.config.clone();
    let run = ctx.run.clone();
    let models = models_to_score(&config, &run)?;
    let prepared = ctx.prepared()?;
    let featurizer = prepared.featurizer.as_ref();
    let x_test = prepared.features(&prepared.test)?;
    let y_test = prepared.labels_of(&prepared.test);
    let subset_ids: Vec<String> = read_json(&run.subset())?;
    let by_id: std::collections::HashMap<&str, usize> = prepared
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let subset: Vec<usize> = subset_ids
        .iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| {
                Error::Schema(format!(
                    "explained sample `{id}` is not in the prepared corpus"
                ))
            })
        })
        .collect::<Result<_>>()?;

    // every request list goes out before any coverage check, so an external
    // encoder can answer all models in one pass
    let mut missing = None;
    for entry in &models {
        let weights = run.load_weights(&entry.weights_file)?;
        let explanations = explain::read_explanations(&run.explanations(&entry.name))?;
        let inputs = faithfulness_inputs(
            &config,
            prepared,
            &weights,
            &explanations,
            &subset,
            &entry.name,
        )?;
        let mut requests = Vec::new();
        for (s, class, scores) in &inputs {
            let recorder = MaskRecorder {
                classes: prepared.labels.len(),
                masks: RefCell::new(Vec::new()),
            };
            faithfulness(&recorder, scores, *class, &config.bins)?;
            requests.extend(
                recorder
                    .masks
                    .into_inner()
                    .iter()
                    .map(|m| MaskRequest::new(&s.id, m)),
            );
        }
        let kind = format!("faithfulness_{}", entry.name);
        write_requests(&run, &kind, &requests)?;
        if missing.is_none() {
            missing = check_coverage(featurizer, &run, &kind, &requests).err();
        }
    }
    if let Some(e) = missing {
        return Err(e);
    }

    let mut out = Vec::new();
    for entry in &models {
        let weights = run.load_weights(&entry.weights_file)?;
        let cls = classification_report(&weights, &x_test, &y_test)?;
        let explanations = explain::read_explanations(&run.explanations(&entry.name))?;
        let mut auprc_values = Vec::new();
        for &i in &subset {
            let s = &prepared.samples[i];
            if prepared.labels.bears_rationale(s.label) && s.has_rationale() {
                let scores = find_explanation(&explanations, s, s.label, &entry.name)?;
                auprc_values.push(auprc(scores, &s.rationale)?);
            }
        }
        let faith_inputs = faithfulness_inputs(
            &config,
            prepared,
            &weights,
            &explanations,
            &subset,
            &entry.name,
        )?;
        let faith = faith_inputs
            .par_iter()
            .map(|(s, class, scores)| {
                let model = MaskedModel {
                    weights: &weights,
                    featurizer,
                    sample: s,
                };
                faithfulness(&model, scores, *class, &config.bins)
            })
            .collect::<Result<Vec<_>>>()?;

        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        if auprc_values.is_empty() {
            warn!("no explained sample carries a rationale; mean AUPRC reported as 0");
        }
        let suff: Vec<f64> = faith.iter().map(|f| f.sufficiency).collect();
        let comp: Vec<f64> = faith.iter().map(|f| f.comprehensiveness).collect();
        out.push(ModelMetrics {
            model_index: entry.model_index,
            frontier_index: entry.frontier_index,
            weights_file: entry.weights_file.clone(),
            w1: entry.w1,
            w2: entry.w2,
            degenerate: entry.degenerate,
            report: MetricReport {
                accuracy: cls.accuracy,
                per_class_recall: cls.per_class_recall,
                mean_auprc: mean(&auprc_values),
                auprc_count: auprc_values.len(),
                auprc_skipped: subset.len() - auprc_values.len(),
                sufficiency_aopc: mean(&suff),
                comprehensiveness_aopc: mean(&comp),
            },
            confusion: cls.confusion,
        });
    }
    write_json(&run.metrics(), &out)?;
    Ok(out)
}

pub fn select_stage(ctx: &mut Context) -> Result<Selection> {
    let run = &ctx.run;
    let selection = select_model(&run.load_metrics()?, &ctx.config.selection)?;
    if let Some(w) = &selection.warning {
        warn!("{w}");
    }
    write_json(&run.selection(), &selection)?;
    Ok(selection)
}

pub fn report_stage(ctx: &mut Context) -> Result<Summary> {
    let selection = ctx.run.load_selection()?;
    emit_report(&ctx.run, selection.baseline, selection.chosen)
}

/// Runs one named stage with its error tagged by stage name.
pub fn run_stage(ctx: &mut Context, stage: &'static str) -> Result<()> {
    let result = match stage {
        "featurize" => featurize_stage(ctx),
        "frontier" => frontier_stage(ctx).map(drop),
        "explain" => explain_stage(ctx),
        "evaluate" => evaluate_stage(ctx).map(drop),
        "select" => select_stage(ctx).map(drop),
        "report" => report_stage(ctx).map(drop),
        other => return Err(Error::Config(format!("unknown stage `{other}`"))),
    };
    result.map_err(|e| Error::stage(stage, e))
}

pub const STAGES: [&str; 6] = [
    "featurize",
    "frontier",
    "explain",
    "evaluate",
    "select",
    "report",
];

/// Runs every stage in order. The run directory carries an `INCOMPLETE`
/// marker until the last stage succeeds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact> {
    config.validate()?;
    let mut ctx = Context::new(config.clone());
    let run = ctx.run.clone();
    create_dir(&run.dir)?;
    let marker = run.incomplete_marker();
    fs::write(&marker, "running\n").map_err(|e| Error::io(&marker, e))?;
    for stage in STAGES {
        info!("stage {stage}");
        if let Err(e) = run_stage(&mut ctx, stage) {
            let _ = fs::write(&marker, format!("{e}\n"));
            return Err(e);
        }
    }
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(run)
}

/// Objective points (penalized losses) of a stored frontier, in file order.
pub fn frontier_points(entries: &[FrontierEntry]) -> Vec<ObjectivePoint> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| ObjectivePoint {
            f1: e.train_ce + e.penalty,
            f2: e.train_crl + e.penalty,
            w: TradeOff { w1: e.w1, w2: e.w2 },
            solution_ref: i,
        })
        .collect()
}
