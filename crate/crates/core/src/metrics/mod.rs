//! Prediction quality (accuracy, recall) and explanation quality: plausibility
//! as average precision against the human rationale, faithfulness as AOPC
//! comprehensiveness and sufficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::MaskedPredictor;
use crate::linalg::Matrix;
use crate::model::{predict, ClassifierWeights};

/// Fractions of top-ranked tokens used for AOPC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaithfulnessBins(Vec<f64>);

impl Default for FaithfulnessBins {
    fn default() -> Self {
        Self(vec![0.01, 0.05, 0.10, 0.20, 0.50])
    }
}

impl FaithfulnessBins {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::Config(
                "at least one faithfulness bin is required".into(),
            ));
        }
        if fractions.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return Err(Error::Config("faithfulness bins must lie in (0, 1]".into()));
        }
        if fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "faithfulness bins must be strictly increasing".into(),
            ));
        }
        Ok(Self(fractions))
    }

    pub fn fractions(&self) -> &[f64] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.0.clone()).map(|_| ())
    }
}

/// Number of tokens in the top `q` fraction of `p`: `ceil(q * p)`, at least one.
pub fn top_count(q: f64, p: usize) -> usize {
    // guard against 0.05 * 20 = 1.0000000000000002
    let raw = q * p as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (count as usize).clamp(1, p.max(1))
}

/// Token indices ordered by score descending; ties go to the lower index.
pub fn rank_tokens(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Average precision of the token ranking against a binary rationale.
pub fn auprc(scores: &[f64], rationale: &[bool]) -> Result<f64> {
    if scores.len() != rationale.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} rationale entries",
            scores.len(),
            rationale.len()
        )));
    }
    let positives = rationale.iter().filter(|&&b| b).count();
    if positives == 0 {
        return Err(Error::Shape("rationale has no positive tokens".into()));
    }
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &t) in rank_tokens(scores).iter().enumerate() {
        if rationale[t] {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(ap / positives as f64)
}

/// AOPC faithfulness of one explanation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Faithfulness {
    /// Mean of `-(p(x)_k - p(top tokens only)_k)`; higher is better.
    pub sufficiency: f64,
    /// Mean of `p(x)_k - p(x without top tokens)_k`; higher is better.
    pub comprehensiveness: f64,
}

pub fn faithfulness<M: MaskedPredictor + ?Sized>(
    model: &M,
    scores: &[f64],
    class: usize,
    bins: &FaithfulnessBins,
) -> Result<Faithfulness> {
    let p = scores.len();
    let prob = |mask: &[bool]| -> Result<f64> {
        let probs = model.predict_masked(mask)?;
        probs
            .get(class)
            .copied()
            .ok_or_else(|| Error::Shape(format!("class {class} out of range")))
    };
    let full = prob(&vec![true; p])?;
    let order = rank_tokens(scores);
    let (mut suff, mut comp) = (0.0, 0.0);
    for &q in bins.fractions() {
        let top = &order[..top_count(q, p).min(p)];
        let mut only = vec![false; p];
        let mut without = vec![true; p];
        for &t in top {
            only[t] = true;
            without[t] = false;
        }
        suff += -(full - prob(&only)?);
        comp += full - prob(&without)?;
    }
    let n = bins.fractions().len() as f64;
    Ok(Faithfulness {
        sufficiency: suff / n,
        comprehensiveness: comp / n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// Recall per class; a class with no test samples reports 0.
    pub per_class_recall: Vec<f64>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

pub fn classification_report(
    weights: &ClassifierWeights,
    features: &Matrix,
    labels: &[usize],
) -> Result<ClassificationReport> {
    if labels.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let predictions = features
        .iter_rows()
        .map(|x| predict(weights, x).map(|p| p.argmax()))
        .collect::<Result<Vec<_>>>()?;
    report_from_predictions(&predictions, labels, weights.num_classes())
}

pub fn report_from_predictions(
    predictions: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<ClassificationReport> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(
            "predictions and labels differ in length".into(),
        ));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&pred, &y) in predictions.iter().zip(labels) {
        confusion[y][pred] += 1;
    }
    let correct: usize = (0..num_classes).map(|k| confusion[k][k]).sum();
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let support: usize = row.iter().sum();
            if support == 0 {
                0.0
            } else {
                row[k] as f64 / support as f64
            }
        })
        .collect();
    Ok(ClassificationReport {
        accuracy: correct as f64 / labels.len() as f64,
        per_class_recall,
        confusion,
    })
}

/// Everything reported for one trained model on the test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub per_class_recall: Vec<f64>,
    pub mean_auprc: f64,
    pub auprc_count: usize,
    pub auprc_skipped: usize,
    pub sufficiency_aopc: f64,
    pub comprehensiveness_aopc: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auprc_hand_values() {
        assert_eq!(auprc(&[0.9, 0.1, 0.8], &[true, false, true]).unwrap(), 1.0);
        let v = auprc(&[0.1, 0.9, 0.2], &[true, false, true]).unwrap();
        assert!((v - (0.5 * 0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
        assert!((v - 0.583333).abs() < 1e-6);
        assert_eq!(auprc(&[0.5, 0.5], &[true, false]).unwrap(), 1.0);
    }

    #[test]
    fn auprc_errors() {
        assert!(matches!(
            auprc(&[0.1], &[true, false]),
            Err(Error::Shape(_))
        ));
        assert!(auprc(&[0.1, 0.2], &[false, false]).is_err());
    }

    #[test]
    fn top_count_rounding() {
        assert_eq!(top_count(0.05, 20), 1);
        assert_eq!(top_count(0.01, 30), 1);
        assert_eq!(top_count(0.1, 30), 3);
        assert_eq!(top_count(0.2, 7), 2);
        assert_eq!(top_count(0.5, 5), 3);
        assert_eq!(top_count(1.0, 4), 4);
    }

    #[test]
    fn constant_model_is_neutral() {
        let model = |_: &[bool]| vec![0.2, 0.8];
        let f = faithfulness(
            &model,
            &[0.3, 0.1, 0.9, 0.0],
            1,
            &FaithfulnessBins::default(),
        )
        .unwrap();
        assert_eq!(f.sufficiency, 0.0);
        assert_eq!(f.comprehensiveness, 0.0);
    }

    #[test]
    fn sufficiency_direct_substitution() {
        // p(x) = 0.9 with every token, 0.85 with only the top token.
        let model = |m: &[bool]| {
            let p = if m.iter().all(|&b| b) {
                0.9
            } else if m[0] && !m[1] {
                0.85
            } else {
                0.5
            };
            vec![1.0 - p, p]
        };
        let bins = FaithfulnessBins::new(vec![0.5]).unwrap();
        let f = faithfulness(&model, &[1.0, 0.0], 1, &bins).unwrap();
        assert!((f.sufficiency - (-0.05)).abs() < 1e-12);
        assert!((f.comprehensiveness - 0.4).abs() < 1e-12);
    }

    #[test]
    fn bins_validation() {
        assert!(FaithfulnessBins::new(vec![0.1, 0.1]).is_err());
        assert!(FaithfulnessBins::new(vec![0.0, 0.5]).is_err());
        assert!(FaithfulnessBins::new(vec![0.5, 1.0]).is_ok());
    }

    #[test]
    fn report_cases() {
        let r = report_from_predictions(&[0, 1, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_class_recall, vec![1.0, 1.0]);
        let r = report_from_predictions(&[0, 0, 0, 0], &[0, 1, 0, 1], 2).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.per_class_recall, vec![1.0, 0.0]);
    }
}
