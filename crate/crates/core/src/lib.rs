//! Train text classifiers on a weighted sum of cross-entropy and a contrastive
//! rationale loss, trace the trade-off frontier between the two with NISE, and
//! score saliency explanations for plausibility and faithfulness.
//!
//! The modules follow the data flow:
//!
//! - [`corpus`]: rationale-annotated documents, consensus, filtering, splits
//! - [`eraser`]: importer for ERASER-layout corpora such as Movie Reviews
//! - [`featurize`]: TF-IDF + truncated SVD or imported encoder features, rationale variants
//! - [`model`]: multinomial logistic regression, both losses, L-BFGS training
//! - [`moo`]: dominance, Pareto filtering, NISE frontier tracing
//! - [`explain`]: perturbation surrogate and Shapley saliency
//! - [`metrics`]: accuracy, AUPRC plausibility, AOPC faithfulness
//! - [`pipeline`]: end-to-end experiment runs and reports
//! - [`synthetic`]: planted-rationale corpora for testing

pub mod corpus;
pub mod eraser;
pub mod error;
pub mod explain;
pub mod featurize;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod moo;
pub mod pipeline;
pub mod synthetic;

mod seed;

pub use error::{Error, Result};
