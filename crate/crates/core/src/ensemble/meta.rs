//! Two-head meta-learner over the eight probability features.
//!
//! One booster is fit with Hate as the positive class and one with Neutral,
//! using the same configuration and seed. The predicted label is the class
//! whose head gives the higher probability; ties go to Neutral. The heads are
//! independent, so their scores need not sum to one.

use serde::{Deserialize, Serialize};

use super::gbdt::{gbdt_fit, Booster, MetaLearnerConfig, TreeNode};
use super::{feature_names, ProbabilityVector, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::types::BinaryLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelDocument", try_from = "ModelDocument")]
pub struct MetaLearnerModel {
    pub config: MetaLearnerConfig,
    pub feature_order: Vec<String>,
    pub hate_head: Booster,
    pub neutral_head: Booster,
}

/// Persisted layout: `{config, feature_order, base_scores, trees}` with
/// heads in (hate, neutral) order.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDocument {
    config: MetaLearnerConfig,
    feature_order: Vec<String>,
    base_scores: [f64; 2],
    trees: [Vec<TreeNode>; 2],
}

impl From<MetaLearnerModel> for ModelDocument {
    fn from(m: MetaLearnerModel) -> Self {
        Self {
            config: m.config,
            feature_order: m.feature_order,
            base_scores: [m.hate_head.base_score, m.neutral_head.base_score],
            trees: [m.hate_head.trees, m.neutral_head.trees],
        }
    }
}

impl TryFrom<ModelDocument> for MetaLearnerModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        doc.config.validate()?;
        if doc.feature_order.len() != NUM_FEATURES {
            return Err(Error::InvalidInput(format!(
                "model declares {} features, expected {NUM_FEATURES}",
                doc.feature_order.len()
            )));
        }
        let [hate_trees, neutral_trees] = doc.trees;
        let ok = |trees: &[TreeNode]| {
            trees
                .iter()
                .all(|t| t.is_valid(NUM_FEATURES) && t.num_leaves() <= doc.config.num_leaves)
        };
        if !ok(&hate_trees) || !ok(&neutral_trees) || !doc.base_scores.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidInput("model contains an invalid tree".into()));
        }
        Ok(Self {
            config: doc.config,
            feature_order: doc.feature_order,
            hate_head: Booster {
                base_score: doc.base_scores[0],
                trees: hate_trees,
            },
            neutral_head: Booster {
                base_score: doc.base_scores[1],
                trees: neutral_trees,
            },
        })
    }
}

impl MetaLearnerModel {
    /// Heads with no trees and equal zero base scores.
    pub fn untrained(config: MetaLearnerConfig, feature_order: Vec<String>) -> Self {
        Self {
            config,
            feature_order,
            hate_head: Booster::constant(0.0),
            neutral_head: Booster::constant(0.0),
        }
    }

    /// Model ids in slot order, recovered from the feature names.
    pub fn model_ids(&self) -> Vec<&str> {
        self.feature_order
            .iter()
            .step_by(2)
            .map(|f| f.strip_suffix(".hate").unwrap_or(f))
            .collect()
    }

    /// Error unless `pv` carries the models this model was trained on.
    pub fn check_compatible(&self, pv: &ProbabilityVector) -> Result<()> {
        if pv.model_ids() != self.model_ids() {
            return Err(Error::InvalidInput(format!(
                "vector models {:?} differ from meta-learner models {:?}",
                pv.model_ids(),
                self.model_ids()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaPrediction {
    pub label: BinaryLabel,
    pub score_hate: f64,
    pub score_neutral: f64,
}

/// Fit both heads on raw feature rows.
pub fn train_meta_features(
    features: &[[f64; NUM_FEATURES]],
    golds: &[BinaryLabel],
    config: &MetaLearnerConfig,
    feature_order: Vec<String>,
) -> Result<MetaLearnerModel> {
    if features.len() != golds.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.len(),
            golds.len()
        )));
    }
    if feature_order.len() != NUM_FEATURES {
        return Err(Error::InvalidInput("feature_order must name 8 features".into()));
    }
    let hate = golds.iter().filter(|g| g.is_hate()).count();
    if features.len() < 2 || hate == 0 || hate == golds.len() {
        return Err(Error::SingleClass(format!(
            "{} rows, {hate} Hate, {} Neutral",
            golds.len(),
            golds.len() - hate
        )));
    }
    let y_hate: Vec<u8> = golds.iter().map(|g| g.as_target()).collect();
    let y_neutral: Vec<u8> = y_hate.iter().map(|y| 1 - y).collect();
    Ok(MetaLearnerModel {
        config: config.clone(),
        feature_order,
        hate_head: gbdt_fit(features, &y_hate, config)?,
        neutral_head: gbdt_fit(features, &y_neutral, config)?,
    })
}

/// Fit both heads on probability vectors. All vectors must share models.
pub fn train_meta(
    vectors: &[ProbabilityVector],
    golds: &[BinaryLabel],
    config: &MetaLearnerConfig,
) -> Result<MetaLearnerModel> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::SingleClass("no training rows".into()))?;
    let ids = first.model_ids();
    if let Some(bad) = vectors.iter().find(|v| v.model_ids() != ids) {
        return Err(Error::InvalidInput(format!(
            "mixed model sets in training data: {:?} vs {:?}",
            ids,
            bad.model_ids()
        )));
    }
    let features: Vec<[f64; NUM_FEATURES]> = vectors.iter().map(|v| v.features()).collect();
    train_meta_features(&features, golds, config, feature_names(&ids))
}

pub fn predict_features(model: &MetaLearnerModel, x: &[f64; NUM_FEATURES]) -> MetaPrediction {
    let score_hate = model.hate_head.predict_proba(x);
    let score_neutral = model.neutral_head.predict_proba(x);
    MetaPrediction {
        label: if score_hate > score_neutral {
            BinaryLabel::Hate
        } else {
            BinaryLabel::Neutral
        },
        score_hate,
        score_neutral,
    }
}

pub fn predict_meta(model: &MetaLearnerModel, pv: &ProbabilityVector) -> MetaPrediction {
    predict_features(model, &pv.features())
}
