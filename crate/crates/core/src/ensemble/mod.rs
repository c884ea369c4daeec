//! Ensemble label aggregation over four annotator models.
//!
//! Three strategies turn a [`ProbabilityVector`] into a [`BinaryLabel`]:
//! majority voting ([`vote_label`]), mean averaging ([`mean_label`]) and a
//! boosted-tree meta-learner ([`meta::predict_meta`]). Every tie resolves to
//! Neutral.

pub mod gbdt;
pub mod meta;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ExactSum;
use crate::par;
use crate::types::BinaryLabel;

pub use gbdt::{gbdt_fit, gbdt_predict_raw, logistic_gradients, Booster, MetaLearnerConfig, TreeNode};
pub use meta::{predict_meta, train_meta, MetaLearnerModel, MetaPrediction};

pub const NUM_MODELS: usize = 4;
pub const NUM_FEATURES: usize = 2 * NUM_MODELS;

/// Tolerance on `p_hate + p_neutral = 1`.
pub const PAIR_SUM_TOLERANCE: f64 = 1e-9;

/// A single model's two-class distribution for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProbability {
    pub model_id: String,
    pub p_hate: f64,
    pub p_neutral: f64,
}

impl ModelProbability {
    pub fn new(model_id: impl Into<String>, p_hate: f64, p_neutral: f64) -> Result<Self> {
        let mp = Self {
            model_id: model_id.into(),
            p_hate,
            p_neutral,
        };
        mp.validate()?;
        Ok(mp)
    }

    /// Build from p_hate alone, with `p_neutral = 1 - p_hate`.
    pub fn complementary(model_id: impl Into<String>, p_hate: f64) -> Result<Self> {
        Self::new(model_id, p_hate, 1.0 - p_hate)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.p_hate) || !in_unit(self.p_neutral) {
            return Err(Error::InvalidInput(format!(
                "model {}: probabilities ({}, {}) outside [0,1]",
                self.model_id, self.p_hate, self.p_neutral
            )));
        }
        if (self.p_hate + self.p_neutral - 1.0).abs() > PAIR_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "model {}: p_hate + p_neutral = {} != 1",
                self.model_id,
                self.p_hate + self.p_neutral
            )));
        }
        Ok(())
    }

    /// Strict per-model vote: Hate iff `p_hate > 0.5`.
    pub fn votes_hate(&self) -> bool {
        self.p_hate > 0.5
    }
}

/// The eight-dimensional per-text feature: one (Hate, Neutral) pair for each
/// of four models, slots ordered lexicographically by model id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModelProbability>", into = "Vec<ModelProbability>")]
pub struct ProbabilityVector {
    entries: [ModelProbability; NUM_MODELS],
}

impl ProbabilityVector {
    /// Entries may arrive in any order; they are sorted by model id.
    pub fn new(mut entries: Vec<ModelProbability>) -> Result<Self> {
        if entries.len() != NUM_MODELS {
            return Err(Error::InvalidInput(format!(
                "probability vector needs {NUM_MODELS} models, got {}",
                entries.len()
            )));
        }
        for e in &entries {
            e.validate()?;
        }
        entries.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        if entries.windows(2).any(|w| w[0].model_id == w[1].model_id) {
            return Err(Error::InvalidInput("duplicate model id in probability vector".into()));
        }
        let entries: [ModelProbability; NUM_MODELS] = entries.try_into().expect("length checked");
        Ok(Self { entries })
    }

    /// Convenience constructor for complementary pairs.
    pub fn from_hate_probs(model_ids: &[&str; NUM_MODELS], p_hate: [f64; NUM_MODELS]) -> Result<Self> {
        let entries = model_ids
            .iter()
            .zip(p_hate)
            .map(|(id, p)| ModelProbability::complementary(*id, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[ModelProbability; NUM_MODELS] {
        &self.entries
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.model_id.as_str()).collect()
    }

    pub fn p_hate(&self) -> [f64; NUM_MODELS] {
        std::array::from_fn(|i| self.entries[i].p_hate)
    }

    /// `[m0.hate, m0.neutral, m1.hate, ...]` in slot order.
    pub fn features(&self) -> [f64; NUM_FEATURES] {
        std::array::from_fn(|i| {
            let e = &self.entries[i / 2];
            if i % 2 == 0 {
                e.p_hate
            } else {
                e.p_neutral
            }
        })
    }

    pub fn hate_votes(&self) -> usize {
        self.entries.iter().filter(|e| e.votes_hate()).count()
    }
}

impl TryFrom<Vec<ModelProbability>> for ProbabilityVector {
    type Error = Error;

    fn try_from(v: Vec<ModelProbability>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<ModelProbability> {
    fn from(pv: ProbabilityVector) -> Self {
        pv.entries.into()
    }
}

/// Feature names matching [`ProbabilityVector::features`].
pub fn feature_names<S: AsRef<str>>(model_ids: &[S]) -> Vec<String> {
    model_ids
        .iter()
        .flat_map(|m| {
            let m = m.as_ref();
            [format!("{m}.hate"), format!("{m}.neutral")]
        })
        .collect()
}

/// Hate iff at least two of the four models individually assign
/// `p_hate > 0.5`.
pub fn vote_label(pv: &ProbabilityVector) -> BinaryLabel {
    if pv.hate_votes() >= 2 {
        BinaryLabel::Hate
    } else {
        BinaryLabel::Neutral
    }
}

/// The class with the strictly higher mean probability; ties go to Neutral.
///
/// The comparison is exact: the sign of `Σ p_hate − Σ p_neutral` is taken
/// from an exact accumulator, so rounding never decides a near-tie.
pub fn mean_label(pv: &ProbabilityVector) -> BinaryLabel {
    let mut diff = ExactSum::new();
    for e in pv.entries() {
        diff.add(e.p_hate);
        diff.add(-e.p_neutral);
    }
    if diff.value() > 0.0 {
        BinaryLabel::Hate
    } else {
        BinaryLabel::Neutral
    }
}

pub fn mean_p_hate(pv: &ProbabilityVector) -> f64 {
    pv.entries.iter().map(|e| e.p_hate).collect::<ExactSum>().value() / NUM_MODELS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Vote,
    Mean,
    Lgb,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Vote, Strategy::Mean, Strategy::Lgb];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Vote => "vote",
            Strategy::Mean => "mean",
            Strategy::Lgb => "lgb",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vote" => Ok(Strategy::Vote),
            "mean" => Ok(Strategy::Mean),
            "lgb" => Ok(Strategy::Lgb),
            other => Err(Error::Config(format!("unknown strategy {other:?} (vote|mean|lgb)"))),
        }
    }
}

/// Label plus the scores behind it.
///
/// `score_hate` is the vote share for `Vote`, the mean `p_hate` for `Mean`
/// and the Hate head's probability for `Lgb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDecision {
    pub label: BinaryLabel,
    pub score_hate: f64,
    pub score_neutral: f64,
}

/// A configured strategy, ready to label vectors.
#[derive(Debug, Clone)]
pub enum Ensemble {
    Vote,
    Mean,
    Lgb(Box<MetaLearnerModel>),
}

impl Ensemble {
    pub fn new(strategy: Strategy, model: Option<MetaLearnerModel>) -> Result<Self> {
        Ok(match strategy {
            Strategy::Vote => Ensemble::Vote,
            Strategy::Mean => Ensemble::Mean,
            Strategy::Lgb => Ensemble::Lgb(Box::new(
                model.ok_or_else(|| Error::Config("strategy lgb requires a meta-learner model".into()))?,
            )),
        })
    }

    pub fn strategy(&self) -> Strategy {
        match self {
            Ensemble::Vote => Strategy::Vote,
            Ensemble::Mean => Strategy::Mean,
            Ensemble::Lgb(_) => Strategy::Lgb,
        }
    }

    pub fn decide(&self, pv: &ProbabilityVector) -> EnsembleDecision {
        match self {
            Ensemble::Vote => {
                let share = pv.hate_votes() as f64 / NUM_MODELS as f64;
                EnsembleDecision {
                    label: vote_label(pv),
                    score_hate: share,
                    score_neutral: 1.0 - share,
                }
            }
            Ensemble::Mean => {
                let m = mean_p_hate(pv);
                let n = pv.entries.iter().map(|e| e.p_neutral).collect::<ExactSum>().value() / NUM_MODELS as f64;
                EnsembleDecision {
                    label: mean_label(pv),
                    score_hate: m,
                    score_neutral: n,
                }
            }
            Ensemble::Lgb(model) => {
                let p = predict_meta(model, pv);
                EnsembleDecision {
                    label: p.label,
                    score_hate: p.score_hate,
                    score_neutral: p.score_neutral,
                }
            }
        }
    }

    /// Label a batch in parallel, preserving order.
    pub fn decide_batch(&self, vectors: &[ProbabilityVector]) -> Vec<EnsembleDecision> {
        par::map(vectors, |pv| self.decide(pv))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::{
        feature_names, mean_label, vote_label, BinaryLabel, Ensemble, ModelProbability, ProbabilityVector,
    };
    use proptest::prelude::*;

    pub const IDS: [&str; 4] = ["gemma", "llama", "mistral", "qwen"];

    pub fn pv(p: [f64; 4]) -> ProbabilityVector {
        ProbabilityVector::from_hate_probs(&IDS, p).unwrap()
    }

    #[test]
    fn vote_examples() {
        assert_eq!(vote_label(&pv([0.9; 4])), BinaryLabel::Hate);
        assert_eq!(vote_label(&pv([0.6, 0.7, 0.4, 0.2])), BinaryLabel::Hate);
        assert_eq!(vote_label(&pv([0.5; 4])), BinaryLabel::Neutral);
        assert_eq!(vote_label(&pv([0.6, 0.4, 0.4, 0.2])), BinaryLabel::Neutral);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_label(&pv([0.2; 4])), BinaryLabel::Neutral);
        assert_eq!(mean_label(&pv([0.9, 0.9, 0.1, 0.5])), BinaryLabel::Hate);
        assert_eq!(mean_label(&pv([0.5; 4])), BinaryLabel::Neutral);
    }

    #[test]
    fn vector_validation() {
        assert!(ProbabilityVector::from_hate_probs(&["a", "a", "b", "c"], [0.1; 4]).is_err());
        assert!(ModelProbability::new("m", 0.7, 0.7).is_err());
        assert!(ModelProbability::new("m", -0.1, 1.1).is_err());
        let v = ProbabilityVector::new(vec![
            ModelProbability::complementary("z", 0.1).unwrap(),
            ModelProbability::complementary("a", 0.2).unwrap(),
            ModelProbability::complementary("m", 0.3).unwrap(),
            ModelProbability::complementary("b", 0.4).unwrap(),
        ])
        .unwrap();
        assert_eq!(v.model_ids(), ["a", "b", "m", "z"]);
        assert_eq!(v.features()[0], 0.2);
        assert_eq!(v.features()[7], 0.9);
        assert_eq!(
            feature_names(&["a", "b"]),
            ["a.hate", "a.neutral", "b.hate", "b.neutral"]
        );
    }

    #[test]
    fn serde_roundtrip_sorts() {
        let v = pv([0.1, 0.2, 0.3, 0.4]);
        let s = serde_json::to_string(&v).unwrap();
        let back: ProbabilityVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<ProbabilityVector>("[]").is_err());
    }

    #[test]
    fn lgb_requires_model() {
        assert!(Ensemble::new(super::Strategy::Lgb, None).is_err());
        assert_eq!("MEAN".parse::<super::Strategy>().unwrap(), super::Strategy::Mean);
    }

    fn probs() -> impl proptest::strategy::Strategy<Value = [f64; 4]> {
        prop::array::uniform4(prop_oneof![0.0f64..=1.0, Just(0.5), Just(0.0), Just(1.0)])
    }

    proptest! {
        #[test]
        fn permutation_invariant(p in probs(), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            let q: [f64; 4] = std::array::from_fn(|i| p[perm[i]]);
            prop_assert_eq!(vote_label(&pv(p)), vote_label(&pv(q)));
            prop_assert_eq!(mean_label(&pv(p)), mean_label(&pv(q)));
        }

        #[test]
        fn monotone_in_each_slot(p in probs(), slot in 0usize..4, bump in 0.0f64..=1.0) {
            let mut q = p;
            q[slot] = p[slot] + (1.0 - p[slot]) * bump;
            for f in [vote_label, mean_label] {
                if f(&pv(p)) == BinaryLabel::Hate {
                    prop_assert_eq!(f(&pv(q)), BinaryLabel::Hate);
                }
            }
        }

        #[test]
        fn mean_matches_half_rule(p in prop::array::uniform4(0.0f64..=1.0)) {
            // 1 - p is exact for p in [0.5, 1]; restrict to dyadic values so the
            // complementary pairs are exact everywhere.
            let p = p.map(|x| (x * 1024.0).round() / 1024.0);
            let v = pv(p);
            let hate = p.iter().sum::<f64>() / 4.0 > 0.5;
            prop_assert_eq!(mean_label(&v) == BinaryLabel::Hate, hate);
        }
    }
}
