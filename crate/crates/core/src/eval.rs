//! Accuracy and macro-F1, per dataset and pooled per dataset group.
//!
//! Group scores are computed once over the concatenated predictions of the
//! member datasets. Predictions may be hard-thresholded at a fixed value or at
//! the mean predicted Hate probability of the evaluation unit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Registry, SEVEN_SET};
use crate::numeric::ExactSum;
use crate::par;
use crate::types::{BinaryLabel, Language};

/// Hate is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts with Neutral as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn record(&mut self, pred: BinaryLabel, gold: BinaryLabel) {
        match (pred, gold) {
            (BinaryLabel::Hate, BinaryLabel::Hate) => self.tp += 1,
            (BinaryLabel::Hate, BinaryLabel::Neutral) => self.fp += 1,
            (BinaryLabel::Neutral, BinaryLabel::Hate) => self.fn_ += 1,
            (BinaryLabel::Neutral, BinaryLabel::Neutral) => self.tn += 1,
        }
    }

    fn of(pairs: impl IntoIterator<Item = (BinaryLabel, BinaryLabel)>) -> Self {
        let mut c = Self::default();
        for (p, g) in pairs {
            c.record(p, g);
        }
        c
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.tn += rhs.tn;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

pub fn confusion(preds: &[BinaryLabel], golds: &[BinaryLabel]) -> Result<ConfusionCounts> {
    if preds.len() != golds.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty prediction list".into()));
    }
    Ok(ConfusionCounts::of(preds.iter().copied().zip(golds.iter().copied())))
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if tp == 0 || denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Unweighted mean of the Hate and Neutral F1 scores.
pub fn macro_f1(c: &ConfusionCounts) -> f64 {
    (f1(c.tp, c.fp, c.fn_) + f1(c.tn, c.fn_, c.fp)) / 2.0
}

pub fn accuracy(c: &ConfusionCounts) -> f64 {
    match c.total() {
        0 => 0.0,
        n => (c.tp + c.tn) as f64 / n as f64,
    }
}

pub fn mean_probability_threshold(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("mean threshold over an empty score list".into()));
    }
    Ok(MeanCut::new(scores)?.threshold())
}

/// Exact `score >= mean(scores)` decisions.
///
/// Comparing against the rounded mean can misplace scores within an ulp of
/// it; here the sign of `sum - n * score` is evaluated without rounding.
#[derive(Debug, Clone)]
pub struct MeanCut {
    sum: ExactSum,
    n: f64,
    mean: f64,
}

impl MeanCut {
    pub fn new(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidInput("mean threshold over an empty score list".into()));
        }
        let sum: ExactSum = scores.iter().copied().collect();
        let n = scores.len() as f64;
        let (lo, hi) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        let mean = (sum.value() / n).clamp(lo, hi);
        Ok(Self { sum, n, mean })
    }

    /// The mean, rounded and clamped into `[min, max]` of the scores.
    pub fn threshold(&self) -> f64 {
        self.mean
    }

    pub fn is_hate(&self, score: f64) -> bool {
        let p = self.n * score;
        let e = self.n.mul_add(score, -p);
        let mut d = self.sum.clone();
        d.add(-p);
        d.add(-e);
        d.value() <= 0.0
    }

    pub fn label(&self, score: f64) -> BinaryLabel {
        if self.is_hate(score) {
            BinaryLabel::Hate
        } else {
            BinaryLabel::Neutral
        }
    }
}

/// `apply_threshold` at the exact mean of `scores`.
pub fn apply_mean_threshold(scores: &[f64]) -> Result<Vec<BinaryLabel>> {
    let cut = MeanCut::new(scores)?;
    Ok(scores.iter().map(|&s| cut.label(s)).collect())
}

/// Hate iff `score >= threshold`.
pub fn apply_threshold(scores: &[f64], threshold: f64) -> Vec<BinaryLabel> {
    scores
        .iter()
        .map(|&s| {
            if s >= threshold {
                BinaryLabel::Hate
            } else {
                BinaryLabel::Neutral
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub members: BTreeSet<String>,
}

impl GroupSpec {
    pub fn new<S: AsRef<str>>(name: &str, members: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.to_string(),
            members: members.into_iter().map(|m| m.as_ref().to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("group name must not be empty".into()));
        }
        if self.members.is_empty() {
            return Err(Error::Config(format!("group {} has no members", self.name)));
        }
        Ok(())
    }
}

/// EN, DE, VI, ES by language, then 7-Set, Rest and All.
pub fn default_groups(registry: &Registry) -> Vec<GroupSpec> {
    let by_lang = |lang: Language| registry.datasets().iter().filter(move |d| d.language == lang).map(|d| d.name.as_str());
    let all: BTreeSet<&str> = registry.datasets().iter().map(|d| d.name.as_str()).collect();
    let seven: BTreeSet<&str> = SEVEN_SET.into_iter().collect();
    vec![
        GroupSpec::new("EN", by_lang(Language::Eng)),
        GroupSpec::new("DE", by_lang(Language::Deu)),
        GroupSpec::new("VI", by_lang(Language::Vie)),
        GroupSpec::new("ES", by_lang(Language::Spa)),
        GroupSpec::new("7-Set", seven.iter()),
        GroupSpec::new("Rest", all.difference(&seven)),
        GroupSpec::new("All", all.iter()),
    ]
}

pub fn validate_groups(groups: &[GroupSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for g in groups {
        g.validate()?;
        if !seen.insert(g.name.as_str()) {
            return Err(Error::Config(format!("duplicate group {}", g.name)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "lowercase")]
pub enum ThresholdRule {
    Fixed(f64),
    #[default]
    Mean,
}

impl FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("mean") {
            return Ok(Self::Mean);
        }
        let v = s
            .strip_prefix("fixed:")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Config(format!("threshold must be `mean` or `fixed:<v>`, got {s:?}")))?;
        Ok(Self::Fixed(v))
    }
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(v) => write!(f, "fixed:{v}"),
            Self::Mean => f.write_str("mean"),
        }
    }
}

/// Unit over which a mean threshold is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdScope {
    #[default]
    Group,
    Dataset,
    Global,
}

impl FromStr for ThresholdScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "group" => Ok(Self::Group),
            "dataset" => Ok(Self::Dataset),
            "global" => Ok(Self::Global),
            _ => Err(Error::Config(format!("unknown threshold scope {s:?}"))),
        }
    }
}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub dataset: String,
    pub score_hate: f64,
    pub gold: BinaryLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPrediction {
    pub dataset: String,
    pub pred: BinaryLabel,
    pub gold: BinaryLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub n: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionCounts,
    /// Threshold applied to this unit's scores, when thresholding was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Scores {
    pub fn from_confusion(confusion: ConfusionCounts) -> Self {
        Self {
            n: confusion.total(),
            accuracy: accuracy(&confusion),
            macro_f1: macro_f1(&confusion),
            confusion,
            threshold: None,
        }
    }
}

fn check_known(datasets: impl IntoIterator<Item = impl AsRef<str>>, groups: &[GroupSpec]) -> Result<()> {
    for d in datasets {
        let d = d.as_ref();
        if !groups.iter().any(|g| g.members.contains(d)) {
            return Err(Error::UnknownDataset(d.to_string()));
        }
    }
    Ok(())
}

fn group_from_datasets(
    groups: &[GroupSpec],
    per_dataset: &BTreeMap<String, ConfusionCounts>,
) -> BTreeMap<String, ConfusionCounts> {
    let mut out = BTreeMap::new();
    for g in groups {
        let members: Vec<_> = g.members.iter().filter_map(|m| per_dataset.get(m)).collect();
        if members.is_empty() {
            tracing::warn!(group = %g.name, "no predictions for group; omitted");
            continue;
        }
        out.insert(g.name.clone(), members.into_iter().copied().sum());
    }
    out
}

/// Score each group once over the pooled predictions of its members.
/// Groups without predictions are omitted with a warning.
pub fn pooled_group_scores(
    predictions: &[LabeledPrediction],
    groups: &[GroupSpec],
) -> Result<BTreeMap<String, Scores>> {
    check_known(predictions.iter().map(|p| &p.dataset), groups)?;
    let mut per_dataset: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    for p in predictions {
        per_dataset.entry(p.dataset.clone()).or_default().record(p.pred, p.gold);
    }
    Ok(group_from_datasets(groups, &per_dataset)
        .into_iter()
        .map(|(k, c)| (k, Scores::from_confusion(c)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInfo {
    #[serde(flatten)]
    pub rule: ThresholdRule,
    pub scope: ThresholdScope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreDelta {
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub per_dataset: BTreeMap<String, ScoreDelta>,
    pub per_group: BTreeMap<String, ScoreDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub threshold: ThresholdInfo,
    /// The single threshold used everywhere, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_used: Option<f64>,
    pub per_dataset: BTreeMap<String, Scores>,
    pub per_group: BTreeMap<String, Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_deltas: Option<Deltas>,
}

#[derive(Debug, Clone)]
enum Cut {
    Fixed(f64),
    Mean(MeanCut),
}

impl Cut {
    fn new(rule: ThresholdRule, scores: &[f64]) -> Result<Self> {
        Ok(match rule {
            ThresholdRule::Fixed(v) => Cut::Fixed(v),
            ThresholdRule::Mean => Cut::Mean(MeanCut::new(scores)?),
        })
    }

    fn threshold(&self) -> f64 {
        match self {
            Cut::Fixed(v) => *v,
            Cut::Mean(m) => m.threshold(),
        }
    }

    fn label(&self, score: f64) -> BinaryLabel {
        match self {
            Cut::Fixed(v) if score >= *v => BinaryLabel::Hate,
            Cut::Fixed(_) => BinaryLabel::Neutral,
            Cut::Mean(m) => m.label(score),
        }
    }

    fn scores(&self, preds: &[&Prediction]) -> Scores {
        let mut s = Scores::from_confusion(ConfusionCounts::of(preds.iter().map(|p| (self.label(p.score_hate), p.gold))));
        s.threshold = Some(self.threshold());
        s
    }
}

/// Threshold and score a predictions file.
///
/// Per-dataset rows use the dataset's own mean under `Group` and `Dataset`
/// scope. Under `Group` scope each group is re-thresholded at its pooled
/// mean; under `Dataset` scope group rows pool the per-dataset decisions.
pub fn evaluate(
    predictions: &[Prediction],
    groups: &[GroupSpec],
    rule: ThresholdRule,
    scope: ThresholdScope,
) -> Result<EvaluationReport> {
    validate_groups(groups)?;
    if predictions.is_empty() {
        return Err(Error::InvalidInput("no predictions to evaluate".into()));
    }
    if let Some(p) = predictions.iter().find(|p| !p.score_hate.is_finite()) {
        return Err(Error::InvalidInput(format!("prediction {} has a non-finite score", p.id)));
    }
    check_known(predictions.iter().map(|p| &p.dataset), groups)?;

    let mut by_dataset: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
    for p in predictions {
        by_dataset.entry(p.dataset.as_str()).or_default().push(p);
    }
    let scores_of = |ps: &[&Prediction]| ps.iter().map(|p| p.score_hate).collect::<Vec<_>>();
    let global = match (rule, scope) {
        (ThresholdRule::Fixed(_), _) | (ThresholdRule::Mean, ThresholdScope::Global) => Some(Cut::new(
            rule,
            &predictions.iter().map(|p| p.score_hate).collect::<Vec<_>>(),
        )?),
        _ => None,
    };

    let datasets: Vec<(&str, &Vec<&Prediction>)> = by_dataset.iter().map(|(k, v)| (*k, v)).collect();
    let per_dataset_vec = par::map(&datasets, |(name, ps)| -> Result<(String, Scores)> {
        let s = match &global {
            Some(cut) => cut.scores(ps),
            None => Cut::new(rule, &scores_of(ps))?.scores(ps),
        };
        Ok((name.to_string(), s))
    });
    let per_dataset: BTreeMap<String, Scores> = per_dataset_vec.into_iter().collect::<Result<_>>()?;

    let per_group = if scope == ThresholdScope::Group && global.is_none() {
        let pooled = par::map(groups, |g| -> Result<Option<(String, Scores)>> {
            let ps: Vec<&Prediction> = g
                .members
                .iter()
                .filter_map(|m| by_dataset.get(m.as_str()))
                .flatten()
                .copied()
                .collect();
            if ps.is_empty() {
                tracing::warn!(group = %g.name, "no predictions for group; omitted");
                return Ok(None);
            }
            Ok(Some((g.name.clone(), Cut::new(rule, &scores_of(&ps))?.scores(&ps))))
        });
        pooled
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect()
    } else {
        let confusions = per_dataset.iter().map(|(k, s)| (k.clone(), s.confusion)).collect();
        group_from_datasets(groups, &confusions)
            .into_iter()
            .map(|(k, c)| {
                let mut s = Scores::from_confusion(c);
                s.threshold = global.as_ref().map(Cut::threshold);
                (k, s)
            })
            .collect()
    };

    Ok(EvaluationReport {
        threshold: ThresholdInfo { rule, scope },
        threshold_used: global.as_ref().map(Cut::threshold),
        per_dataset,
        per_group,
        baseline_deltas: None,
    })
}

fn diff_maps(
    kind: &str,
    ours: &BTreeMap<String, Scores>,
    theirs: &BTreeMap<String, Scores>,
) -> BTreeMap<String, ScoreDelta> {
    let mut out = BTreeMap::new();
    for (k, s) in ours {
        match theirs.get(k) {
            Some(b) => {
                out.insert(
                    k.clone(),
                    ScoreDelta {
                        accuracy: s.accuracy - b.accuracy,
                        macro_f1: s.macro_f1 - b.macro_f1,
                    },
                );
            }
            None => tracing::warn!(key = %k, kind, "missing from baseline; skipped"),
        }
    }
    out
}

/// Signed `report - baseline` per shared key.
pub fn delta_report(report: &EvaluationReport, baseline: &EvaluationReport) -> Result<Deltas> {
    let deltas = Deltas {
        per_dataset: diff_maps("dataset", &report.per_dataset, &baseline.per_dataset),
        per_group: diff_maps("group", &report.per_group, &baseline.per_group),
    };
    if deltas.per_dataset.is_empty() && deltas.per_group.is_empty() {
        return Err(Error::InvalidInput("report and baseline share no keys".into()));
    }
    Ok(deltas)
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

fn signed_pct(v: f64) -> String {
    let r = format!("{:+.1}", 100.0 * v);
    if r == "-0.0" {
        "+0.0".into()
    } else {
        r
    }
}

/// Aligned text table: groups first, then datasets.
pub fn render_table(report: &EvaluationReport) -> String {
    let deltas = report.baseline_deltas.as_ref();
    let mut rows: Vec<Vec<String>> = vec![{
        let mut h = vec!["", "n", "thr", "Acc", "F1"];
        if deltas.is_some() {
            h.push("dF1");
        }
        h.into_iter().map(String::from).collect()
    }];
    let mut push = |name: &str, s: &Scores, d: Option<&ScoreDelta>| {
        let mut r = vec![
            name.to_string(),
            s.n.to_string(),
            s.threshold.map(|t| format!("{t:.3}")).unwrap_or_else(|| "-".into()),
            pct(s.accuracy),
            pct(s.macro_f1),
        ];
        if deltas.is_some() {
            r.push(d.map(|d| signed_pct(d.macro_f1)).unwrap_or_else(|| "-".into()));
        }
        rows.push(r);
    };
    for (k, s) in &report.per_group {
        push(k, s, deltas.and_then(|d| d.per_group.get(k)));
    }
    for (k, s) in &report.per_dataset {
        push(k, s, deltas.and_then(|d| d.per_dataset.get(k)));
    }
    align(&rows)
}

/// Left-align the first column, right-align the rest.
pub fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, cell) in r.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
