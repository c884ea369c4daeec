//! Gradient-boosted decision trees for the binary logloss objective.
//!
//! Trees are grown leaf-wise: the leaf whose best split has the largest
//! second-order gain is split next, until `num_leaves` leaves exist or no
//! split has positive gain. Split finding is exact, over the sorted distinct
//! values of each candidate feature.
//!
//! Rows with `x[feature] <= threshold` go left. Thresholds sit halfway
//! between two consecutive distinct training values.
//!
//! Per-feature split search and per-row score updates run through
//! [`crate::par`]; the reductions are ordered, so a fixed seed produces the
//! same model whether or not rayon is enabled.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{clamp_prob, logit, sigmoid, ExactSum};
use crate::par;

/// Splits must beat this gain. Keeps float noise on constant targets from
/// producing splits.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaLearnerConfig {
    pub objective: String,
    pub metric: String,
    pub num_leaves: usize,
    pub learning_rate: f64,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
    pub bagging_freq: usize,
    pub num_rounds: usize,
    pub min_data_in_leaf: usize,
    pub lambda_l2: f64,
    /// Stop when validation logloss has not improved for this many rounds.
    /// Only used when a validation set is supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stopping_rounds: Option<usize>,
    pub seed: u64,
}

impl Default for MetaLearnerConfig {
    fn default() -> Self {
        Self {
            objective: "binary".into(),
            metric: "binary_logloss".into(),
            num_leaves: 34,
            learning_rate: 0.05,
            feature_fraction: 0.9,
            bagging_fraction: 0.8,
            bagging_freq: 5,
            num_rounds: 100,
            min_data_in_leaf: 20,
            lambda_l2: 0.0,
            early_stopping_rounds: None,
            seed: 0,
        }
    }
}

impl MetaLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.objective != "binary" {
            return fail(format!("objective {:?} unsupported (binary only)", self.objective));
        }
        if self.metric != "binary_logloss" {
            return fail(format!("metric {:?} unsupported (binary_logloss only)", self.metric));
        }
        if self.num_leaves < 2 {
            return fail("num_leaves must be at least 2".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive".into());
        }
        for (name, f) in [
            ("feature_fraction", self.feature_fraction),
            ("bagging_fraction", self.bagging_fraction),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return fail(format!("{name} must lie in (0, 1]"));
            }
        }
        if self.num_rounds == 0 {
            return fail("num_rounds must be positive".into());
        }
        if self.min_data_in_leaf == 0 {
            return fail("min_data_in_leaf must be positive".into());
        }
        if !(self.lambda_l2 >= 0.0 && self.lambda_l2.is_finite()) {
            return fail("lambda_l2 must be nonnegative".into());
        }
        Ok(())
    }

    fn bagging_active(&self) -> bool {
        self.bagging_fraction < 1.0 && self.bagging_freq > 0
    }
}

/// First and second derivatives of logloss with respect to the raw score.
pub fn logistic_gradients(p: f64, y: u8) -> (f64, f64) {
    let p = clamp_prob(p);
    (p - f64::from(y), p * (1.0 - p))
}

/// Mean binary logloss of probabilities against 0/1 targets.
pub fn logloss(probs: &[f64], labels: &[u8]) -> f64 {
    let total: ExactSum = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .collect();
    total.value() / probs.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    /// Additive raw-score contribution, learning rate already applied.
    Leaf(f64),
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf(v) => return *v,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        match self {
            TreeNode::Leaf(v) => vec![*v],
            TreeNode::Split { left, right, .. } => {
                let mut out = left.leaf_values();
                out.extend(right.leaf_values());
                out
            }
        }
    }

    /// Structural check: feature indices in range, finite numbers.
    pub fn is_valid(&self, num_features: usize) -> bool {
        match self {
            TreeNode::Leaf(v) => v.is_finite(),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                *feature < num_features
                    && threshold.is_finite()
                    && left.is_valid(num_features)
                    && right.is_valid(num_features)
            }
        }
    }
}

/// A trained boosted-tree classifier: base score plus additive trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster {
    pub base_score: f64,
    pub trees: Vec<TreeNode>,
}

impl Booster {
    pub fn constant(base_score: f64) -> Self {
        Self {
            base_score,
            trees: Vec::new(),
        }
    }

    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        gbdt_predict_raw(self, x)
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.predict_raw(x))
    }
}

pub fn gbdt_predict_raw(booster: &Booster, x: &[f64]) -> f64 {
    booster
        .trees
        .iter()
        .fold(booster.base_score, |acc, t| acc + t.predict(x))
}

/// Training curve returned alongside the model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub booster: Booster,
    /// Training logloss after each round.
    pub train_logloss: Vec<f64>,
    /// Validation logloss after each round, when a validation set is given.
    pub valid_logloss: Vec<f64>,
}

pub fn gbdt_fit<R: AsRef<[f64]>>(rows: &[R], labels: &[u8], config: &MetaLearnerConfig) -> Result<Booster> {
    Ok(gbdt_fit_with_report(rows, labels, config, None)?.booster)
}

pub fn gbdt_fit_with_report<R: AsRef<[f64]>>(
    rows: &[R],
    labels: &[u8],
    config: &MetaLearnerConfig,
    validation: Option<(&[R], &[u8])>,
) -> Result<FitReport> {
    config.validate()?;
    let data = Matrix::from_rows(rows)?;
    check_labels(&data, labels)?;
    let valid = match validation {
        Some((vr, vl)) => {
            let m = Matrix::from_rows(vr)?;
            if m.d != data.d {
                return Err(Error::InvalidInput(format!(
                    "validation rows have {} features, training rows {}",
                    m.d, data.d
                )));
            }
            check_labels(&m, vl)?;
            Some((m, vl))
        }
        None => None,
    };
    if config.early_stopping_rounds.is_some() && valid.is_none() {
        tracing::warn!("early_stopping_rounds set without a validation set; ignoring");
    }
    Ok(Trainer::new(&data, labels, config).run(valid.as_ref().map(|(m, l)| (m, *l))))
}

fn check_labels(data: &Matrix, labels: &[u8]) -> Result<()> {
    if data.n == 0 {
        return Err(Error::InvalidInput("cannot fit on zero rows".into()));
    }
    if labels.len() != data.n {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            data.n,
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Row-major feature matrix with per-feature sort orders.
struct Matrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    /// `sorted[f]` lists row indices by ascending value of feature f
    /// (ties by row index).
    sorted: Vec<Vec<u32>>,
}

impl Matrix {
    fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        if n > 0 && d == 0 {
            return Err(Error::InvalidInput("rows have no features".into()));
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} features, expected {d}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite feature")));
            }
            values.extend_from_slice(r);
        }
        let sorted = par::map_range(d, |f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| {
                values[a as usize * d + f]
                    .total_cmp(&values[b as usize * d + f])
                    .then(a.cmp(&b))
            });
            idx
        });
        Ok(Self { n, d, values, sorted })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    fn get(&self, i: usize, f: usize) -> f64 {
        self.values[i * self.d + f]
    }
}

fn ceil_fraction(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).ceil() as usize).clamp(1, n)
}

struct Trainer<'a> {
    data: &'a Matrix,
    labels: &'a [u8],
    config: &'a MetaLearnerConfig,
}

impl<'a> Trainer<'a> {
    fn new(data: &'a Matrix, labels: &'a [u8], config: &'a MetaLearnerConfig) -> Self {
        Self { data, labels, config }
    }

    fn run(&self, valid: Option<(&Matrix, &[u8])>) -> FitReport {
        let cfg = self.config;
        let n = self.data.n;
        let d = self.data.d;
        let positives = self.labels.iter().filter(|&&y| y == 1).count();
        let base_score = logit(positives as f64 / n as f64);

        let mut raw = vec![base_score; n];
        let mut valid_raw = valid.map(|(m, _)| vec![base_score; m.n]);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut bag: Vec<u32> = (0..n as u32).collect();
        let mut trees = Vec::with_capacity(cfg.num_rounds);
        let mut train_logloss = Vec::with_capacity(cfg.num_rounds);
        let mut valid_logloss = Vec::new();
        let mut best: Option<(usize, f64)> = None;

        for round in 0..cfg.num_rounds {
            if cfg.bagging_active() && round % cfg.bagging_freq == 0 {
                let k = ceil_fraction(cfg.bagging_fraction, n);
                let mut picked: Vec<u32> = sample(&mut rng, n, k).into_iter().map(|i| i as u32).collect();
                picked.sort_unstable();
                bag = picked;
            }
            let features: Vec<usize> = if cfg.feature_fraction < 1.0 {
                let k = ceil_fraction(cfg.feature_fraction, d);
                let mut f = sample(&mut rng, d, k).into_vec();
                f.sort_unstable();
                f
            } else {
                (0..d).collect()
            };

            let grads: Vec<(f64, f64)> = par::map_range(n, |i| {
                logistic_gradients(sigmoid(raw[i]), self.labels[i])
            });
            let tree = TreeGrower {
                data: self.data,
                grads: &grads,
                config: cfg,
            }
            .grow(&bag, &features);

            let deltas = par::map_range(n, |i| tree.predict(self.data.row(i)));
            for (r, delta) in raw.iter_mut().zip(deltas) {
                *r += delta;
            }
            let probs: Vec<f64> = raw.iter().map(|&r| sigmoid(r)).collect();
            train_logloss.push(logloss(&probs, self.labels));

            if let (Some((vm, vl)), Some(vraw)) = (valid, valid_raw.as_mut()) {
                let deltas = par::map_range(vm.n, |i| tree.predict(vm.row(i)));
                for (r, delta) in vraw.iter_mut().zip(deltas) {
                    *r += delta;
                }
                let probs: Vec<f64> = vraw.iter().map(|&r| sigmoid(r)).collect();
                let loss = logloss(&probs, vl);
                valid_logloss.push(loss);
                if best.is_none_or(|(_, b)| loss < b) {
                    best = Some((round, loss));
                }
            }
            trees.push(tree);

            if let (Some(patience), Some((best_round, _))) = (cfg.early_stopping_rounds, best) {
                if round - best_round >= patience {
                    trees.truncate(best_round + 1);
                    train_logloss.truncate(best_round + 1);
                    valid_logloss.truncate(best_round + 1);
                    break;
                }
            }
        }

        FitReport {
            booster: Booster { base_score, trees },
            train_logloss,
            valid_logloss,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Debug, Clone, Copy)]
struct Totals {
    g: f64,
    h: f64,
}

enum ArenaNode {
    Leaf { totals: Totals },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

struct OpenLeaf {
    node: usize,
    rows: Vec<u32>,
    best: Option<SplitCandidate>,
}

struct TreeGrower<'a> {
    data: &'a Matrix,
    grads: &'a [(f64, f64)],
    config: &'a MetaLearnerConfig,
}

impl TreeGrower<'_> {
    fn totals(&self, rows: &[u32]) -> Totals {
        let (mut g, mut h) = (0.0, 0.0);
        for &r in rows {
            let (gr, hr) = self.grads[r as usize];
            g += gr;
            h += hr;
        }
        Totals { g, h }
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.config.lambda_l2)
    }

    /// Best split of `rows` over `features`, if any beats [`MIN_SPLIT_GAIN`].
    fn best_split(&self, rows: &[u32], totals: Totals, features: &[usize]) -> Option<SplitCandidate> {
        let min_leaf = self.config.min_data_in_leaf;
        if rows.len() < 2 * min_leaf {
            return None;
        }
        let n = self.data.n;
        let mut member = vec![false; n];
        for &r in rows {
            member[r as usize] = true;
        }
        let parent = self.score(totals.g, totals.h);
        let per_feature = par::map(features, |&f| {
            let mut best: Option<SplitCandidate> = None;
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            let mut prev: Option<f64> = None;
            for &r in &self.data.sorted[f] {
                if !member[r as usize] {
                    continue;
                }
                let v = self.data.get(r as usize, f);
                if let Some(pv) = prev {
                    let nr = rows.len() - nl;
                    if v > pv && nl >= min_leaf && nr >= min_leaf {
                        let gr = totals.g - gl;
                        let hr = totals.h - hl;
                        let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent);
                        if best.is_none_or(|b| gain > b.gain) {
                            best = Some(SplitCandidate {
                                gain,
                                feature: f,
                                threshold: midpoint(pv, v),
                            });
                        }
                    }
                }
                let (g, h) = self.grads[r as usize];
                gl += g;
                hl += h;
                nl += 1;
                prev = Some(v);
            }
            best
        });
        per_feature
            .into_iter()
            .flatten()
            .filter(|c| c.gain > MIN_SPLIT_GAIN)
            .fold(None, |acc: Option<SplitCandidate>, c| match acc {
                Some(a) if a.gain >= c.gain => Some(a),
                _ => Some(c),
            })
    }

    fn grow(&self, bag: &[u32], features: &[usize]) -> TreeNode {
        let root_totals = self.totals(bag);
        let mut arena = vec![ArenaNode::Leaf { totals: root_totals }];
        let mut open = vec![OpenLeaf {
            node: 0,
            rows: bag.to_vec(),
            best: self.best_split(bag, root_totals, features),
        }];

        while open.len() < self.config.num_leaves {
            let pick = open
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.best.map(|b| (i, b.gain)))
                .fold(None, |acc: Option<(usize, f64)>, (i, g)| match acc {
                    Some((_, best)) if best >= g => acc,
                    _ => Some((i, g)),
                });
            let Some((idx, _)) = pick else { break };
            let leaf = open.remove(idx);
            let split = leaf.best.expect("picked leaf has a split");
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = leaf
                .rows
                .iter()
                .partition(|&&r| self.data.get(r as usize, split.feature) <= split.threshold);

            let mut child = |rows: Vec<u32>| {
                let totals = self.totals(&rows);
                arena.push(ArenaNode::Leaf { totals });
                let best = self.best_split(&rows, totals, features);
                OpenLeaf {
                    node: arena.len() - 1,
                    rows,
                    best,
                }
            };
            let left = child(left_rows);
            let right = child(right_rows);
            arena[leaf.node] = ArenaNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left.node,
                right: right.node,
            };
            // keep creation order so ties go to the older leaf
            open.insert(idx, right);
            open.insert(idx, left);
        }

        self.materialize(&arena, 0)
    }

    fn materialize(&self, arena: &[ArenaNode], idx: usize) -> TreeNode {
        match &arena[idx] {
            ArenaNode::Leaf { totals } => {
                TreeNode::Leaf(-totals.g / (totals.h + self.config.lambda_l2) * self.config.learning_rate)
            }
            ArenaNode::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(self.materialize(arena, *left)),
                right: Box::new(self.materialize(arena, *right)),
            },
        }
    }
}

/// A threshold strictly below `hi` and at least `lo`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump_config() -> MetaLearnerConfig {
        MetaLearnerConfig {
            num_leaves: 2,
            num_rounds: 1,
            min_data_in_leaf: 1,
            feature_fraction: 1.0,
            bagging_fraction: 1.0,
            ..MetaLearnerConfig::default()
        }
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(logistic_gradients(0.5, 1), (-0.5, 0.25));
        assert_eq!(logistic_gradients(0.5, 0), (0.5, 0.25));
        let (g, _) = logistic_gradients(1.0 - 1e-12, 1);
        assert!(g.abs() < 1e-11);
        let (g, h) = logistic_gradients(1.0, 1);
        assert!(g.abs() <= 1e-15 && h > 0.0);
    }

    #[test]
    fn stump_on_duplicated_pair() {
        // {(x=0,y=0),(x=1,y=1)} x25. Base rate 0.5, so raw 0, p 0.5:
        // y=0 rows: g = 0.5, h = 0.25; y=1 rows: g = -0.5, h = 0.25.
        // Left leaf (x=0): G = 12.5, H = 6.25 -> -G/H = -2.
        // Right leaf (x=1): G = -12.5, H = 6.25 -> 2.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..25 {
            rows.push(vec![0.0, 0.3]);
            labels.push(0);
            rows.push(vec![1.0, 0.3]);
            labels.push(1);
        }
        let cfg = stump_config();
        let b = gbdt_fit(&rows, &labels, &cfg).unwrap();
        assert_eq!(b.base_score, 0.0);
        assert_eq!(b.trees.len(), 1);
        match &b.trees[0] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
                assert!((left.leaf_values()[0] - (-2.0 * 0.05)).abs() < 1e-9);
                assert!((right.leaf_values()[0] - 2.0 * 0.05).abs() < 1e-9);
            }
            other => panic!("expected a stump, got {other:?}"),
        }
        // left branch: base + lr * (-2)
        assert!((gbdt_predict_raw(&b, &[0.0, 0.3]) - (-0.1)).abs() < 1e-12);
        assert!((gbdt_predict_raw(&b, &[1.0, 0.3]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn constant_target_never_splits() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels = vec![1u8; 40];
        let cfg = MetaLearnerConfig {
            min_data_in_leaf: 1,
            ..MetaLearnerConfig::default()
        };
        let b = gbdt_fit(&rows, &labels, &cfg).unwrap();
        assert!(b.trees.iter().all(|t| t.num_leaves() == 1));
        assert!(b.predict_proba(&[3.0, 1.0]) > 1.0 - 1e-12);
    }

    #[test]
    fn empty_booster_is_base_score() {
        let b = Booster::constant(0.7);
        assert_eq!(gbdt_predict_raw(&b, &[1.0; 8]), 0.7);
        assert_eq!(Booster::constant(0.0).predict_proba(&[0.0]), 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = MetaLearnerConfig::default();
        let empty: Vec<Vec<f64>> = vec![];
        assert!(gbdt_fit(&empty, &[], &cfg).is_err());
        assert!(gbdt_fit(&[vec![1.0], vec![1.0, 2.0]], &[0, 1], &cfg).is_err());
        assert!(gbdt_fit(&[vec![1.0]], &[0, 1], &cfg).is_err());
        assert!(gbdt_fit(&[vec![f64::NAN]], &[0], &cfg).is_err());
        let bad = MetaLearnerConfig {
            num_leaves: 1,
            ..MetaLearnerConfig::default()
        };
        assert!(gbdt_fit(&[vec![1.0]], &[0], &bad).is_err());
        let bad = MetaLearnerConfig {
            bagging_fraction: 0.0,
            ..MetaLearnerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn leaves_bounded_and_min_data_respected() {
        let rows: Vec<Vec<f64>> = (0..300).map(|i| vec![(i * 7 % 300) as f64, (i % 17) as f64]).collect();
        let labels: Vec<u8> = (0..300).map(|i| u8::from((i * 7 % 300) % 5 == 0)).collect();
        let cfg = MetaLearnerConfig {
            num_leaves: 6,
            num_rounds: 5,
            min_data_in_leaf: 20,
            bagging_fraction: 1.0,
            feature_fraction: 1.0,
            ..MetaLearnerConfig::default()
        };
        let b = gbdt_fit(&rows, &labels, &cfg).unwrap();
        for t in &b.trees {
            assert!(t.num_leaves() <= 6);
            assert!(t.is_valid(2));
        }
    }

    #[test]
    fn early_stopping_truncates() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i >= 50)).collect();
        // validation labels are flipped, so validation loss only gets worse
        let vlabels: Vec<u8> = labels.iter().map(|y| 1 - y).collect();
        let cfg = MetaLearnerConfig {
            early_stopping_rounds: Some(3),
            bagging_fraction: 1.0,
            ..MetaLearnerConfig::default()
        };
        let rep = gbdt_fit_with_report(&rows, &labels, &cfg, Some((&rows, &vlabels))).unwrap();
        assert_eq!(rep.booster.trees.len(), 1);
        assert_eq!(rep.valid_logloss.len(), 1);
    }
}
