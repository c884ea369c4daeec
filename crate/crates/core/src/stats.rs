//! Pool statistics over annotated texts, broken down by language.
//!
//! Every "All" value is recomputed over the union of rows, never averaged
//! from the language columns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Ensemble, MetaLearnerModel, ProbabilityVector, Strategy, NUM_MODELS};
use crate::error::{Error, Result};
use crate::eval::align;
use crate::gateway::AnnotationRecord;
use crate::numeric::ExactSum;
use crate::par;
use crate::types::{BinaryLabel, Language};

pub const ALL_COLUMN: &str = "All";

#[derive(Debug, Clone, PartialEq)]
pub struct PoolRow {
    pub lang: Language,
    pub vector: ProbabilityVector,
    pub raw_label: Option<String>,
}

impl PoolRow {
    pub fn from_record(record: &AnnotationRecord) -> Result<Self> {
        Ok(Self {
            lang: record.lang,
            vector: record.probability_vector()?,
            raw_label: record.raw_label.clone(),
        })
    }
}

/// Column key (language code or `All`) to value.
pub type Columns<T> = BTreeMap<String, T>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLabelRow {
    pub count: u64,
    pub per_model_mean_phate: BTreeMap<String, f64>,
    pub per_strategy_pct_hate: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub per_language_counts: Columns<u64>,
    pub per_model_mean_phate: BTreeMap<String, Columns<f64>>,
    /// Percent of rows with p_hate strictly above 0.5.
    pub per_model_pct_hate: BTreeMap<String, Columns<f64>>,
    pub per_strategy_pct_hate: BTreeMap<String, Columns<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_label_breakdown: Option<BTreeMap<String, RawLabelRow>>,
}

#[derive(Debug, Clone, Default)]
struct Acc {
    count: u64,
    phate: [ExactSum; NUM_MODELS],
    model_hate: [u64; NUM_MODELS],
    strategy_hate: Vec<u64>,
}

impl Acc {
    fn new(strategies: usize) -> Self {
        Self {
            strategy_hate: vec![0; strategies],
            ..Self::default()
        }
    }

    fn add(&mut self, pv: &ProbabilityVector, labels: &[BinaryLabel]) {
        self.count += 1;
        for (i, e) in pv.entries().iter().enumerate() {
            self.phate[i].add(e.p_hate);
            self.model_hate[i] += u64::from(e.votes_hate());
        }
        for (s, l) in self.strategy_hate.iter_mut().zip(labels) {
            *s += u64::from(l.is_hate());
        }
    }

    fn merge(&mut self, other: &Acc) {
        self.count += other.count;
        for i in 0..NUM_MODELS {
            self.phate[i].merge(&other.phate[i]);
            self.model_hate[i] += other.model_hate[i];
        }
        if self.strategy_hate.len() < other.strategy_hate.len() {
            self.strategy_hate.resize(other.strategy_hate.len(), 0);
        }
        for (a, b) in self.strategy_hate.iter_mut().zip(&other.strategy_hate) {
            *a += b;
        }
    }

    fn mean(&self, slot: usize) -> f64 {
        self.phate[slot].value() / self.count as f64
    }
}

fn pct(k: u64, n: u64) -> f64 {
    100.0 * k as f64 / n as f64
}

#[derive(Debug, Default)]
struct Partial {
    by_lang: BTreeMap<Language, Acc>,
    by_raw: BTreeMap<String, Acc>,
}

/// Per-model and per-strategy statistics for a pool.
///
/// `Lgb` may be listed only when `model` is supplied.
pub fn pool_statistics(
    pool: &[PoolRow],
    strategies: &[Strategy],
    model: Option<&MetaLearnerModel>,
) -> Result<PoolSummary> {
    let first = pool.first().ok_or_else(|| Error::InvalidInput("empty pool".into()))?;
    let ids: Vec<String> = first.vector.model_ids().into_iter().map(String::from).collect();
    if let Some(r) = pool.iter().find(|r| r.vector.model_ids() != ids) {
        return Err(Error::InvalidInput(format!(
            "mixed model sets in pool: {:?} vs {:?}",
            ids,
            r.vector.model_ids()
        )));
    }
    let ensembles = strategies
        .iter()
        .map(|&s| Ensemble::new(s, if s == Strategy::Lgb { model.cloned() } else { None }))
        .collect::<Result<Vec<_>>>()?;
    if let Some(m) = model.filter(|_| strategies.contains(&Strategy::Lgb)) {
        m.check_compatible(&first.vector)?;
    }
    let with_raw = pool.iter().any(|r| r.raw_label.is_some());

    let partials = par::map_chunks(pool, par::CHUNK, |chunk| {
        let mut p = Partial::default();
        for row in chunk {
            let labels: Vec<BinaryLabel> = ensembles.iter().map(|e| e.decide(&row.vector).label).collect();
            p.by_lang
                .entry(row.lang)
                .or_insert_with(|| Acc::new(strategies.len()))
                .add(&row.vector, &labels);
            if let Some(raw) = &row.raw_label {
                p.by_raw
                    .entry(raw.clone())
                    .or_insert_with(|| Acc::new(strategies.len()))
                    .add(&row.vector, &labels);
            }
        }
        p
    });
    let mut by_lang: BTreeMap<Language, Acc> = BTreeMap::new();
    let mut by_raw: BTreeMap<String, Acc> = BTreeMap::new();
    for p in partials {
        for (k, a) in p.by_lang {
            by_lang.entry(k).or_insert_with(|| Acc::new(strategies.len())).merge(&a);
        }
        for (k, a) in p.by_raw {
            by_raw.entry(k).or_insert_with(|| Acc::new(strategies.len())).merge(&a);
        }
    }
    let mut all = Acc::new(strategies.len());
    for a in by_lang.values() {
        all.merge(a);
    }

    let mut columns: Vec<(String, &Acc)> = by_lang.iter().map(|(l, a)| (l.code().to_string(), a)).collect();
    columns.push((ALL_COLUMN.to_string(), &all));

    let mut summary = PoolSummary {
        per_language_counts: columns.iter().map(|(k, a)| (k.clone(), a.count)).collect(),
        per_model_mean_phate: BTreeMap::new(),
        per_model_pct_hate: BTreeMap::new(),
        per_strategy_pct_hate: BTreeMap::new(),
        raw_label_breakdown: None,
    };
    for (slot, id) in ids.iter().enumerate() {
        summary.per_model_mean_phate.insert(
            id.clone(),
            columns.iter().map(|(k, a)| (k.clone(), a.mean(slot))).collect(),
        );
        summary.per_model_pct_hate.insert(
            id.clone(),
            columns.iter().map(|(k, a)| (k.clone(), pct(a.model_hate[slot], a.count))).collect(),
        );
    }
    for (si, s) in strategies.iter().enumerate() {
        summary.per_strategy_pct_hate.insert(
            s.name().to_string(),
            columns
                .iter()
                .map(|(k, a)| (k.clone(), pct(a.strategy_hate[si], a.count)))
                .collect(),
        );
    }
    if with_raw {
        summary.raw_label_breakdown = Some(
            by_raw
                .iter()
                .map(|(label, a)| {
                    let row = RawLabelRow {
                        count: a.count,
                        per_model_mean_phate: ids.iter().enumerate().map(|(i, id)| (id.clone(), a.mean(i))).collect(),
                        per_strategy_pct_hate: strategies
                            .iter()
                            .enumerate()
                            .map(|(si, s)| (s.name().to_string(), pct(a.strategy_hate[si], a.count)))
                            .collect(),
                    };
                    (label.clone(), row)
                })
                .collect(),
        );
    }
    Ok(summary)
}

/// Convenience wrapper over annotation records, with Vote and Mean always
/// and Lgb when a model is given.
pub fn pool_statistics_from_records(
    records: &[AnnotationRecord],
    model: Option<&MetaLearnerModel>,
) -> Result<PoolSummary> {
    let pool = records.iter().map(PoolRow::from_record).collect::<Result<Vec<_>>>()?;
    let mut strategies = vec![Strategy::Vote, Strategy::Mean];
    if model.is_some() {
        strategies.push(Strategy::Lgb);
    }
    pool_statistics(&pool, &strategies, model)
}

/// Aligned table: one row per statistic, one column per language plus All.
pub fn render_table(summary: &PoolSummary) -> String {
    let cols: Vec<&String> = summary.per_language_counts.keys().filter(|k| *k != ALL_COLUMN).collect();
    let header = std::iter::once(String::new())
        .chain(cols.iter().map(|c| c.to_string()))
        .chain(std::iter::once(ALL_COLUMN.to_string()))
        .collect();
    let mut rows: Vec<Vec<String>> = vec![header];
    let line = |label: String, vals: &Columns<f64>, fmt: &dyn Fn(f64) -> String| -> Vec<String> {
        std::iter::once(label)
            .chain(
                cols.iter()
                    .map(|c| c.as_str())
                    .chain(std::iter::once(ALL_COLUMN))
                    .map(|c| vals.get(c).map(|v| fmt(*v)).unwrap_or_else(|| "-".into())),
            )
            .collect()
    };
    let counts: Columns<f64> = summary.per_language_counts.iter().map(|(k, v)| (k.clone(), *v as f64)).collect();
    rows.push(line("n".into(), &counts, &|v| format!("{v}")));
    for (m, vals) in &summary.per_model_mean_phate {
        rows.push(line(format!("{m} mean P(Hate)"), vals, &|v| format!("{v:.3}")));
    }
    for (m, vals) in &summary.per_model_pct_hate {
        rows.push(line(format!("{m} % Hate"), vals, &|v| format!("{v:.1}")));
    }
    for (s, vals) in &summary.per_strategy_pct_hate {
        rows.push(line(format!("{s} % Hate"), vals, &|v| format!("{v:.1}")));
    }
    let mut out = align(&rows);
    if let Some(raw) = &summary.raw_label_breakdown {
        let models: Vec<&String> = summary.per_model_mean_phate.keys().collect();
        let strategies: Vec<&String> = summary.per_strategy_pct_hate.keys().collect();
        let mut t: Vec<Vec<String>> = vec![std::iter::once("raw label".to_string())
            .chain(std::iter::once("n".to_string()))
            .chain(models.iter().map(|m| format!("{m} mean")))
            .chain(strategies.iter().map(|s| format!("{s} %")))
            .collect()];
        for (label, r) in raw {
            t.push(
                std::iter::once(label.clone())
                    .chain(std::iter::once(r.count.to_string()))
                    .chain(models.iter().map(|m| format!("{:.3}", r.per_model_mean_phate[*m])))
                    .chain(strategies.iter().map(|s| format!("{:.1}", r.per_strategy_pct_hate[*s])))
                    .collect(),
            );
        }
        out.push('\n');
        out.push_str(&align(&t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::tests::pv;
    use crate::ensemble::vote_label;

    fn row(lang: Language, p: [f64; 4]) -> PoolRow {
        PoolRow {
            lang,
            vector: pv(p),
            raw_label: None,
        }
    }

    #[test]
    fn four_row_hand_check() {
        let pool = vec![
            row(Language::Eng, [0.9, 0.2, 0.6, 0.1]),
            row(Language::Eng, [0.1, 0.2, 0.3, 0.4]),
            row(Language::Deu, [0.7, 0.8, 0.1, 0.5]),
            row(Language::Deu, [0.3, 0.6, 0.2, 0.0]),
        ];
        let s = pool_statistics(&pool, &[Strategy::Vote, Strategy::Mean], None).unwrap();
        assert_eq!(s.per_language_counts["eng"], 2);
        assert_eq!(s.per_language_counts["All"], 4);
        assert!((s.per_model_mean_phate["gemma"]["All"] - 0.5).abs() < 1e-15);
        assert!((s.per_model_mean_phate["llama"]["deu"] - 0.7).abs() < 1e-15);
        // qwen: 0.1, 0.4, 0.5, 0.0 -> none strictly above 0.5
        assert_eq!(s.per_model_pct_hate["qwen"]["All"], 0.0);
        assert_eq!(s.per_model_pct_hate["gemma"]["All"], 50.0);
        // votes: 2, 0, 2, 1 -> rows 0 and 2
        assert_eq!(s.per_strategy_pct_hate["vote"]["All"], 50.0);
        assert_eq!(s.per_strategy_pct_hate["vote"]["eng"], 50.0);
        // means: 0.45, 0.25, 0.525, 0.275
        assert_eq!(s.per_strategy_pct_hate["mean"]["All"], 25.0);
        assert_eq!(s.per_strategy_pct_hate["mean"]["deu"], 50.0);
        assert!(s.raw_label_breakdown.is_none());
        let table = render_table(&s);
        assert!(table.contains("gemma mean P(Hate)"));
    }

    #[test]
    fn zero_pool_and_single_language() {
        let pool = vec![row(Language::Vie, [0.0; 4]); 3];
        let s = pool_statistics(&pool, &[Strategy::Vote, Strategy::Mean], None).unwrap();
        for cols in s.per_model_mean_phate.values().chain(s.per_model_pct_hate.values()) {
            assert_eq!(cols["vie"], 0.0);
            assert_eq!(cols["vie"], cols["All"]);
        }
        assert_eq!(s.per_strategy_pct_hate["mean"]["All"], 0.0);
    }

    #[test]
    fn errors() {
        assert!(pool_statistics(&[], &[Strategy::Vote], None).is_err());
        let pool = vec![row(Language::Eng, [0.2; 4])];
        assert!(pool_statistics(&pool, &[Strategy::Lgb], None).is_err());
    }

    #[test]
    fn raw_labels_and_roundtrip() {
        let mut pool = vec![row(Language::Eng, [0.9; 4]), row(Language::Eng, [0.1; 4])];
        pool[0].raw_label = Some("offensive".into());
        pool[1].raw_label = Some("neutral".into());
        let s = pool_statistics(&pool, &[Strategy::Vote], None).unwrap();
        let raw = s.raw_label_breakdown.as_ref().unwrap();
        assert_eq!(raw["offensive"].per_strategy_pct_hate["vote"], 100.0);
        assert_eq!(raw["neutral"].count, 1);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<PoolSummary>(&text).unwrap(), s);
        assert!(render_table(&s).contains("raw label"));
    }

    #[test]
    fn model_pct_agrees_with_votes() {
        let pool: Vec<_> = (0..50)
            .map(|i| {
                let f = |k: usize| ((i * 7 + k * 13) % 11) as f64 / 10.0;
                row(Language::Spa, [f(0), f(1), f(2), f(3)])
            })
            .collect();
        let s = pool_statistics(&pool, &[Strategy::Vote], None).unwrap();
        let total: f64 = s.per_model_pct_hate.values().map(|c| c["All"]).sum();
        let votes: usize = pool.iter().map(|r| r.vector.hate_votes()).sum();
        assert!((total - 100.0 * votes as f64 / 50.0).abs() < 1e-9);
        let vote_hate = pool.iter().filter(|r| vote_label(&r.vector).is_hate()).count();
        assert_eq!(s.per_strategy_pct_hate["vote"]["All"], 100.0 * vote_hate as f64 / 50.0);
    }
}
