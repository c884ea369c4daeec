//! Human-labelled dataset ingestion.
//!
//! Each dataset's native labels are mapped onto [`BinaryLabel`] through a
//! data-driven registry (see `registry.json`, embedded as the default).
//! Raw labels are compared after trimming and lowercasing; anything outside
//! the declared vocabulary is an error rather than a silent Neutral.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BinaryLabel, Language};

const BUILTIN_REGISTRY: &str = include_str!("registry.json");

/// The sixteen datasets, in table order.
pub const DATASET_NAMES: [&str; 16] = [
    "HateXplain",
    "Sexism",
    "Covid",
    "US_election",
    "HateEval-eng",
    "AbusEval",
    "AHSD",
    "GermEval21",
    "GermEval19",
    "GermEval18",
    "HASOC",
    "Gahd",
    "ViHSD",
    "Haternet",
    "HateEval-spa",
    "Chileno",
];

/// Datasets forming the seven-set training configuration.
pub const SEVEN_SET: [&str; 7] = [
    "HateXplain",
    "Sexism",
    "Covid",
    "US_election",
    "GermEval21",
    "GermEval19",
    "ViHSD",
];

fn normalize_raw(raw: &str) -> String {
    raw.trim().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub language: Language,
    pub text_column: String,
    pub label_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    pub vocabulary: BTreeSet<String>,
    pub positive: BTreeSet<String>,
}

impl DatasetSpec {
    pub fn map_label(&self, raw: &str) -> Result<BinaryLabel> {
        let key = normalize_raw(raw);
        if self.positive.contains(&key) {
            Ok(BinaryLabel::Hate)
        } else if self.vocabulary.contains(&key) {
            Ok(BinaryLabel::Neutral)
        } else {
            Err(Error::UnknownLabel {
                dataset: self.name.clone(),
                label: raw.to_string(),
            })
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("dataset {}: {msg}", self.name)));
        if self.language == Language::Other {
            return bad("language must be one of eng, deu, spa, vie");
        }
        if self.vocabulary.iter().any(|v| *v != normalize_raw(v)) {
            return bad("vocabulary entries must be trimmed and lowercase");
        }
        if !self.positive.is_subset(&self.vocabulary) {
            return bad("positive labels must be part of the vocabulary");
        }
        if self.positive.is_empty() || self.positive.len() == self.vocabulary.len() {
            return bad("mapping must produce both Hate and Neutral");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    datasets: Vec<DatasetSpec>,
}

impl Registry {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_REGISTRY).expect("embedded registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let reg: Registry = serde_json::from_str(text)?;
        let mut names = BTreeSet::new();
        for d in &reg.datasets {
            d.validate()?;
            if !names.insert(d.name.as_str()) {
                return Err(Error::Config(format!("dataset {} declared twice", d.name)));
            }
        }
        Ok(reg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Result<&DatasetSpec> {
        self.datasets
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.datasets.iter().any(|d| d.name == name)
    }

    pub fn datasets(&self) -> &[DatasetSpec] {
        &self.datasets
    }

    pub fn language_of(&self, name: &str) -> Option<Language> {
        self.get(name).ok().map(|d| d.language)
    }
}

pub fn map_label(spec: &DatasetSpec, raw: &str) -> Result<BinaryLabel> {
    spec.map_label(raw)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub dataset: String,
    pub text: String,
    pub gold: BinaryLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub count: usize,
    pub hate_fraction: f64,
    /// Set when the input was empty and `hate_fraction` is the 0.0 convention.
    pub empty: bool,
}

pub fn dataset_stats(examples: &[LabeledExample]) -> DatasetStats {
    if examples.is_empty() {
        tracing::warn!("dataset_stats on empty input; reporting hate_fraction 0");
        return DatasetStats {
            count: 0,
            hate_fraction: 0.0,
            empty: true,
        };
    }
    let hate = examples.iter().filter(|e| e.gold.is_hate()).count();
    DatasetStats {
        count: examples.len(),
        hate_fraction: hate as f64 / examples.len() as f64,
        empty: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrainingConfigName {
    SevenSet,
    Eng,
    Deu,
    Spa,
    SixteenMix,
}

impl FromStr for TrainingConfigName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sevenset" | "7-set" | "7set" => Ok(Self::SevenSet),
            "eng" => Ok(Self::Eng),
            "deu" => Ok(Self::Deu),
            "spa" => Ok(Self::Spa),
            "sixteenmix" | "16-mix" | "16mix" => Ok(Self::SixteenMix),
            _ => Err(Error::UnknownTrainingConfig(s.to_string())),
        }
    }
}

impl fmt::Display for TrainingConfigName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SevenSet => "7-Set",
            Self::Eng => "Eng",
            Self::Deu => "Deu",
            Self::Spa => "Spa",
            Self::SixteenMix => "16-Mix",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub name: TrainingConfigName,
    pub members: BTreeSet<String>,
}

pub fn build_training_config(name: TrainingConfigName) -> TrainingConfig {
    let registry = Registry::builtin();
    let by_lang = |lang: Language| -> BTreeSet<String> {
        registry
            .datasets()
            .iter()
            .filter(|d| d.language == lang)
            .map(|d| d.name.clone())
            .collect()
    };
    let members = match name {
        TrainingConfigName::SevenSet => SEVEN_SET.iter().map(|s| s.to_string()).collect(),
        TrainingConfigName::Eng => by_lang(Language::Eng),
        TrainingConfigName::Deu => by_lang(Language::Deu),
        TrainingConfigName::Spa => by_lang(Language::Spa),
        TrainingConfigName::SixteenMix => DATASET_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    TrainingConfig { name, members }
}

/// On-disk layout of a raw dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Tsv,
    JsonLines,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => InputFormat::Csv,
            Some("tsv") => InputFormat::Tsv,
            _ => InputFormat::JsonLines,
        }
    }
}

/// Column names to read; defaults come from the dataset spec.
#[derive(Debug, Clone)]
pub struct Columns {
    pub text: String,
    pub label: String,
    pub id: Option<String>,
}

impl Columns {
    pub fn for_spec(spec: &DatasetSpec) -> Self {
        Self {
            text: spec.text_column.clone(),
            label: spec.label_column.clone(),
            id: spec.id_column.clone(),
        }
    }
}

fn json_field_as_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Read a raw dataset file and map every row onto the binary scheme.
/// Rows without an id column get `<dataset>-<row>` (1-based).
pub fn load_examples<R: BufRead>(
    spec: &DatasetSpec,
    reader: R,
    format: InputFormat,
    columns: &Columns,
    origin: &Path,
) -> Result<Vec<LabeledExample>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut push = |row: usize, id: Option<String>, text: String, raw: String| -> Result<()> {
        let gold = spec.map_label(&raw)?;
        out.push(LabeledExample {
            id: id.unwrap_or_else(|| format!("{}-{row}", spec.name)),
            dataset: spec.name.clone(),
            text,
            gold,
        });
        Ok(())
    };
    match format {
        InputFormat::Csv | InputFormat::Tsv => {
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(if format == InputFormat::Tsv { b'\t' } else { b',' })
                .from_reader(reader);
            let headers = rdr.headers()?.clone();
            let col = |name: &str| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
            };
            let text_idx = col(&columns.text)?;
            let label_idx = col(&columns.label)?;
            let id_idx = columns.id.as_deref().map(col).transpose()?;
            for (i, record) in rdr.records().enumerate() {
                let record = record?;
                let line = i + 2;
                let field = |idx: usize| {
                    record
                        .get(idx)
                        .map(str::to_string)
                        .ok_or_else(|| parse_err(line, "short row".into()))
                };
                let id = id_idx.map(field).transpose()?;
                push(i + 1, id, field(text_idx)?, field(label_idx)?)?;
            }
        }
        InputFormat::JsonLines => {
            for (row, item) in crate::jsonl::lines(reader).enumerate() {
                let (line, text) = item?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| parse_err(line, e.to_string()))?;
                let get = |name: &str| {
                    value
                        .get(name)
                        .and_then(json_field_as_string)
                        .ok_or_else(|| parse_err(line, format!("missing field {name:?}")))
                };
                let id = columns.id.as_deref().map(get).transpose()?;
                push(row + 1, id, get(&columns.text)?, get(&columns.label)?)?;
            }
        }
    }
    Ok(out)
}

/// Per-dataset label balance, keyed by dataset name.
pub fn stats_by_dataset(examples: &[LabeledExample]) -> BTreeMap<String, DatasetStats> {
    let mut grouped: BTreeMap<String, Vec<LabeledExample>> = BTreeMap::new();
    for e in examples {
        grouped.entry(e.dataset.clone()).or_default().push(e.clone());
    }
    grouped
        .into_iter()
        .map(|(k, v)| (k, dataset_stats(&v)))
        .collect()
}
