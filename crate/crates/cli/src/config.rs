//! Run configuration: one JSON or TOML document with per-stage sections.
//!
//! A file passed to a stage flag may be either the whole document or just
//! that stage's section.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use annotrack_core::ensemble::gbdt::MetaLearnerConfig;
use annotrack_core::eval::{GroupSpec, ThresholdScope};
use annotrack_core::filter::FilterConfig;
use annotrack_core::gateway::GatewayConfig;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct FilterSection {
    #[serde(flatten)]
    pub config: FilterConfig,
    /// Language code to the number of records to keep.
    pub quota: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct IngestSection {
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct EnsembleSection {
    pub strategy: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct EvaluateSection {
    pub threshold: Option<String>,
    pub scope: Option<ThresholdScope>,
    pub groups: Option<Vec<GroupSpec>>,
}

/// A loaded config document.
#[derive(Debug, Clone, Default)]
pub struct Document {
    value: Value,
    origin: Option<PathBuf>,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let value = if is_toml {
            toml::from_str::<Value>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            match serde_json::from_str::<Value>(&text) {
                Ok(v) => v,
                Err(json_err) => toml::from_str::<Value>(&text)
                    .map_err(|_| CliError::Config(format!("{}: {json_err}", path.display())))?,
            }
        };
        if !value.is_object() {
            return Err(CliError::Config(format!("{}: expected a table at top level", path.display())));
        }
        Ok(Self {
            value,
            origin: Some(path.to_path_buf()),
        })
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, CliError> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }

    fn describe(&self) -> String {
        self.origin
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<defaults>".into())
    }

    /// The named section, or the whole document when it has no such key.
    pub fn section<T: DeserializeOwned + Default>(&self, key: &str) -> Result<T, CliError> {
        let v = match &self.value {
            Value::Null => return Ok(T::default()),
            Value::Object(m) => m.get(key).unwrap_or(&self.value),
            other => other,
        };
        serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("{} [{key}]: {e}", self.describe())))
    }

    /// Like `section` but for types without a default.
    pub fn required_section<T: DeserializeOwned>(&self, key: &str) -> Result<T, CliError> {
        let v = match &self.value {
            Value::Object(m) => m.get(key).unwrap_or(&self.value),
            _ => return Err(CliError::Config(format!("missing [{key}] configuration"))),
        };
        serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("{} [{key}]: {e}", self.describe())))
    }

    pub fn seed(&self) -> Option<u64> {
        self.value.get("seed").and_then(Value::as_u64)
    }

    pub fn log_level(&self) -> Option<&str> {
        self.value.get("log_level").and_then(Value::as_str)
    }
}

pub fn filter_section(doc: &Document) -> Result<FilterSection, CliError> {
    doc.section("filter")
}

pub fn ingest_section(doc: &Document) -> Result<IngestSection, CliError> {
    doc.section("ingest")
}

pub fn gateway_config(doc: &Document) -> Result<GatewayConfig, CliError> {
    doc.required_section("annotate")
}

pub fn meta_config(doc: &Document) -> Result<MetaLearnerConfig, CliError> {
    doc.section("meta")
}

pub fn ensemble_section(doc: &Document) -> Result<EnsembleSection, CliError> {
    doc.section("ensemble")
}

pub fn evaluate_section(doc: &Document) -> Result<EvaluateSection, CliError> {
    doc.section("evaluate")
}
