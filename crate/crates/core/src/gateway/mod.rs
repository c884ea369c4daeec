//! Zero-shot LLM annotation over completion endpoints.
//!
//! Each text is rendered into the fixed classification prompt and sent to
//! four models. The next-token log-probabilities of the label tokens (`1` for
//! Hate, `2` for Neutral, plus configured aliases) are renormalised into a
//! two-class distribution per model.

mod client;
pub mod mock;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ensemble::{ModelProbability, ProbabilityVector, NUM_MODELS};
use crate::error::{Error, Result};
use crate::types::Language;

pub use client::{annotate_batch, BatchOutcome, Gateway};

pub const PLACEHOLDER: &str = "{comment}";
pub const DEFAULT_TEMPLATE: &str = include_str!("prompt.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub template_text: String,
    pub hate_token: String,
    pub neutral_token: String,
    /// Extra tokenizer spellings counted towards the Hate label, e.g. `" 1"`.
    pub hate_aliases: Vec<String>,
    pub neutral_aliases: Vec<String>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            template_text: DEFAULT_TEMPLATE.to_string(),
            hate_token: "1".into(),
            neutral_token: "2".into(),
            hate_aliases: vec![" 1".into()],
            neutral_aliases: vec![" 2".into()],
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<()> {
        let n = self.template_text.matches(PLACEHOLDER).count();
        if n != 1 {
            return Err(Error::Config(format!(
                "prompt template must contain exactly one {PLACEHOLDER} placeholder, found {n}"
            )));
        }
        if self.hate_token == self.neutral_token {
            return Err(Error::Config("hate and neutral tokens must differ".into()));
        }
        let hate = self.hate_spellings();
        if self.neutral_spellings().iter().any(|t| hate.contains(t)) {
            return Err(Error::Config("a token cannot count for both labels".into()));
        }
        Ok(())
    }

    pub fn hate_spellings(&self) -> Vec<&str> {
        std::iter::once(self.hate_token.as_str())
            .chain(self.hate_aliases.iter().map(String::as_str))
            .collect()
    }

    pub fn neutral_spellings(&self) -> Vec<&str> {
        std::iter::once(self.neutral_token.as_str())
            .chain(self.neutral_aliases.iter().map(String::as_str))
            .collect()
    }
}

/// Substitute the comment into the template. Nothing is escaped.
pub fn render_prompt(template: &PromptTemplate, comment: &str) -> Result<String> {
    if comment.is_empty() {
        return Err(Error::InvalidInput("cannot annotate an empty comment".into()));
    }
    let (head, tail) = template
        .template_text
        .split_once(PLACEHOLDER)
        .ok_or_else(|| Error::Config(format!("prompt template lacks {PLACEHOLDER}")))?;
    let mut out = String::with_capacity(head.len() + comment.len() + tail.len());
    out.push_str(head);
    out.push_str(comment);
    out.push_str(tail);
    Ok(out)
}

/// Renormalise the label-token weights into `(p_hate, p_neutral)`.
///
/// Missing tokens weigh 0. Both labels absent (or zero) is an error: the
/// distribution is undefined, not 50/50.
pub fn extract_label_probabilities(
    token_weights: &BTreeMap<String, f64>,
    template: &PromptTemplate,
    text_id: &str,
    model_id: &str,
) -> Result<ModelProbability> {
    let fail = |reason: String| Error::Extraction {
        text_id: text_id.to_string(),
        model_id: model_id.to_string(),
        reason,
    };
    if let Some((t, w)) = token_weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
        return Err(fail(format!("token {t:?} has invalid weight {w}")));
    }
    let weight = |spellings: Vec<&str>| -> f64 {
        spellings
            .into_iter()
            .filter_map(|s| token_weights.get(s))
            .sum()
    };
    let w_hate = weight(template.hate_spellings());
    let w_neutral = weight(template.neutral_spellings());
    let total = w_hate + w_neutral;
    if total.is_nan() || total <= 0.0 {
        return Err(fail("neither label token present in the top log-probabilities".into()));
    }
    let p_hate = w_hate / total;
    Ok(ModelProbability {
        model_id: model_id.to_string(),
        p_hate,
        p_neutral: 1.0 - p_hate,
    })
}

/// One completion endpoint serving one annotator model.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorEndpoint {
    pub model_id: String,
    /// OpenAI-style API root; requests go to `{base_url}/completions`.
    pub base_url: String,
    #[serde(default, skip_serializing)]
    pub auth_token: Option<String>,
    /// Environment variable that, when set, overrides `auth_token`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env: Option<String>,
    #[serde(default = "defaults::max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "defaults::timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "defaults::retry_limit")]
    pub retry_limit: u32,
    /// Base delay of the exponential backoff between attempts.
    #[serde(default = "defaults::backoff_ms")]
    pub backoff_ms: u64,
}

mod defaults {
    pub fn max_in_flight() -> usize {
        4
    }
    pub fn timeout_ms() -> u64 {
        30_000
    }
    pub fn retry_limit() -> u32 {
        3
    }
    pub fn backoff_ms() -> u64 {
        250
    }
    pub fn top_k() -> usize {
        20
    }
}

impl fmt::Debug for AnnotatorEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnnotatorEndpoint")
            .field("model_id", &self.model_id)
            .field("base_url", &self.base_url)
            .field("auth_token", &self.auth_token.as_ref().map(|_| "<redacted>"))
            .field("max_in_flight", &self.max_in_flight)
            .field("timeout_ms", &self.timeout_ms)
            .field("retry_limit", &self.retry_limit)
            .finish()
    }
}

impl AnnotatorEndpoint {
    pub fn new(model_id: impl Into<String>, base_url: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            base_url: base_url.into(),
            auth_token: None,
            auth_token_env: None,
            max_in_flight: defaults::max_in_flight(),
            timeout_ms: defaults::timeout_ms(),
            retry_limit: defaults::retry_limit(),
            backoff_ms: defaults::backoff_ms(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn completions_url(&self) -> String {
        format!("{}/completions", self.base_url.trim_end_matches('/'))
    }

    /// The bearer token, environment override first.
    pub fn resolved_token(&self) -> Option<String> {
        self.auth_token_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|t| !t.is_empty())
            .or_else(|| self.auth_token.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.is_empty() {
            return Err(Error::Config("endpoint model_id must not be empty".into()));
        }
        if self.max_in_flight == 0 {
            return Err(Error::Config(format!("{}: max_in_flight must be at least 1", self.model_id)));
        }
        if self.timeout_ms == 0 {
            return Err(Error::Config(format!("{}: timeout must be positive", self.model_id)));
        }
        url::Url::parse(&self.base_url).map_err(|source| Error::UrlParse {
            input: self.base_url.clone(),
            source,
        })?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub endpoints: Vec<AnnotatorEndpoint>,
    /// Depth of the requested top log-probability table.
    #[serde(default = "defaults::top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub template: PromptTemplate,
}

impl GatewayConfig {
    pub fn new(endpoints: Vec<AnnotatorEndpoint>) -> Self {
        Self {
            endpoints,
            top_k: defaults::top_k(),
            template: PromptTemplate::default(),
        }
    }

    /// Checks the config and sorts endpoints into slot order (by model id).
    pub fn validated(mut self) -> Result<Self> {
        if self.endpoints.len() != NUM_MODELS {
            return Err(Error::Config(format!(
                "exactly {NUM_MODELS} endpoints required, got {}",
                self.endpoints.len()
            )));
        }
        for e in &self.endpoints {
            e.validate()?;
        }
        self.endpoints.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        if self.endpoints.windows(2).any(|w| w[0].model_id == w[1].model_id) {
            return Err(Error::Config("endpoint model ids must be distinct".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be positive".into()));
        }
        self.template.validate()?;
        Ok(self)
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.endpoints.iter().map(|e| e.model_id.clone()).collect()
    }
}

/// A text to annotate. Extra fields in the input line are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextItem {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub lang: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAnnotation {
    pub hate: f64,
    pub neutral: f64,
    /// Probability weight of every token in the returned top-k table.
    pub raw: BTreeMap<String, f64>,
}

/// One output line of the annotation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    pub lang: Language,
    pub models: BTreeMap<String, ModelAnnotation>,
    /// Optional single-annotator raw label carried through for reporting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_label: Option<String>,
}

impl AnnotationRecord {
    pub fn probability_vector(&self) -> Result<ProbabilityVector> {
        let entries = self
            .models
            .iter()
            .map(|(m, a)| ModelProbability::new(m.clone(), a.hate, a.neutral))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidInput(format!("record {}: {e}", self.id)))?;
        ProbabilityVector::new(entries).map_err(|e| Error::InvalidInput(format!("record {}: {e}", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointFailure {
    pub model: String,
    pub error: String,
    pub attempts: u32,
}

/// Dead-letter line: a text that could not be annotated by every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantineRecord {
    pub id: String,
    pub lang: Language,
    pub failures: Vec<EndpointFailure>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn weights(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn render_examples() {
        let t = PromptTemplate::default();
        let p = render_prompt(&t, "hello").unwrap();
        assert!(p.contains("\"hello\"\n\nYour Answer:"));
        assert!(p.ends_with("Your Answer:"));
        let q = render_prompt(&t, "say \"hi\" {comment}").unwrap();
        assert!(q.contains("\"say \"hi\" {comment}\""));
        assert!(render_prompt(&t, "").is_err());
    }

    #[test]
    fn template_validation() {
        assert!(PromptTemplate::default().validate().is_ok());
        let t = PromptTemplate {
            template_text: "no slot".into(),
            ..PromptTemplate::default()
        };
        assert!(t.validate().is_err());
        let t = PromptTemplate {
            template_text: "{comment} {comment}".into(),
            ..PromptTemplate::default()
        };
        assert!(t.validate().is_err());
        let t = PromptTemplate {
            neutral_token: "1".into(),
            ..PromptTemplate::default()
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn extraction_examples() {
        let t = PromptTemplate::default();
        let p = extract_label_probabilities(&weights(&[("1", 0.6), ("2", 0.2), ("the", 0.2)]), &t, "x", "m").unwrap();
        assert!((p.p_hate - 0.75).abs() < 1e-15);
        assert!((p.p_neutral - 0.25).abs() < 1e-15);
        let p = extract_label_probabilities(&weights(&[("2", 0.5)]), &t, "x", "m").unwrap();
        assert_eq!(p.p_hate, 0.0);
        let err = extract_label_probabilities(&weights(&[("the", 1.0)]), &t, "t7", "qwen").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t7") && msg.contains("qwen"), "{msg}");
        // aliases add up
        let p = extract_label_probabilities(&weights(&[("1", 0.2), (" 1", 0.2), ("2", 0.4)]), &t, "x", "m").unwrap();
        assert!((p.p_hate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gateway_config_checks() {
        let eps: Vec<_> = ["d", "b", "c", "a"]
            .iter()
            .map(|m| AnnotatorEndpoint::new(*m, "http://127.0.0.1:1/v1"))
            .collect();
        let cfg = GatewayConfig::new(eps.clone()).validated().unwrap();
        assert_eq!(cfg.model_ids(), ["a", "b", "c", "d"]);
        assert!(GatewayConfig::new(eps[..3].to_vec()).validated().is_err());
        let mut dup = eps.clone();
        dup[0].model_id = "a".into();
        assert!(GatewayConfig::new(dup).validated().is_err());
        let mut zero = eps;
        zero[1].max_in_flight = 0;
        assert!(GatewayConfig::new(zero).validated().is_err());
    }

    #[test]
    fn token_is_redacted() {
        let mut e = AnnotatorEndpoint::new("m", "http://x/v1");
        e.auth_token = Some("sekrit".into());
        assert!(!format!("{e:?}").contains("sekrit"));
        assert!(!serde_json::to_string(&e).unwrap().contains("sekrit"));
    }

    proptest! {
        #[test]
        fn scale_invariant(h in 0.0f64..10.0, n in 0.0f64..10.0, other in 0.0f64..10.0, c in 1e-6f64..1e6) {
            prop_assume!(h + n > 1e-9);
            let t = PromptTemplate::default();
            let a = extract_label_probabilities(&weights(&[("1", h), ("2", n), ("x", other)]), &t, "i", "m").unwrap();
            let b = extract_label_probabilities(&weights(&[("1", h * c), ("2", n * c), ("x", other * c)]), &t, "i", "m").unwrap();
            prop_assert!((a.p_hate - b.p_hate).abs() < 1e-12);
            prop_assert!((a.p_hate + a.p_neutral - 1.0).abs() < 1e-9);
        }
    }
}
