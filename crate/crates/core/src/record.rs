//! Record and prediction schema with validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::span::{char_len, hard_span_faults, soft_span_faults, HardSpan, SoftSpan, SpanFault};

/// One LLM generation.
///
/// `output_logprobs` holds the natural-log probability of each emitted
/// token, i.e. `log_softmax(logits)[chosen]`. Producers that only have raw
/// logit vectors must reduce them to this scalar per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub lang: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub model_id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub model_input: String,
    pub model_output_text: String,
    #[serde(rename = "model_output_tokens", default)]
    pub output_tokens: Vec<String>,
    #[serde(rename = "model_output_logprobs", default, skip_serializing_if = "Option::is_none")]
    pub output_logprobs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_labels: Option<Vec<HardSpan>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_labels: Option<Vec<SoftSpan>>,
    /// Keys this schema does not know about, kept for round-tripping.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Record {
    pub fn new(id: impl Into<String>, text: impl Into<String>, tokens: Vec<String>) -> Self {
        Self {
            id: id.into(),
            lang: String::new(),
            model_id: String::new(),
            model_input: String::new(),
            model_output_text: text.into(),
            output_tokens: tokens,
            output_logprobs: None,
            hard_labels: None,
            soft_labels: None,
            extra: Map::new(),
        }
    }

    pub fn text_len(&self) -> usize {
        char_len(&self.model_output_text)
    }

    pub fn has_labels(&self) -> bool {
        self.hard_labels.is_some() || self.soft_labels.is_some()
    }
}

/// A system's labels for one record. A missing key and an empty list are
/// distinct: only a missing `hard_labels` makes the scorer decode hard spans
/// from the soft ones.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_labels: Option<Vec<HardSpan>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_labels: Option<Vec<SoftSpan>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Prediction {
    pub fn new(id: impl Into<String>, hard: Vec<HardSpan>, soft: Vec<SoftSpan>) -> Self {
        Self { id: id.into(), hard_labels: Some(hard), soft_labels: Some(soft), extra: Map::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(rule: &'static str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, rule, message: message.into() }
    }

    pub fn warning(rule: &'static str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, rule, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}", self.severity, self.rule, self.message)
    }
}

/// Anything that can be checked before it is written or after it is read.
pub trait Validate {
    fn id(&self) -> &str;
    fn validate(&self) -> Vec<Diagnostic>;

    fn is_valid(&self) -> bool {
        !self.validate().iter().any(Diagnostic::is_error)
    }
}

impl Validate for Record {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> Vec<Diagnostic> {
        validate(self)
    }
}

impl Validate for Prediction {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> Vec<Diagnostic> {
        validate_prediction(self, None)
    }
}

/// Checks every record invariant. An empty result means the record is valid.
pub fn validate(record: &Record) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if record.id.is_empty() {
        out.push(Diagnostic::error("empty-id", "id must be a nonempty string"));
    }
    if let Some(lps) = &record.output_logprobs {
        if lps.len() != record.output_tokens.len() {
            out.push(Diagnostic::error(
                "logprob-length",
                format!("token/logprob length mismatch: {} tokens, {} logprobs", record.output_tokens.len(), lps.len()),
            ));
        }
        for (i, lp) in lps.iter().enumerate() {
            if lp.is_nan() || *lp > 0.0 {
                out.push(Diagnostic::error("logprob-sign", format!("logprob must be ≤ 0 (token {i} has {lp})")));
            }
        }
    }
    let text_len = record.text_len();
    if let Some(hard) = &record.hard_labels {
        out.extend(hard_span_faults(hard, text_len).into_iter().map(|f| describe(f, "hard_labels", text_len)));
    }
    if let Some(soft) = &record.soft_labels {
        out.extend(soft_span_faults(soft, text_len).into_iter().map(|f| describe(f, "soft_labels", text_len)));
    }
    out
}

/// Checks a prediction. Bounds are only checked when the text length of
/// the referenced record is known.
pub fn validate_prediction(pred: &Prediction, text_len: Option<usize>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if pred.id.is_empty() {
        out.push(Diagnostic::error("empty-id", "id must be a nonempty string"));
    }
    let bound = text_len.unwrap_or(usize::MAX);
    if let Some(hard) = &pred.hard_labels {
        out.extend(hard_span_faults(hard, bound).into_iter().map(|f| describe(f, "hard_labels", bound)));
    }
    if let Some(soft) = &pred.soft_labels {
        out.extend(soft_span_faults(soft, bound).into_iter().map(|f| describe(f, "soft_labels", bound)));
    }
    out
}

fn describe(fault: SpanFault, field: &str, text_len: usize) -> Diagnostic {
    match fault {
        SpanFault::Empty { index } => {
            Diagnostic::error("span-empty", format!("{field}[{index}]: span must satisfy start < end"))
        }
        SpanFault::OutOfBounds { index } => {
            Diagnostic::error("span-bounds", format!("{field}[{index}]: span out of bounds (text length {text_len})"))
        }
        SpanFault::Unsorted { index } => {
            Diagnostic::error("span-order", format!("{field}[{index}]: spans must be sorted by start"))
        }
        SpanFault::Overlap { index } => Diagnostic::error("span-overlap", format!("{field}[{index}]: spans overlap")),
        SpanFault::ProbRange { index } => {
            Diagnostic::error("prob-range", format!("{field}[{index}]: prob must lie in [0, 1]"))
        }
        SpanFault::NonCanonical { index } => Diagnostic::warning(
            "soft-noncanonical",
            format!("{field}[{index}]: adjacent spans share a probability and should be merged"),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Record {
        Record::new("a1", "Hi", vec!["Hi".into()])
    }

    fn rules(r: &Record) -> Vec<&'static str> {
        validate(r).into_iter().map(|d| d.rule).collect()
    }

    #[test]
    fn well_formed_is_clean() {
        assert!(validate(&minimal()).is_empty());
    }

    #[test]
    fn positive_logprob() {
        let mut r = minimal();
        r.output_logprobs = Some(vec![0.5]);
        let d = validate(&r);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, "logprob-sign");
        assert!(d[0].message.contains("logprob must be ≤ 0"));
    }

    #[test]
    fn logprob_length() {
        let mut r = Record::new("x", "a b c", vec!["a".into(), " b".into(), " c".into()]);
        r.output_logprobs = Some(vec![-0.1, -0.2]);
        let d = validate(&r);
        assert_eq!(d[0].rule, "logprob-length");
        assert!(d[0].message.contains("token/logprob length mismatch"));
    }

    #[test]
    fn overlapping_hard_spans() {
        let mut r = Record::new("x", "abcdefgh", vec![]);
        r.hard_labels = Some(vec![HardSpan::new(0, 4), HardSpan::new(2, 6)]);
        assert_eq!(rules(&r), vec!["span-overlap"]);
        assert!(validate(&r)[0].message.contains("spans overlap"));
    }

    #[test]
    fn out_of_bounds_hard_span() {
        let mut r = minimal();
        r.hard_labels = Some(vec![HardSpan::new(0, 5)]);
        assert_eq!(rules(&r), vec!["span-bounds"]);
        assert!(validate(&r)[0].message.contains("span out of bounds"));
    }

    #[test]
    fn soft_noncanonical_is_only_a_warning() {
        let mut r = Record::new("x", "abcd", vec![]);
        r.soft_labels = Some(vec![SoftSpan::new(0, 1, 0.5), SoftSpan::new(1, 2, 0.5)]);
        let d = validate(&r);
        assert_eq!(d.len(), 1);
        assert!(!d[0].is_error());
        assert!(r.is_valid());
    }

    #[test]
    fn validation_is_pure() {
        let mut r = minimal();
        r.output_logprobs = Some(vec![1.0, 2.0]);
        assert_eq!(validate(&r), validate(&r));
    }

    #[test]
    fn prediction_bounds_need_text() {
        let p = Prediction::new("p", vec![HardSpan::new(0, 50)], vec![]);
        assert!(validate_prediction(&p, None).is_empty());
        assert_eq!(validate_prediction(&p, Some(10))[0].rule, "span-bounds");
    }
}
