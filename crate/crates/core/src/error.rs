use thiserror::Error;

use crate::record::Diagnostic;

/// Failure while reading or writing line-delimited JSON.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: malformed JSON: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: record {id:?} failed validation: {}", summarize(.diagnostics))]
    Invalid { line: usize, id: String, diagnostics: Vec<Diagnostic> },

    #[error("refusing to serialize invalid record {id:?}: {}", summarize(.diagnostics))]
    Unserializable { id: String, diagnostics: Vec<Diagnostic> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("[{}] {}", d.rule, d.message)).collect::<Vec<_>>().join("; ")
}

/// A token that could not be placed in the output text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot align token {token_index} at character {cursor}: {reason}")]
pub struct AlignmentError {
    /// Index of the first token that could not be matched. Equal to the
    /// number of tokens when the tokens ran out before the text did.
    pub token_index: usize,
    /// Character position in the text where matching stopped.
    pub cursor: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("probability at index {index} is outside [0, 1]")]
    ProbRange { index: usize },

    #[error("span {index} is out of bounds for text of length {text_len}")]
    OutOfBounds { index: usize, text_len: usize },

    #[error("span {index} overlaps or precedes the previous span")]
    Overlap { index: usize },

    #[error("span {index} is empty")]
    EmptySpan { index: usize },

    #[error("annotation set has no annotators")]
    NoAnnotators,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("id mismatch: missing predictions for {missing:?}; unknown prediction ids {unknown:?}")]
    IdMismatch { missing: Vec<String>, unknown: Vec<String> },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("gold record {0:?} carries no labels")]
    MissingGoldLabels(String),

    #[error("record {id:?}: {source}")]
    Labels {
        id: String,
        #[source]
        source: LabelError,
    },

    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("empty vectors")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("record {0:?} has no output_logprobs")]
    MissingLogprobs(String),

    #[error("record {id:?}: {source}")]
    Alignment {
        id: String,
        #[source]
        source: AlignmentError,
    },

    #[error("record {id:?}: {source}")]
    Labels {
        id: String,
        #[source]
        source: LabelError,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("seed fact list is empty")]
    NoSeeds,

    #[error("invalid perturbation mix: {0}")]
    InvalidMix(String),

    #[error("seed fact {index}: {reason}")]
    InvalidSeed { index: usize, reason: String },

    #[error("no seed fact supports perturbation {0}")]
    Unsupported(&'static str),

    #[error("range {start}..{end} of {text:?} is not a decimal integer")]
    NotANumber { text: String, start: usize, end: usize },
}
