//! Character-level hallucination span toolkit.
//!
//! Reads LLM generations with their tokens and per-token log-probabilities,
//! aligns tokens to characters, converts between annotation formats, runs
//! reference detectors, generates synthetic labeled records, and scores
//! predictions with character-level IoU, Spearman correlation and
//! precision/recall/F1.
//!
//! Offsets everywhere are Unicode scalar values, end-exclusive.
//!
//! Label and metric code is generic over the probability scalar (see
//! [`scalar`]); the aliases below fix the common choices.

pub mod align;
pub mod baselines;
pub mod error;
pub mod jsonl;
pub mod labels;
pub mod metrics;
pub mod record;
pub mod scalar;
pub mod span;
pub mod synthgen;

pub use align::{align_tokens, char_probs_from_token_probs, TokenAlignment};
pub use baselines::{detect, DetectorConfig, DetectorKind};
pub use error::{AlignmentError, DataError, DetectError, LabelError, ScoreError, SynthError};
pub use jsonl::{parse_predictions, parse_records};
pub use labels::{
    aggregate_annotations, decode_spans, hard_from_soft, soft_spans_from_vector, vector_from_soft_spans, AnnotationSet,
    CharProbVector, DecodeParams,
};
pub use metrics::{iou, prf, score_dataset, spearman, Prf, RecordScores, ScoreReport};
pub use record::{validate, Diagnostic, Prediction, Record, Severity, Validate};
pub use scalar::{Prob, Real};
pub use span::{char_len, HardSpan, SoftSpan};
pub use synthgen::{generate, GenSpec, SeedFact};

/// Exact rational probabilities.
pub type Exact = num_rational::Ratio<i64>;

/// Double precision per-character probabilities.
pub type CharProbs = CharProbVector<f64>;
/// Single precision per-character probabilities.
pub type CharProbs32 = CharProbVector<f32>;
/// Exact per-character probabilities, e.g. annotator vote fractions.
pub type ExactCharProbs = CharProbVector<Exact>;
