//! Reference detectors that need no trained model.

use serde::{Deserialize, Serialize};

use crate::align::{align_tokens, char_probs_from_token_probs};
use crate::error::DetectError;
use crate::labels::{decode_spans, soft_spans_from_vector, CharProbVector, DecodeParams};
use crate::record::{Prediction, Record};
use crate::span::{HardSpan, SoftSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum DetectorKind {
    None,
    All,
    Random { seed: u64 },
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(flatten)]
    pub kind: DetectorKind,
    pub decode: DecodeParams,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind) -> Self {
        Self { kind, decode: DecodeParams::default() }
    }

    pub fn with_decode(mut self, decode: DecodeParams) -> Self {
        self.decode = decode;
        self
    }
}

/// Runs the configured detector on one record.
pub fn detect(record: &Record, config: &DetectorConfig) -> Result<Prediction, DetectError> {
    match config.kind {
        DetectorKind::None => Ok(detect_constant_none(record)),
        DetectorKind::All => Ok(detect_constant_all(record)),
        DetectorKind::Random { seed } => Ok(detect_random(record, seed, &config.decode)),
        DetectorKind::Logit => detect_logit_surprisal(record, &config.decode),
    }
}

pub fn detect_all(records: &[Record], config: &DetectorConfig) -> Result<Vec<Prediction>, DetectError> {
    records.iter().map(|r| detect(r, config)).collect()
}

fn from_vector(id: &str, v: &CharProbVector, decode: &DecodeParams) -> Prediction {
    Prediction::new(id, decode_spans(v, decode), soft_spans_from_vector(v))
}

/// Marks nothing.
pub fn detect_constant_none(record: &Record) -> Prediction {
    Prediction::new(record.id.clone(), vec![], vec![])
}

/// Marks the whole output text with probability 1.
pub fn detect_constant_all(record: &Record) -> Prediction {
    let n = record.text_len();
    if n == 0 {
        return Prediction::new(record.id.clone(), vec![], vec![]);
    }
    Prediction::new(record.id.clone(), vec![HardSpan::new(0, n)], vec![SoftSpan::new(0, n, 1.0)])
}

/// Probability mass the model withheld from the emitted token: `1 - exp(logprob)`.
pub fn surprisal_score(logprob: f64) -> f64 {
    (-logprob.exp_m1()).clamp(0.0, 1.0)
}

/// Model-aware baseline: scores each token by [`surprisal_score`] and
/// projects the scores onto characters.
pub fn detect_logit_surprisal(record: &Record, decode: &DecodeParams) -> Result<Prediction, DetectError> {
    let logprobs = record.output_logprobs.as_ref().ok_or_else(|| DetectError::MissingLogprobs(record.id.clone()))?;
    let alignment = align_tokens(&record.model_output_text, &record.output_tokens)
        .map_err(|source| DetectError::Alignment { id: record.id.clone(), source })?;
    let scores: Vec<f64> = logprobs.iter().copied().map(surprisal_score).collect();
    let v = char_probs_from_token_probs(&alignment, &scores, record.text_len())
        .map_err(|source| DetectError::Labels { id: record.id.clone(), source })?;
    Ok(from_vector(&record.id, &v, decode))
}

/// Null model: i.i.d. uniform per-character scores from [`CounterRng`]
/// keyed by the record id and `seed`.
pub fn detect_random(record: &Record, seed: u64, decode: &DecodeParams) -> Prediction {
    let mut rng = CounterRng::for_record(&record.id, seed);
    let probs = (0..record.text_len()).map(|_| rng.next_f64()).collect();
    let v = CharProbVector::new(probs).expect("uniform draws lie in [0, 1)");
    from_vector(&record.id, &v, decode)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Counter-based generator: the i-th output is the SplitMix64 finalizer
/// applied to `key + (i + 1) * 0x9E3779B97F4A7C15`. The key for a record is
/// `fnv1a64(id) ^ seed`. Uses only wrapping integer arithmetic, so streams
/// are identical on every platform.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn for_record(id: &str, seed: u64) -> Self {
        Self::new(fnv1a64(id.as_bytes()) ^ seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        let mut z = self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
