//! Character-level scoring: IoU, Spearman correlation with tied ranks, and
//! precision/recall/F1, per record and over a dataset.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{LabelError, ScoreError};
use crate::labels::{decode_spans, vector_from_hard_spans, vector_from_soft_spans, CharProbVector, DecodeParams};
use crate::record::{Prediction, Record};
use crate::scalar::Real;
use crate::span::HardSpan;

fn check(spans: &[HardSpan], text_len: usize) -> Result<usize, LabelError> {
    let mut total = 0;
    let mut prev_end = 0;
    for (index, s) in spans.iter().enumerate() {
        if s.is_empty() {
            return Err(LabelError::EmptySpan { index });
        }
        if s.end > text_len {
            return Err(LabelError::OutOfBounds { index, text_len });
        }
        if index > 0 && s.start < prev_end {
            return Err(LabelError::Overlap { index });
        }
        prev_end = s.end;
        total += s.len();
    }
    Ok(total)
}

/// Characters in both span lists. Both lists must be sorted and disjoint.
fn intersection(a: &[HardSpan], b: &[HardSpan]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].start.max(b[j].start);
        let hi = a[i].end.min(b[j].end);
        n += hi.saturating_sub(lo);
        if a[i].end < b[j].end {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

struct Overlap {
    pred: usize,
    gold: usize,
    both: usize,
}

fn overlap(pred: &[HardSpan], gold: &[HardSpan], text_len: usize) -> Result<Overlap, LabelError> {
    Ok(Overlap { pred: check(pred, text_len)?, gold: check(gold, text_len)?, both: intersection(pred, gold) })
}

fn ratio<T: Real>(num: usize, den: usize) -> T {
    T::from_count(num) / T::from_count(den)
}

/// `|P ∩ G| / |P ∪ G|` over character sets; 1 when both are empty.
pub fn iou<T: Real>(pred: &[HardSpan], gold: &[HardSpan], text_len: usize) -> Result<T, LabelError> {
    let o = overlap(pred, gold, text_len)?;
    let union = o.pred + o.gold - o.both;
    Ok(if union == 0 { T::one() } else { ratio(o.both, union) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf<T = f64> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

/// Character-level precision, recall and F1.
///
/// An empty prediction has precision 1 only if gold is empty too. Recall
/// against empty gold is 1, since nothing was missed. F1 is 0 when
/// precision + recall is 0.
pub fn prf<T: Real>(pred: &[HardSpan], gold: &[HardSpan], text_len: usize) -> Result<Prf<T>, LabelError> {
    let o = overlap(pred, gold, text_len)?;
    let precision = match (o.pred, o.gold) {
        (0, 0) => T::one(),
        (0, _) => T::zero(),
        (p, _) => ratio(o.both, p),
    };
    let recall = match o.gold {
        0 => T::one(),
        g => ratio(o.both, g),
    };
    let sum = precision + recall;
    let f1 = if sum == T::zero() { T::zero() } else { (precision + precision) * recall / sum };
    Ok(Prf { precision, recall, f1 })
}

/// 1-based ranks, tied values sharing the mean of their positions.
pub fn average_ranks<T: Real>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN in rank input"));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share the mean rank
        let mean = T::from_count(i + 1 + j) / T::from_count(2);
        for &k in &order[i..j] {
            ranks[k] = mean;
        }
        i = j;
    }
    ranks
}

fn pearson<T: Real>(x: &[T], y: &[T]) -> T {
    let n = T::from_count(x.len());
    let mx = x.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = y.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    let r = sxy / (sxx * syy).sqrt();
    r.max(-T::one()).min(T::one())
}

fn is_constant<T: Real>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Spearman rank correlation using average ranks for ties.
///
/// Degenerate inputs: both vectors constant gives 1, exactly one constant
/// gives 0.
pub fn spearman<T: Real>(pred: &[T], gold: &[T]) -> Result<T, ScoreError> {
    if pred.len() != gold.len() {
        return Err(ScoreError::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.is_empty() {
        return Err(ScoreError::Empty);
    }
    match (is_constant(pred), is_constant(gold)) {
        (true, true) => Ok(T::one()),
        (true, false) | (false, true) => Ok(T::zero()),
        (false, false) => Ok(pearson(&average_ranks(pred), &average_ranks(gold))),
    }
}

/// Scores for one record, or their means over a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordScores {
    pub iou: f64,
    pub spearman: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RecordScores {
    fn mean<'a>(items: impl ExactSizeIterator<Item = &'a RecordScores>) -> RecordScores {
        let n = items.len() as f64;
        let mut acc = RecordScores { iou: 0.0, spearman: 0.0, precision: 0.0, recall: 0.0, f1: 0.0 };
        for s in items {
            acc.iou += s.iou;
            acc.spearman += s.spearman;
            acc.precision += s.precision;
            acc.recall += s.recall;
            acc.f1 += s.f1;
        }
        RecordScores {
            iou: acc.iou / n,
            spearman: acc.spearman / n,
            precision: acc.precision / n,
            recall: acc.recall / n,
            f1: acc.f1 / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// Unweighted means over records.
    pub aggregate: RecordScores,
    pub per_record: BTreeMap<String, RecordScores>,
    pub n_records: usize,
}

impl ScoreReport {
    /// Plain-text summary table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let width = self.per_record.keys().map(String::len).max().unwrap_or(0).max("AGGREGATE".len());
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>9}  {:>8}  {:>8}",
            "id", "iou", "spearman", "precision", "recall", "f1"
        );
        let mut row = |name: &str, s: &RecordScores| {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.6}  {:>8.6}  {:>9.6}  {:>8.6}  {:>8.6}",
                name, s.iou, s.spearman, s.precision, s.recall, s.f1
            );
        };
        for (id, s) in &self.per_record {
            row(id, s);
        }
        row("AGGREGATE", &self.aggregate);
        let _ = writeln!(out, "records: {}", self.n_records);
        out
    }
}

fn labels_err(id: &str) -> impl FnOnce(LabelError) -> ScoreError + '_ {
    move |source| ScoreError::Labels { id: id.to_owned(), source }
}

fn index_unique<T>(items: &[T], id: impl Fn(&T) -> &str) -> Result<HashMap<&str, &T>, ScoreError> {
    let mut map = HashMap::with_capacity(items.len());
    for item in items {
        if map.insert(id(item), item).is_some() {
            return Err(ScoreError::DuplicateId(id(item).to_owned()));
        }
    }
    Ok(map)
}

/// Scores one prediction against its gold record.
///
/// Gold probabilities come from `soft_labels` when present, otherwise from
/// `hard_labels` at probability 1. Hard spans on either side are used
/// directly when present and otherwise decoded from the soft vector. A
/// prediction without soft labels counts as all zeros for correlation.
pub fn score_record(pred: &Prediction, gold: &Record, decode: &DecodeParams) -> Result<RecordScores, ScoreError> {
    let id = gold.id.as_str();
    let n = gold.text_len();
    let gold_vec: CharProbVector = match (&gold.soft_labels, &gold.hard_labels) {
        (Some(soft), _) => vector_from_soft_spans(soft, n).map_err(labels_err(id))?,
        (None, Some(hard)) => vector_from_hard_spans(hard, n).map_err(labels_err(id))?,
        (None, None) => return Err(ScoreError::MissingGoldLabels(id.to_owned())),
    };
    let gold_hard = match &gold.hard_labels {
        Some(h) => h.clone(),
        None => decode_spans(&gold_vec, decode),
    };
    let pred_vec: CharProbVector = match &pred.soft_labels {
        Some(soft) => vector_from_soft_spans(soft, n).map_err(labels_err(id))?,
        None => CharProbVector::zeros(n),
    };
    let pred_hard = match &pred.hard_labels {
        Some(h) => h.clone(),
        None => decode_spans(&pred_vec, decode),
    };

    let iou = iou::<f64>(&pred_hard, &gold_hard, n).map_err(labels_err(id))?;
    let prf = prf::<f64>(&pred_hard, &gold_hard, n).map_err(labels_err(id))?;
    // an empty text has no characters to rank; both sides agree trivially
    let spearman = if n == 0 { 1.0 } else { spearman(pred_vec.as_slice(), gold_vec.as_slice())? };
    Ok(RecordScores { iou, spearman, precision: prf.precision, recall: prf.recall, f1: prf.f1 })
}

/// Scores every gold record against the prediction with the same id.
/// Result does not depend on the order of either input.
pub fn score_dataset(preds: &[Prediction], gold: &[Record], decode: &DecodeParams) -> Result<ScoreReport, ScoreError> {
    let gold_by_id = index_unique(gold, |r| r.id.as_str())?;
    let pred_by_id = index_unique(preds, |p| p.id.as_str())?;

    let mut missing: Vec<String> =
        gold_by_id.keys().filter(|k| !pred_by_id.contains_key(*k)).map(|k| k.to_string()).collect();
    let mut unknown: Vec<String> =
        pred_by_id.keys().filter(|k| !gold_by_id.contains_key(*k)).map(|k| k.to_string()).collect();
    if !missing.is_empty() || !unknown.is_empty() {
        missing.sort();
        unknown.sort();
        return Err(ScoreError::IdMismatch { missing, unknown });
    }
    if gold.is_empty() {
        return Err(ScoreError::Empty);
    }

    let mut per_record = BTreeMap::new();
    for (id, record) in &gold_by_id {
        let scores = score_record(pred_by_id[id], record, decode)?;
        per_record.insert(id.to_string(), scores);
    }
    Ok(ScoreReport { aggregate: RecordScores::mean(per_record.values()), n_records: per_record.len(), per_record })
}
