//! Conversions between annotation formats: multi-annotator spans, per
//! character probabilities, run-length soft spans and decoded hard spans.

use serde::{Deserialize, Serialize};

use crate::error::LabelError;
use crate::scalar::Prob;
use crate::span::{HardSpan, SoftSpan};

/// Per-character hallucination probability over an output text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CharProbVector<T = f64> {
    probs: Vec<T>,
}

impl<T: Prob> CharProbVector<T> {
    /// Fails if any element lies outside `[0, 1]`.
    pub fn new(probs: Vec<T>) -> Result<Self, LabelError> {
        match probs.iter().position(|p| !p.is_unit()) {
            Some(index) => Err(LabelError::ProbRange { index }),
            None => Ok(Self { probs }),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self { probs: vec![T::zero(); len] }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }

    /// Converts element-wise into another scalar type.
    pub fn cast<U: Prob>(&self) -> Option<CharProbVector<U>> {
        let probs = self.probs.iter().map(|p| p.to_f64().and_then(U::from_f64)).collect::<Option<Vec<_>>>()?;
        CharProbVector::new(probs).ok()
    }
}

impl<T> AsRef<[T]> for CharProbVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.probs
    }
}

/// Span lists from several annotators over one text.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    annotators: Vec<Vec<HardSpan>>,
    text_len: usize,
}

impl AnnotationSet {
    pub fn new(annotators: Vec<Vec<HardSpan>>, text_len: usize) -> Result<Self, LabelError> {
        if annotators.is_empty() {
            return Err(LabelError::NoAnnotators);
        }
        for spans in &annotators {
            check_ranges(spans.iter().copied(), text_len)?;
        }
        Ok(Self { annotators, text_len })
    }

    pub fn annotators(&self) -> &[Vec<HardSpan>] {
        &self.annotators
    }

    pub fn text_len(&self) -> usize {
        self.text_len
    }
}

fn check_ranges(spans: impl Iterator<Item = HardSpan>, text_len: usize) -> Result<(), LabelError> {
    let mut prev_end = 0;
    for (index, s) in spans.enumerate() {
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
    }
    Ok(())
}

/// Fraction of annotators marking each character.
pub fn aggregate_annotations<T: Prob>(set: &AnnotationSet) -> CharProbVector<T> {
    let mut votes = vec![0usize; set.text_len];
    for spans in &set.annotators {
        for s in spans {
            votes[s.start..s.end].iter_mut().for_each(|v| *v += 1);
        }
    }
    let n = T::from_count(set.annotators.len());
    CharProbVector { probs: votes.into_iter().map(|v| T::from_count(v) / n).collect() }
}

/// Run-length encodes a vector, dropping zero runs. Probabilities are copied,
/// so [`vector_from_soft_spans`] reproduces the input exactly.
pub fn soft_spans_from_vector<T: Prob>(v: &CharProbVector<T>) -> Vec<SoftSpan<T>> {
    let mut out: Vec<SoftSpan<T>> = Vec::new();
    for (i, &p) in v.probs.iter().enumerate() {
        if p == T::zero() {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.end == i && last.prob == p => last.end = i + 1,
            _ => out.push(SoftSpan::new(i, i + 1, p)),
        }
    }
    out
}

/// Expands soft spans into a vector of length `text_len`; unlisted
/// characters get zero.
pub fn vector_from_soft_spans<T: Prob>(
    spans: &[SoftSpan<T>],
    text_len: usize,
) -> Result<CharProbVector<T>, LabelError> {
    check_ranges(spans.iter().map(SoftSpan::range), text_len)?;
    let mut probs = vec![T::zero(); text_len];
    for (index, s) in spans.iter().enumerate() {
        if !s.prob.is_unit() {
            return Err(LabelError::ProbRange { index });
        }
        probs[s.start..s.end].fill(s.prob);
    }
    Ok(CharProbVector { probs })
}

/// Characters covered by any of `spans`, as a unit-probability vector.
pub fn vector_from_hard_spans<T: Prob>(spans: &[HardSpan], text_len: usize) -> Result<CharProbVector<T>, LabelError> {
    check_ranges(spans.iter().copied(), text_len)?;
    let mut probs = vec![T::zero(); text_len];
    for s in spans {
        probs[s.start..s.end].fill(T::one());
    }
    Ok(CharProbVector { probs })
}

/// Maximal runs of characters with probability strictly above `threshold`.
pub fn hard_from_soft<T: Prob>(v: &CharProbVector<T>, threshold: T) -> Vec<HardSpan> {
    let mut out: Vec<HardSpan> = Vec::new();
    for (i, &p) in v.probs.iter().enumerate() {
        if p > threshold {
            match out.last_mut() {
                Some(last) if last.end == i => last.end = i + 1,
                _ => out.push(HardSpan::new(i, i + 1)),
            }
        }
    }
    out
}

/// Span decoding parameters. Defaults: threshold 0.5, min_len 1,
/// merge_gap 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams<T = f64> {
    pub threshold: T,
    pub min_len: usize,
    pub merge_gap: usize,
}

impl<T: Prob> Default for DecodeParams<T> {
    fn default() -> Self {
        Self { threshold: T::one() / (T::one() + T::one()), min_len: 1, merge_gap: 0 }
    }
}

impl<T: Prob> DecodeParams<T> {
    pub fn new(threshold: T, min_len: usize, merge_gap: usize) -> Self {
        Self { threshold, min_len, merge_gap }
    }

    pub fn is_valid(&self) -> bool {
        self.threshold.is_unit() && self.min_len >= 1
    }
}

/// Thresholds (strictly), merges spans separated by at most `merge_gap`
/// characters, then drops spans shorter than `min_len`.
pub fn decode_spans<T: Prob>(v: &CharProbVector<T>, params: &DecodeParams<T>) -> Vec<HardSpan> {
    let mut merged: Vec<HardSpan> = Vec::new();
    for s in hard_from_soft(v, params.threshold) {
        match merged.last_mut() {
            Some(last) if s.start - last.end <= params.merge_gap => last.end = s.end,
            _ => merged.push(s),
        }
    }
    merged.retain(|s| s.len() >= params.min_len);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn hs(pairs: &[(usize, usize)]) -> Vec<HardSpan> {
        pairs.iter().map(|&p| p.into()).collect()
    }

    fn v(xs: &[f64]) -> CharProbVector {
        CharProbVector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn three_annotators() {
        let set = AnnotationSet::new(vec![hs(&[(0, 3)]), hs(&[(0, 2)]), vec![]], 6).unwrap();
        let got = aggregate_annotations::<f64>(&set);
        assert_eq!(got.as_slice(), &[2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0, 0.0]);
        assert_eq!(hard_from_soft(&got, 0.5), hs(&[(0, 2)]));

        let exact = aggregate_annotations::<Ratio<i64>>(&set);
        let third = Ratio::new(1, 3);
        assert_eq!(exact.as_slice()[..3], [third * 2, third * 2, third]);
    }

    #[test]
    fn single_and_unanimous_absence() {
        let set = AnnotationSet::new(vec![hs(&[(1, 2)])], 3).unwrap();
        assert_eq!(aggregate_annotations::<f64>(&set).as_slice(), &[0.0, 1.0, 0.0]);
        let set = AnnotationSet::new(vec![vec![], vec![]], 4).unwrap();
        assert_eq!(aggregate_annotations::<f32>(&set).as_slice(), &[0.0; 4]);
    }

    #[test]
    fn annotation_set_rejects_bad_input() {
        assert_eq!(AnnotationSet::new(vec![], 3), Err(LabelError::NoAnnotators));
        assert!(matches!(AnnotationSet::new(vec![hs(&[(0, 4)])], 3), Err(LabelError::OutOfBounds { .. })));
        assert!(matches!(AnnotationSet::new(vec![hs(&[(0, 2), (1, 3)])], 3), Err(LabelError::Overlap { .. })));
    }

    #[test]
    fn run_length() {
        assert_eq!(soft_spans_from_vector(&v(&[0.0, 0.5, 0.5, 0.0])), vec![SoftSpan::new(1, 3, 0.5)]);
        assert_eq!(
            soft_spans_from_vector(&v(&[1.0, 1.0, 0.0, 1.0])),
            vec![SoftSpan::new(0, 2, 1.0), SoftSpan::new(3, 4, 1.0)]
        );
        assert!(soft_spans_from_vector(&v(&[0.0, 0.0])).is_empty());
        assert_eq!(
            soft_spans_from_vector(&v(&[0.25, 0.75])),
            vec![SoftSpan::new(0, 1, 0.25), SoftSpan::new(1, 2, 0.75)]
        );
    }

    #[test]
    fn expand() {
        assert_eq!(vector_from_soft_spans(&[SoftSpan::new(1, 3, 0.5)], 4).unwrap(), v(&[0.0, 0.5, 0.5, 0.0]));
        assert_eq!(vector_from_soft_spans::<f64>(&[], 2).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(
            vector_from_soft_spans(&[SoftSpan::new(0, 1, 0.25), SoftSpan::new(1, 2, 0.75)], 2).unwrap(),
            v(&[0.25, 0.75])
        );
        assert!(vector_from_soft_spans(&[SoftSpan::new(0, 2, 0.5), SoftSpan::new(1, 3, 0.5)], 4).is_err());
        assert!(vector_from_soft_spans(&[SoftSpan::new(0, 5, 0.5)], 4).is_err());
        assert!(vector_from_soft_spans(&[SoftSpan::new(0, 1, 1.5)], 4).is_err());
    }

    #[test]
    fn thresholding() {
        assert!(hard_from_soft(&v(&[1.0, 0.7, 1.0]), 1.0).is_empty());
        assert_eq!(hard_from_soft(&v(&[0.6, 0.0, 0.6]), 0.5), hs(&[(0, 1), (2, 3)]));
        // 1-1 split between two annotators is not a majority
        assert!(hard_from_soft(&v(&[0.5, 0.5]), 0.5).is_empty());
    }

    #[test]
    fn decoding() {
        let x = v(&[0.9, 0.1, 0.9]);
        assert_eq!(decode_spans(&x, &DecodeParams::new(0.5, 1, 1)), hs(&[(0, 3)]));
        assert_eq!(decode_spans(&x, &DecodeParams::new(0.5, 1, 0)), hs(&[(0, 1), (2, 3)]));
        assert!(decode_spans(&v(&[0.9, 0.0, 0.0, 0.0]), &DecodeParams::new(0.5, 2, 0)).is_empty());
    }

    #[test]
    fn vector_rejects_out_of_range() {
        assert_eq!(CharProbVector::new(vec![0.0, 1.1]), Err(LabelError::ProbRange { index: 1 }));
        assert!(CharProbVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn default_params() {
        let d = DecodeParams::<f64>::default();
        assert_eq!((d.threshold, d.min_len, d.merge_gap), (0.5, 1, 0));
        assert_eq!(DecodeParams::<Ratio<i64>>::default().threshold, Ratio::new(1, 2));
    }
}
