//! Character ranges over output text.
//!
//! All offsets count Unicode scalar values and are end-exclusive. Text is
//! never normalized, so a precomposed `ï` is one character and a decomposed
//! one is two.

use serde::{Deserialize, Serialize};

use crate::scalar::Prob;

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// A character range labeled as hallucinated. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct HardSpan {
    pub start: usize,
    pub end: usize,
}

impl HardSpan {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl From<(usize, usize)> for HardSpan {
    fn from((start, end): (usize, usize)) -> Self {
        Self { start, end }
    }
}

impl From<HardSpan> for (usize, usize) {
    fn from(s: HardSpan) -> Self {
        (s.start, s.end)
    }
}

/// A character range carrying a hallucination probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftSpan<T = f64> {
    pub start: usize,
    pub end: usize,
    pub prob: T,
}

impl<T> SoftSpan<T> {
    pub const fn new(start: usize, end: usize, prob: T) -> Self {
        Self { start, end, prob }
    }

    pub fn range(&self) -> HardSpan {
        HardSpan::new(self.start, self.end)
    }
}

/// A rule broken by a span list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanFault {
    /// `start >= end`
    Empty { index: usize },
    /// `end` beyond the text
    OutOfBounds { index: usize },
    /// starts before the previous span starts
    Unsorted { index: usize },
    /// intersects the previous span
    Overlap { index: usize },
    /// probability outside `[0, 1]` (soft spans only)
    ProbRange { index: usize },
    /// touches the previous span with an equal probability (soft spans only)
    NonCanonical { index: usize },
}

/// Checks a hard span list against a text of `text_len` characters.
pub fn hard_span_faults(spans: &[HardSpan], text_len: usize) -> Vec<SpanFault> {
    range_faults(spans.iter().copied(), text_len)
}

/// Checks a soft span list against a text of `text_len` characters.
pub fn soft_span_faults<T: Prob>(spans: &[SoftSpan<T>], text_len: usize) -> Vec<SpanFault> {
    let mut faults = range_faults(spans.iter().map(SoftSpan::range), text_len);
    for (i, s) in spans.iter().enumerate() {
        if !s.prob.is_unit() {
            faults.push(SpanFault::ProbRange { index: i });
        }
        if i > 0 {
            let prev = &spans[i - 1];
            if prev.end == s.start && prev.prob == s.prob {
                faults.push(SpanFault::NonCanonical { index: i });
            }
        }
    }
    faults
}

fn range_faults(spans: impl Iterator<Item = HardSpan>, text_len: usize) -> Vec<SpanFault> {
    let mut faults = Vec::new();
    let mut prev: Option<HardSpan> = None;
    for (index, s) in spans.enumerate() {
        if s.is_empty() {
            faults.push(SpanFault::Empty { index });
        }
        if s.end > text_len || s.start >= text_len {
            faults.push(SpanFault::OutOfBounds { index });
        }
        if let Some(p) = prev {
            if s.start < p.start {
                faults.push(SpanFault::Unsorted { index });
            } else if s.start < p.end {
                faults.push(SpanFault::Overlap { index });
            }
        }
        prev = Some(s);
    }
    faults
}
