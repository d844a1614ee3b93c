//! Rule-based generator of labeled hallucination records.
//!
//! Each record takes a seed answer and applies one perturbation: an entity
//! or date swap, a number change, a negation flip, or an appended false
//! clause. The hard label is exactly the perturbed character range, so gold
//! spans are correct by construction.

use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map};

use crate::align::align_tokens;
use crate::error::SynthError;
use crate::record::Record;
use crate::span::{char_len, HardSpan, SoftSpan};

/// Seed facts shipped with the crate, one JSON object per line.
pub const BUNDLED_SEED_FACTS: &str = include_str!("../data/seed_facts.jsonl");

pub const DEFAULT_CLAUSES: &[&str] = &[
    ", which has 12 districts",
    ", according to a 2019 survey",
    " and was renamed in 1950",
    ", a fact confirmed by NASA",
    ", as reported by the BBC in 1998",
    " and is home to 40 million people",
    ", which won the Nobel Prize",
    " after a decade of civil war",
    ", the first of its kind in Asia",
    " and has been closed since 2004",
    ", designed by a team of 300 engineers",
    " despite heavy snowfall that year",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotKind {
    Entity,
    Number,
    Date,
    NegationSite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub start: usize,
    pub end: usize,
    pub kind: SlotKind,
    pub alternatives: Vec<String>,
}

impl Slot {
    pub fn range(&self) -> HardSpan {
        HardSpan::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFact {
    pub question: String,
    pub answer_text: String,
    pub slots: Vec<Slot>,
}

impl SeedFact {
    fn check(&self) -> Result<(), String> {
        let len = char_len(&self.answer_text);
        let mut ranges: Vec<_> = self.slots.iter().map(Slot::range).collect();
        ranges.sort();
        for (i, s) in self.slots.iter().enumerate() {
            if s.start >= s.end || s.end > len {
                return Err(format!("slot {i} range {}..{} invalid for length {len}", s.start, s.end));
            }
            if s.alternatives.is_empty() {
                return Err(format!("slot {i} has no alternatives"));
            }
        }
        if ranges.windows(2).any(|w| w[1].start < w[0].end) {
            return Err("slots overlap".into());
        }
        Ok(())
    }

    fn slot_text(&self, slot: &Slot) -> String {
        self.answer_text.chars().skip(slot.start).take(slot.end - slot.start).collect()
    }

    /// Slots that `kind` can act on.
    fn slots_for(&self, kind: Perturbation) -> Vec<&Slot> {
        self.slots
            .iter()
            .filter(|s| match kind {
                Perturbation::EntitySwap => {
                    matches!(s.kind, SlotKind::Entity | SlotKind::Date)
                        && s.alternatives.iter().any(|a| *a != self.slot_text(s))
                }
                Perturbation::NumberPerturb => s.kind == SlotKind::Number,
                Perturbation::NegationFlip => {
                    s.kind == SlotKind::NegationSite && s.alternatives.iter().any(|a| *a != self.slot_text(s))
                }
                Perturbation::OvergenerationAppend => false,
            })
            .collect()
    }
}

/// Reads seed facts from line-delimited JSON and checks each one.
pub fn load_seed_facts<R: BufRead>(reader: R) -> Result<Vec<SeedFact>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SynthError::InvalidSeed { index: i, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let fact: SeedFact =
            serde_json::from_str(&line).map_err(|e| SynthError::InvalidSeed { index: i, reason: e.to_string() })?;
        fact.check().map_err(|reason| SynthError::InvalidSeed { index: i, reason })?;
        out.push(fact);
    }
    Ok(out)
}

pub fn bundled_seed_facts() -> Vec<SeedFact> {
    load_seed_facts(BUNDLED_SEED_FACTS.as_bytes()).expect("bundled seed facts are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    EntitySwap,
    NumberPerturb,
    NegationFlip,
    OvergenerationAppend,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] = [
        Perturbation::EntitySwap,
        Perturbation::NumberPerturb,
        Perturbation::NegationFlip,
        Perturbation::OvergenerationAppend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::EntitySwap => "entity_swap",
            Perturbation::NumberPerturb => "number_perturb",
            Perturbation::NegationFlip => "negation_flip",
            Perturbation::OvergenerationAppend => "overgeneration_append",
        }
    }
}

/// Probabilities over perturbation kinds. Must be nonnegative and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationMix {
    pub entity_swap: f64,
    pub number_perturb: f64,
    pub negation_flip: f64,
    pub overgeneration_append: f64,
}

impl Default for PerturbationMix {
    fn default() -> Self {
        Self { entity_swap: 0.4, number_perturb: 0.25, negation_flip: 0.15, overgeneration_append: 0.2 }
    }
}

impl PerturbationMix {
    pub fn weight(&self, kind: Perturbation) -> f64 {
        match kind {
            Perturbation::EntitySwap => self.entity_swap,
            Perturbation::NumberPerturb => self.number_perturb,
            Perturbation::NegationFlip => self.negation_flip,
            Perturbation::OvergenerationAppend => self.overgeneration_append,
        }
    }

    pub fn check(&self) -> Result<(), SynthError> {
        let weights = Perturbation::ALL.map(|k| self.weight(k));
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SynthError::InvalidMix(format!("weight {w} is not a nonnegative number")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SynthError::InvalidMix(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> Perturbation {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for kind in Perturbation::ALL {
            acc += self.weight(kind);
            if u < acc {
                return kind;
            }
        }
        // rounding left u just above the total; take the last kind with weight
        *Perturbation::ALL.iter().rev().find(|k| self.weight(**k) > 0.0).expect("mix has positive weight")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_records: usize,
    pub rng_seed: u64,
    pub mix: PerturbationMix,
    pub clause_bank: Vec<String>,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            n_records: 400,
            rng_seed: 42,
            mix: PerturbationMix::default(),
            clause_bank: DEFAULT_CLAUSES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn replace_chars(text: &str, range: HardSpan, with: &str) -> String {
    let mut out: String = text.chars().take(range.start).collect();
    out.push_str(with);
    out.extend(text.chars().skip(range.end));
    out
}

/// Replaces the decimal integer in `range` with a different integer of the
/// same digit count. Numbers of three or more digits keep their leading
/// digit, so years stay plausible.
pub fn perturb_number(text: &str, range: HardSpan, rng: &mut impl Rng) -> Result<(String, HardSpan), SynthError> {
    let not_a_number = || SynthError::NotANumber { text: text.to_owned(), start: range.start, end: range.end };
    if range.is_empty() || range.end > char_len(text) {
        return Err(not_a_number());
    }
    let digits: Vec<u8> = text
        .chars()
        .skip(range.start)
        .take(range.len())
        .map(|c| c.to_digit(10).map(|d| d as u8))
        .collect::<Option<_>>()
        .ok_or_else(not_a_number)?;

    let keep = if digits.len() >= 3 { 1 } else { 0 };
    let fresh = loop {
        let mut candidate = digits.clone();
        for (i, d) in candidate.iter_mut().enumerate().skip(keep) {
            // no new leading zero on multi-digit numbers
            let lo = if i == 0 && digits.len() > 1 && digits[0] != 0 { 1 } else { 0 };
            *d = rng.random_range(lo..10);
        }
        if candidate != digits {
            break candidate;
        }
    };
    let replacement: String = fresh.iter().map(|d| char::from(b'0' + d)).collect();
    Ok((replace_chars(text, range, &replacement), range))
}

fn pick<'a, T>(items: &'a [T], rng: &mut impl Rng) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

struct Applied {
    text: String,
    label: HardSpan,
    source: HardSpan,
}

fn apply(fact: &SeedFact, kind: Perturbation, clauses: &[String], rng: &mut impl Rng) -> Result<Applied, SynthError> {
    let text = &fact.answer_text;
    match kind {
        Perturbation::OvergenerationAppend => {
            let clause = pick(clauses, rng);
            let len = char_len(text);
            // keep sentence-final punctuation at the end
            let at = match text.chars().last() {
                Some('.' | '!' | '?') => len - 1,
                _ => len,
            };
            let point = HardSpan::new(at, at);
            Ok(Applied {
                text: replace_chars(text, point, clause),
                label: HardSpan::new(at, at + char_len(clause)),
                source: point,
            })
        }
        Perturbation::NumberPerturb => {
            let slot = *pick(&fact.slots_for(kind), rng);
            let (text, label) = perturb_number(text, slot.range(), rng)?;
            Ok(Applied { text, label, source: slot.range() })
        }
        Perturbation::EntitySwap | Perturbation::NegationFlip => {
            let slot = *pick(&fact.slots_for(kind), rng);
            let original = fact.slot_text(slot);
            let options: Vec<&String> = slot.alternatives.iter().filter(|a| **a != original).collect();
            let alt = *pick(&options, rng);
            Ok(Applied {
                text: replace_chars(text, slot.range(), alt),
                label: HardSpan::new(slot.start, slot.start + char_len(alt)),
                source: slot.range(),
            })
        }
    }
}

/// Splits on whitespace, keeping each token's character offsets.
pub fn whitespace_tokens(text: &str) -> Vec<(String, HardSpan)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if !current.is_empty() {
                out.push((std::mem::take(&mut current), HardSpan::new(start, i)));
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            current.push(c);
        }
    }
    if !current.is_empty() {
        let end = start + current.chars().count();
        out.push((current, HardSpan::new(start, end)));
    }
    out
}

/// Generates `spec.n_records` labeled records. Output is a pure function of
/// `(seeds, spec)`.
pub fn generate(seeds: &[SeedFact], spec: &GenSpec) -> Result<Vec<Record>, SynthError> {
    if seeds.is_empty() {
        return Err(SynthError::NoSeeds);
    }
    spec.mix.check()?;
    for (index, fact) in seeds.iter().enumerate() {
        fact.check().map_err(|reason| SynthError::InvalidSeed { index, reason })?;
    }
    let eligible: Vec<Vec<usize>> = Perturbation::ALL
        .iter()
        .map(|&kind| match kind {
            Perturbation::OvergenerationAppend if spec.clause_bank.is_empty() => vec![],
            Perturbation::OvergenerationAppend => (0..seeds.len()).collect(),
            _ => (0..seeds.len()).filter(|&i| !seeds[i].slots_for(kind).is_empty()).collect(),
        })
        .collect();
    for (kind, seeds_for_kind) in Perturbation::ALL.iter().zip(&eligible) {
        if spec.mix.weight(*kind) > 0.0 && seeds_for_kind.is_empty() {
            return Err(SynthError::Unsupported(kind.name()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut records = Vec::with_capacity(spec.n_records);
    for i in 0..spec.n_records {
        let kind = spec.mix.sample(&mut rng);
        let source_index = *pick(&eligible[kind as usize], &mut rng);
        let fact = &seeds[source_index];
        let applied = apply(fact, kind, &spec.clause_bank, &mut rng)?;

        let tokens = whitespace_tokens(&applied.text).into_iter().map(|(t, _)| t).collect();
        let mut record = Record::new(format!("synth-{i:05}"), applied.text, tokens);
        record.lang = "en".into();
        record.model_id = "synthgen".into();
        record.model_input = fact.question.clone();
        record.hard_labels = Some(vec![applied.label]);
        record.soft_labels = Some(vec![SoftSpan::new(applied.label.start, applied.label.end, 1.0)]);
        let mut extra = Map::new();
        extra.insert("perturbation".into(), json!(kind.name()));
        extra.insert("source_index".into(), json!(source_index));
        extra.insert("source_span".into(), json!([applied.source.start, applied.source.end]));
        record.extra = extra;
        records.push(record);
    }
    Ok(records)
}

/// Fills in `output_logprobs` so that tokens overlapping a hard label get a
/// low probability, drawn from `[0.05, 0.35)`, and all other tokens a high
/// one from `[0.65, 0.99)`. Gives the surprisal baseline a planted signal.
pub fn plant_logprobs(records: &mut [Record], seed: u64) -> Result<(), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (index, record) in records.iter_mut().enumerate() {
        let alignment = align_tokens(&record.model_output_text, &record.output_tokens)
            .map_err(|e| SynthError::InvalidSeed { index, reason: e.to_string() })?;
        let gold = record.hard_labels.clone().unwrap_or_default();
        let logprobs = alignment
            .ranges
            .iter()
            .map(|&(start, end)| {
                let hit = gold.iter().any(|g| start < g.end && g.start < end);
                let p: f64 = if hit { rng.random_range(0.05..0.35) } else { rng.random_range(0.65..0.99) };
                p.ln()
            })
            .collect();
        record.output_logprobs = Some(logprobs);
    }
    Ok(())
}
