//! Brute-force oracles and random case generators.
//!
//! The oracles deliberately avoid the library's code paths: span metrics
//! work on per-character bitmaps, and ranks are computed by pairwise
//! counting instead of sorting.

use halluspan_core::labels::{soft_spans_from_vector, CharProbVector};
use halluspan_core::{HardSpan, Record};
use rand::Rng;
use serde_json::{json, Map};

pub mod oracle {
    use super::HardSpan;

    pub fn bitmap(spans: &[HardSpan], len: usize) -> Vec<bool> {
        let mut bits = vec![false; len];
        for s in spans {
            for b in &mut bits[s.start..s.end] {
                *b = true;
            }
        }
        bits
    }

    fn counts(pred: &[HardSpan], gold: &[HardSpan], len: usize) -> (usize, usize, usize, usize) {
        let (p, g) = (bitmap(pred, len), bitmap(gold, len));
        let both = p.iter().zip(&g).filter(|(a, b)| **a && **b).count();
        let either = p.iter().zip(&g).filter(|(a, b)| **a || **b).count();
        (p.iter().filter(|x| **x).count(), g.iter().filter(|x| **x).count(), both, either)
    }

    pub fn iou(pred: &[HardSpan], gold: &[HardSpan], len: usize) -> f64 {
        let (_, _, both, either) = counts(pred, gold, len);
        if either == 0 {
            1.0
        } else {
            both as f64 / either as f64
        }
    }

    /// `(precision, recall, f1)`.
    pub fn prf(pred: &[HardSpan], gold: &[HardSpan], len: usize) -> (f64, f64, f64) {
        let (np, ng, both, _) = counts(pred, gold, len);
        let precision = if np == 0 {
            if ng == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            both as f64 / np as f64
        };
        let recall = if ng == 0 { 1.0 } else { both as f64 / ng as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        (precision, recall, f1)
    }

    /// Average rank by counting: `1 + #less + (#equal - 1) / 2`.
    pub fn ranks(xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|x| {
                let less = xs.iter().filter(|y| *y < x).count() as f64;
                let equal = xs.iter().filter(|y| *y == x).count() as f64;
                1.0 + less + (equal - 1.0) / 2.0
            })
            .collect()
    }

    pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
        let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
        match (constant(x), constant(y)) {
            (true, true) => return 1.0,
            (true, false) | (false, true) => return 0.0,
            _ => {}
        }
        let (rx, ry) = (ranks(x), ranks(y));
        let n = x.len() as f64;
        let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }
}

/// Probability levels used by the metric oracle checks.
pub const QUARTER_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub fn random_levels(rng: &mut impl Rng, len: usize, levels: &[f64]) -> Vec<f64> {
    (0..len).map(|_| levels[rng.random_range(0..levels.len())]).collect()
}

/// Sorted disjoint spans read off a random bitmap.
pub fn random_spans(rng: &mut impl Rng, len: usize, density: f64) -> Vec<HardSpan> {
    let bits: Vec<bool> = (0..len).map(|_| rng.random_bool(density)).collect();
    let mut out: Vec<HardSpan> = Vec::new();
    for (i, b) in bits.into_iter().enumerate() {
        if b {
            match out.last_mut() {
                Some(last) if last.end == i => last.end = i + 1,
                _ => out.push(HardSpan::new(i, i + 1)),
            }
        }
    }
    out
}

const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'k', 'n', 'o', 's', 't', 'x', 'z', 'A', 'Q', '0', '7', '.', ',', 'é', 'ß', 'ü', '中',
    '文', 'й', '😀', '\u{0308}',
];

/// A character that never occurs in generated text.
pub const FOREIGN: char = '¤';

fn random_word(rng: &mut impl Rng, max: usize) -> String {
    let n = rng.random_range(1..=max);
    (0..n).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

/// Random text mixing words, single and repeated spaces.
pub fn random_text(rng: &mut impl Rng, max_words: usize) -> String {
    let words = rng.random_range(0..=max_words);
    let mut out = String::new();
    for i in 0..words {
        if i > 0 || rng.random_bool(0.2) {
            let spaces = if rng.random_bool(0.85) { 1 } else { rng.random_range(2..=3) };
            out.extend(std::iter::repeat_n(' ', spaces));
        }
        out.push_str(&random_word(rng, 7));
    }
    if rng.random_bool(0.1) {
        out.push(' ');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenStyle {
    Plain,
    WordPiece,
    ByteLevel,
    SentencePiece,
    ByteEscape,
}

impl TokenStyle {
    pub const ALL: [TokenStyle; 5] = [
        TokenStyle::Plain,
        TokenStyle::WordPiece,
        TokenStyle::ByteLevel,
        TokenStyle::SentencePiece,
        TokenStyle::ByteEscape,
    ];
}

/// Text plus tokens and the offsets the tokenizer that produced them knows.
#[derive(Debug, Clone)]
pub struct TokenCase {
    pub style: TokenStyle,
    pub text: String,
    pub tokens: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
}

fn chunks(rng: &mut impl Rng, chars: &[char], base: usize, out: &mut Vec<(usize, usize)>) {
    let mut i = 0;
    while i < chars.len() {
        let n = rng.random_range(1..=4).min(chars.len() - i);
        out.push((base + i, base + i + n));
        i += n;
    }
}

fn slice(chars: &[char], (s, e): (usize, usize)) -> String {
    chars[s..e].iter().collect()
}

/// Splits random text into contiguous chunks and renders them in `style`.
pub fn tokenize_case(rng: &mut impl Rng, style: TokenStyle) -> TokenCase {
    let mut tokens = Vec::new();
    let mut offsets = Vec::new();
    let text = match style {
        TokenStyle::WordPiece => {
            // words separated by single spaces; spaces are never tokens
            let n = rng.random_range(1..=8);
            let words: Vec<String> = (0..n).map(|_| random_word(rng, 9)).collect();
            let text = words.join(" ");
            let chars: Vec<char> = text.chars().collect();
            let mut base = 0;
            for w in &words {
                let wlen = w.chars().count();
                let mut ranges = Vec::new();
                chunks(rng, &chars[base..base + wlen], base, &mut ranges);
                for (k, r) in ranges.into_iter().enumerate() {
                    let piece = slice(&chars, r);
                    tokens.push(if k == 0 { piece } else { format!("##{piece}") });
                    offsets.push(r);
                }
                base += wlen + 1;
            }
            text
        }
        TokenStyle::ByteEscape => {
            let text = random_text(rng, 8);
            let chars: Vec<char> = text.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let escape = !chars[i].is_ascii() || rng.random_bool(0.2);
                if escape {
                    let mut buf = [0u8; 4];
                    let bytes = chars[i].encode_utf8(&mut buf).as_bytes();
                    for (k, b) in bytes.iter().enumerate() {
                        tokens.push(format!("<0x{b:02X}>"));
                        offsets.push(if k + 1 == bytes.len() { (i, i + 1) } else { (i, i) });
                    }
                    i += 1;
                } else {
                    let mut j = i;
                    while j < chars.len() && chars[j].is_ascii() && j - i < 4 {
                        j += 1;
                    }
                    let n = rng.random_range(1..=j - i);
                    tokens.push(slice(&chars, (i, i + n)));
                    offsets.push((i, i + n));
                    i += n;
                }
            }
            text
        }
        TokenStyle::Plain | TokenStyle::ByteLevel | TokenStyle::SentencePiece => {
            let text = random_text(rng, 8);
            let chars: Vec<char> = text.chars().collect();
            chunks(rng, &chars, 0, &mut offsets);
            let marker = match style {
                TokenStyle::ByteLevel => Some('Ġ'),
                TokenStyle::SentencePiece => Some('▁'),
                _ => None,
            };
            for &r in &offsets {
                let piece = slice(&chars, r);
                tokens.push(match (marker, piece.strip_prefix(' ')) {
                    (Some(m), Some(rest)) => format!("{m}{rest}"),
                    _ => piece,
                });
            }
            text
        }
    };
    TokenCase { style, text, tokens, offsets }
}

/// Damages a token list so that no correct alignment exists. Returns `None`
/// when the case has no tokens.
pub fn corrupt(rng: &mut impl Rng, case: &TokenCase) -> Option<Vec<String>> {
    if case.tokens.is_empty() {
        return None;
    }
    let mut tokens = case.tokens.clone();
    let i = rng.random_range(0..tokens.len());
    match rng.random_range(0..3) {
        // a foreign character inside an existing token
        0 => {
            let mut chars: Vec<char> = tokens[i].chars().collect();
            let k = rng.random_range(0..chars.len());
            chars[k] = FOREIGN;
            tokens[i] = chars.into_iter().collect();
        }
        // an extra token the text cannot contain
        1 => tokens.insert(rng.random_range(0..=tokens.len()), format!("{FOREIGN}x")),
        // an invalid byte token
        _ => tokens[i] = "<0xFF>".into(),
    }
    Some(tokens)
}

/// A random valid record exercising every optional field and non-ASCII text.
pub fn random_record(rng: &mut impl Rng, index: usize) -> Record {
    let text = random_text(rng, 10);
    let tokens: Vec<String> = text.split_inclusive(' ').map(String::from).collect();
    let mut r = Record::new(format!("rec-{index}-{}", rng.random::<u32>()), text, tokens);
    let len = r.text_len();
    if rng.random_bool(0.5) {
        r.lang = ["en", "fi", "zh", "ar"][rng.random_range(0..4)].into();
    }
    if rng.random_bool(0.5) {
        r.model_id = format!("model/{}", random_word(rng, 5));
    }
    if rng.random_bool(0.5) {
        r.model_input = random_text(rng, 6);
    }
    if rng.random_bool(0.6) {
        r.output_logprobs = Some(
            (0..r.output_tokens.len())
                .map(|_| if rng.random_bool(0.1) { 0.0 } else { -rng.random::<f64>() * 12.0 })
                .collect(),
        );
    }
    if rng.random_bool(0.7) {
        r.hard_labels = Some(random_spans(rng, len, 0.3));
    }
    if rng.random_bool(0.7) {
        let probs: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random::<f64>() }).collect();
        r.soft_labels = Some(soft_spans_from_vector(&CharProbVector::new(probs).unwrap()));
    }
    if rng.random_bool(0.4) {
        let mut extra = Map::new();
        extra.insert("x_note".into(), json!(random_word(rng, 6)));
        extra.insert("x_nested".into(), json!({"k": [1, rng.random::<f64>(), null, true]}));
        r.extra = extra;
    }
    r
}
