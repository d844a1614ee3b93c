//! Token to character offset alignment.
//!
//! Tokens are matched greedily from left to right against the output text.
//! A token may be preceded by at most one skipped whitespace character. When
//! the literal token surface does not match, these surface conventions are
//! tried in order:
//!
//! 1. `▁` prefix read as a leading space (SentencePiece)
//! 2. `Ġ` prefix read as a leading space (byte-level BPE)
//! 3. `##` prefix stripped (WordPiece continuation)
//! 4. `<0xHH>` byte tokens, collected until they decode to one UTF-8 scalar.
//!    The character is assigned to the last byte token; earlier byte tokens
//!    get empty ranges.
//!
//! For `▁`/`Ġ`, the bare remainder without the space is tried last so that a
//! word-initial marker at the very start of the text still aligns.
//!
//! Anything else is an [`AlignmentError`].

use crate::error::{AlignmentError, LabelError};
use crate::labels::CharProbVector;
use crate::scalar::Prob;

/// One end-exclusive character range per token. Empty ranges mark tokens
/// that contribute no visible characters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenAlignment {
    pub ranges: Vec<(usize, usize)>,
}

impl TokenAlignment {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Parses a `<0xHH>` byte token.
fn byte_token(token: &str) -> Option<u8> {
    let hex = token.strip_prefix("<0x")?.strip_suffix('>')?;
    if hex.len() != 2 {
        return None;
    }
    u8::from_str_radix(hex, 16).ok()
}

/// Length of the UTF-8 sequence introduced by `lead`, or `None` for a
/// continuation or invalid byte.
fn utf8_width(lead: u8) -> Option<usize> {
    match lead {
        0x00..=0x7f => Some(1),
        0xc2..=0xdf => Some(2),
        0xe0..=0xef => Some(3),
        0xf0..=0xf4 => Some(4),
        _ => None,
    }
}

struct Matcher<'a> {
    text: &'a [char],
    cursor: usize,
}

impl Matcher<'_> {
    /// Matches `surface` at the cursor, or after one skipped whitespace
    /// character. Returns the matched range.
    fn try_match(&self, surface: &[char]) -> Option<(usize, usize)> {
        if surface.is_empty() {
            return None;
        }
        let at = |pos: usize| {
            let end = pos + surface.len();
            (end <= self.text.len() && &self.text[pos..end] == surface).then_some((pos, end))
        };
        at(self.cursor)
            .or_else(|| self.text.get(self.cursor).filter(|c| c.is_whitespace()).and_then(|_| at(self.cursor + 1)))
    }

    fn candidates(token: &str) -> Vec<Vec<char>> {
        let mut out = vec![token.chars().collect::<Vec<_>>()];
        let mut bare = Vec::new();
        for marker in ["▁", "Ġ"] {
            if let Some(rest) = token.strip_prefix(marker) {
                out.push(std::iter::once(' ').chain(rest.chars()).collect());
                bare.push(rest.chars().collect());
            }
        }
        if let Some(rest) = token.strip_prefix("##") {
            out.push(rest.chars().collect());
        }
        out.extend(bare);
        out
    }

    fn error(&self, token_index: usize, reason: impl Into<String>) -> AlignmentError {
        AlignmentError { token_index, cursor: self.cursor, reason: reason.into() }
    }
}

/// Aligns `tokens` to `text`. Deterministic; fails loudly on the first
/// token that cannot be placed.
pub fn align_tokens<S: AsRef<str>>(text: &str, tokens: &[S]) -> Result<TokenAlignment, AlignmentError> {
    let chars: Vec<char> = text.chars().collect();
    let mut m = Matcher { text: &chars, cursor: 0 };
    let mut ranges = Vec::with_capacity(tokens.len());

    let mut i = 0;
    while i < tokens.len() {
        let token = tokens[i].as_ref();
        if token.is_empty() {
            ranges.push((m.cursor, m.cursor));
            i += 1;
            continue;
        }
        if let Some(range) = Matcher::candidates(token).iter().find_map(|c| m.try_match(c)) {
            ranges.push(range);
            m.cursor = range.1;
            i += 1;
            continue;
        }
        let Some(lead) = byte_token(token) else {
            return Err(m.error(i, format!("token {token:?} does not match the text")));
        };
        let Some(width) = utf8_width(lead) else {
            return Err(m.error(i, format!("byte token {token:?} cannot start a UTF-8 sequence")));
        };
        let mut bytes = vec![lead];
        for j in 1..width {
            match tokens.get(i + j).and_then(|t| byte_token(t.as_ref())) {
                Some(b) => bytes.push(b),
                None => return Err(m.error(i, "incomplete byte-token sequence")),
            }
        }
        let decoded: Vec<char> = match std::str::from_utf8(&bytes) {
            Ok(s) => s.chars().collect(),
            Err(_) => return Err(m.error(i, "byte tokens do not form valid UTF-8")),
        };
        let Some(range) = m.try_match(&decoded) else {
            return Err(m.error(i, format!("decoded byte sequence {decoded:?} does not match the text")));
        };
        ranges.extend(std::iter::repeat_n((range.0, range.0), width - 1));
        ranges.push(range);
        m.cursor = range.1;
        i += width;
    }

    let rest = chars.len() - m.cursor;
    if rest > 1 || (rest == 1 && !chars[m.cursor].is_whitespace()) {
        return Err(m.error(tokens.len(), format!("{rest} trailing characters not covered by any token")));
    }
    Ok(TokenAlignment { ranges })
}

/// Projects per-token probabilities onto characters. Characters covered by
/// no token get zero.
pub fn char_probs_from_token_probs<T: Prob>(
    alignment: &TokenAlignment,
    token_probs: &[T],
    text_len: usize,
) -> Result<CharProbVector<T>, LabelError> {
    if token_probs.len() != alignment.len() {
        return Err(LabelError::LengthMismatch { expected: alignment.len(), actual: token_probs.len() });
    }
    let mut probs = vec![T::zero(); text_len];
    for (index, (&(start, end), &p)) in alignment.ranges.iter().zip(token_probs).enumerate() {
        if end > text_len || start > end {
            return Err(LabelError::OutOfBounds { index, text_len });
        }
        if !p.is_unit() {
            return Err(LabelError::ProbRange { index });
        }
        probs[start..end].fill(p);
    }
    CharProbVector::new(probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranges(text: &str, tokens: &[&str]) -> Vec<(usize, usize)> {
        align_tokens(text, tokens).unwrap().ranges
    }

    #[test]
    fn exact_concatenation() {
        assert_eq!(ranges("Hello world", &["Hello", " world"]), vec![(0, 5), (5, 11)]);
    }

    #[test]
    fn wordpiece() {
        assert_eq!(ranges("unhappiness", &["un", "##happiness"]), vec![(0, 2), (2, 11)]);
        assert_eq!(ranges("un happy", &["un", "happy"]), vec![(0, 2), (3, 8)]);
    }

    #[test]
    fn byte_level_bpe() {
        assert_eq!(ranges("Hello world", &["Hello", "Ġworld"]), vec![(0, 5), (5, 11)]);
    }

    #[test]
    fn sentencepiece() {
        assert_eq!(ranges("Hello world", &["▁Hello", "▁world"]), vec![(0, 5), (5, 11)]);
        assert_eq!(ranges(" Hello", &["▁Hello"]), vec![(0, 6)]);
    }

    #[test]
    fn byte_escapes() {
        // "é" is C3 A9
        assert_eq!(ranges("café", &["caf", "<0xC3>", "<0xA9>"]), vec![(0, 3), (3, 3), (3, 4)]);
        assert_eq!(ranges("a\nb", &["a", "<0x0A>", "b"]), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn empty_text_and_tokens() {
        assert!(ranges("", &[]).is_empty());
        assert_eq!(ranges("", &[""]), vec![(0, 0)]);
    }

    #[test]
    fn trailing_whitespace_tolerated() {
        assert_eq!(ranges("ok\n", &["ok"]), vec![(0, 2)]);
    }

    #[test]
    fn failures_name_the_token() {
        let e = align_tokens("Hello world", &["Hello", "there"]).unwrap_err();
        assert_eq!((e.token_index, e.cursor), (1, 5));

        let e = align_tokens("Hello  world", &["Hello", "world"]).unwrap_err();
        assert_eq!(e.token_index, 1);

        let e = align_tokens("Hello world", &["Hello"]).unwrap_err();
        assert_eq!((e.token_index, e.cursor), (1, 5));

        let e = align_tokens("café", &["caf", "<0xC3>"]).unwrap_err();
        assert_eq!(e.token_index, 1);

        let e = align_tokens("café", &["caf", "<0xA9>", "<0xC3>"]).unwrap_err();
        assert_eq!(e.token_index, 1);
    }

    #[test]
    fn projection() {
        let a = TokenAlignment { ranges: vec![(0, 2), (2, 4)] };
        assert_eq!(char_probs_from_token_probs(&a, &[1.0, 0.0], 4).unwrap().as_slice(), &[1.0, 1.0, 0.0, 0.0]);

        let a = TokenAlignment { ranges: vec![(0, 2), (3, 5)] };
        assert_eq!(char_probs_from_token_probs(&a, &[0.5, 0.5], 5).unwrap().as_slice(), &[0.5, 0.5, 0.0, 0.5, 0.5]);

        let empty = TokenAlignment::default();
        assert_eq!(char_probs_from_token_probs::<f64>(&empty, &[], 3).unwrap().as_slice(), &[0.0; 3]);

        assert!(matches!(char_probs_from_token_probs(&empty, &[0.5], 3), Err(LabelError::LengthMismatch { .. })));
    }
}
