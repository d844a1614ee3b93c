use halluspan_core::labels::{
    aggregate_annotations, decode_spans, hard_from_soft, soft_spans_from_vector, vector_from_soft_spans, AnnotationSet,
    CharProbVector, DecodeParams,
};
use halluspan_core::{align_tokens, char_probs_from_token_probs, Exact, HardSpan};
use proptest::prelude::*;

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(0.5), Just(1.0), 0.0f64..=1.0], 0..40)
}

fn spans(len: usize) -> impl Strategy<Value = Vec<HardSpan>> {
    prop::collection::vec(any::<bool>(), len).prop_map(|bits| {
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
    })
}

fn annotation_sets() -> impl Strategy<Value = (usize, Vec<Vec<HardSpan>>)> {
    (0usize..20).prop_flat_map(|len| (Just(len), prop::collection::vec(spans(len), 1..6)))
}

fn covered(s: &[HardSpan]) -> Vec<usize> {
    s.iter().flat_map(|s| s.start..s.end).collect()
}

proptest! {
    #[test]
    fn soft_span_roundtrip_is_exact(v in vector()) {
        let v = CharProbVector::new(v).unwrap();
        let spans = soft_spans_from_vector(&v);
        prop_assert!(spans.windows(2).all(|w| w[0].end < w[1].start || w[0].prob != w[1].prob));
        prop_assert!(spans.iter().all(|s| s.prob != 0.0));
        prop_assert_eq!(vector_from_soft_spans(&spans, v.len()).unwrap(), v);
    }

    #[test]
    fn raising_threshold_never_grows_coverage(v in vector(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let v = CharProbVector::new(v).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let low = covered(&hard_from_soft(&v, lo));
        let high = covered(&hard_from_soft(&v, hi));
        prop_assert!(high.iter().all(|c| low.contains(c)));
    }

    #[test]
    fn trivial_decode_is_thresholding(v in vector(), t in 0.0f64..=1.0) {
        let v = CharProbVector::new(v).unwrap();
        prop_assert_eq!(decode_spans(&v, &DecodeParams::new(t, 1, 0)), hard_from_soft(&v, t));
    }

    #[test]
    fn decoded_spans_are_sorted_disjoint_and_long_enough(v in vector(), min_len in 1usize..4, gap in 0usize..4) {
        let v = CharProbVector::new(v).unwrap();
        let out = decode_spans(&v, &DecodeParams::new(0.5, min_len, gap));
        prop_assert!(out.iter().all(|s| s.len() >= min_len));
        prop_assert!(out.windows(2).all(|w| w[1].start > w[0].end + gap));
    }

    #[test]
    fn aggregation_is_vote_fraction_and_order_free((len, annotators) in annotation_sets()) {
        let n = annotators.len();
        let set = AnnotationSet::new(annotators.clone(), len).unwrap();
        let exact = aggregate_annotations::<Exact>(&set);
        for (c, p) in exact.as_slice().iter().enumerate() {
            let votes = annotators.iter().filter(|a| a.iter().any(|s| s.start <= c && c < s.end)).count();
            prop_assert_eq!(*p, Exact::new(votes as i64, n as i64));
        }
        let mut reversed = annotators;
        reversed.reverse();
        let again = aggregate_annotations::<f64>(&AnnotationSet::new(reversed, len).unwrap());
        prop_assert_eq!(again, aggregate_annotations::<f64>(&set));
    }

    #[test]
    fn projection_stays_in_unit_interval(words in prop::collection::vec("[a-z]{1,5}", 1..8), seed in any::<u64>()) {
        let text = words.join(" ");
        let tokens: Vec<String> = words.iter().enumerate().map(|(i, w)| if i == 0 { w.clone() } else { format!("Ġ{w}") }).collect();
        let alignment = align_tokens(&text, &tokens).unwrap();
        let probs: Vec<f64> = (0..tokens.len()).map(|i| ((seed >> (i % 64)) & 0xff) as f64 / 255.0).collect();
        let v = char_probs_from_token_probs(&alignment, &probs, text.chars().count()).unwrap();
        prop_assert!(v.as_slice().iter().all(|p| (0.0..=1.0).contains(p)));
    }
}
