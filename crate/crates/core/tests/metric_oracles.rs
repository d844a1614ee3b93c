use halluspan_core::metrics::{iou, prf, score_dataset, spearman, RecordScores};
use halluspan_core::{DecodeParams, HardSpan, Prediction, Record, SoftSpan};
use halluspan_testkit::oracle;
use proptest::prelude::*;

const LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn spans_from_bits(bits: &[bool]) -> Vec<HardSpan> {
    let mut out: Vec<HardSpan> = Vec::new();
    for (i, &b) in bits.iter().enumerate() {
        if b {
            match out.last_mut() {
                Some(last) if last.end == i => last.end = i + 1,
                _ => out.push(HardSpan::new(i, i + 1)),
            }
        }
    }
    out
}

fn bits_pair() -> impl Strategy<Value = (Vec<bool>, Vec<bool>)> {
    (0usize..=8).prop_flat_map(|n| (prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)))
}

fn level_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let level = prop::sample::select(LEVELS.to_vec());
    (1usize..=8)
        .prop_flat_map(move |n| (prop::collection::vec(level.clone(), n), prop::collection::vec(level.clone(), n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn iou_and_prf_match_bitmap((p, g) in bits_pair()) {
        let n = p.len();
        let (ps, gs) = (spans_from_bits(&p), spans_from_bits(&g));
        prop_assert_eq!(iou::<f64>(&ps, &gs, n).unwrap(), oracle::iou(&ps, &gs, n));
        let got = prf::<f64>(&ps, &gs, n).unwrap();
        prop_assert_eq!((got.precision, got.recall, got.f1), oracle::prf(&ps, &gs, n));
    }

    #[test]
    fn spearman_matches_brute_force((x, y) in level_pair()) {
        let got = spearman(&x, &y).unwrap();
        prop_assert!((got - oracle::spearman(&x, &y)).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&got));
    }

    #[test]
    fn iou_symmetric_and_bounded((p, g) in bits_pair()) {
        let n = p.len();
        let (ps, gs) = (spans_from_bits(&p), spans_from_bits(&g));
        let a = iou::<f64>(&ps, &gs, n).unwrap();
        prop_assert_eq!(a, iou::<f64>(&gs, &ps, n).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a == 1.0, p == g);
    }

    #[test]
    fn spearman_symmetric_and_reflexive((x, y) in level_pair()) {
        prop_assert!((spearman(&x, &y).unwrap() - spearman(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_invariant_under_monotone_maps((x, y) in level_pair()) {
        let base = spearman(&x, &y).unwrap();
        let squashed: Vec<f64> = x.iter().map(|v| (3.0 * v).exp() / 30.0).collect();
        let affine: Vec<f64> = y.iter().map(|v| 0.1 + 0.5 * v).collect();
        prop_assert!((spearman(&squashed, &affine).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn f32_agrees_with_f64((x, y) in level_pair()) {
        let x32: Vec<f32> = x.iter().map(|v| *v as f32).collect();
        let y32: Vec<f32> = y.iter().map(|v| *v as f32).collect();
        let d = spearman(&x32, &y32).unwrap() as f64 - spearman(&x, &y).unwrap();
        prop_assert!(d.abs() < 1e-5);
    }
}

fn gold(id: &str, len: usize, hard: Vec<HardSpan>) -> Record {
    let mut r = Record::new(id, "w".repeat(len), vec![]);
    r.soft_labels = Some(hard.iter().map(|s| SoftSpan::new(s.start, s.end, 1.0)).collect());
    r.hard_labels = Some(hard);
    r
}

proptest! {
    #[test]
    fn dataset_score_is_order_invariant(
        cases in prop::collection::vec((prop::collection::vec(any::<bool>(), 1..12), prop::collection::vec(0.0f64..=1.0, 1..12)), 1..6),
        rotate in 0usize..6,
    ) {
        let mut golds = Vec::new();
        let mut preds = Vec::new();
        for (i, (bits, probs)) in cases.iter().enumerate() {
            let n = bits.len();
            let id = format!("r{i}");
            golds.push(gold(&id, n, spans_from_bits(bits)));
            let mut soft: Vec<SoftSpan> = Vec::new();
            for (k, p) in probs.iter().take(n).enumerate() {
                soft.push(SoftSpan::new(k, k + 1, *p));
            }
            preds.push(Prediction { id, hard_labels: None, soft_labels: Some(soft), extra: Default::default() });
        }
        let params = DecodeParams::default();
        let a = score_dataset(&preds, &golds, &params).unwrap();
        let k = rotate % golds.len();
        golds.rotate_left(k);
        preds.reverse();
        let b = score_dataset(&preds, &golds, &params).unwrap();
        prop_assert_eq!(&a, &b);
        let mean = |f: fn(&RecordScores) -> f64| a.per_record.values().map(f).sum::<f64>() / a.n_records as f64;
        prop_assert!((a.aggregate.iou - mean(|s| s.iou)).abs() < 1e-12);
        prop_assert!((a.aggregate.spearman - mean(|s| s.spearman)).abs() < 1e-12);
    }
}
