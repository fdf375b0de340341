use genfair::attribute::{cosine_similarity, loss_01, summarize_metric, Metric};
use genfair::{ClassPartition, EvalRecord, EvalSet};
use proptest::prelude::*;

const K: usize = 4;

fn partition() -> ClassPartition {
    ClassPartition::new(["a", "b", "c", "d"]).unwrap()
}

fn records() -> impl Strategy<Value = Vec<EvalRecord>> {
    prop::collection::vec((0..K, 0..K, 0.0..10.0f64), 1..60).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (t, r, x))| EvalRecord::new(format!("s{i}"), t, r).with_scalar("x", x))
            .collect()
    })
}

fn nonzero_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn loss_01_invariant_under_relabeling(
        rows in records(),
        perm in Just((0..K).collect::<Vec<_>>()).prop_shuffle()
    ) {
        for r in &rows {
            let relabeled = EvalRecord::new(r.sample_id.clone(), perm[r.true_class], perm[r.recon_class]);
            prop_assert_eq!(loss_01(r), loss_01(&relabeled));
        }
    }

    #[test]
    fn cosine_is_scale_invariant(
        (u, v) in (2usize..12).prop_flat_map(|n| (nonzero_vec(n), nonzero_vec(n))),
        a in 1e-3..1e3f64,
        b in 1e-3..1e3f64,
    ) {
        let base = cosine_similarity(&u, &v).unwrap();
        let su: Vec<f64> = u.iter().map(|x| a * x).collect();
        let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
        let scaled = cosine_similarity(&su, &sv).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12, "{base} vs {scaled}");
    }

    #[test]
    fn summary_ignores_record_order(
        (rows, shuffled) in records().prop_flat_map(|r| (Just(r.clone()), Just(r).prop_shuffle()))
    ) {
        let metric = Metric::parse("x");
        let a = summarize_metric(&EvalSet::new("a", partition(), rows).unwrap(), &metric).unwrap();
        let b = summarize_metric(&EvalSet::new("b", partition(), shuffled).unwrap(), &metric).unwrap();
        prop_assert!((a.overall_mean - b.overall_mean).abs() < 1e-12);
        prop_assert_eq!(a.per_class_counts, b.per_class_counts);
    }

    #[test]
    fn overall_mean_is_count_weighted_class_mean(rows in records()) {
        let set = EvalSet::new("s", partition(), rows).unwrap();
        for metric in [Metric::Loss01, Metric::parse("x")] {
            let s = summarize_metric(&set, &metric).unwrap();
            let weighted: f64 = s
                .per_class_means
                .iter()
                .zip(&s.per_class_counts)
                .filter_map(|(m, &c)| m.map(|m| m * c as f64))
                .sum::<f64>()
                / s.count() as f64;
            prop_assert!((weighted - s.overall_mean).abs() < 1e-12);
        }
    }
}
