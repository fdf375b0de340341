use genfair::dataset::{simulate_eval_set, ConfusionMatrix};
use genfair::model::ConditionGroup;
use genfair::report::{build_report, to_csv, to_json, to_markdown, BenchmarkReport, ReportConfig, VariantInput};
use genfair::{ClassPartition, DiversitySet, EvalRecord, EvalSet, RdpVariant};
use proptest::prelude::*;

fn partition() -> ClassPartition {
    ClassPartition::new(["White", "Black", "Asian"]).unwrap()
}

/// Simulated set with a scalar metric that depends on the seed.
fn eval(diagonal: f64, seed: u64, shift: f64) -> EvalSet {
    let off = (1.0 - diagonal) / 2.0;
    let confusion = ConfusionMatrix::new(
        (0..3).map(|i| (0..3).map(|j| if i == j { diagonal } else { off }).collect()).collect(),
    )
    .unwrap();
    let base = simulate_eval_set(&partition(), &confusion, &[30, 30, 30], seed).unwrap();
    let records: Vec<EvalRecord> = base
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let noise = ((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0;
            r.clone().with_scalar("lpips", 0.3 + shift + noise * 0.1)
        })
        .collect();
    EvalSet::new("s", partition(), records).unwrap()
}

fn diversity(seed: u64) -> DiversitySet {
    let conditions = (0..3)
        .map(|c| ConditionGroup {
            condition_id: format!("cond{c}"),
            recon_classes: (0..20).map(|i| ((i as u64 * 7 + seed + c) % 3) as usize).collect(),
        })
        .collect();
    DiversitySet::new("d", partition(), conditions).unwrap()
}

fn variants(d1: f64, d2: f64, seed: u64, shift: f64) -> Vec<VariantInput> {
    let mut out = Vec::new();
    for (m, model) in ["alpha", "beta"].iter().enumerate() {
        for (dataset, diag, s) in [("UFF", d1, shift), ("FF", d2, 0.0)] {
            out.push(VariantInput {
                model: (*model).into(),
                dataset: dataset.into(),
                eval: Some(eval(diag, seed + m as u64, s)),
                diversity: Some(diversity(seed + m as u64)),
            });
        }
    }
    out
}

fn check_markers(report: &BenchmarkReport) -> Result<(), TestCaseError> {
    for row in &report.performance {
        if let Some(c) = &row.comparison {
            if let Some(t) = &c.test {
                prop_assert_eq!(c.not_significant, !t.reject, "{}", row.metric);
                prop_assert_eq!(t.reject, t.p_value < t.alpha);
            }
        }
    }
    for row in report.fairness.iter().chain(&report.diversity) {
        prop_assert_eq!(row.rejected, row.test.as_ref().is_some_and(|t| t.reject));
    }
    let csv = to_csv(report);
    let rejected_rows = csv.lines().filter(|l| l.ends_with(",rejected")).count();
    let flagged = report.fairness.iter().chain(&report.diversity).filter(|r| r.rejected).count();
    prop_assert_eq!(rejected_rows, 2 * flagged);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_is_deterministic_and_markers_follow_tests(
        d1 in 0.2..0.95f64,
        d2 in 0.2..0.95f64,
        seed in 0u64..1000,
        shift in 0.0..0.1f64,
        alpha in 0.01..0.2f64,
        correct in any::<bool>(),
    ) {
        let cfg = ReportConfig {
            alpha,
            rdp_variant: if correct { RdpVariant::Correct } else { RdpVariant::Estimator },
            metrics: None,
        };
        let a = build_report(&variants(d1, d2, seed, shift), &cfg).unwrap();
        let b = build_report(&variants(d1, d2, seed, shift), &cfg).unwrap();
        prop_assert_eq!(to_json(&a), to_json(&b));
        prop_assert_eq!(to_csv(&a), to_csv(&b));
        prop_assert_eq!(to_markdown(&a), to_markdown(&b));
        prop_assert_eq!(&a.classes, &vec!["White".to_owned(), "Black".to_owned(), "Asian".to_owned()]);
        check_markers(&a)?;
    }
}
