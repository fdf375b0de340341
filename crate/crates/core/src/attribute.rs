//! Attribute reconstruction losses and per-class aggregation of scalar metrics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EvalRecord, EvalSet};

/// Scalar key under which [`annotate_cosine`] stores the raw similarity.
pub const COS_SIM_KEY: &str = "cos_sim";

/// 1 when the classifier labels of original and reconstruction differ.
pub fn loss_01(record: &EvalRecord) -> f64 {
    if record.true_class == record.recon_class {
        0.0
    } else {
        1.0
    }
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// `1 - cos(l_x, l_xhat)`, so that lower is better.
pub fn cosine_loss(record: &EvalRecord) -> Result<f64> {
    match (&record.embedding_true, &record.embedding_recon) {
        (Some(t), Some(r)) => Ok(1.0 - cosine_similarity(t, r)?),
        _ => Err(Error::MissingEmbedding(record.sample_id.clone())),
    }
}

/// Stores the raw cosine similarity of every record with embeddings under
/// [`COS_SIM_KEY`].
pub fn annotate_cosine(set: EvalSet) -> Result<EvalSet> {
    let name = set.name().to_owned();
    let partition = set.partition().clone();
    let mut records = set.into_records();
    for r in &mut records {
        if let (Some(t), Some(e)) = (&r.embedding_true, &r.embedding_recon) {
            let sim = cosine_similarity(t, e)?;
            r.scalars.insert(COS_SIM_KEY.to_owned(), sim);
        }
    }
    EvalSet::new(name, partition, records)
}

/// A per-record metric: one of the built-in losses or a named scalar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Loss01,
    CosineLoss,
    Scalar(String),
}

impl Metric {
    /// `loss_01`, `cos` and `cosine_loss` name the built-ins; anything
    /// else is a scalar column.
    pub fn parse(name: &str) -> Self {
        match name {
            "loss_01" | "0-1" => Metric::Loss01,
            "cos" | "cosine_loss" => Metric::CosineLoss,
            other => Metric::Scalar(other.to_owned()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Metric::Loss01 => "loss_01",
            Metric::CosineLoss => "cos",
            Metric::Scalar(s) => s,
        }
    }

    /// Value for one record; `None` when the record does not carry it.
    pub fn value(&self, record: &EvalRecord) -> Option<f64> {
        match self {
            Metric::Loss01 => Some(loss_01(record)),
            Metric::CosineLoss => cosine_loss(record).ok(),
            Metric::Scalar(s) => record.scalars.get(s).copied(),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Metric::Loss01)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Empirical expected loss, overall and conditioned on the true class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub overall_mean: f64,
    /// `None` for classes without any carrier.
    pub per_class_means: Vec<Option<f64>>,
    pub per_class_counts: Vec<usize>,
}

impl MetricSummary {
    pub fn count(&self) -> usize {
        self.per_class_counts.iter().sum()
    }
}

pub fn summarize_metric(set: &EvalSet, metric: &Metric) -> Result<MetricSummary> {
    let k = set.partition().k();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for r in set.records() {
        if let Some(v) = metric.value(r) {
            sums[r.true_class] += v;
            counts[r.true_class] += 1;
        }
    }
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::UnknownMetric(metric.name().to_owned()));
    }
    let per_class_means: Vec<Option<f64>> =
        sums.iter().zip(&counts).map(|(&s, &c)| (c > 0).then(|| s / c as f64)).collect();
    Ok(MetricSummary {
        metric: metric.name().to_owned(),
        overall_mean: sums.iter().sum::<f64>() / n as f64,
        per_class_means,
        per_class_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassPartition;

    fn two_classes() -> ClassPartition {
        ClassPartition::new(["White", "Black"]).unwrap()
    }

    #[test]
    fn loss_01_cases() {
        assert_eq!(loss_01(&EvalRecord::new("a", 1, 1)), 0.0);
        assert_eq!(loss_01(&EvalRecord::new("a", 1, 0)), 1.0);
        let records: Vec<_> = (0..100).map(|i| EvalRecord::new(format!("s{i}"), 0, usize::from(i < 33))).collect();
        let set = EvalSet::new("x", two_classes(), records).unwrap();
        let s = summarize_metric(&set, &Metric::Loss01).unwrap();
        assert!((s.overall_mean - 0.33).abs() < 1e-12);
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 1.0], &[-1.0, -1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroVector)));
        assert!(matches!(cosine_similarity(&[1.0], &[1.0, 1.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn cosine_loss_cases() {
        let rec = |t: Vec<f64>, r: Vec<f64>| EvalRecord::new("a", 0, 0).with_embeddings(t, r);
        assert!(cosine_loss(&rec(vec![0.3, 0.4], vec![0.3, 0.4])).unwrap().abs() < 1e-15);
        assert!((cosine_loss(&rec(vec![1.0, 0.0], vec![0.0, 2.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_loss(&rec(vec![1.0, 2.0], vec![-2.0, -4.0])).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(cosine_loss(&EvalRecord::new("b", 0, 0)), Err(Error::MissingEmbedding(_))));
    }

    #[test]
    fn annotate_keeps_similarity() {
        let set = EvalSet::new(
            "x",
            two_classes(),
            vec![
                EvalRecord::new("a", 0, 0).with_embeddings(vec![1.0, 0.0], vec![1.0, 1.0]),
                EvalRecord::new("b", 1, 1),
            ],
        )
        .unwrap();
        let set = annotate_cosine(set).unwrap();
        let sim = set.records()[0].scalars[COS_SIM_KEY];
        assert!((sim - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(!set.records()[1].scalars.contains_key(COS_SIM_KEY));
        let s = summarize_metric(&set, &Metric::CosineLoss).unwrap();
        assert_eq!(s.per_class_counts, vec![1, 0]);
        assert_eq!(s.per_class_means[1], None);
    }

    #[test]
    fn summary_per_class() {
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(EvalRecord::new(format!("a{i}"), 0, if i < 2 { 1 } else { 0 }));
            records.push(EvalRecord::new(format!("b{i}"), 1, if i < 6 { 0 } else { 1 }));
        }
        let set = EvalSet::new("x", two_classes(), records).unwrap();
        let s = summarize_metric(&set, &Metric::Loss01).unwrap();
        assert!((s.overall_mean - 0.4).abs() < 1e-12);
        assert!((s.per_class_means[0].unwrap() - 0.2).abs() < 1e-12);
        assert!((s.per_class_means[1].unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(s.count(), 20);
    }

    #[test]
    fn summary_missing_metric_and_singleton() {
        let set = EvalSet::new("x", two_classes(), vec![EvalRecord::new("a", 1, 1).with_scalar("dssim", 0.3)]).unwrap();
        assert!(matches!(
            summarize_metric(&set, &Metric::Scalar("lpips".into())),
            Err(Error::UnknownMetric(_))
        ));
        let s = summarize_metric(&set, &Metric::parse("dssim")).unwrap();
        assert_eq!(s.overall_mean, 0.3);
        assert_eq!(s.per_class_means, vec![None, Some(0.3)]);
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!(Metric::parse("loss_01"), Metric::Loss01);
        assert_eq!(Metric::parse("cos"), Metric::CosineLoss);
        assert_eq!(Metric::parse("niqe"), Metric::Scalar("niqe".into()));
        assert_eq!(Metric::parse(Metric::CosineLoss.name()), Metric::CosineLoss);
    }
}
