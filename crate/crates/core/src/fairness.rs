//! Fairness and diversity distributions over classes and their discrepancy
//! to the uniform distribution.
//!
//! * RDP compares how often each class is reconstructed as itself. The
//!   plug-in estimator normalizes the per-class mean 0-1 loss; the
//!   definitional form normalizes per-class correct rates. Both are
//!   uniform exactly when all per-class rates agree.
//! * PR is the marginal class distribution of the reconstructions.
//! * CPR is the class distribution of repeated reconstructions of one
//!   condition; UCPR averages CPR over uninformative conditions.
//!
//! A model satisfies a notion iff both discrepancies of the matching
//! distribution vanish.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{uniform_distribution, DiscreteDistribution, DiversitySet, EvalSet};

/// Which RDP estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdpVariant {
    /// Normalized per-class misclassification rates.
    #[default]
    Estimator,
    /// Normalized per-class correct rates.
    Correct,
}

impl FromStr for RdpVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimator" => Ok(Self::Estimator),
            "correct" => Ok(Self::Correct),
            other => Err(Error::Config(format!("unknown RDP variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FairnessKind {
    #[serde(rename = "RDP")]
    Rdp,
    #[serde(rename = "RDP_correct")]
    RdpCorrect,
    #[serde(rename = "PR")]
    Pr,
    #[serde(rename = "UCPR")]
    Ucpr,
}

impl FairnessKind {
    pub fn rdp(variant: RdpVariant) -> Self {
        match variant {
            RdpVariant::Estimator => Self::Rdp,
            RdpVariant::Correct => Self::RdpCorrect,
        }
    }
}

impl fmt::Display for FairnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rdp => "RDP",
            Self::RdpCorrect => "RDP_correct",
            Self::Pr => "PR",
            Self::Ucpr => "UCPR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessScores {
    pub kind: FairnessKind,
    pub distribution: DiscreteDistribution,
    pub chi2_divergence: f64,
    pub chebyshev: f64,
}

impl FairnessScores {
    /// Scores against `U([k])`.
    pub fn from_distribution(kind: FairnessKind, distribution: DiscreteDistribution) -> Self {
        Self {
            kind,
            chi2_divergence: chi2_divergence_to_uniform(&distribution),
            chebyshev: chebyshev_to_uniform(&distribution),
            distribution,
        }
    }

    /// Scores against an explicit reference distribution.
    pub fn against(
        kind: FairnessKind,
        distribution: DiscreteDistribution,
        reference: &DiscreteDistribution,
    ) -> Result<Self> {
        Ok(Self {
            kind,
            chi2_divergence: chi2_divergence(&distribution, reference)?,
            chebyshev: chebyshev_distance(&distribution, reference)?,
            distribution,
        })
    }

    pub fn is_fair(&self) -> bool {
        self.chi2_divergence == 0.0 && self.chebyshev == 0.0
    }
}

/// Per-class (correct, total) counts over true classes.
pub fn class_outcomes(set: &EvalSet) -> Vec<(u64, u64)> {
    let mut out = vec![(0u64, 0u64); set.partition().k()];
    for r in set.records() {
        let e = &mut out[r.true_class];
        e.1 += 1;
        if r.true_class == r.recon_class {
            e.0 += 1;
        }
    }
    out
}

fn per_class_rates(set: &EvalSet, correct: bool) -> Result<Vec<f64>> {
    class_outcomes(set)
        .into_iter()
        .enumerate()
        .map(|(j, (ok, n))| {
            if n == 0 {
                return Err(Error::EmptyClass(set.partition().label(j).to_owned()));
            }
            let hits = if correct { ok } else { n - ok };
            Ok(hits as f64 / n as f64)
        })
        .collect()
}

/// Per-class mean 0-1 loss, normalized to sum to one.
pub fn rdp_distribution(set: &EvalSet) -> Result<DiscreteDistribution> {
    let rates = per_class_rates(set, false)?;
    if rates.iter().all(|&r| r == 0.0) {
        return Err(Error::DegenerateAllCorrect);
    }
    DiscreteDistribution::from_weights(&rates)
}

/// Per-class correct-reconstruction rate, normalized to sum to one.
pub fn rdp_distribution_correct(set: &EvalSet) -> Result<DiscreteDistribution> {
    let rates = per_class_rates(set, true)?;
    if rates.iter().all(|&r| r == 0.0) {
        return Err(Error::DegenerateAllWrong);
    }
    DiscreteDistribution::from_weights(&rates)
}

pub fn rdp_distribution_with(set: &EvalSet, variant: RdpVariant) -> Result<DiscreteDistribution> {
    match variant {
        RdpVariant::Estimator => rdp_distribution(set),
        RdpVariant::Correct => rdp_distribution_correct(set),
    }
}

/// Reconstruction counts per predicted class.
pub fn recon_counts(set: &EvalSet) -> Vec<u64> {
    let mut counts = vec![0u64; set.partition().k()];
    for r in set.records() {
        counts[r.recon_class] += 1;
    }
    counts
}

/// Fraction of reconstructions predicted as each class.
pub fn pr_distribution(set: &EvalSet) -> Result<DiscreteDistribution> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    DiscreteDistribution::from_counts(&recon_counts(set))
}

/// Empirical class frequencies among the replicates of one condition.
pub fn cpr_distribution(recon_classes: &[usize], k: usize) -> Result<DiscreteDistribution> {
    if recon_classes.is_empty() {
        return Err(Error::EmptyCondition(String::new()));
    }
    let mut counts = vec![0u64; k];
    for &j in recon_classes {
        if j >= k {
            return Err(Error::UnknownClass { line: None, label: format!("#{j}") });
        }
        counts[j] += 1;
    }
    DiscreteDistribution::from_counts(&counts)
}

/// Unweighted mean of the per-condition CPR distributions.
pub fn ucpr_distribution(set: &DiversitySet) -> Result<DiscreteDistribution> {
    let k = set.partition().k();
    if set.conditions().is_empty() {
        return Err(Error::EmptyDiversitySet);
    }
    let mut acc = vec![0.0; k];
    for c in set.conditions() {
        let cpr = cpr_distribution(&c.recon_classes, k)
            .map_err(|_| Error::EmptyCondition(c.condition_id.clone()))?;
        acc.iter_mut().zip(cpr.probs()).for_each(|(a, p)| *a += p);
    }
    let m = set.conditions().len() as f64;
    DiscreteDistribution::from_weights(&acc.into_iter().map(|a| a / m).collect::<Vec<_>>())
}

/// `k * sum_j (p_j - 1/k)^2`.
pub fn chi2_divergence_to_uniform(d: &DiscreteDistribution) -> f64 {
    let k = d.k() as f64;
    k * d.probs().iter().map(|p| (p - 1.0 / k).powi(2)).sum::<f64>()
}

/// `max_j |p_j - 1/k|`.
pub fn chebyshev_to_uniform(d: &DiscreteDistribution) -> f64 {
    let k = d.k() as f64;
    d.probs().iter().map(|p| (p - 1.0 / k).abs()).fold(0.0, f64::max)
}

/// Pearson chi-square divergence `sum_j (p_j - q_j)^2 / q_j`.
pub fn chi2_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.k() != q.k() {
        return Err(Error::LengthMismatch(p.k(), q.k()));
    }
    let mut total = 0.0;
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        if qj == 0.0 {
            if pj > 0.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        total += (pj - qj).powi(2) / qj;
    }
    Ok(total)
}

pub fn chebyshev_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.k() != q.k() {
        return Err(Error::LengthMismatch(p.k(), q.k()));
    }
    Ok(p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Input to [`score`].
#[derive(Debug, Clone, Copy)]
pub enum FairnessInput<'a> {
    Eval(&'a EvalSet),
    Diversity(&'a DiversitySet),
}

/// Distribution of the requested kind bundled with both discrepancies to
/// the uniform distribution.
pub fn score(kind: FairnessKind, input: FairnessInput<'_>) -> Result<FairnessScores> {
    let dist = match (kind, input) {
        (FairnessKind::Rdp, FairnessInput::Eval(s)) => rdp_distribution(s)?,
        (FairnessKind::RdpCorrect, FairnessInput::Eval(s)) => rdp_distribution_correct(s)?,
        (FairnessKind::Pr, FairnessInput::Eval(s)) => pr_distribution(s)?,
        (FairnessKind::Ucpr, FairnessInput::Diversity(d)) => ucpr_distribution(d)?,
        (kind, _) => {
            return Err(Error::Config(format!("{kind} is not defined for this input")));
        }
    };
    Ok(FairnessScores::from_distribution(kind, dist))
}

/// PR scores against a reference class distribution; uniform when `None`.
pub fn score_pr(set: &EvalSet, reference: Option<&DiscreteDistribution>) -> Result<FairnessScores> {
    let dist = pr_distribution(set)?;
    match reference {
        Some(q) => FairnessScores::against(FairnessKind::Pr, dist, q),
        None => Ok(FairnessScores::from_distribution(FairnessKind::Pr, dist)),
    }
}

/// Convenience: `U([k])` scores, used when a distribution is degenerate but
/// the caller decides to report it as fair.
pub fn uniform_scores(kind: FairnessKind, k: usize) -> Result<FairnessScores> {
    Ok(FairnessScores::from_distribution(kind, uniform_distribution(k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassPartition, ConditionGroup, EvalRecord};

    fn partition(k: usize) -> ClassPartition {
        ClassPartition::new((0..k).map(|j| format!("c{j}"))).unwrap()
    }

    /// Builds a set from per-class (correct, wrong) counts; errors go to
    /// `wrong_to(j)`.
    fn set_from_rates(counts: &[(usize, usize)], wrong_to: impl Fn(usize) -> usize) -> EvalSet {
        let mut records = Vec::new();
        for (j, &(ok, bad)) in counts.iter().enumerate() {
            for i in 0..ok {
                records.push(EvalRecord::new(format!("{j}-ok-{i}"), j, j));
            }
            for i in 0..bad {
                records.push(EvalRecord::new(format!("{j}-bad-{i}"), j, wrong_to(j)));
            }
        }
        EvalSet::new("t", partition(counts.len()), records).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rdp_estimator_examples() {
        // misclassification rates 0.2 and 0.6
        let s = set_from_rates(&[(8, 2), (4, 6)], |j| 1 - j);
        assert!(close(rdp_distribution(&s).unwrap().probs(), &[0.25, 0.75], 1e-12));

        let s = set_from_rates(&[(5, 5), (5, 5), (5, 5), (5, 5)], |j| (j + 1) % 4);
        assert!(close(rdp_distribution(&s).unwrap().probs(), &[0.25; 4], 1e-12));
    }

    #[test]
    fn rdp_example_case_one_is_uniform() {
        // every class half correct, errors land on class 0 (class 0 errors split)
        let s = set_from_rates(&[(50, 50), (50, 50), (50, 50)], |j| if j == 0 { 1 } else { 0 });
        let third = 1.0 / 3.0;
        assert!(close(rdp_distribution(&s).unwrap().probs(), &[third; 3], 1e-12));
        assert!(close(rdp_distribution_correct(&s).unwrap().probs(), &[third; 3], 1e-12));
    }

    #[test]
    fn rdp_correct_examples() {
        let s = set_from_rates(&[(10, 0), (0, 10), (0, 10)], |j| if j == 1 { 2 } else { 1 });
        assert_eq!(rdp_distribution_correct(&s).unwrap().probs(), &[1.0, 0.0, 0.0]);

        let s = set_from_rates(&[(4, 0), (1, 3), (1, 3)], |_| 0);
        assert!(close(rdp_distribution_correct(&s).unwrap().probs(), &[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1e-12));
    }

    #[test]
    fn rdp_degenerate_and_empty() {
        let perfect = set_from_rates(&[(3, 0), (2, 0)], |_| 0);
        assert!(matches!(rdp_distribution(&perfect), Err(Error::DegenerateAllCorrect)));
        let hopeless = set_from_rates(&[(0, 3), (0, 2)], |j| 1 - j);
        assert!(matches!(rdp_distribution_correct(&hopeless), Err(Error::DegenerateAllWrong)));
        let missing = set_from_rates(&[(3, 1), (0, 0)], |_| 1);
        assert!(matches!(rdp_distribution(&missing), Err(Error::EmptyClass(c)) if c == "c1"));
    }

    #[test]
    fn pr_examples() {
        let s = set_from_rates(&[(50, 50), (50, 50), (50, 50)], |j| if j == 0 { 1 } else { 0 });
        // class 0 errors all go to class 1 here, so the marginal differs from
        // the even split; compute it directly
        assert!(close(pr_distribution(&s).unwrap().probs(), &[150.0 / 300.0, 100.0 / 300.0, 50.0 / 300.0], 1e-12));

        let s = set_from_rates(&[(0, 4), (5, 0)], |_| 1);
        assert_eq!(pr_distribution(&s).unwrap().probs(), &[0.0, 1.0]);

        let s = set_from_rates(&[(100, 0); 7], |_| 0);
        assert!(close(pr_distribution(&s).unwrap().probs(), &[1.0 / 7.0; 7], 1e-15));

        let empty = EvalSet::new("e", partition(2), vec![]).unwrap();
        assert!(matches!(pr_distribution(&empty), Err(Error::EmptySet)));
    }

    #[test]
    fn cpr_and_ucpr() {
        let d = cpr_distribution(&[0; 100], 7).unwrap();
        assert_eq!(d.probs()[0], 1.0);
        let d = cpr_distribution(&[0, 1, 0, 1], 7).unwrap();
        assert_eq!(&d.probs()[..3], &[0.5, 0.5, 0.0]);
        assert!(matches!(cpr_distribution(&[], 3), Err(Error::EmptyCondition(_))));

        let div = DiversitySet::new(
            "d",
            partition(7),
            (0..7).map(|m| ConditionGroup { condition_id: format!("y{m}"), recon_classes: (0..7).collect() }).collect(),
        )
        .unwrap();
        assert!(close(ucpr_distribution(&div).unwrap().probs(), &[1.0 / 7.0; 7], 1e-15));

        let div = DiversitySet::new(
            "d",
            partition(4),
            vec![
                ConditionGroup { condition_id: "a".into(), recon_classes: vec![0; 10] },
                ConditionGroup { condition_id: "b".into(), recon_classes: vec![1; 3] },
            ],
        )
        .unwrap();
        assert_eq!(ucpr_distribution(&div).unwrap().probs(), &[0.5, 0.5, 0.0, 0.0]);

        let empty = DiversitySet::new("d", partition(2), vec![]).unwrap();
        assert!(matches!(ucpr_distribution(&empty), Err(Error::EmptyDiversitySet)));
    }

    #[test]
    fn discrepancy_closed_forms() {
        for k in 2..12 {
            let u = uniform_distribution(k).unwrap();
            assert!(chi2_divergence_to_uniform(&u) < 1e-15);
            assert!(chebyshev_to_uniform(&u) < 1e-15);
        }
        let mut point = vec![0.0; 7];
        point[3] = 1.0;
        let point = DiscreteDistribution::new(point).unwrap();
        assert!((chi2_divergence_to_uniform(&point) - 6.0).abs() < 1e-12);
        assert!((chebyshev_to_uniform(&point) - 6.0 / 7.0).abs() < 1e-12);

        let d = DiscreteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((chi2_divergence_to_uniform(&d) - 0.125).abs() < 1e-12);
        assert!((chebyshev_to_uniform(&d) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn general_divergences_reduce_to_uniform_case() {
        let d = DiscreteDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let u = uniform_distribution(3).unwrap();
        assert!((chi2_divergence(&d, &u).unwrap() - chi2_divergence_to_uniform(&d)).abs() < 1e-12);
        assert_eq!(chebyshev_distance(&d, &u).unwrap(), chebyshev_to_uniform(&d));
        let q = DiscreteDistribution::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert_eq!(chi2_divergence(&d, &q).unwrap(), f64::INFINITY);
    }

    #[test]
    fn score_example_case_two() {
        // White always kept, Black <-> Asian swapped
        let s = set_from_rates(&[(100, 0), (0, 100), (0, 100)], |j| if j == 1 { 2 } else { 1 });
        let pr = score(FairnessKind::Pr, FairnessInput::Eval(&s)).unwrap();
        assert!(pr.is_fair());
        let rdp = score(FairnessKind::RdpCorrect, FairnessInput::Eval(&s)).unwrap();
        assert!((rdp.chi2_divergence - 2.0).abs() < 1e-12);
        assert!(!rdp.is_fair());
        assert!(score(FairnessKind::Ucpr, FairnessInput::Eval(&s)).is_err());
    }

    #[test]
    fn pr_against_reference() {
        let s = set_from_rates(&[(30, 0), (10, 0)], |_| 0);
        let q = DiscreteDistribution::new(vec![0.75, 0.25]).unwrap();
        let scored = score_pr(&s, Some(&q)).unwrap();
        assert!(scored.is_fair());
        assert!(!score_pr(&s, None).unwrap().is_fair());
    }
}
