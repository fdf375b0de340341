//! Dataset-side procedures: maximal biased subsampling of a labeled pool,
//! uninformative-condition construction, and a confusion-matrix simulator
//! with its closed-form population distributions.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{downsample_bilinear_aa, mean_image, Image};
use crate::model::{ClassPartition, DiscreteDistribution, EvalRecord, EvalSet};

/// Relative slack when comparing real-valued quotas with integer availability.
const QUOTA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEntry {
    pub sample_id: String,
    pub class: usize,
}

/// Source pool of labeled sample ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledIndex {
    partition: ClassPartition,
    entries: Vec<LabeledEntry>,
}

impl LabeledIndex {
    pub fn new(partition: ClassPartition, entries: Vec<LabeledEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.class >= partition.k() {
                return Err(Error::UnknownClass { line: None, label: format!("#{}", e.class) });
            }
            if !seen.insert(e.sample_id.as_str()) {
                return Err(Error::DuplicateSample { line: None, id: e.sample_id.clone() });
            }
        }
        Ok(Self { partition, entries })
    }

    /// Reads a `sample_id,class` CSV.
    pub fn load(path: impl AsRef<Path>, partition: &ClassPartition) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader.headers().map_err(|e| malformed(None, e))?.clone();
        if headers.iter().ne(["sample_id", "class"]) {
            return Err(Error::MalformedManifest { line: Some(1), message: "header must be sample_id,class".into() });
        }
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for row in reader.records() {
            let row = row.map_err(|e| malformed(e.position().map(|p| p.line()), e))?;
            let line = row.position().map_or(0, |p| p.line());
            let class = partition
                .index_of(&row[1])
                .ok_or_else(|| Error::UnknownClass { line: Some(line), label: row[1].to_owned() })?;
            if !seen.insert(row[0].to_owned()) {
                return Err(Error::DuplicateSample { line: Some(line), id: row[0].to_owned() });
            }
            entries.push(LabeledEntry { sample_id: row[0].to_owned(), class });
        }
        Ok(Self { partition: partition.clone(), entries })
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn entries(&self) -> &[LabeledEntry] {
        &self.entries
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.partition.k()];
        for e in &self.entries {
            counts[e.class] += 1;
        }
        counts
    }
}

fn malformed(line: Option<u64>, e: impl std::fmt::Display) -> Error {
    Error::MalformedManifest { line, message: e.to_string() }
}

/// Reads a `class,probability` CSV into a distribution in partition order.
/// Classes missing from the file get probability zero.
pub fn load_target_distribution(path: impl AsRef<Path>, partition: &ClassPartition) -> Result<DiscreteDistribution> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| malformed(None, e))?.clone();
    if headers.iter().ne(["class", "probability"]) {
        return Err(Error::MalformedManifest { line: Some(1), message: "header must be class,probability".into() });
    }
    let mut probs = vec![0.0; partition.k()];
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| malformed(e.position().map(|p| p.line()), e))?;
        let line = row.position().map_or(0, |p| p.line());
        let j = partition
            .index_of(&row[0])
            .ok_or_else(|| Error::UnknownClass { line: Some(line), label: row[0].to_owned() })?;
        if !seen.insert(j) {
            return Err(Error::DuplicateSample { line: Some(line), id: row[0].to_owned() });
        }
        probs[j] = row[1]
            .parse()
            .map_err(|_| malformed(Some(line), format!("cannot parse probability {:?}", &row[1])))?;
    }
    DiscreteDistribution::new(probs)
}

/// Largest-remainder (Hamilton) apportionment of `n` seats by `weights`.
/// Ties in the remainder go to the lower class index.
pub fn largest_remainder(weights: &DiscreteDistribution, n: usize) -> Vec<usize> {
    let exact: Vec<f64> = weights.probs().iter().map(|p| p * n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &j in order.iter().take(n.saturating_sub(assigned)) {
        quotas[j] += 1;
    }
    quotas
}

/// Whether `n` samples with class mass `target` fit within `available`:
/// every real quota `target_j * n` must be at most `available_j`.
pub fn quotas_feasible(target: &DiscreteDistribution, available: &[usize], n: usize) -> bool {
    target
        .probs()
        .iter()
        .zip(available)
        .all(|(&t, &a)| t * n as f64 <= a as f64 + QUOTA_SLACK * (a as f64).max(1.0))
}

/// Result of [`max_biased_subset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub n: usize,
    pub counts: Vec<usize>,
    /// Selected ids in pool order.
    pub sample_ids: Vec<String>,
}

/// Largest subset of `index` whose class proportions follow `target`.
///
/// `n` is the largest size whose real-valued quotas fit the available
/// counts; the integer quotas are the largest-remainder rounding of
/// `target * n`, and each class is sampled uniformly without replacement.
pub fn max_biased_subset(index: &LabeledIndex, target: &DiscreteDistribution, seed: u64) -> Result<Subset> {
    let k = index.partition.k();
    if target.k() != k {
        return Err(Error::LengthMismatch(target.k(), k));
    }
    let available = index.class_counts();
    for (j, (&t, &a)) in target.probs().iter().zip(&available).enumerate() {
        if t > 0.0 && a == 0 {
            return Err(Error::InfeasibleTarget(index.partition.label(j).to_owned()));
        }
    }
    let bound = target
        .probs()
        .iter()
        .zip(&available)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &a)| (a as f64 / t).floor() as usize + 1)
        .min()
        .unwrap_or(0)
        .min(index.entries.len());
    let n = (0..=bound).rev().find(|&n| quotas_feasible(target, &available, n)).unwrap_or(0);
    let counts = largest_remainder(target, n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; index.entries.len()];
    for (j, &quota) in counts.iter().enumerate() {
        let members: Vec<usize> =
            index.entries.iter().enumerate().filter(|(_, e)| e.class == j).map(|(i, _)| i).collect();
        debug_assert!(quota <= members.len());
        for pick in rand::seq::index::sample(&mut rng, members.len(), quota) {
            keep[members[pick]] = true;
        }
    }
    let sample_ids = index
        .entries
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(e, _)| e.sample_id.clone())
        .collect();
    Ok(Subset { n, counts, sample_ids })
}

/// The seven FairFace race labels, in the dataset's usual order.
pub const FAIRFACE_RACES: [&str; 7] =
    ["White", "Black", "Latino_Hispanic", "East Asian", "Southeast Asian", "Indian", "Middle Eastern"];

/// Default CelebA-like race proportions for the UnfairFace subsample,
/// aligned with [`FAIRFACE_RACES`]. Only the White share (> 80%) and the
/// Southeast Asian share (0.05%) are documented; the rest are editable
/// defaults.
pub const UNFAIRFACE_DEFAULT: [f64; 7] = [0.825, 0.045, 0.04, 0.04, 0.0005, 0.0195, 0.03];

/// [`UNFAIRFACE_DEFAULT`] reordered to `partition`, which must hold exactly
/// the seven FairFace labels.
pub fn unfairface_target(partition: &ClassPartition) -> Result<DiscreteDistribution> {
    let mut labels: Vec<&str> = partition.labels().iter().map(String::as_str).collect();
    labels.sort_unstable();
    let mut expected = FAIRFACE_RACES.to_vec();
    expected.sort_unstable();
    if labels != expected {
        return Err(Error::WrongPartition(format!("expected {}", FAIRFACE_RACES.join(", "))));
    }
    let probs = partition
        .labels()
        .iter()
        .map(|l| UNFAIRFACE_DEFAULT[FAIRFACE_RACES.iter().position(|r| r == l).unwrap()])
        .collect();
    DiscreteDistribution::new(probs)
}

/// An uninformative condition for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub class: String,
    pub image: Image,
}

/// Averages each class group pixel-wise and downsamples the mean to
/// `out_size x out_size`.
pub fn build_uninformative_conditions(groups: &[(String, Vec<Image>)], out_size: usize) -> Result<Vec<Condition>> {
    groups
        .iter()
        .map(|(class, images)| {
            if images.is_empty() {
                return Err(Error::EmptyGroup(class.clone()));
            }
            let mean = mean_image(images)?;
            Ok(Condition { class: class.clone(), image: downsample_bilinear_aa(&mean, out_size, out_size)? })
        })
        .collect()
}

/// Row-stochastic matrix: row `i` is the reconstruction-class distribution
/// given true class `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    rows: Vec<DiscreteDistribution>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k < 2 {
            return Err(Error::InvalidK(k));
        }
        let rows = rows
            .into_iter()
            .map(|r| {
                if r.len() != k {
                    return Err(Error::LengthMismatch(r.len(), k));
                }
                DiscreteDistribution::new(r)
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect())
    }

    /// Reads a CSV whose header is `true_class,<label>...` and whose rows
    /// are `<label>,<p>...`, one per class in header order.
    pub fn load(path: impl AsRef<Path>) -> Result<(ClassPartition, Self)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader.headers().map_err(|e| malformed(None, e))?.clone();
        if headers.get(0) != Some("true_class") {
            return Err(malformed(Some(1), "header must start with true_class"));
        }
        let partition = ClassPartition::new(headers.iter().skip(1).map(str::to_owned))?;
        let mut rows = vec![None; partition.k()];
        for row in reader.records() {
            let row = row.map_err(|e| malformed(e.position().map(|p| p.line()), e))?;
            let line = row.position().map_or(0, |p| p.line());
            let i = partition
                .index_of(&row[0])
                .ok_or_else(|| Error::UnknownClass { line: Some(line), label: row[0].to_owned() })?;
            let probs = row
                .iter()
                .skip(1)
                .map(|c| c.parse::<f64>().map_err(|_| malformed(Some(line), format!("cannot parse {c:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if rows[i].replace(probs).is_some() {
                return Err(Error::DuplicateSample { line: Some(line), id: row[0].to_owned() });
            }
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| malformed(None, format!("missing row for {}", partition.label(i)))))
            .collect::<Result<Vec<_>>>()?;
        Ok((partition, Self::new(rows)?))
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &DiscreteDistribution {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(j)
    }
}

/// Draws `per_class_counts[j]` records with true class `j` and a
/// reconstruction class sampled from row `j`. Ids are `<label>-<index>`.
pub fn simulate_eval_set(
    partition: &ClassPartition,
    confusion: &ConfusionMatrix,
    per_class_counts: &[usize],
    seed: u64,
) -> Result<EvalSet> {
    if confusion.k() != partition.k() {
        return Err(Error::LengthMismatch(confusion.k(), partition.k()));
    }
    if per_class_counts.len() != partition.k() {
        return Err(Error::LengthMismatch(per_class_counts.len(), partition.k()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(per_class_counts.iter().sum());
    for (j, &count) in per_class_counts.iter().enumerate() {
        let sampler = WeightedIndex::new(confusion.row(j).probs())
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        for i in 0..count {
            let recon = sampler.sample(&mut rng);
            records.push(EvalRecord::new(format!("{}-{i}", partition.label(j)), j, recon));
        }
    }
    EvalSet::new("simulated", partition.clone(), records)
}

/// Population distributions implied by a confusion matrix and class prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedDistributions {
    pub pr: DiscreteDistribution,
    pub rdp: DiscreteDistribution,
    pub rdp_correct: DiscreteDistribution,
}

/// `pr = prior^T * confusion`; the RDP forms normalize the off-diagonal
/// mass and the diagonal respectively.
pub fn expected_distributions(
    confusion: &ConfusionMatrix,
    class_prior: &DiscreteDistribution,
) -> Result<ExpectedDistributions> {
    let k = confusion.k();
    if class_prior.k() != k {
        return Err(Error::LengthMismatch(class_prior.k(), k));
    }
    let pr: Vec<f64> = (0..k).map(|j| (0..k).map(|i| class_prior.get(i) * confusion.get(i, j)).sum()).collect();
    let correct: Vec<f64> = (0..k).map(|i| confusion.get(i, i)).collect();
    let wrong: Vec<f64> = correct.iter().map(|c| (1.0 - c).max(0.0)).collect();
    if wrong.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateAllCorrect);
    }
    if correct.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateAllWrong);
    }
    Ok(ExpectedDistributions {
        pr: DiscreteDistribution::from_weights(&pr)?,
        rdp: DiscreteDistribution::from_weights(&wrong)?,
        rdp_correct: DiscreteDistribution::from_weights(&correct)?,
    })
}

/// Example scenarios with three classes (White, Black, Asian): every
/// class half correct with errors pulled towards White, and White always
/// correct with Black and Asian swapped.
pub fn example_scenarios() -> (ClassPartition, ConfusionMatrix, ConfusionMatrix) {
    let partition = ClassPartition::new(["White", "Black", "Asian"]).expect("valid labels");
    let half = ConfusionMatrix::new(vec![
        vec![0.5, 0.25, 0.25],
        vec![0.5, 0.5, 0.0],
        vec![0.5, 0.0, 0.5],
    ])
    .expect("valid rows");
    let swapped = ConfusionMatrix::new(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
    ])
    .expect("valid rows");
    (partition, half, swapped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{chi2_divergence_to_uniform, pr_distribution, rdp_distribution, rdp_distribution_correct};
    use crate::model::uniform_distribution;

    fn pool(counts: &[usize]) -> LabeledIndex {
        let partition = ClassPartition::new((0..counts.len()).map(|j| format!("c{j}"))).unwrap();
        let entries = counts
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| (0..c).map(move |i| LabeledEntry { sample_id: format!("c{j}-{i}"), class: j }))
            .collect();
        LabeledIndex::new(partition, entries).unwrap()
    }

    #[test]
    fn largest_remainder_rounding() {
        let t = DiscreteDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(largest_remainder(&t, 10), vec![5, 3, 2]);
        let t = DiscreteDistribution::new(vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(largest_remainder(&t, 10), vec![4, 3, 3]);
        for n in 0..50 {
            assert_eq!(largest_remainder(&t, n).iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn subset_two_class_example() {
        let idx = pool(&[1000, 50]);
        let t = DiscreteDistribution::new(vec![0.8, 0.2]).unwrap();
        let s = max_biased_subset(&idx, &t, 7).unwrap();
        assert_eq!(s.n, 250);
        assert_eq!(s.counts, vec![200, 50]);
        assert_eq!(s.sample_ids.len(), 250);
        // brute-force scan
        let available = idx.class_counts();
        let best = (0..=idx.entries().len()).filter(|&n| quotas_feasible(&t, &available, n)).max().unwrap();
        assert_eq!(best, 250);
        assert!(!quotas_feasible(&t, &available, 251));
    }

    #[test]
    fn subset_is_deterministic_per_seed() {
        let idx = pool(&[300, 40, 80]);
        let t = DiscreteDistribution::new(vec![0.6, 0.1, 0.3]).unwrap();
        let a = max_biased_subset(&idx, &t, 1).unwrap();
        assert_eq!(a, max_biased_subset(&idx, &t, 1).unwrap());
        assert_ne!(a.sample_ids, max_biased_subset(&idx, &t, 2).unwrap().sample_ids);
        let unique: HashSet<_> = a.sample_ids.iter().collect();
        assert_eq!(unique.len(), a.n);
    }

    #[test]
    fn subset_self_consistent_and_point_mass() {
        let idx = pool(&[37, 11, 52]);
        let t = DiscreteDistribution::from_weights(&[37.0, 11.0, 52.0]).unwrap();
        let s = max_biased_subset(&idx, &t, 3).unwrap();
        assert_eq!(s.n, 100);
        assert_eq!(s.counts, vec![37, 11, 52]);

        let idx = pool(&[20, 5]);
        let t = DiscreteDistribution::new(vec![1.0, 0.0]).unwrap();
        let s = max_biased_subset(&idx, &t, 3).unwrap();
        assert_eq!(s.counts, vec![20, 0]);
        assert!(s.sample_ids.iter().all(|id| id.starts_with("c0-")));
    }

    #[test]
    fn subset_infeasible() {
        let idx = pool(&[20, 0]);
        let t = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(max_biased_subset(&idx, &t, 0), Err(Error::InfeasibleTarget(c)) if c == "c1"));
    }

    #[test]
    fn unfairface_defaults() {
        let p = ClassPartition::new(FAIRFACE_RACES).unwrap();
        let t = unfairface_target(&p).unwrap();
        assert!(t.get(0) > 0.80);
        assert_eq!(t.get(4), 0.0005);
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut shuffled = FAIRFACE_RACES.to_vec();
        shuffled.reverse();
        let t = unfairface_target(&ClassPartition::new(shuffled).unwrap()).unwrap();
        assert_eq!(t.get(6), 0.825);

        assert!(matches!(
            unfairface_target(&ClassPartition::new(["White", "Black"]).unwrap()),
            Err(Error::WrongPartition(_))
        ));
    }

    #[test]
    fn conditions_compose_mean_and_downsample() {
        let img = |v: f64| Image::constant(8, 8, 3, v).unwrap();
        let conds = build_uninformative_conditions(&[("a".into(), vec![img(0.0), img(255.0)])], 4).unwrap();
        assert!(conds[0].image.pixels().iter().all(|&v| (v - 127.5).abs() < 1e-9));
        assert_eq!(conds[0].image.width(), 4);

        let ramp = Image::new(8, 8, 1, (0..64).map(|v| v as f64 * 3.0).collect()).unwrap();
        let conds = build_uninformative_conditions(&[("b".into(), vec![ramp.clone(), ramp.clone()])], 4).unwrap();
        assert_eq!(conds[0].image, downsample_bilinear_aa(&ramp, 4, 4).unwrap());

        assert!(matches!(build_uninformative_conditions(&[("c".into(), vec![])], 4), Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn identity_simulation() {
        let p = ClassPartition::new(["a", "b", "c"]).unwrap();
        let set = simulate_eval_set(&p, &ConfusionMatrix::identity(3).unwrap(), &[5, 10, 15], 1).unwrap();
        assert!(set.records().iter().all(|r| r.true_class == r.recon_class));
        assert_eq!(pr_distribution(&set).unwrap().probs(), &[5.0 / 30.0, 10.0 / 30.0, 15.0 / 30.0]);
        assert!(matches!(rdp_distribution(&set), Err(Error::DegenerateAllCorrect)));
        assert_eq!(chi2_divergence_to_uniform(&rdp_distribution_correct(&set).unwrap()), 0.0);
    }

    #[test]
    fn simulation_is_seeded() {
        let (p, half, _) = example_scenarios();
        let a = simulate_eval_set(&p, &half, &[50; 3], 11).unwrap();
        assert_eq!(a, simulate_eval_set(&p, &half, &[50; 3], 11).unwrap());
        assert_ne!(a, simulate_eval_set(&p, &half, &[50; 3], 12).unwrap());
    }

    #[test]
    fn expected_distributions_of_examples() {
        let (_, half, swapped) = example_scenarios();
        let u = uniform_distribution(3).unwrap();
        let e = expected_distributions(&half, &u).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(e.pr.probs(), &[0.5, 0.25, 0.25]));
        assert!(close(e.rdp.probs(), u.probs()));
        assert!(close(e.rdp_correct.probs(), u.probs()));

        let e = expected_distributions(&swapped, &u).unwrap();
        assert!(close(e.pr.probs(), u.probs()));
        assert_eq!(e.rdp_correct.probs(), &[1.0, 0.0, 0.0]);

        let prior = DiscreteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let id = ConfusionMatrix::identity(3).unwrap();
        assert!(matches!(expected_distributions(&id, &prior), Err(Error::DegenerateAllCorrect)));
    }

    #[test]
    fn confusion_validation() {
        assert!(ConfusionMatrix::new(vec![vec![1.0, 0.0], vec![0.5, 0.6]]).is_err());
        assert!(ConfusionMatrix::new(vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0]]).is_err());
    }
}
