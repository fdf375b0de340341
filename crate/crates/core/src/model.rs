//! Shared data model: class partitions, evaluation records, diversity
//! groups, and discrete distributions over classes, plus the manifest
//! formats they are loaded from.
//!
//! Class labels are strings on disk and indices in memory. The partition
//! order is the declared order and every per-class vector in the crate is
//! indexed by it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`DiscreteDistribution`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Ordered set of `k >= 2` distinct, non-empty class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassPartition {
    labels: Vec<String>,
}

impl ClassPartition {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidK(labels.len()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.trim().is_empty() {
                return Err(Error::InvalidPartition("empty class label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidPartition(format!("duplicate label {label:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Reads labels from a file: one per line, or comma separated.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_list(&text)
    }

    /// Parses a comma- or newline-separated label list.
    pub fn parse_list(text: &str) -> Result<Self> {
        Self::new(
            text.split([',', '\n'])
                .map(|s| s.trim().trim_end_matches('\r'))
                .filter(|s| !s.is_empty())
                .map(str::to_owned),
        )
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl TryFrom<Vec<String>> for ClassPartition {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<ClassPartition> for Vec<String> {
    fn from(p: ClassPartition) -> Self {
        p.labels
    }
}

/// Classifier outputs and scalar metrics for one (original, reconstruction) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: String,
    /// Classifier label of the original.
    pub true_class: usize,
    /// Classifier label of the reconstruction.
    pub recon_class: usize,
    /// Dataset annotation of the original, when the manifest carries one.
    pub annotated_class: Option<usize>,
    pub embedding_true: Option<Vec<f64>>,
    pub embedding_recon: Option<Vec<f64>>,
    pub scalars: BTreeMap<String, f64>,
}

impl EvalRecord {
    pub fn new(sample_id: impl Into<String>, true_class: usize, recon_class: usize) -> Self {
        Self {
            sample_id: sample_id.into(),
            true_class,
            recon_class,
            annotated_class: None,
            embedding_true: None,
            embedding_recon: None,
            scalars: BTreeMap::new(),
        }
    }

    pub fn with_scalar(mut self, name: impl Into<String>, value: f64) -> Self {
        self.scalars.insert(name.into(), value);
        self
    }

    pub fn with_embeddings(mut self, true_emb: Vec<f64>, recon_emb: Vec<f64>) -> Self {
        self.embedding_true = Some(true_emb);
        self.embedding_recon = Some(recon_emb);
        self
    }

    fn validate(&self, partition: &ClassPartition) -> Result<()> {
        let k = partition.k();
        for class in [Some(self.true_class), Some(self.recon_class), self.annotated_class]
            .into_iter()
            .flatten()
        {
            if class >= k {
                return Err(Error::UnknownClass { line: None, label: format!("#{class}") });
            }
        }
        if let (Some(t), Some(r)) = (&self.embedding_true, &self.embedding_recon) {
            if t.len() != r.len() || t.is_empty() {
                return Err(Error::DimensionMismatch {
                    id: self.sample_id.clone(),
                    left: t.len(),
                    right: r.len(),
                });
            }
        }
        for (name, v) in &self.scalars {
            if !v.is_finite() {
                return Err(Error::NonFinite { line: None, name: name.clone() });
            }
        }
        for v in self.embedding_true.iter().chain(&self.embedding_recon).flatten() {
            if !v.is_finite() {
                return Err(Error::NonFinite { line: None, name: "embedding".into() });
            }
        }
        Ok(())
    }
}

/// A validated test set: one record per sample, unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSet {
    name: String,
    partition: ClassPartition,
    records: Vec<EvalRecord>,
}

impl EvalSet {
    pub fn new(
        name: impl Into<String>,
        partition: ClassPartition,
        records: Vec<EvalRecord>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate(&partition)?;
            if !ids.insert(r.sample_id.as_str()) {
                return Err(Error::DuplicateSample { line: None, id: r.sample_id.clone() });
            }
        }
        Ok(Self { name: name.into(), partition, records })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Records per true class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.partition.k()];
        for r in &self.records {
            counts[r.true_class] += 1;
        }
        counts
    }

    /// Sorted union of scalar metric names over all records.
    pub fn scalar_names(&self) -> Vec<String> {
        let names: BTreeSet<&str> =
            self.records.iter().flat_map(|r| r.scalars.keys().map(String::as_str)).collect();
        names.into_iter().map(str::to_owned).collect()
    }

    pub(crate) fn into_records(self) -> Vec<EvalRecord> {
        self.records
    }
}

/// Reconstructions generated for one uninformative condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGroup {
    pub condition_id: String,
    pub recon_classes: Vec<usize>,
}

/// Predicted classes of repeated reconstructions, grouped by condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversitySet {
    name: String,
    partition: ClassPartition,
    conditions: Vec<ConditionGroup>,
}

impl DiversitySet {
    pub fn new(
        name: impl Into<String>,
        partition: ClassPartition,
        conditions: Vec<ConditionGroup>,
    ) -> Result<Self> {
        let mut ids = HashSet::new();
        for c in &conditions {
            if c.recon_classes.is_empty() {
                return Err(Error::EmptyCondition(c.condition_id.clone()));
            }
            if !ids.insert(c.condition_id.as_str()) {
                return Err(Error::DuplicateSample { line: None, id: c.condition_id.clone() });
            }
            if let Some(&bad) = c.recon_classes.iter().find(|&&j| j >= partition.k()) {
                return Err(Error::UnknownClass { line: None, label: format!("#{bad}") });
            }
        }
        Ok(Self { name: name.into(), partition, conditions })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn conditions(&self) -> &[ConditionGroup] {
        &self.conditions
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replicate counts pooled over all conditions, per class.
    pub fn pooled_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.partition.k()];
        for c in &self.conditions {
            for &j in &c.recon_classes {
                counts[j] += 1;
            }
        }
        counts
    }

    /// A warning when conditions carry different replicate counts.
    pub fn replicate_warning(&self) -> Option<String> {
        let sizes: BTreeSet<usize> = self.conditions.iter().map(|c| c.recon_classes.len()).collect();
        if sizes.len() > 1 {
            Some(format!(
                "conditions have unequal replicate counts (min {}, max {})",
                sizes.first().unwrap(),
                sizes.last().unwrap()
            ))
        } else {
            None
        }
    }
}

/// Probability vector over the `k` classes of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidK(probs.len()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidDistribution("weights must be non-negative with a positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyCounts);
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, j: usize) -> f64 {
        self.probs[j]
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.probs
    }
}

/// `U([k])`.
pub fn uniform_distribution(k: usize) -> Result<DiscreteDistribution> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    Ok(DiscreteDistribution { probs: vec![1.0 / k as f64; k] })
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// Options for [`load_eval_manifest`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions<'a> {
    /// JSON-lines sidecar with `{"sample_id", "true", "recon"}` objects.
    pub embeddings: Option<&'a Path>,
    /// Keep only the first `n` rows (file order) per class whose `label`
    /// annotation agrees with the classifier's `true_class`.
    pub first_correct_per_class: Option<usize>,
}

const SCALAR_PREFIX: &str = "scalar:";

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::MalformedManifest { line, message: e.to_string() },
        kind => Error::MalformedManifest { line, message: format!("{kind:?}") },
    }
}

fn resolve(partition: &ClassPartition, label: &str, line: u64) -> Result<usize> {
    partition
        .index_of(label)
        .ok_or_else(|| Error::UnknownClass { line: Some(line), label: label.to_owned() })
}

fn default_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

enum Column {
    Label,
    Scalar(String),
}

/// Loads and validates an evaluation manifest
/// (`sample_id,true_class,recon_class[,label][,scalar:<name>...]`).
///
/// Empty scalar cells mean the metric is absent for that sample.
pub fn load_eval_manifest(
    path: impl AsRef<Path>,
    partition: &ClassPartition,
    options: &LoadOptions<'_>,
) -> Result<EvalSet> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let fixed = ["sample_id", "true_class", "recon_class"];
    if headers.len() < 3 || headers.iter().take(3).ne(fixed) {
        return Err(Error::MalformedManifest {
            line: Some(1),
            message: format!("header must start with {}", fixed.join(",")),
        });
    }
    let mut extra = Vec::new();
    for (i, h) in headers.iter().enumerate().skip(3) {
        if headers.iter().take(i).any(|prev| prev == h) {
            return Err(Error::MalformedManifest {
                line: Some(1),
                message: format!("duplicate column {h:?}"),
            });
        }
        if h == "label" {
            extra.push(Column::Label);
        } else if let Some(name) = h.strip_prefix(SCALAR_PREFIX).filter(|n| !n.is_empty()) {
            extra.push(Column::Scalar(name.to_owned()));
        } else {
            return Err(Error::MalformedManifest {
                line: Some(1),
                message: format!("unexpected column {h:?}"),
            });
        }
    }

    let mut records = Vec::new();
    let mut ids: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let id = row[0].to_owned();
        if id.is_empty() {
            return Err(Error::MalformedManifest { line: Some(line), message: "empty sample_id".into() });
        }
        if ids.insert(id.clone(), line).is_some() {
            return Err(Error::DuplicateSample { line: Some(line), id });
        }
        let mut record = EvalRecord::new(
            id,
            resolve(partition, &row[1], line)?,
            resolve(partition, &row[2], line)?,
        );
        for (col, cell) in extra.iter().zip(row.iter().skip(3)) {
            if cell.is_empty() {
                continue;
            }
            match col {
                Column::Label => record.annotated_class = Some(resolve(partition, cell, line)?),
                Column::Scalar(name) => {
                    let v: f64 = cell.parse().map_err(|_| Error::MalformedManifest {
                        line: Some(line),
                        message: format!("{name}: cannot parse {cell:?} as a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite { line: Some(line), name: name.clone() });
                    }
                    record.scalars.insert(name.clone(), v);
                }
            }
        }
        records.push(record);
    }

    if let Some(emb_path) = options.embeddings {
        attach_embeddings(&mut records, emb_path)?;
    }
    if let Some(n) = options.first_correct_per_class {
        if !extra.iter().any(|c| matches!(c, Column::Label)) {
            return Err(Error::MalformedManifest {
                line: Some(1),
                message: "filtering on correct labels needs a `label` column".into(),
            });
        }
        let mut kept = vec![0usize; partition.k()];
        records.retain(|r| {
            if r.annotated_class == Some(r.true_class) && kept[r.true_class] < n {
                kept[r.true_class] += 1;
                true
            } else {
                false
            }
        });
    }
    EvalSet::new(default_name(path), partition.clone(), records)
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    sample_id: String,
    #[serde(rename = "true", default, skip_serializing_if = "Option::is_none")]
    true_emb: Option<Vec<f64>>,
    #[serde(rename = "recon", default, skip_serializing_if = "Option::is_none")]
    recon_emb: Option<Vec<f64>>,
}

fn attach_embeddings(records: &mut [EvalRecord], path: &Path) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let index: HashMap<String, usize> =
        records.iter().enumerate().map(|(i, r)| (r.sample_id.clone(), i)).collect();
    let mut seen = HashSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line_no = n as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: EmbeddingLine = serde_json::from_str(&line).map_err(|e| {
            Error::MalformedManifest { line: Some(line_no), message: format!("embeddings: {e}") }
        })?;
        let Some(&i) = index.get(&entry.sample_id) else {
            return Err(Error::MalformedManifest {
                line: Some(line_no),
                message: format!("embeddings: unknown sample {:?}", entry.sample_id),
            });
        };
        if !seen.insert(entry.sample_id.clone()) {
            return Err(Error::DuplicateSample { line: Some(line_no), id: entry.sample_id });
        }
        if let (Some(t), Some(r)) = (&entry.true_emb, &entry.recon_emb) {
            if t.len() != r.len() || t.is_empty() {
                return Err(Error::DimensionMismatch {
                    id: entry.sample_id,
                    left: t.len(),
                    right: r.len(),
                });
            }
        }
        records[i].embedding_true = entry.true_emb;
        records[i].embedding_recon = entry.recon_emb;
    }
    Ok(())
}

/// Writes `set` in the manifest format, plus an embedding sidecar when a
/// path is given and any record carries embeddings.
pub fn write_eval_manifest(
    set: &EvalSet,
    path: impl AsRef<Path>,
    embeddings: Option<&Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let scalar_names = set.scalar_names();
    let with_label = set.records.iter().any(|r| r.annotated_class.is_some());

    let mut header = String::from("sample_id,true_class,recon_class");
    if with_label {
        header.push_str(",label");
    }
    for name in &scalar_names {
        header.push(',');
        header.push_str(&csv_field(&format!("{SCALAR_PREFIX}{name}")));
    }
    let p = &set.partition;
    let write = |out: &mut BufWriter<File>, s: &str| {
        out.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    };
    write(&mut out, &header)?;
    write(&mut out, "\n")?;
    for r in &set.records {
        let mut line = format!(
            "{},{},{}",
            csv_field(&r.sample_id),
            csv_field(p.label(r.true_class)),
            csv_field(p.label(r.recon_class))
        );
        if with_label {
            line.push(',');
            if let Some(a) = r.annotated_class {
                line.push_str(&csv_field(p.label(a)));
            }
        }
        for name in &scalar_names {
            line.push(',');
            if let Some(v) = r.scalars.get(name) {
                line.push_str(&v.to_string());
            }
        }
        line.push('\n');
        write(&mut out, &line)?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    if let Some(emb_path) = embeddings {
        if set.records.iter().any(|r| r.embedding_true.is_some() || r.embedding_recon.is_some()) {
            let file = File::create(emb_path).map_err(|e| Error::io(emb_path, e))?;
            let mut out = BufWriter::new(file);
            for r in &set.records {
                if r.embedding_true.is_none() && r.embedding_recon.is_none() {
                    continue;
                }
                let entry = EmbeddingLine {
                    sample_id: r.sample_id.clone(),
                    true_emb: r.embedding_true.clone(),
                    recon_emb: r.embedding_recon.clone(),
                };
                let json = serde_json::to_string(&entry).expect("embedding line serializes");
                writeln!(out, "{json}").map_err(|e| Error::io(emb_path, e))?;
            }
            out.flush().map_err(|e| Error::io(emb_path, e))?;
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s != s.trim() {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Loads a diversity manifest (`condition_id,replicate,recon_class`).
///
/// A row with an empty `recon_class` declares a condition without adding a
/// replicate; a condition that never receives one is an error. Conditions
/// keep their first-appearance order and replicates keep file order.
pub fn load_diversity_manifest(path: impl AsRef<Path>, partition: &ClassPartition) -> Result<DiversitySet> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(["condition_id", "replicate", "recon_class"]) {
        return Err(Error::MalformedManifest {
            line: Some(1),
            message: "header must be condition_id,replicate,recon_class".into(),
        });
    }
    let mut groups: Vec<ConditionGroup> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    let mut replicates: HashSet<(String, u64)> = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let cond = row[0].to_owned();
        if cond.is_empty() {
            return Err(Error::MalformedManifest { line: Some(line), message: "empty condition_id".into() });
        }
        let g = *position.entry(cond.clone()).or_insert_with(|| {
            groups.push(ConditionGroup { condition_id: cond.clone(), recon_classes: Vec::new() });
            groups.len() - 1
        });
        if row[2].is_empty() {
            continue;
        }
        let rep: u64 = row[1].parse().map_err(|_| Error::MalformedManifest {
            line: Some(line),
            message: format!("replicate {:?} is not a non-negative integer", &row[1]),
        })?;
        if !replicates.insert((cond.clone(), rep)) {
            return Err(Error::DuplicateSample { line: Some(line), id: format!("{cond}/{rep}") });
        }
        groups[g].recon_classes.push(resolve(partition, &row[2], line)?);
    }
    DiversitySet::new(default_name(path), partition.clone(), groups)
}

pub fn write_diversity_manifest(set: &DiversitySet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("condition_id,replicate,recon_class\n");
    for c in &set.conditions {
        for (i, &j) in c.recon_classes.iter().enumerate() {
            text.push_str(&format!(
                "{},{},{}\n",
                csv_field(&c.condition_id),
                i,
                csv_field(set.partition.label(j))
            ));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Collects distinct labels from the named CSV columns: first-appearance
/// order within the first column, then labels seen only in later columns.
/// Used when no partition is declared explicitly.
pub fn infer_partition(path: impl AsRef<Path>, columns: &[&str]) -> Result<ClassPartition> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers.iter().position(|h| h == *c).ok_or_else(|| Error::MalformedManifest {
                line: Some(1),
                message: format!("missing column {c:?}"),
            })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>().map_err(csv_error)?;
    let mut labels: Vec<String> = Vec::new();
    for &i in &idx {
        for row in &rows {
            let cell = row.get(i).unwrap_or("");
            if !cell.is_empty() && !labels.iter().any(|l| l == cell) {
                labels.push(cell.to_owned());
            }
        }
    }
    ClassPartition::new(labels)
}
