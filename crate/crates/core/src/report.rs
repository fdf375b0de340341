//! Benchmark reports: performance, fairness and diversity tables with their
//! significance markers, plus per-class breakdowns, rendered as JSON, CSV
//! or Markdown.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attribute::{summarize_metric, Metric, COS_SIM_KEY};
use crate::error::{Error, Result};
use crate::fairness::{
    class_outcomes, rdp_distribution_with, recon_counts, ucpr_distribution, uniform_scores, FairnessKind,
    FairnessScores, RdpVariant,
};
use crate::model::{DiversitySet, EvalRecord, EvalSet};
use crate::stats::{
    anderson_darling_normal, chi2_binary_paired, chi2_gof_uniform, chi2_homogeneity, wilcoxon_signed_rank,
    TestResult, DEFAULT_ALPHA,
};

/// Scalar whose report column is negated so that lower reads as better.
pub const BLUR_KEY: &str = "blur";

/// Metrics in the column order used when the config does not pick any.
const PREFERRED_ORDER: [&str; 6] = ["lpips", "dssim", "cos", "loss_01", "niqe", BLUR_KEY];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub alpha: f64,
    pub rdp_variant: RdpVariant,
    /// `None` includes every metric found in the inputs.
    pub metrics: Option<Vec<String>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, rdp_variant: RdpVariant::default(), metrics: None }
    }
}

impl ReportConfig {
    /// Parses `key = value` lines. `#` starts a comment. Recognized keys are
    /// `alpha`, `rdp_variant` and `metrics` (comma separated).
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let value = value.trim();
            match key.trim() {
                "alpha" => {
                    cfg.alpha = value
                        .parse()
                        .map_err(|_| Error::Config(format!("line {}: bad alpha {value:?}", i + 1)))?;
                }
                "rdp_variant" => cfg.rdp_variant = RdpVariant::from_str(value)?,
                "metrics" => {
                    let list: Vec<String> =
                        value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect();
                    cfg.metrics = Some(list);
                }
                other => return Err(Error::Config(format!("line {}: unknown key {other:?}", i + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// One model trained on one dataset.
#[derive(Debug, Clone)]
pub struct VariantInput {
    pub model: String,
    pub dataset: String,
    pub eval: Option<EvalSet>,
    pub diversity: Option<DiversitySet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCell {
    pub dataset: String,
    pub mean: Option<f64>,
    pub n: usize,
}

/// Paired comparison of one metric between the first two datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub datasets: [String; 2],
    pub paired_n: usize,
    pub test: Option<TestResult>,
    /// Bold marker: the paired test did not reject.
    pub not_significant: bool,
    /// Anderson-Darling on the paired differences.
    pub normality: Option<TestResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRow {
    pub model: String,
    pub metric: String,
    pub cells: Vec<PerformanceCell>,
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessRow {
    pub model: String,
    pub dataset: String,
    pub kind: FairnessKind,
    pub scores: Option<FairnessScores>,
    pub test: Option<TestResult>,
    /// Cross marker: the uniformity test rejected.
    pub rejected: bool,
    pub note: Option<String>,
}

/// One value of a per-class breakdown: a metric mean or a distribution mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassValue {
    pub series: String,
    pub model: String,
    pub dataset: String,
    pub class: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub alpha: f64,
    pub rdp_variant: RdpVariant,
    pub classes: Vec<String>,
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub metrics: Vec<String>,
    pub performance: Vec<PerformanceRow>,
    pub fairness: Vec<FairnessRow>,
    pub diversity: Vec<FairnessRow>,
    pub per_class: Vec<ClassValue>,
    pub notes: Vec<String>,
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.filter(|s| seen.insert(*s)).map(str::to_owned).collect()
}

fn available_metrics(variants: &[VariantInput]) -> Vec<String> {
    let mut names = BTreeSet::new();
    for set in variants.iter().filter_map(|v| v.eval.as_ref()) {
        names.insert("loss_01".to_owned());
        if set.records().iter().any(|r| Metric::CosineLoss.value(r).is_some()) {
            names.insert("cos".to_owned());
        }
        names.extend(set.scalar_names().into_iter().filter(|n| n != COS_SIM_KEY));
    }
    let mut out: Vec<String> = PREFERRED_ORDER.iter().filter(|m| names.contains(**m)).map(|m| m.to_string()).collect();
    out.extend(names.into_iter().filter(|n| !PREFERRED_ORDER.contains(&n.as_str())));
    out
}

fn report_value(metric: &Metric, v: f64) -> f64 {
    if metric.name() == BLUR_KEY {
        -v
    } else {
        v
    }
}

fn compare(
    metric: &Metric,
    a: &EvalSet,
    b: &EvalSet,
    names: [&str; 2],
    alpha: f64,
) -> Result<Comparison> {
    let by_id: HashMap<&str, &EvalRecord> = b.records().iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let common: Vec<(&EvalRecord, &EvalRecord)> =
        a.records().iter().filter_map(|r| by_id.get(r.sample_id.as_str()).map(|s| (r, *s))).collect();
    if common.is_empty() {
        return Err(Error::NoPairedSamples(names[0].to_owned(), names[1].to_owned()));
    }
    let pairs: Vec<(f64, f64)> =
        common.iter().filter_map(|(x, y)| Some((metric.value(x)?, metric.value(y)?))).collect();
    let mut cmp = Comparison {
        datasets: [names[0].to_owned(), names[1].to_owned()],
        paired_n: pairs.len(),
        test: None,
        not_significant: false,
        normality: None,
        note: None,
    };
    if pairs.is_empty() {
        cmp.note = Some("no paired samples carry this metric".into());
        return Ok(cmp);
    }
    let outcome = if metric.is_binary() {
        let xa: Vec<bool> = pairs.iter().map(|p| p.0 != 0.0).collect();
        let xb: Vec<bool> = pairs.iter().map(|p| p.1 != 0.0).collect();
        chi2_binary_paired(&xa, &xb, alpha)
    } else {
        let (xa, xb): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).collect();
        cmp.normality = anderson_darling_normal(&diffs, alpha).ok();
        wilcoxon_signed_rank(&xa, &xb, alpha)
    };
    match outcome {
        Ok(t) => {
            cmp.not_significant = !t.reject;
            cmp.test = Some(t);
        }
        Err(e @ (Error::AllZeroDifferences | Error::DegenerateMargin)) => {
            cmp.not_significant = true;
            cmp.note = Some(format!("{e}; no evidence of a difference"));
        }
        Err(e) => return Err(e),
    }
    Ok(cmp)
}

fn rdp_row(model: &str, dataset: &str, set: &EvalSet, cfg: &ReportConfig) -> Result<FairnessRow> {
    let kind = FairnessKind::rdp(cfg.rdp_variant);
    let mut row = FairnessRow {
        model: model.to_owned(),
        dataset: dataset.to_owned(),
        kind,
        scores: None,
        test: None,
        rejected: false,
        note: None,
    };
    match rdp_distribution_with(set, cfg.rdp_variant) {
        Ok(d) => row.scores = Some(FairnessScores::from_distribution(kind, d)),
        Err(e @ (Error::DegenerateAllCorrect | Error::DegenerateAllWrong)) => {
            row.scores = Some(uniform_scores(kind, set.partition().k())?);
            row.note = Some(e.to_string());
        }
        Err(e @ Error::EmptyClass(_)) => {
            row.note = Some(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e),
    }
    let table: Vec<[u64; 2]> = class_outcomes(set).into_iter().map(|(ok, n)| [ok, n - ok]).collect();
    match chi2_homogeneity(&table, cfg.alpha) {
        Ok(t) => {
            row.rejected = t.reject;
            row.test = Some(t);
        }
        Err(Error::DegenerateMargin) => {}
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn gof_row(
    model: &str,
    dataset: &str,
    kind: FairnessKind,
    scores: FairnessScores,
    counts: &[u64],
    alpha: f64,
) -> Result<FairnessRow> {
    let test = chi2_gof_uniform(counts, alpha)?;
    Ok(FairnessRow {
        model: model.to_owned(),
        dataset: dataset.to_owned(),
        kind,
        scores: Some(scores),
        rejected: test.reject,
        test: Some(test),
        note: None,
    })
}

fn push_distribution(out: &mut Vec<ClassValue>, row: &FairnessRow, classes: &[String]) {
    let Some(scores) = &row.scores else { return };
    for (class, &p) in classes.iter().zip(scores.distribution.probs()) {
        out.push(ClassValue {
            series: format!("P_{}", row.kind),
            model: row.model.clone(),
            dataset: row.dataset.clone(),
            class: class.clone(),
            value: Some(p),
        });
    }
}

/// Assembles a report over model variants. Variants of the same model on
/// the first two datasets (in order of appearance) are compared pairwise
/// on their shared sample ids.
pub fn build_report(variants: &[VariantInput], cfg: &ReportConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let partition = variants
        .iter()
        .find_map(|v| v.eval.as_ref().map(EvalSet::partition).or(v.diversity.as_ref().map(DiversitySet::partition)))
        .ok_or(Error::EmptySet)?
        .clone();
    for v in variants {
        let other = v.eval.as_ref().map(EvalSet::partition).into_iter().chain(v.diversity.as_ref().map(DiversitySet::partition));
        for p in other {
            if p != &partition {
                return Err(Error::InvalidPartition(format!(
                    "{} / {} uses a different class partition",
                    v.model, v.dataset
                )));
            }
        }
    }
    let classes = partition.labels().to_vec();
    let models = first_appearance(variants.iter().map(|v| v.model.as_str()));
    let datasets = first_appearance(variants.iter().map(|v| v.dataset.as_str()));
    let metrics = match &cfg.metrics {
        Some(m) => m.clone(),
        None => available_metrics(variants),
    };
    let lookup = |model: &str, dataset: &str| variants.iter().find(|v| v.model == model && v.dataset == dataset);

    let mut report = BenchmarkReport {
        alpha: cfg.alpha,
        rdp_variant: cfg.rdp_variant,
        classes: classes.clone(),
        models: models.clone(),
        datasets: datasets.clone(),
        metrics: metrics.clone(),
        performance: Vec::new(),
        fairness: Vec::new(),
        diversity: Vec::new(),
        per_class: Vec::new(),
        notes: Vec::new(),
    };

    for model in &models {
        for name in &metrics {
            let metric = Metric::parse(name);
            let mut cells = Vec::new();
            for dataset in &datasets {
                let summary = lookup(model, dataset)
                    .and_then(|v| v.eval.as_ref())
                    .map(|set| summarize_metric(set, &metric));
                let summary = match summary {
                    Some(Ok(s)) => Some(s),
                    Some(Err(Error::UnknownMetric(_))) | None => None,
                    Some(Err(e)) => return Err(e),
                };
                if let Some(s) = &summary {
                    for (class, m) in classes.iter().zip(&s.per_class_means) {
                        report.per_class.push(ClassValue {
                            series: name.clone(),
                            model: model.clone(),
                            dataset: dataset.clone(),
                            class: class.clone(),
                            value: m.map(|v| report_value(&metric, v)),
                        });
                    }
                }
                cells.push(PerformanceCell {
                    dataset: dataset.clone(),
                    mean: summary.as_ref().map(|s| report_value(&metric, s.overall_mean)),
                    n: summary.as_ref().map_or(0, |s| s.count()),
                });
            }
            let comparison = match datasets.as_slice() {
                [d0, d1, ..] => match (
                    lookup(model, d0).and_then(|v| v.eval.as_ref()),
                    lookup(model, d1).and_then(|v| v.eval.as_ref()),
                ) {
                    (Some(a), Some(b)) if cells[0].mean.is_some() && cells[1].mean.is_some() => {
                        Some(compare(&metric, a, b, [d0, d1], cfg.alpha)?)
                    }
                    _ => None,
                },
                _ => None,
            };
            report.performance.push(PerformanceRow { model: model.clone(), metric: name.clone(), cells, comparison });
        }

        for dataset in &datasets {
            let Some(v) = lookup(model, dataset) else { continue };
            if let Some(set) = &v.eval {
                let rdp = rdp_row(model, dataset, set, cfg)?;
                push_distribution(&mut report.per_class, &rdp, &classes);
                if let Some(note) = &rdp.note {
                    report.notes.push(format!("{model} / {dataset}: {note}"));
                }
                report.fairness.push(rdp);
                if !set.is_empty() {
                    let counts = recon_counts(set);
                    let dist = crate::model::DiscreteDistribution::from_counts(&counts)?;
                    let pr = gof_row(
                        model,
                        dataset,
                        FairnessKind::Pr,
                        FairnessScores::from_distribution(FairnessKind::Pr, dist),
                        &counts,
                        cfg.alpha,
                    )?;
                    push_distribution(&mut report.per_class, &pr, &classes);
                    report.fairness.push(pr);
                }
            }
            if let Some(div) = &v.diversity {
                let scores = FairnessScores::from_distribution(FairnessKind::Ucpr, ucpr_distribution(div)?);
                let row = gof_row(model, dataset, FairnessKind::Ucpr, scores, &div.pooled_counts(), cfg.alpha)?;
                push_distribution(&mut report.per_class, &row, &classes);
                if let Some(w) = div.replicate_warning() {
                    report.notes.push(format!("{model} / {dataset}: {w}"));
                }
                report.diversity.push(row);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

pub fn emit(report: &BenchmarkReport, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
        Format::Markdown => to_markdown(report),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn to_json(report: &BenchmarkReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report is serializable");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<BenchmarkReport> {
    serde_json::from_str(text).map_err(|e| Error::MalformedManifest { line: Some(e.line() as u64), message: e.to_string() })
}

const CSV_HEADER: [&str; 12] =
    ["section", "model", "dataset", "name", "class", "value", "n", "test", "statistic", "p_value", "reject", "marker"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flat CSV with a `section` column: `performance` (one row per variant and
/// metric), `fairness`, `diversity` (one row per discrepancy) and
/// `per_class`.
pub fn to_csv(report: &BenchmarkReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut put = |fields: [String; 12]| w.write_record(&fields).expect("in-memory write");
    put(CSV_HEADER.map(str::to_owned));
    for row in &report.performance {
        let test = row.comparison.as_ref().and_then(|c| c.test.as_ref());
        let marker = match &row.comparison {
            Some(c) if c.not_significant => "not_significant",
            Some(_) => "significant",
            None => "",
        };
        for cell in &row.cells {
            put([
                "performance".into(),
                row.model.clone(),
                cell.dataset.clone(),
                row.metric.clone(),
                String::new(),
                opt(cell.mean),
                cell.n.to_string(),
                test.map(|t| t.test.clone()).unwrap_or_default(),
                opt(test.map(|t| t.statistic)),
                opt(test.map(|t| t.p_value)),
                test.map(|t| t.reject.to_string()).unwrap_or_default(),
                marker.into(),
            ]);
        }
    }
    for (section, rows) in [("fairness", &report.fairness), ("diversity", &report.diversity)] {
        for row in rows {
            let t = row.test.as_ref();
            for (suffix, value) in [
                ("chi2", row.scores.as_ref().map(|s| s.chi2_divergence)),
                ("cheb", row.scores.as_ref().map(|s| s.chebyshev)),
            ] {
                put([
                    section.into(),
                    row.model.clone(),
                    row.dataset.clone(),
                    format!("{}-{suffix}", row.kind),
                    String::new(),
                    opt(value),
                    t.map(|t| t.n.to_string()).unwrap_or_default(),
                    t.map(|t| t.test.clone()).unwrap_or_default(),
                    opt(t.map(|t| t.statistic)),
                    opt(t.map(|t| t.p_value)),
                    t.map(|t| t.reject.to_string()).unwrap_or_default(),
                    if row.rejected { "rejected".into() } else { String::new() },
                ]);
            }
        }
    }
    for v in &report.per_class {
        put([
            "per_class".into(),
            v.model.clone(),
            v.dataset.clone(),
            v.series.clone(),
            v.class.clone(),
            opt(v.value),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

const ABSENT: &str = "—";
const CROSS: &str = "✗";

fn metric_title(name: &str) -> String {
    match name {
        "lpips" => "LPIPS".into(),
        "dssim" => "DSSIM".into(),
        "cos" => "L_cos".into(),
        "loss_01" => "L_0-1".into(),
        "niqe" => "NIQE".into(),
        BLUR_KEY => "BLUR".into(),
        other => other.to_owned(),
    }
}

fn num(v: f64) -> String {
    format!("{v:.3}")
}

fn table_header(out: &mut String, groups: &[String], datasets: &[String]) {
    out.push_str("| Model |");
    for g in groups {
        for d in datasets {
            let _ = write!(out, " {g} ({d}) |");
        }
    }
    out.push_str("\n|---|");
    for _ in 0..groups.len() * datasets.len() {
        out.push_str("---:|");
    }
    out.push('\n');
}

fn fairness_table(out: &mut String, report: &BenchmarkReport, rows: &[FairnessRow], kinds: &[FairnessKind]) {
    let mut groups = Vec::new();
    for k in kinds {
        groups.push(format!("Δ {k}-χ²"));
        groups.push(format!("Δ {k}-Cheb"));
        groups.push(format!("P_{k} = U"));
    }
    table_header(out, &groups, &report.datasets);
    for model in &report.models {
        let _ = write!(out, "| {model} |");
        for kind in kinds {
            let find = |d: &String| rows.iter().find(|r| &r.model == model && &r.dataset == d && r.kind == *kind);
            for pick in 0..3 {
                for d in &report.datasets {
                    let cell = match (find(d), pick) {
                        (Some(FairnessRow { scores: Some(s), .. }), 0) => num(s.chi2_divergence),
                        (Some(FairnessRow { scores: Some(s), .. }), 1) => num(s.chebyshev),
                        (Some(r @ FairnessRow { test: Some(_), .. }), 2) => {
                            if r.rejected { CROSS.into() } else { String::new() }
                        }
                        _ => ABSENT.into(),
                    };
                    let _ = write!(out, " {cell} |");
                }
            }
        }
        out.push('\n');
    }
}

/// Markdown rendering with the three benchmark tables and per-class
/// breakdowns.
pub fn to_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::from("# Benchmark report\n\n");
    let _ = writeln!(
        out,
        "Classes: {}. Significance level α = {}. RDP variant: {}.\n",
        report.classes.join(", "),
        report.alpha,
        match report.rdp_variant {
            RdpVariant::Estimator => "estimator",
            RdpVariant::Correct => "correct",
        }
    );

    if !report.performance.is_empty() {
        out.push_str("## Performance\n\n");
        let titles: Vec<String> = report.metrics.iter().map(|m| metric_title(m)).collect();
        table_header(&mut out, &titles, &report.datasets);
        for model in &report.models {
            let _ = write!(out, "| {model} |");
            for metric in &report.metrics {
                let row = report.performance.iter().find(|r| &r.model == model && &r.metric == metric);
                let bold = row.and_then(|r| r.comparison.as_ref()).is_some_and(|c| c.not_significant);
                for d in &report.datasets {
                    let mean = row.and_then(|r| r.cells.iter().find(|c| &c.dataset == d)).and_then(|c| c.mean);
                    let cell = match mean {
                        Some(v) if bold => format!("**{}**", num(v)),
                        Some(v) => num(v),
                        None => ABSENT.into(),
                    };
                    let _ = write!(out, " {cell} |");
                }
            }
            out.push('\n');
        }
        if report.datasets.len() >= 2 {
            let _ = writeln!(
                out,
                "\nValues are in **bold** if the null hypothesis that the results on {} and {} coincide is not \
                 rejected at α = {}. Lower scores indicate a better performance. {ABSENT} marks a metric that is \
                 not available.",
                report.datasets[0], report.datasets[1], report.alpha
            );
        }
        out.push('\n');
    }

    if !report.fairness.is_empty() {
        out.push_str("## Fairness\n\n");
        let rdp = FairnessKind::rdp(report.rdp_variant);
        fairness_table(&mut out, report, &report.fairness, &[rdp, FairnessKind::Pr]);
        let _ = writeln!(
            out,
            "\nLower scores indicate more fairness. {CROSS} marks that the null hypothesis P_{rdp} = U or \
             P_PR = U is rejected at α = {}.\n",
            report.alpha
        );
    }

    if !report.diversity.is_empty() {
        out.push_str("## Diversity\n\n");
        fairness_table(&mut out, report, &report.diversity, &[FairnessKind::Ucpr]);
        let _ = writeln!(
            out,
            "\nLower scores indicate more diversity. {CROSS} marks that the null hypothesis P_UCPR = U is \
             rejected at α = {}.\n",
            report.alpha
        );
    }

    let series = first_appearance(report.per_class.iter().map(|v| v.series.as_str()));
    if !series.is_empty() {
        out.push_str("## Per-class breakdown\n");
        for s in &series {
            let _ = writeln!(out, "\n### {}\n", metric_title(s));
            out.push_str("| Model | Dataset |");
            for c in &report.classes {
                let _ = write!(out, " {c} |");
            }
            out.push_str("\n|---|---|");
            for _ in &report.classes {
                out.push_str("---:|");
            }
            out.push('\n');
            for model in &report.models {
                for d in &report.datasets {
                    let values: Vec<&ClassValue> = report
                        .per_class
                        .iter()
                        .filter(|v| &v.series == s && &v.model == model && &v.dataset == d)
                        .collect();
                    if values.is_empty() {
                        continue;
                    }
                    let _ = write!(out, "| {model} | {d} |");
                    for c in &report.classes {
                        let v = values.iter().find(|v| &v.class == c).and_then(|v| v.value);
                        let _ = write!(out, " {} |", v.map_or(ABSENT.into(), num));
                    }
                    out.push('\n');
                }
            }
        }
    }

    if !report.notes.is_empty() {
        out.push_str("\n## Notes\n\n");
        for n in &report.notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassPartition, ConditionGroup};

    fn partition() -> ClassPartition {
        ClassPartition::new(["a", "b"]).unwrap()
    }

    fn set(name: &str, recon: &[usize], lpips: &[f64]) -> EvalSet {
        let records = recon
            .iter()
            .zip(lpips)
            .enumerate()
            .map(|(i, (&r, &l))| EvalRecord::new(format!("s{i}"), i % 2, r).with_scalar("lpips", l))
            .collect();
        EvalSet::new(name, partition(), records).unwrap()
    }

    fn variant(model: &str, dataset: &str, eval: EvalSet) -> VariantInput {
        VariantInput { model: model.into(), dataset: dataset.into(), eval: Some(eval), diversity: None }
    }

    fn sample_variants() -> Vec<VariantInput> {
        let recon: Vec<usize> = (0..40).map(|i| if i % 5 == 0 { 1 - i % 2 } else { i % 2 }).collect();
        let l: Vec<f64> = (0..40).map(|i| 0.2 + 0.01 * i as f64).collect();
        let l2: Vec<f64> = l.iter().map(|v| v + 0.05).collect();
        vec![
            variant("m", "UFF", set("u", &recon, &l)),
            variant("m", "FF", set("f", &recon, &l2)),
        ]
    }

    #[test]
    fn config_parsing() {
        let cfg = ReportConfig::parse("# comment\nalpha = 0.01\nrdp_variant = correct\nmetrics = lpips, loss_01\n").unwrap();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.rdp_variant, RdpVariant::Correct);
        assert_eq!(cfg.metrics, Some(vec!["lpips".into(), "loss_01".into()]));
        assert!(ReportConfig::parse("alpha = 2").is_err());
        assert!(ReportConfig::parse("colour = red").is_err());
        assert!(ReportConfig::parse("alpha").is_err());
    }

    #[test]
    fn identical_variants_are_never_significant() {
        let v = sample_variants();
        let same = vec![variant("m", "UFF", v[0].eval.clone().unwrap()), variant("m", "FF", v[0].eval.clone().unwrap())];
        let r = build_report(&same, &ReportConfig::default()).unwrap();
        assert_eq!(r.metrics, vec!["lpips", "loss_01"]);
        assert!(r.performance.iter().all(|p| p.comparison.as_ref().unwrap().not_significant));
        let md = to_markdown(&r);
        assert!(md.contains("**"));
    }

    #[test]
    fn shifted_metric_is_significant() {
        let r = build_report(&sample_variants(), &ReportConfig::default()).unwrap();
        let lpips = r.performance.iter().find(|p| p.metric == "lpips").unwrap();
        let c = lpips.comparison.as_ref().unwrap();
        assert!(!c.not_significant);
        assert!(c.test.as_ref().unwrap().test.starts_with("wilcoxon_signed_rank"));
        assert!(c.normality.is_some());
        let loss = r.performance.iter().find(|p| p.metric == "loss_01").unwrap();
        assert!(loss.comparison.as_ref().unwrap().note.is_none());
        assert_eq!(loss.comparison.as_ref().unwrap().test.as_ref().unwrap().test, "pearson_chi2_binary");
    }

    #[test]
    fn disjoint_ids_error() {
        let mut v = sample_variants();
        let renamed: Vec<EvalRecord> = v[1]
            .eval
            .as_ref()
            .unwrap()
            .records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.sample_id = format!("x{}", r.sample_id);
                r
            })
            .collect();
        v[1].eval = Some(EvalSet::new("f", partition(), renamed).unwrap());
        assert!(matches!(build_report(&v, &ReportConfig::default()), Err(Error::NoPairedSamples(..))));
    }

    #[test]
    fn absent_metric_renders_dash() {
        let mut v = sample_variants();
        let stripped: Vec<EvalRecord> = v[1]
            .eval
            .as_ref()
            .unwrap()
            .records()
            .iter()
            .map(|r| EvalRecord::new(r.sample_id.clone(), r.true_class, r.recon_class))
            .collect();
        v[1].eval = Some(EvalSet::new("f", partition(), stripped).unwrap());
        let r = build_report(&v, &ReportConfig::default()).unwrap();
        let lpips = r.performance.iter().find(|p| p.metric == "lpips").unwrap();
        assert!(lpips.comparison.is_none());
        assert_eq!(lpips.cells[1].mean, None);
        assert!(to_markdown(&r).contains(ABSENT));
    }

    #[test]
    fn blur_is_negated() {
        let records = (0..10)
            .map(|i| EvalRecord::new(format!("s{i}"), i % 2, i % 2).with_scalar(BLUR_KEY, 3.0))
            .collect();
        let s = EvalSet::new("x", partition(), records).unwrap();
        let r = build_report(&[variant("m", "d", s)], &ReportConfig::default()).unwrap();
        let blur = r.performance.iter().find(|p| p.metric == BLUR_KEY).unwrap();
        assert_eq!(blur.cells[0].mean, Some(-3.0));
        assert!(blur.comparison.is_none());
    }

    #[test]
    fn perfect_model_reports_degenerate_rdp() {
        let records = (0..10).map(|i| EvalRecord::new(format!("s{i}"), i % 2, i % 2)).collect();
        let s = EvalSet::new("x", partition(), records).unwrap();
        let r = build_report(&[variant("m", "d", s)], &ReportConfig::default()).unwrap();
        let rdp = &r.fairness[0];
        assert_eq!(rdp.scores.as_ref().unwrap().chi2_divergence, 0.0);
        assert!(rdp.note.as_ref().unwrap().contains("every class"));
        assert!(!rdp.rejected);
        assert!(r.notes.iter().any(|n| n.contains("every class")));
    }

    #[test]
    fn emitted_formats() {
        let mut v = sample_variants();
        let conditions = vec![
            ConditionGroup { condition_id: "a".into(), recon_classes: vec![0; 50] },
            ConditionGroup { condition_id: "b".into(), recon_classes: vec![0; 50] },
        ];
        v[0].diversity = Some(DiversitySet::new("d", partition(), conditions).unwrap());
        let r = build_report(&v, &ReportConfig::default()).unwrap();
        assert!(r.diversity[0].rejected);

        let dir = tempfile::tempdir().unwrap();
        for f in [Format::Json, Format::Csv, Format::Markdown] {
            emit(&r, f, dir.path().join(format!("r.{}", f.extension()))).unwrap();
        }
        let back = from_json(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(back, r);

        let csv_text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
        let perf = csv_text.lines().filter(|l| l.starts_with("performance,")).count();
        assert_eq!(perf, 2 * r.metrics.len());

        let md = fs::read_to_string(dir.path().join("r.md")).unwrap();
        let (tables, breakdown) = md.split_once("## Per-class").unwrap();
        assert_eq!(tables.lines().filter(|l| l.starts_with("| m |")).count(), 3);
        assert!(breakdown.contains("| m | UFF |"));
        assert!(md.contains(CROSS));
        assert!(md.contains("| Model | LPIPS (UFF) | LPIPS (FF) | L_0-1 (UFF) | L_0-1 (FF) |"));
    }

    #[test]
    fn partition_mismatch_is_rejected() {
        let mut v = sample_variants();
        let other = ClassPartition::new(["a", "c"]).unwrap();
        let records = v[1].eval.as_ref().unwrap().records().to_vec();
        v[1].eval = Some(EvalSet::new("f", other, records).unwrap());
        assert!(matches!(build_report(&v, &ReportConfig::default()), Err(Error::InvalidPartition(_))));
    }
}
