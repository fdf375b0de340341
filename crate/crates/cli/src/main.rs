//! `genfair` command-line tool.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genfair::attribute::annotate_cosine;
use genfair::dataset::{
    load_target_distribution, max_biased_subset, simulate_eval_set, unfairface_target, ConfusionMatrix, LabeledIndex,
};
use genfair::fairness::{
    chi2_divergence, chebyshev_distance, pr_distribution, recon_counts, FairnessKind, FairnessScores,
};
use genfair::image::{blur_index, dssim, perturb_gaussian, Image};
use genfair::model::{
    infer_partition, load_diversity_manifest, load_eval_manifest, write_eval_manifest, LoadOptions,
};
use genfair::report::{build_report, emit, BenchmarkReport, FairnessRow, Format, ReportConfig, VariantInput};
use genfair::stats::chi2_gof;
use genfair::{ClassPartition, DiversitySet, Error, EvalRecord, EvalSet, RdpVariant, Result};

#[derive(Parser)]
#[command(name = "genfair", version, about = "Performance, fairness and diversity evaluation for image reconstruction models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an evaluation or diversity manifest
    Validate {
        manifest: PathBuf,
        #[command(flatten)]
        classes: ClassArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Per-class and overall attribute losses and external metrics
    Metrics {
        manifest: PathBuf,
        #[command(flatten)]
        classes: ClassArgs,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Directory of original images named `<sample_id>.png`
        #[arg(long, requires = "reconstructions")]
        originals: Option<PathBuf>,
        /// Directory of reconstructions named `<sample_id>.png`
        #[arg(long, requires = "originals")]
        reconstructions: Option<PathBuf>,
        /// Keep the first N rows per class whose `label` agrees with `true_class`
        #[arg(long)]
        first_correct: Option<usize>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// RDP and PR scores with uniformity tests
    Fairness {
        manifest: PathBuf,
        #[command(flatten)]
        classes: ClassArgs,
        /// CSV `class,probability` to score PR against instead of uniform
        #[arg(long)]
        pr_reference: Option<PathBuf>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// UCPR scores of repeated reconstructions of uninformative conditions
    Diversity {
        manifest: PathBuf,
        #[command(flatten)]
        classes: ClassArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Largest subset of a labeled pool that follows a target class distribution
    Subsample {
        /// CSV `sample_id,class`
        #[arg(long)]
        index: PathBuf,
        /// CSV `class,probability`, or `unfairface` for the built-in proportions
        #[arg(long)]
        target: String,
        #[command(flatten)]
        classes: ClassArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV of selected ids; a `_summary.csv` is written next to it
        #[arg(long)]
        out: PathBuf,
    },
    /// Uninformative 4x4 conditions from class-grouped image directories
    Conditions {
        /// Directory with one subdirectory of PNGs per class
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        size: usize,
        /// `n,sigma,seed`: also write n noisy copies per condition
        #[arg(long, value_parser = parse_perturb)]
        perturb: Option<Perturb>,
    },
    /// Evaluation manifest drawn from a confusion matrix
    Simulate {
        /// CSV with header `true_class,<label>...`
        #[arg(long)]
        confusion: PathBuf,
        /// Records per class: one number for all classes or one per class
        #[arg(long, default_value = "1000")]
        counts: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark tables over several models and training datasets
    Report {
        /// `MODEL:DATASET=manifest.csv`, repeatable
        #[arg(long = "eval", value_parser = parse_variant)]
        evals: Vec<(String, String, PathBuf)>,
        /// `MODEL:DATASET=diversity.csv`, repeatable
        #[arg(long = "diversity", value_parser = parse_variant)]
        diversities: Vec<(String, String, PathBuf)>,
        #[command(flatten)]
        classes: ClassArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Args)]
struct ClassArgs {
    /// Class labels, comma separated, or a file with one label per line.
    /// Inferred from the manifests when omitted.
    #[arg(long)]
    classes: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Plain-text `key = value` config
    #[arg(long, env = "GENFAIR_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    rdp_variant: Option<CliRdpVariant>,
    /// Comma-separated metric names
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long, value_enum, default_value_t = CliFormat::All)]
    format: CliFormat,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliRdpVariant {
    Estimator,
    Correct,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliFormat {
    Json,
    Csv,
    Markdown,
    All,
}

#[derive(Clone, Copy, Debug)]
struct Perturb {
    n: usize,
    sigma: f64,
    seed: u64,
}

fn parse_perturb(s: &str) -> std::result::Result<Perturb, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, sigma, seed] = parts.as_slice() else {
        return Err("expected n,sigma,seed".into());
    };
    Ok(Perturb {
        n: n.parse().map_err(|_| format!("bad count {n:?}"))?,
        sigma: sigma.parse().map_err(|_| format!("bad sigma {sigma:?}"))?,
        seed: seed.parse().map_err(|_| format!("bad seed {seed:?}"))?,
    })
}

fn parse_variant(s: &str) -> std::result::Result<(String, String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected MODEL:DATASET=PATH")?;
    let (model, dataset) = name.split_once(':').ok_or("expected MODEL:DATASET=PATH")?;
    if model.is_empty() || dataset.is_empty() || path.is_empty() {
        return Err("expected MODEL:DATASET=PATH".into());
    }
    Ok((model.to_owned(), dataset.to_owned(), PathBuf::from(path)))
}

impl ClassArgs {
    /// Explicit partition, or labels gathered from `sources` in order.
    fn resolve(&self, sources: &[(&Path, &[&str])]) -> Result<ClassPartition> {
        if let Some(classes) = &self.classes {
            let path = Path::new(classes);
            return if path.is_file() { ClassPartition::from_file(path) } else { ClassPartition::parse_list(classes) };
        }
        let mut labels: Vec<String> = Vec::new();
        for (path, columns) in sources {
            for l in infer_partition(path, columns).map(|p| p.labels().to_vec()).or_else(|e| match e {
                Error::InvalidK(_) => Ok(Vec::new()),
                e => Err(e),
            })? {
                if !labels.contains(&l) {
                    labels.push(l);
                }
            }
        }
        ClassPartition::new(labels)
    }
}

impl ReportArgs {
    fn config(&self) -> Result<ReportConfig> {
        let mut cfg = match &self.config {
            Some(p) => ReportConfig::load(p)?,
            None => ReportConfig::default(),
        };
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(v) = self.rdp_variant {
            cfg.rdp_variant = match v {
                CliRdpVariant::Estimator => RdpVariant::Estimator,
                CliRdpVariant::Correct => RdpVariant::Correct,
            };
        }
        if let Some(m) = &self.metrics {
            cfg.metrics = Some(m.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn write(&self, report: &BenchmarkReport, stem: &str) -> Result<Vec<PathBuf>> {
        let formats = match self.format {
            CliFormat::Json => vec![Format::Json],
            CliFormat::Csv => vec![Format::Csv],
            CliFormat::Markdown => vec![Format::Markdown],
            CliFormat::All => vec![Format::Json, Format::Csv, Format::Markdown],
        };
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        let mut written = Vec::new();
        for f in formats {
            let path = self.out.join(format!("{stem}.{}", f.extension()));
            emit(report, f, &path)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_owned(), source }
}

const EVAL_COLUMNS: &[&str] = &["true_class", "recon_class"];
const DIVERSITY_COLUMNS: &[&str] = &["recon_class"];

fn is_diversity_manifest(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(text.lines().next().is_some_and(|h| h.trim_start_matches('\u{feff}').starts_with("condition_id")))
}

fn load_eval(path: &Path, classes: &ClassArgs, opts: &LoadOptions<'_>) -> Result<EvalSet> {
    let partition = classes.resolve(&[(path, EVAL_COLUMNS)])?;
    load_eval_manifest(path, &partition, opts)
}

fn load_diversity(path: &Path, classes: &ClassArgs) -> Result<DiversitySet> {
    let partition = classes.resolve(&[(path, DIVERSITY_COLUMNS)])?;
    let set = load_diversity_manifest(path, &partition)?;
    if let Some(w) = set.replicate_warning() {
        eprintln!("warning: {w}");
    }
    Ok(set)
}

fn single_variant(eval: Option<EvalSet>, diversity: Option<DiversitySet>) -> Vec<VariantInput> {
    let name = eval
        .as_ref()
        .map(|s| s.name().to_owned())
        .or_else(|| diversity.as_ref().map(|d| d.name().to_owned()))
        .unwrap_or_default();
    vec![VariantInput { model: name, dataset: "eval".into(), eval, diversity }]
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn print_row(row: &FairnessRow) {
    let scores = match &row.scores {
        Some(s) => format!("chi2 = {:.6}  cheb = {:.6}", s.chi2_divergence, s.chebyshev),
        None => "chi2 = —  cheb = —".into(),
    };
    let verdict = match &row.test {
        Some(t) => format!(
            "{}: T = {:.4}, p = {:.4e} -> {}",
            t.test,
            t.statistic,
            t.p_value,
            if t.reject { "uniformity rejected" } else { "uniformity not rejected" }
        ),
        None => "no test".into(),
    };
    println!("{:<12} {scores}  {verdict}", format!("{}:", row.kind));
    if let Some(n) = &row.note {
        println!("  note: {n}");
    }
}

fn cmd_validate(manifest: &Path, classes: &ClassArgs, embeddings: Option<&Path>) -> Result<()> {
    if is_diversity_manifest(manifest)? {
        let set = load_diversity(manifest, classes)?;
        let replicates: usize = set.conditions().iter().map(|c| c.recon_classes.len()).sum();
        println!(
            "ok: {} conditions, {replicates} replicates, {} classes",
            set.conditions().len(),
            set.partition().k()
        );
    } else {
        let opts = LoadOptions { embeddings, ..Default::default() };
        let set = load_eval(manifest, classes, &opts)?;
        println!("ok: {} records, {} classes", set.len(), set.partition().k());
    }
    Ok(())
}

fn image_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.png"))
}

fn with_image_metrics(set: EvalSet, originals: &Path, reconstructions: &Path) -> Result<EvalSet> {
    let records: Vec<EvalRecord> = set
        .records()
        .iter()
        .map(|r| {
            let x = Image::load_png(image_path(originals, &r.sample_id))?;
            let y = Image::load_png(image_path(reconstructions, &r.sample_id))?;
            Ok(r.clone().with_scalar("dssim", dssim(&x, &y)?).with_scalar("blur", blur_index(&y)?))
        })
        .collect::<Result<_>>()?;
    EvalSet::new(set.name(), set.partition().clone(), records)
}

fn cmd_metrics(
    manifest: &Path,
    classes: &ClassArgs,
    embeddings: Option<&Path>,
    images: Option<(&Path, &Path)>,
    first_correct: Option<usize>,
    args: &ReportArgs,
) -> Result<()> {
    let cfg = args.config()?;
    let opts = LoadOptions { embeddings, first_correct_per_class: first_correct };
    let mut set = annotate_cosine(load_eval(manifest, classes, &opts)?)?;
    if let Some((orig, recon)) = images {
        set = with_image_metrics(set, orig, recon)?;
        fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
        let annotated = args.out.join(format!("{}_annotated.csv", set.name()));
        write_eval_manifest(&set, &annotated, None)?;
        println!("wrote {}", annotated.display());
    }
    let mut report = build_report(&single_variant(Some(set), None), &cfg)?;
    report.fairness.clear();
    report.per_class.retain(|v| !v.series.starts_with("P_"));
    for row in &report.performance {
        let cell = &row.cells[0];
        match cell.mean {
            Some(m) => println!("{:<10} mean = {m:.6}  (n = {})", row.metric, cell.n),
            None => println!("{:<10} —", row.metric),
        }
    }
    print_written(&args.write(&report, "metrics")?);
    Ok(())
}

fn cmd_fairness(manifest: &Path, classes: &ClassArgs, pr_reference: Option<&Path>, args: &ReportArgs) -> Result<()> {
    let cfg = args.config()?;
    let set = load_eval(manifest, classes, &LoadOptions::default())?;
    let reference = pr_reference.map(|p| load_target_distribution(p, set.partition())).transpose()?;
    let mut report = build_report(&single_variant(Some(set.clone()), None), &cfg)?;
    report.performance.clear();
    report.metrics.clear();
    report.per_class.retain(|v| v.series.starts_with("P_"));
    for row in &report.fairness {
        print_row(row);
    }
    if let Some(q) = reference {
        let p = pr_distribution(&set)?;
        let scores = FairnessScores {
            kind: FairnessKind::Pr,
            chi2_divergence: chi2_divergence(&p, &q)?,
            chebyshev: chebyshev_distance(&p, &q)?,
            distribution: p,
        };
        let test = chi2_gof(&recon_counts(&set), &q, cfg.alpha)?;
        print_row(&FairnessRow {
            model: String::new(),
            dataset: String::new(),
            kind: FairnessKind::Pr,
            rejected: test.reject,
            scores: Some(scores),
            test: Some(test),
            note: Some("against the reference distribution".into()),
        });
    }
    print_written(&args.write(&report, "fairness")?);
    Ok(())
}

fn cmd_diversity(manifest: &Path, classes: &ClassArgs, args: &ReportArgs) -> Result<()> {
    let cfg = args.config()?;
    let set = load_diversity(manifest, classes)?;
    let report = build_report(&single_variant(None, Some(set)), &cfg)?;
    for row in &report.diversity {
        print_row(row);
    }
    print_written(&args.write(&report, "diversity")?);
    Ok(())
}

fn cmd_subsample(index: &Path, target: &str, classes: &ClassArgs, seed: u64, out: &Path) -> Result<()> {
    let partition = classes.resolve(&[(index, &["class"])])?;
    let pool = LabeledIndex::load(index, &partition)?;
    let target = if target == "unfairface" {
        unfairface_target(&partition)?
    } else {
        load_target_distribution(target, &partition)?
    };
    let subset = max_biased_subset(&pool, &target, seed)?;

    let class_of: std::collections::HashMap<&str, usize> =
        pool.entries().iter().map(|e| (e.sample_id.as_str(), e.class)).collect();
    let mut ids = String::from("sample_id,class\n");
    for id in &subset.sample_ids {
        ids.push_str(&format!("{id},{}\n", partition.label(class_of[id.as_str()])));
    }
    fs::write(out, ids).map_err(|e| io_error(out, e))?;

    let available = pool.class_counts();
    let mut summary = String::from("class,target,available,selected,proportion\n");
    println!("n = {}", subset.n);
    for (j, label) in partition.labels().iter().enumerate() {
        let share = if subset.n == 0 { 0.0 } else { subset.counts[j] as f64 / subset.n as f64 };
        summary.push_str(&format!("{label},{},{},{},{share}\n", target.get(j), available[j], subset.counts[j]));
        println!("{label:<20} target {:.4}  selected {:>7} / {:<7} ({share:.4})", target.get(j), subset.counts[j], available[j]);
    }
    let summary_path = out.with_file_name(format!(
        "{}_summary.csv",
        out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    fs::write(&summary_path, summary).map_err(|e| io_error(&summary_path, e))?;
    print_written(&[out.to_owned(), summary_path]);
    Ok(())
}

fn read_class_groups(dir: &Path) -> Result<Vec<(String, Vec<Image>)>> {
    let mut classes: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io_error(dir, err)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    classes.sort();
    classes
        .into_iter()
        .map(|class_dir| {
            let mut files: Vec<PathBuf> = fs::read_dir(&class_dir)
                .map_err(|e| io_error(&class_dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
                .collect();
            files.sort();
            let images = files.iter().map(Image::load_png).collect::<Result<Vec<_>>>()?;
            let name = class_dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, images))
        })
        .collect()
}

fn cmd_conditions(images: &Path, out: &Path, size: usize, perturb: Option<Perturb>) -> Result<()> {
    let groups = read_class_groups(images)?;
    let conditions = genfair::dataset::build_uninformative_conditions(&groups, size)?;
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let mut written = 0usize;
    for (c, cond) in conditions.iter().enumerate() {
        cond.image.save_png(out.join(format!("{}.png", cond.class)))?;
        written += 1;
        if let Some(p) = perturb {
            for i in 0..p.n {
                let seed = p.seed.wrapping_add((c * p.n + i) as u64);
                let noisy = perturb_gaussian(&cond.image, p.sigma, seed)?;
                noisy.save_png(out.join(format!("{}_noisy_{i}.png", cond.class)))?;
                written += 1;
            }
        }
    }
    println!("wrote {written} condition images to {}", out.display());
    Ok(())
}

fn cmd_simulate(confusion: &Path, counts: &str, seed: u64, out: &Path) -> Result<()> {
    let (partition, matrix) = ConfusionMatrix::load(confusion)?;
    let parsed = counts
        .split(',')
        .map(|c| c.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad count {c:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let counts = match parsed.as_slice() {
        [n] => vec![*n; partition.k()],
        _ => parsed,
    };
    let set = simulate_eval_set(&partition, &matrix, &counts, seed)?;
    write_eval_manifest(&set, out, None)?;
    println!("wrote {} records to {}", set.len(), out.display());
    Ok(())
}

fn cmd_report(
    evals: &[(String, String, PathBuf)],
    diversities: &[(String, String, PathBuf)],
    classes: &ClassArgs,
    args: &ReportArgs,
) -> Result<()> {
    let cfg = args.config()?;
    if evals.is_empty() && diversities.is_empty() {
        return Err(Error::Config("give at least one --eval or --diversity".into()));
    }
    let mut sources: Vec<(&Path, &[&str])> = evals.iter().map(|(_, _, p)| (p.as_path(), EVAL_COLUMNS)).collect();
    sources.extend(diversities.iter().map(|(_, _, p)| (p.as_path(), DIVERSITY_COLUMNS)));
    let partition = classes.resolve(&sources)?;

    let mut variants: Vec<VariantInput> = Vec::new();
    let slot = |variants: &mut Vec<VariantInput>, model: &str, dataset: &str| -> usize {
        variants.iter().position(|v| v.model == model && v.dataset == dataset).unwrap_or_else(|| {
            variants.push(VariantInput { model: model.into(), dataset: dataset.into(), eval: None, diversity: None });
            variants.len() - 1
        })
    };
    for (model, dataset, path) in evals {
        let i = slot(&mut variants, model, dataset);
        let set = load_eval_manifest(path, &partition, &LoadOptions::default())?;
        variants[i].eval = Some(annotate_cosine(set)?);
    }
    for (model, dataset, path) in diversities {
        let i = slot(&mut variants, model, dataset);
        variants[i].diversity = Some(load_diversity_manifest(path, &partition)?);
    }
    let report = build_report(&variants, &cfg)?;
    for row in report.fairness.iter().chain(&report.diversity) {
        print!("{} / {}  ", row.model, row.dataset);
        print_row(row);
    }
    print_written(&args.write(&report, "report")?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { manifest, classes, embeddings } => cmd_validate(&manifest, &classes, embeddings.as_deref()),
        Command::Metrics { manifest, classes, embeddings, originals, reconstructions, first_correct, report } => {
            let images = originals.as_deref().zip(reconstructions.as_deref());
            cmd_metrics(&manifest, &classes, embeddings.as_deref(), images, first_correct, &report)
        }
        Command::Fairness { manifest, classes, pr_reference, report } => {
            cmd_fairness(&manifest, &classes, pr_reference.as_deref(), &report)
        }
        Command::Diversity { manifest, classes, report } => cmd_diversity(&manifest, &classes, &report),
        Command::Subsample { index, target, classes, seed, out } => cmd_subsample(&index, &target, &classes, seed, &out),
        Command::Conditions { images, out, size, perturb } => cmd_conditions(&images, &out, size, perturb),
        Command::Simulate { confusion, counts, seed, out } => cmd_simulate(&confusion, &counts, seed, &out),
        Command::Report { evals, diversities, classes, report } => cmd_report(&evals, &diversities, &classes, &report),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
