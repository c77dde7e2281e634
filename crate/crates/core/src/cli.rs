//! The `linklogic` command line.
//!
//! Command results go to stdout as JSON; logs go to stderr as one JSON
//! object per line. Exit codes: 0 success, 1 runtime error, 2 bad input
//! or unknown entity, 3 config error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::baseline::{heuristic_explain, heuristic_json};
use crate::benchmark::build_benchmark;
use crate::config::{
    self, resolve_perturbation, resolve_sweep, resolve_training, ExplainMethod, ExplainOptions, Layers,
    PrepareSettings, SynthSplit,
};
use crate::error::{Error, Result};
use crate::eval::{run_parents_sweep, run_tautology_experiment, run_truth_sweep, ExperimentReport, SweepInputs};
use crate::explain::{explain, explanation_json, write_holdout_csv, FeatureSpec};
use crate::kg::{prepare_dataset, prepare_from_triples, Dataset, FamilyRelations, PrepareOptions, Triple, Vocabulary};
use crate::kge::{evaluate_mrr, load_embeddings_for, save_embeddings, train, EmbeddingSidecar};
use crate::synthetic::{family_corpus, SyntheticConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Name of the resolved config written into output directories.
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Parser)]
#[command(name = "linklogic", version, about = "Path explanations for ComplEx link predictions")]
pub struct Cli {
    /// Worker threads for per-query work [default: available processors].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Global seed; overrides the config file and LINKLOGIC_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat TOML config document; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split raw triples, keep the largest component and write a dataset.
    Prepare(PrepareArgs),
    /// Write a seeded synthetic family dataset.
    Synth(SynthArgs),
    /// Train ComplEx embeddings on a dataset's train split.
    Train(TrainArgs),
    /// Explain one query triple.
    Explain(ExplainArgs),
    /// Build the parent-query benchmark.
    Benchmark(BenchmarkArgs),
    /// Run an experiment sweep and write its report and figure CSVs.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    /// Directory of raw `head<TAB>relation<TAB>tail` files (*.tsv, *.txt).
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub raw: PathBuf,
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Append inferred sibling triples.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fb14: Option<bool>,
    /// Train, valid and test proportions.
    #[arg(long, value_delimiter = ',', num_args = 3, value_name = "P")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_children: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_children: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub professions: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub home_location_prob: Option<f64>,
    /// Add sibling edges between children sharing both parents.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sibling_edges: Option<bool>,
    /// Train, valid and test proportions [default: 1,0,0].
    #[arg(long, value_delimiter = ',', num_args = 3, value_name = "P")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetArg {
    Full,
    Desk,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Prepared dataset directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub data: PathBuf,
    /// Embedding file to write.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Base recipe the other keys override [default: full].
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neg_sample_size: Option<usize>,
    #[arg(long = "lr", alias = "learning-rate")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversarial_sampling: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversarial_temperature: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularization_coef: Option<f64>,
}

/// Explainer keys shared by `explain` and `sweep`.
#[derive(Debug, Args, Serialize)]
pub struct PerturbationArgs {
    /// Noise magnitude.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Number of perturbed queries.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Neighbour fan-out for the noise scale.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Paths kept per relation group.
    #[arg(long, alias = "m")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_group: Option<usize>,
    /// Lasso penalty.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Scale features to unit standard deviation before the fit.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
    /// Fraction of perturbations held out for fidelity.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout_fraction: Option<f64>,
    /// Entities per relation and direction in the one-hop candidate pool.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_fanout: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Linklogic,
    Heuristic,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdModeArg {
    PerHop,
    PathMean,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplainArgs {
    /// Embedding file written by `train`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub embeddings: PathBuf,
    /// Prepared dataset directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub data: PathBuf,
    /// Query as "head relation tail".
    #[arg(long)]
    #[serde(skip)]
    pub query: String,
    /// Write JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Write LinkLogic held-out `(y_true, y_pred)` pairs as CSV.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub holdout_csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodArg>,
    /// Drop the path restating a parent query through the child relation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclude_query_inverse: Option<bool>,
    /// Heuristic plausibility threshold.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_mode: Option<ThresholdModeArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub perturbation: PerturbationArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Prepared dataset directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Keep the query inverse as a benchmark entry.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_query_inverse: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKindArg {
    Truth,
    Parents,
    Tautology,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainArg {
    Linear,
    Exponential,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    #[serde(skip)]
    pub kind: SweepKindArg,
    /// Embedding file written by `train`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub embeddings: PathBuf,
    /// Prepared dataset directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Methods, e.g. linklogic,heuristic@0.9.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heuristic_mode: Option<ThresholdModeArg>,
    /// Observed triples sampled per relation (truth sweep).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_relation: Option<usize>,
    /// Largest NDCG cut-off.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_k: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainArg>,
    /// Drop the query inverse from truth-sweep features.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclude_query_inverse: Option<bool>,
    /// Keep the query inverse as a benchmark entry [default: true for tautology].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_query_inverse: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub perturbation: PerturbationArgs,
}

/// Map an error to its process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Input(_)
        | Error::Parse { .. }
        | Error::UnknownEntity(_)
        | Error::UnknownRelation(_)
        | Error::Lookup(_)
        | Error::Format(_) => EXIT_INPUT,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_INPUT,
        _ => EXIT_RUNTIME,
    }
}

/// JSON-lines logger on stderr. Filter from `RUST_LOG`, default `info`.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            let line = json!({
                "ts": buf.timestamp_millis().to_string(),
                "level": record.level().as_str().to_ascii_lowercase(),
                "target": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .try_init();
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        // A pool set earlier in the process (tests) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let file = Layers::read_file(cli.config.as_deref())?;
    let env_seed = Layers::env_seed()?;
    let layers = |flags: &dyn FlagTable| -> Result<Layers> {
        let mut table = flags.table()?;
        if let Some(seed) = cli.seed {
            let seed = i64::try_from(seed).map_err(|_| Error::Config(format!("seed {seed} is too large")))?;
            table.insert("seed".into(), toml::Value::Integer(seed));
        }
        Layers::new(file.clone(), table, env_seed)
    };
    match &cli.command {
        Command::Prepare(a) => cmd_prepare(a, layers(a)?),
        Command::Synth(a) => cmd_synth(a, layers(a)?),
        Command::Train(a) => cmd_train(a, layers(a)?),
        Command::Explain(a) => cmd_explain(a, layers(a)?),
        Command::Benchmark(a) => cmd_benchmark(a, layers(a)?),
        Command::Sweep(a) => cmd_sweep(a, layers(a)?),
    }
}

/// Flag structs serialize their set fields into a table.
trait FlagTable {
    fn table(&self) -> Result<toml::Table>;
}

impl<T: Serialize> FlagTable for T {
    fn table(&self) -> Result<toml::Table> {
        config::to_table(self)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn print_result(value: &serde_json::Value) {
    println!("{value}");
}

fn cmd_prepare(a: &PrepareArgs, mut layers: Layers) -> Result<()> {
    let settings = layers.take(&PrepareSettings::default())?;
    let resolved = layers.finish()?;
    let (dataset, manifest) = prepare_dataset(&a.raw, &settings.options())?;
    dataset.write(&a.out, &manifest)?;
    config::write_resolved(&resolved, &a.out.join(RESOLVED_CONFIG))?;
    log::info!(
        "prepared {} train, {} valid, {} test triples over {} entities",
        manifest.train,
        manifest.valid,
        manifest.test,
        manifest.num_entities
    );
    if let Some(s) = &manifest.siblings {
        log::info!("sibling triples added: {}", s.sibling_triples);
    }
    print_result(&json!({ "command": "prepare", "out": a.out, "manifest": manifest }));
    Ok(())
}

fn cmd_synth(a: &SynthArgs, mut layers: Layers) -> Result<()> {
    let synthetic = layers.take(&SyntheticConfig::default())?;
    let split = layers.take(&SynthSplit::default())?;
    let resolved = layers.finish()?;
    let (vocab, triples) = family_corpus(&synthetic)?;
    let opts = PrepareOptions { proportions: split.proportions, seed: synthetic.seed, fb14: false };
    let (dataset, manifest) = prepare_from_triples(vocab, triples, vec!["synthetic".into()], &opts)?;
    dataset.write(&a.out, &manifest)?;
    config::write_resolved(&resolved, &a.out.join(RESOLVED_CONFIG))?;
    log::info!("synthetic corpus: {} entities, {} train triples", manifest.num_entities, manifest.train);
    print_result(&json!({ "command": "synth", "out": a.out, "manifest": manifest }));
    Ok(())
}

fn cmd_train(a: &TrainArgs, mut layers: Layers) -> Result<()> {
    let cfg = resolve_training(&mut layers)?;
    let resolved = layers.finish()?;
    let dataset = Dataset::open(&a.data)?;
    log::info!("training d={} for {} steps on {} triples", cfg.hidden_dim, cfg.max_step, dataset.split.train.len());
    let (store, log_) = train(&dataset.split.train, &cfg)?;
    save_embeddings(&store, &a.out, &EmbeddingSidecar::new(&store, Some(&dataset.vocab), Some(&cfg)))?;
    config::write_resolved(&resolved, &sibling_path(&a.out, ".config.toml"))?;

    let mut loss = String::from("step,loss\n");
    for (step, l) in &log_.loss_history {
        loss.push_str(&format!("{step},{l}\n"));
    }
    write(&sibling_path(&a.out, ".loss.csv"), loss)?;

    let eval_set = if dataset.split.test.is_empty() { &dataset.split.valid } else { &dataset.split.test };
    let mrr = if eval_set.is_empty() {
        log::warn!("no valid or test triples; MRR skipped");
        serde_json::Value::Null
    } else {
        let report = evaluate_mrr(&store, eval_set, &dataset.combined())?;
        let per_relation: serde_json::Map<String, serde_json::Value> = report
            .per_relation
            .iter()
            .map(|(r, m)| (dataset.vocab.relation_name(*r).to_owned(), json!({ "mrr": m.mrr, "count": m.count })))
            .collect();
        let value = json!({ "overall": report.overall, "count": report.count, "per_relation": per_relation });
        log::info!("filtered MRR {:.4} over {} triples", report.overall, report.count);
        write(&sibling_path(&a.out, ".mrr.json"), serde_json::to_string_pretty(&value)? + "\n")?;
        value
    };
    print_result(&json!({
        "command": "train",
        "out": a.out,
        "final_loss": log_.final_loss,
        "steps": log_.steps,
        "mrr": mrr,
    }));
    Ok(())
}

/// Parse "head relation tail", tab- or whitespace-separated.
pub fn parse_query(vocab: &Vocabulary, text: &str) -> Result<Triple> {
    let parts: Vec<&str> =
        if text.contains('\t') { text.split('\t').map(str::trim).collect() } else { text.split_whitespace().collect() };
    match parts.as_slice() {
        [h, r, t] => vocab.triple(h, r, t),
        _ => Err(Error::Input(format!("query must be \"head relation tail\", got {text:?}"))),
    }
}

/// Feature exclusions for a dataset; family rules apply when the
/// vocabulary has a parent relation.
pub fn feature_spec(vocab: &Vocabulary, exclude_query_inverse: bool) -> Result<FeatureSpec> {
    match FamilyRelations::resolve(vocab) {
        Ok(family) => Ok(FeatureSpec::for_family(&family, exclude_query_inverse)),
        Err(_) if !exclude_query_inverse => Ok(FeatureSpec::allow_all()),
        Err(e) => Err(e),
    }
}

fn cmd_explain(a: &ExplainArgs, mut layers: Layers) -> Result<()> {
    let pcfg = resolve_perturbation(&mut layers)?;
    let opts = layers.take(&ExplainOptions::default())?;
    let heuristic = opts.heuristic()?;
    let resolved = layers.finish()?;
    let dataset = Dataset::open(&a.data)?;
    let query = parse_query(&dataset.vocab, &a.query)?;
    let store = load_embeddings_for(&a.embeddings, &dataset.vocab)?;
    let spec = feature_spec(&dataset.vocab, opts.exclude_query_inverse)?;
    let graph = &dataset.split.train;

    let mut lines = Vec::new();
    if matches!(opts.method, ExplainMethod::Linklogic | ExplainMethod::Both) {
        let started = std::time::Instant::now();
        let e = explain(&store, graph, &query, &pcfg, &spec)?;
        log::info!("linklogic explanation in {:.3} s", started.elapsed().as_secs_f64());
        if let Some(path) = &a.holdout_csv {
            let mut buf = Vec::new();
            write_holdout_csv(&e, &mut buf).map_err(|err| Error::io(path, err))?;
            write(path, buf)?;
        }
        lines.push(explanation_json(&e, &dataset.vocab, &pcfg, &spec));
    }
    if matches!(opts.method, ExplainMethod::Heuristic | ExplainMethod::Both) {
        let e = heuristic_explain(&store, graph, &query, &pcfg, &spec, &heuristic)?;
        lines.push(heuristic_json(&e, &dataset.vocab, &heuristic));
    }
    let mut text = String::new();
    for l in &lines {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    match &a.out {
        Some(path) => {
            write(path, text)?;
            config::write_resolved(&resolved, &sibling_path(path, ".config.toml"))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_benchmark(a: &BenchmarkArgs, mut layers: Layers) -> Result<()> {
    #[derive(Serialize, serde::Deserialize, Default)]
    struct Keys {
        include_query_inverse: bool,
    }
    let keys = layers.take(&Keys::default())?;
    let resolved = layers.finish()?;
    let dataset = Dataset::open(&a.data)?;
    let bench = build_benchmark(&dataset.split, &dataset.vocab, keys.include_query_inverse)?;
    create_dir(&a.out)?;
    let mut jsonl = Vec::new();
    bench.write_jsonl(&dataset.vocab, &mut jsonl)?;
    write(&a.out.join("benchmark.jsonl"), jsonl)?;
    let mut hist = Vec::new();
    bench.write_histogram_csv(&mut hist)?;
    write(&a.out.join("histogram.csv"), hist)?;
    let summary = bench.summary();
    write(&a.out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    config::write_resolved(&resolved, &a.out.join(RESOLVED_CONFIG))?;
    log::info!("benchmark: {} queries, {} entries", summary.queries, summary.entries);
    print_result(&json!({ "command": "benchmark", "out": a.out, "summary": summary }));
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, mut layers: Layers) -> Result<()> {
    let (cfg, include_inverse) = resolve_sweep(&mut layers, a.kind == SweepKindArg::Tautology)?;
    let resolved = layers.finish()?;
    let dataset = Dataset::open(&a.data)?;
    let store = load_embeddings_for(&a.embeddings, &dataset.vocab)?;
    let known = dataset.combined();
    let inputs = SweepInputs {
        store: &store,
        vocab: &dataset.vocab,
        graph: &dataset.split.train,
        known: &known,
        entity_types: &dataset.entity_types,
    };
    let started = std::time::Instant::now();
    let report = match a.kind {
        SweepKindArg::Truth => run_truth_sweep(&inputs, &cfg)?,
        SweepKindArg::Parents | SweepKindArg::Tautology => {
            let bench = build_benchmark(&dataset.split, &dataset.vocab, include_inverse)?;
            if a.kind == SweepKindArg::Parents {
                run_parents_sweep(&inputs, &bench, &cfg)?
            } else {
                run_tautology_experiment(&inputs, &bench, &cfg)?
            }
        }
    };
    log::info!("sweep finished: {} records in {:.1} s", report.records.len(), started.elapsed().as_secs_f64());
    write_report(&report, &a.out)?;
    config::write_resolved(&resolved, &a.out.join(RESOLVED_CONFIG))?;
    print_result(&json!({
        "command": "sweep",
        "kind": report.kind,
        "out": a.out,
        "records": report.records.len(),
    }));
    Ok(())
}

/// Write `report.json` and the figure CSVs into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("report.json"), report.to_json()? + "\n")?;
    for (name, contents) in report.figure_csvs()? {
        write(&dir.join(name), contents)?;
    }
    Ok(())
}
