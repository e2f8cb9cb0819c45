//! Commands behind the `defectlens` binary.
//!
//! Each command returns its result instead of printing, so the binary only
//! handles formatting and exit codes.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    compare_rankings_lenient, global_importance, integrated_gradients_batch, kernel_shap_batch,
    model_scorer, AttributionMethod, Baseline, IgConfig, ImportanceReport, RankingComparison,
    MAX_EXACT_THRESHOLD,
};
use crate::data::{
    compute_class_weights, generate_synthetic_linear, load_table, stratified_split, DefectDataset,
    FeatureSchema, Standardizer,
};
use crate::metrics::{evaluate, EvalResult, DEFAULT_THRESHOLD};
use crate::models::{
    fit_model, Classifier, ModelArtifact, ModelKind, OutputSpace, TrainConfig,
    ARTIFACT_FORMAT_VERSION,
};
use crate::pipeline::{
    attributions_csv, run_experiment, subsample_indices, write_outputs, ExperimentConfig,
    ExperimentReport, ShapSettings,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "defectlens", version, about = "Defect prediction with IG and SHAP feature importance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train one model on a stratified split and print its test metrics.
    Evaluate(EvaluateArgs),
    /// Explain a persisted model over a dataset.
    Explain(ExplainArgs),
    /// Compare two importance reports.
    Compare(CompareArgs),
    /// Write a synthetic table with a built-in schema's columns.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Logistic,
    Forest,
    Mlp,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Logistic => ModelKind::Logistic,
            ModelArg::Forest => ModelKind::Forest,
            ModelArg::Mlp => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ig,
    Shap,
}

#[derive(Debug, Clone, Args)]
pub struct SchemaArgs {
    /// Built-in schema.
    #[arg(long, default_value = "traditional", value_parser = ["traditional", "jit"])]
    pub schema: String,
    /// JSON schema file; overrides --schema.
    #[arg(long)]
    pub schema_file: Option<PathBuf>,
}

impl SchemaArgs {
    pub fn resolve(&self) -> Result<FeatureSchema> {
        match &self.schema_file {
            Some(path) => FeatureSchema::from_json_file(path),
            None => FeatureSchema::builtin(&self.schema),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Seed for both the split and training.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Test fraction of the stratified split.
    #[arg(long, default_value_t = 0.2)]
    pub split: f64,
    /// Directory to save the trained model as `model_<kind>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Persisted model JSON (as written by `run` or `evaluate --out`).
    #[arg(long)]
    pub artifact: PathBuf,
    /// Integrated-gradients path steps.
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    /// Explain in logit space instead of probability space (IG only).
    #[arg(long)]
    pub logit: bool,
    /// Enumerate all coalitions instead of sampling (SHAP only).
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub background: usize,
    #[arg(long, default_value_t = 2048)]
    pub budget: usize,
    /// Maximum number of rows explained.
    #[arg(long, default_value_t = 100)]
    pub cap: usize,
    /// Print the top-k ranked features.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub report_a: PathBuf,
    pub report_b: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs the experiment in `config_path` and writes its outputs.
///
/// A stale `report.json` is removed before anything else, so a failed run
/// never leaves one behind.
pub fn cmd_run(config_path: &Path) -> Result<ExperimentReport> {
    let cfg = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut resolved = cfg.clone();
    resolved.resolve_paths(base);
    let stale = resolved.output_dir.join("report.json");
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
    }
    let outcome = run_experiment(&resolved)?;
    let mut report = outcome.report.clone();
    // echo the config as written, not as resolved
    report.config = cfg;
    let mut files = outcome.files()?;
    let last = files.len() - 1;
    files[last].1 = serde_json::to_string_pretty(&report)?;
    write_outputs(&resolved.output_dir, &files)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub model: ModelKind,
    pub n_train: usize,
    pub n_test: usize,
    pub evaluation: EvalResult,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluateOutput> {
    let schema = args.schema.resolve()?;
    let kind = ModelKind::from(args.model);
    let data = load_table(&args.data, &schema)?;
    data.require_both_classes()?;
    let (train, test) = stratified_split(&data, args.split, args.seed)?;
    let standardizer = Standardizer::fit(train.features())?;
    let train = standardizer.transform_dataset(&train)?;
    let test = standardizer.transform_dataset(&test)?;
    let weights = compute_class_weights(train.labels())?;
    let cfg = TrainConfig {
        seed: args.seed,
        ..TrainConfig::for_kind(kind)
    };
    let model = fit_model(kind, train.features(), train.labels(), &weights, &cfg)?;
    let scores = model.predict_proba(test.features())?;
    let evaluation = evaluate(&scores, test.labels(), DEFAULT_THRESHOLD)?;
    if let Some(dir) = &args.out {
        let artifact = ModelArtifact {
            format_version: ARTIFACT_FORMAT_VERSION,
            feature_names: schema.feature_names.clone(),
            train_config: cfg,
            class_weights: weights,
            standardizer: Some(standardizer),
            model,
        };
        write_outputs(dir, &[(format!("model_{kind}.json"), artifact.to_json()?)])?;
    }
    Ok(EvaluateOutput {
        model: kind,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        evaluation,
    })
}

/// Explains a persisted model over (a seeded sample of) a dataset and writes
/// `importance_<method>.{csv,json}` and `attributions_<method>.csv`.
pub fn cmd_explain(args: &ExplainArgs) -> Result<ImportanceReport> {
    let artifact = ModelArtifact::load(&args.artifact)?;
    if args.method == MethodArg::Ig && artifact.model.as_differentiable().is_none() {
        return Err(Error::NonDifferentiableModel(artifact.model.kind().as_str()));
    }
    let schema = args.schema.resolve()?;
    artifact.check_schema(&schema.feature_names)?;
    let data = load_table(&args.data, &schema)?;
    let data = match &artifact.standardizer {
        Some(s) => s.transform_dataset(&data)?,
        None => data,
    };
    if args.cap == 0 {
        return Err(Error::Config("--cap must be positive".into()));
    }
    let idx = subsample_indices(data.n_rows(), args.cap, derive_seed(args.seed, 0xE1));
    let rows = data.features().select(Axis(0), &idx);
    let model = &artifact.model;

    let attributions = match args.method {
        MethodArg::Ig => {
            let cfg = IgConfig {
                steps: args.steps,
                baseline: Baseline::ZeroInStandardizedSpace,
                output: if args.logit {
                    OutputSpace::Logit
                } else {
                    OutputSpace::Probability
                },
            };
            integrated_gradients_batch(model, &rows, &cfg)?
        }
        MethodArg::Shap => {
            let p = schema.n_features();
            if args.exact && p > MAX_EXACT_THRESHOLD {
                return Err(Error::Config(format!(
                    "--exact supports at most {MAX_EXACT_THRESHOLD} features, dataset has {p}"
                )));
            }
            let settings = ShapSettings {
                background_size: args.background,
                coalition_budget: args.budget,
                exact_threshold: if args.exact {
                    p
                } else {
                    ShapSettings::default().exact_threshold
                },
                seed: args.seed,
            };
            let cfg = settings.shap_config(settings.background_from(data.features()));
            kernel_shap_batch(&model_scorer(model), &rows, &cfg)?
        }
    };
    let report = global_importance(&attributions, &schema.feature_names)?;
    let tag = match args.method {
        MethodArg::Ig => AttributionMethod::IntegratedGradients.tag(),
        MethodArg::Shap => AttributionMethod::KernelShap.tag(),
    };
    write_outputs(
        &args.out,
        &[
            (
                format!("attributions_{tag}.csv"),
                attributions_csv(&attributions, &schema.feature_names)?,
            ),
            (format!("importance_{tag}.csv"), report.to_csv()?),
            (format!("importance_{tag}.json"), serde_json::to_string_pretty(&report)?),
        ],
    )?;
    Ok(report)
}

/// Reads an `importance_<method>.json` file.
pub fn read_importance(path: &Path) -> Result<ImportanceReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<RankingComparison> {
    let a = read_importance(&args.report_a)?;
    let b = read_importance(&args.report_b)?;
    compare_rankings_lenient(&a, &b, args.top_k)
}

/// Synthetic data under a built-in schema: standard-normal features with a
/// seeded sparse linear signal and an intercept that keeps defects a minority.
pub fn synthetic_for_schema(schema: &FeatureSchema, rows: usize, seed: u64) -> Result<DefectDataset> {
    let p = schema.n_features();
    let weights: Vec<f64> = (0..p)
        .map(|i| {
            let u = (derive_seed(seed, i as u64) >> 11) as f64 / (1u64 << 53) as f64;
            if i % 3 == 0 {
                4.0 * (u - 0.5)
            } else {
                0.5 * (u - 0.5)
            }
        })
        .collect();
    let base = generate_synthetic_linear(rows, &weights, -1.0, 0.0, seed)?;
    DefectDataset::new(
        base.features().clone(),
        base.labels().to_vec(),
        schema.clone(),
        format!("synthetic(seed={seed})"),
    )
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let schema = args.schema.resolve()?;
    let data = synthetic_for_schema(&schema, args.rows, args.seed)?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    let dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = args
        .out
        .file_name()
        .ok_or_else(|| Error::Config("--out must name a file".into()))?
        .to_string_lossy()
        .into_owned();
    write_outputs(dir, &[(name, text)])
}

/// Runs a parsed command line, printing results to stdout. Returns the
/// process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config).and_then(|r| {
            emit(&format!(
                "wrote {} (mlp acc {} / auc {})",
                r.config.output_dir.join("report.json").display(),
                r.models.mlp.accuracy_pct,
                r.models.mlp.auc_pct
            ))
        }),
        Command::Evaluate(args) => cmd_evaluate(&args).and_then(print_json),
        Command::Explain(args) => cmd_explain(&args).and_then(|report| match args.top_k {
            Some(k) => {
                let lines: Vec<String> = report
                    .top_k(k)
                    .iter()
                    .enumerate()
                    .map(|(rank, name)| {
                        let score = report.normalized_score(name).unwrap_or(0.0);
                        format!("{}\t{name}\t{score:.6}", rank + 1)
                    })
                    .collect();
                emit(&lines.join("\n"))
            }
            None => print_json(report),
        }),
        Command::Compare(args) => cmd_compare(&args).and_then(print_json),
        Command::Synth(args) => cmd_synth(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("defectlens: error: {line}");
            e.category().exit_code()
        }
    }
}

fn print_json<T: Serialize>(value: T) -> Result<()> {
    emit(&serde_json::to_string_pretty(&value)?)
}

/// Writes one block to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}
