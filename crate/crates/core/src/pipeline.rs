//! The end-to-end experiment: ingest, split, standardize, weight, train the
//! three models, evaluate, attribute the network with IG and SHAP, compare.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attribution::{
    compare_rankings, global_importance, integrated_gradients_batch, kernel_shap_batch,
    model_scorer, AttributionVector, IgConfig, ImportanceReport, RankingComparison, ShapConfig,
    MAX_EXACT_THRESHOLD,
};
use crate::data::{
    compute_class_weights, load_table, stratified_split, ClassWeights, DefectDataset, DomainKind,
    FeatureSchema, Standardizer,
};
use crate::metrics::{evaluate, EvalResult, DEFAULT_THRESHOLD};
use crate::models::{
    fit_model, AnyModel, Classifier, ModelArtifact, ModelKind, TrainConfig,
    ARTIFACT_FORMAT_VERSION,
};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Built-in schema name: `traditional` or `jit`.
    #[serde(default)]
    pub schema: Option<String>,
    /// JSON schema file, used instead of a built-in schema.
    #[serde(default)]
    pub schema_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

/// SHAP options that do not depend on the data; the background is drawn
/// from the training partition at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapSettings {
    pub background_size: usize,
    pub coalition_budget: usize,
    pub exact_threshold: usize,
    pub seed: u64,
}

impl Default for ShapSettings {
    fn default() -> Self {
        Self {
            background_size: 100,
            coalition_budget: 2048,
            exact_threshold: 10,
            seed: 42,
        }
    }
}

impl ShapSettings {
    /// Background of up to `background_size` rows drawn without replacement.
    pub fn background_from(&self, rows: &Array2<f64>) -> Array2<f64> {
        let idx = subsample_indices(rows.nrows(), self.background_size, derive_seed(self.seed, 0));
        rows.select(Axis(0), &idx)
    }

    pub fn shap_config(&self, background: Array2<f64>) -> ShapConfig {
        ShapConfig {
            background,
            coalition_budget: self.coalition_budget,
            exact_threshold: self.exact_threshold,
            seed: derive_seed(self.seed, 1),
        }
    }
}

/// Sorted sample of `min(cap, n)` indices out of `0..n`.
pub fn subsample_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if cap >= n {
        return (0..n).collect();
    }
    let mut idx = sample(&mut seeded(seed), n, cap).into_vec();
    idx.sort_unstable();
    idx
}

fn default_explain_cap() -> Option<usize> {
    Some(100)
}

fn default_top_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default = "TrainConfig::logistic_default")]
    pub logistic: TrainConfig,
    #[serde(default = "TrainConfig::forest_default")]
    pub forest: TrainConfig,
    #[serde(default)]
    pub mlp: TrainConfig,
    #[serde(default)]
    pub ig: IgConfig,
    #[serde(default)]
    pub shap: ShapSettings,
    pub output_dir: PathBuf,
    /// Maximum number of test rows explained; `null` explains all of them.
    #[serde(default = "default_explain_cap")]
    pub explain_cap: Option<usize>,
    /// Prefix length for the IG-vs-SHAP top-k overlap.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

impl ExperimentConfig {
    /// Parses a JSON config. Partial `logistic`/`forest`/`mlp` objects are
    /// completed from that model family's defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if let Value::Object(map) = &mut value {
            for kind in ModelKind::ALL {
                if let Some(Value::Object(given)) = map.get(kind.as_str()) {
                    let mut merged = serde_json::to_value(TrainConfig::for_kind(kind))?;
                    if let Value::Object(base) = &mut merged {
                        for (k, v) in given {
                            base.insert(k.clone(), v.clone());
                        }
                    }
                    map.insert(kind.as_str().to_owned(), merged);
                }
            }
        }
        let cfg: Self =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.schema.is_some() == self.dataset.schema_file.is_some() {
            return Err(Error::Config(
                "dataset needs exactly one of `schema` or `schema_file`".into(),
            ));
        }
        if let Some(name) = &self.dataset.schema {
            FeatureSchema::builtin(name)?;
        }
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("split.test_fraction {f} outside (0, 1)")));
        }
        self.logistic.validate()?;
        self.forest.validate()?;
        self.mlp.validate()?;
        self.ig.validate()?;
        if self.shap.background_size == 0 || self.shap.coalition_budget == 0 {
            return Err(Error::Config(
                "shap.background_size and shap.coalition_budget must be positive".into(),
            ));
        }
        if self.shap.exact_threshold > MAX_EXACT_THRESHOLD {
            return Err(Error::Config(format!(
                "shap.exact_threshold must be <= {MAX_EXACT_THRESHOLD}"
            )));
        }
        if self.explain_cap == Some(0) {
            return Err(Error::Config("explain_cap must be positive or null".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be positive".into()));
        }
        Ok(())
    }

    /// Relative paths are taken relative to `base` (the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.path);
        if let Some(s) = &mut self.dataset.schema_file {
            fix(s);
        }
        fix(&mut self.output_dir);
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        match (&self.dataset.schema, &self.dataset.schema_file) {
            (Some(name), None) => FeatureSchema::builtin(name),
            (None, Some(path)) => FeatureSchema::from_json_file(path),
            _ => Err(Error::Config(
                "dataset needs exactly one of `schema` or `schema_file`".into(),
            )),
        }
    }

    pub fn train_config(&self, kind: ModelKind) -> &TrainConfig {
        match kind {
            ModelKind::Logistic => &self.logistic,
            ModelKind::Forest => &self.forest,
            ModelKind::Mlp => &self.mlp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub provenance: String,
    pub domain_kind: DomainKind,
    pub feature_names: Vec<String>,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_positive_train: usize,
    pub n_positive_test: usize,
    pub n_explained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluations {
    pub logistic: EvalResult,
    pub forest: EvalResult,
    pub mlp: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReports {
    pub ig: ImportanceReport,
    pub shap: ImportanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessSummary {
    pub ig_max_gap: f64,
    pub ig_mean_gap: f64,
    pub shap_max_gap: f64,
}

impl CompletenessSummary {
    fn from(ig: &[AttributionVector], shap: &[AttributionVector]) -> Self {
        let max = |a: &[AttributionVector]| a.iter().map(|v| v.completeness_gap).fold(0.0, f64::max);
        Self {
            ig_max_gap: max(ig),
            ig_mean_gap: ig.iter().map(|v| v.completeness_gap).sum::<f64>() / ig.len() as f64,
            shap_max_gap: max(shap),
        }
    }
}

/// Wall-clock seconds per stage; the only non-deterministic part of a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub load: f64,
    pub preprocess: f64,
    pub train_logistic: f64,
    pub train_forest: f64,
    pub train_mlp: f64,
    pub evaluate: f64,
    pub integrated_gradients: f64,
    pub kernel_shap: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub toolkit_version: String,
    pub dataset: DatasetSummary,
    pub class_weights: ClassWeights,
    pub models: ModelEvaluations,
    pub importance: ImportanceReports,
    pub completeness: CompletenessSummary,
    /// IG ranking compared against the SHAP ranking.
    pub comparison: RankingComparison,
    pub config: ExperimentConfig,
    pub timings: StageTimings,
}

/// Everything an experiment produces, before anything touches the disk.
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub artifacts: Vec<(ModelKind, ModelArtifact)>,
    pub ig_attributions: Vec<AttributionVector>,
    pub shap_attributions: Vec<AttributionVector>,
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

/// Runs the experiment in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let schema = cfg.schema()?;
    let data = load_table(&cfg.dataset.path, &schema)?;
    data.require_both_classes()?;
    timings.load = seconds(t);

    let t = Instant::now();
    let (train_raw, test_raw) = stratified_split(&data, cfg.split.test_fraction, cfg.split.seed)?;
    let standardizer = Standardizer::fit(train_raw.features())?;
    let train = standardizer.transform_dataset(&train_raw)?;
    let test = standardizer.transform_dataset(&test_raw)?;
    let weights = compute_class_weights(train.labels())?;
    timings.preprocess = seconds(t);

    let mut fitted: Vec<(ModelKind, AnyModel)> = Vec::with_capacity(3);
    for kind in ModelKind::ALL {
        let t = Instant::now();
        let model = fit_model(
            kind,
            train.features(),
            train.labels(),
            &weights,
            cfg.train_config(kind),
        )?;
        let secs = seconds(t);
        match kind {
            ModelKind::Logistic => timings.train_logistic = secs,
            ModelKind::Forest => timings.train_forest = secs,
            ModelKind::Mlp => timings.train_mlp = secs,
        }
        fitted.push((kind, model));
    }

    let t = Instant::now();
    let mut evals = Vec::with_capacity(3);
    for (_, model) in &fitted {
        let scores = model.predict_proba(test.features())?;
        evals.push(evaluate(&scores, test.labels(), DEFAULT_THRESHOLD)?);
    }
    timings.evaluate = seconds(t);
    let mlp = &fitted[2].1;

    let explained_idx = subsample_indices(
        test.n_rows(),
        cfg.explain_cap.unwrap_or(usize::MAX),
        derive_seed(cfg.split.seed, 0xE1),
    );
    let explained = test.features().select(Axis(0), &explained_idx);

    let t = Instant::now();
    let ig = integrated_gradients_batch(mlp, &explained, &cfg.ig)?;
    timings.integrated_gradients = seconds(t);

    let t = Instant::now();
    let shap_cfg = cfg.shap.shap_config(cfg.shap.background_from(train.features()));
    let shap = kernel_shap_batch(&model_scorer(mlp), &explained, &shap_cfg)?;
    timings.kernel_shap = seconds(t);

    let names = &schema.feature_names;
    let ig_report = global_importance(&ig, names)?;
    let shap_report = global_importance(&shap, names)?;
    let comparison = compare_rankings(&ig_report, &shap_report, cfg.top_k.min(names.len()))?;
    timings.total = seconds(start);

    let mut evals = evals.into_iter();
    let models = ModelEvaluations {
        logistic: evals.next().expect("three evaluations"),
        forest: evals.next().expect("three evaluations"),
        mlp: evals.next().expect("three evaluations"),
    };
    let report = ExperimentReport {
        toolkit_version: TOOLKIT_VERSION.to_owned(),
        dataset: summarize(&data, &train, &test, explained_idx.len()),
        class_weights: weights,
        models,
        importance: ImportanceReports {
            ig: ig_report,
            shap: shap_report,
        },
        completeness: CompletenessSummary::from(&ig, &shap),
        comparison,
        config: cfg.clone(),
        timings,
    };
    let artifacts = fitted
        .into_iter()
        .map(|(kind, model)| {
            let artifact = ModelArtifact {
                format_version: ARTIFACT_FORMAT_VERSION,
                feature_names: names.clone(),
                train_config: cfg.train_config(kind).clone(),
                class_weights: weights,
                standardizer: Some(standardizer.clone()),
                model,
            };
            (kind, artifact)
        })
        .collect();
    Ok(ExperimentOutcome {
        report,
        artifacts,
        ig_attributions: ig,
        shap_attributions: shap,
    })
}

fn summarize(
    data: &DefectDataset,
    train: &DefectDataset,
    test: &DefectDataset,
    n_explained: usize,
) -> DatasetSummary {
    DatasetSummary {
        provenance: data.provenance().to_owned(),
        domain_kind: data.schema().domain_kind,
        feature_names: data.schema().feature_names.clone(),
        n_rows: data.n_rows(),
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        n_positive_train: train.n_positive(),
        n_positive_test: test.n_positive(),
        n_explained,
    }
}

/// Per-instance attributions as CSV: row index, one column per feature,
/// prediction, reference value and completeness gap.
pub fn attributions_csv(attributions: &[AttributionVector], feature_names: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row".to_owned()];
    header.extend(feature_names.iter().cloned());
    header.extend(["prediction", "reference_value", "completeness_gap"].map(String::from));
    w.write_record(&header)?;
    for (i, a) in attributions.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(a.values.iter().map(f64::to_string));
        rec.push(a.prediction.to_string());
        rec.push(a.reference_value.to_string());
        rec.push(a.completeness_gap.to_string());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `files` into `dir`, each through a temporary name and a rename.
/// The last file is written last, so it only appears once the rest exist.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, contents) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
    }
    Ok(())
}

impl ExperimentOutcome {
    /// Output files in write order; `report.json` comes last.
    pub fn files(&self) -> Result<Vec<(String, String)>> {
        let r = &self.report;
        let names = &r.dataset.feature_names;
        let mut files = Vec::new();
        for (kind, artifact) in &self.artifacts {
            files.push((format!("model_{kind}.json"), artifact.to_json()?));
        }
        for (tag, report, attrs) in [
            ("ig", &r.importance.ig, &self.ig_attributions),
            ("shap", &r.importance.shap, &self.shap_attributions),
        ] {
            files.push((format!("importance_{tag}.csv"), report.to_csv()?));
            files.push((
                format!("importance_{tag}.json"),
                serde_json::to_string_pretty(report)?,
            ));
            files.push((format!("attributions_{tag}.csv"), attributions_csv(attrs, names)?));
        }
        files.push(("report.json".into(), serde_json::to_string_pretty(r)?));
        Ok(files)
    }
}
