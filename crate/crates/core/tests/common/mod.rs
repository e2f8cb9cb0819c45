#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use defectlens::cli::synthetic_for_schema;
use defectlens::data::{generate_synthetic_linear, DefectDataset, FeatureSchema};

pub fn write_dataset(data: &DefectDataset, path: &Path) {
    data.write_csv(File::create(path).unwrap()).unwrap();
}

/// Writes a synthetic table in the built-in `schema` layout and returns its path.
pub fn builtin_csv(dir: &Path, schema: &str, rows: usize, seed: u64) -> PathBuf {
    let schema = FeatureSchema::builtin(schema).unwrap();
    let data = synthetic_for_schema(&schema, rows, seed).unwrap();
    let path = dir.join(format!("{}_{seed}.csv", schema.label_column));
    write_dataset(&data, &path);
    path
}

/// A `p`-feature table with a strong linear signal plus its schema file.
pub fn linear_csv(dir: &Path, weights: &[f64], rows: usize, seed: u64) -> (PathBuf, PathBuf) {
    let base = generate_synthetic_linear(rows, weights, 0.0, 0.0, seed).unwrap();
    let schema = FeatureSchema::synthetic(weights.len());
    let data = DefectDataset::new(
        base.features().clone(),
        base.labels().to_vec(),
        schema.clone(),
        "linear",
    )
    .unwrap();
    let csv = dir.join(format!("linear_{seed}.csv"));
    write_dataset(&data, &csv);
    let schema_path = dir.join(format!("schema_{}.json", weights.len()));
    std::fs::write(&schema_path, serde_json::to_string(&schema).unwrap()).unwrap();
    (csv, schema_path)
}

/// Experiment config JSON with a short MLP schedule so tests stay quick.
pub fn quick_config(data: &Path, schema: &str, out: &Path) -> String {
    serde_json::json!({
        "dataset": {"path": data, "schema": schema},
        "mlp": {"max_epochs": 15},
        "shap": {"background_size": 20},
        "explain_cap": 12,
        "output_dir": out,
    })
    .to_string()
}
