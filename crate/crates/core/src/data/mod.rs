//! Defect tables: schemas, ingestion, preprocessing and synthetic generation.

mod prep;
mod schema;
mod synthetic;
mod table;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use prep::{
    compute_class_weights, stratified_indices, stratified_split, ClassWeights, Standardizer,
};
pub use schema::{DomainKind, FeatureSchema, JIT_FEATURES, TRADITIONAL_FEATURES};
pub use synthetic::generate_synthetic_linear;
pub use table::{binarize_label, load_table, read_table};

use crate::{Error, Result};

/// Feature matrix (rows are instances, columns in schema order) with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectDataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    schema: FeatureSchema,
    provenance: String,
}

impl DefectDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<u8>,
        schema: FeatureSchema,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyTable);
        }
        if features.ncols() != schema.n_features() {
            return Err(Error::WidthMismatch {
                expected: schema.n_features(),
                found: features.ncols(),
            });
        }
        if labels.len() != features.nrows() {
            return Err(Error::LengthMismatch {
                left: features.nrows(),
                right: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not binary")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(Self {
            features,
            labels,
            schema,
            provenance: provenance.into(),
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Fails with [`Error::SingleClass`] unless both labels occur.
    pub fn require_both_classes(&self) -> Result<()> {
        let pos = self.n_positive();
        if pos == 0 || pos == self.labels.len() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Same labels and schema over a transformed feature matrix of equal shape.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Self::new(
            features,
            self.labels.clone(),
            self.schema.clone(),
            self.provenance.clone(),
        )
    }

    /// Writes the table as CSV: schema feature columns then the label column.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.schema.feature_names.iter().map(String::as_str).collect();
        header.push(&self.schema.label_column);
        w.write_record(&header)?;
        for (row, label) in self.features.rows().into_iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}
