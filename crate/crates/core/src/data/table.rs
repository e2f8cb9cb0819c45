use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use super::{DefectDataset, FeatureSchema};
use crate::{Error, Result};

/// Maps a raw bug count to a binary label: 0 stays 0, any positive count is 1.
pub fn binarize_label(raw_count: i64) -> Result<u8> {
    match raw_count {
        n if n < 0 => Err(Error::NegativeCount(n)),
        0 => Ok(0),
        _ => Ok(1),
    }
}

fn parse_bool(cell: &str) -> Option<f64> {
    if cell.eq_ignore_ascii_case("true") {
        Some(1.0)
    } else if cell.eq_ignore_ascii_case("false") {
        Some(0.0)
    } else {
        None
    }
}

fn parse_feature(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    parse_bool(cell).or_else(|| cell.parse::<f64>().ok().filter(|v| v.is_finite()))
}

fn parse_label(cell: &str, row: usize, column: &str) -> Result<u8> {
    let bad = || Error::NonNumericCell {
        row,
        column: column.to_owned(),
        value: cell.to_owned(),
    };
    let v = parse_feature(cell).ok_or_else(bad)?;
    if v.fract() != 0.0 {
        return Err(bad());
    }
    binarize_label(v as i64)
}

/// Reads a defect table from a CSV file.
pub fn load_table(path: &Path, schema: &FeatureSchema) -> Result<DefectDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, schema, path.display().to_string())
}

/// Reads a defect table from any CSV source.
///
/// Columns are matched case-insensitively (schema aliases included), reordered
/// to schema order, and every column not named by the schema is dropped. Row
/// numbers in errors are 1-based data rows, not counting the header.
pub fn read_table<R: Read>(
    source: R,
    schema: &FeatureSchema,
    provenance: impl Into<String>,
) -> Result<DefectDataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    let find = |name: &str| headers.iter().position(|h| *h == name.to_ascii_lowercase());

    let mut columns = Vec::with_capacity(schema.n_features());
    for i in 0..schema.n_features() {
        let col = schema
            .accepted_headers(i)
            .into_iter()
            .find_map(find)
            .ok_or_else(|| Error::MissingColumn(schema.feature_names[i].clone()))?;
        columns.push(col);
    }
    let label_col =
        find(&schema.label_column).ok_or_else(|| Error::MissingColumn(schema.label_column.clone()))?;

    let p = schema.n_features();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (i, &c) in columns.iter().enumerate() {
            let cell = record.get(c).unwrap_or("");
            let v = parse_feature(cell).ok_or_else(|| Error::NonNumericCell {
                row,
                column: schema.feature_names[i].clone(),
                value: cell.to_owned(),
            })?;
            values.push(v);
        }
        let cell = record.get(label_col).unwrap_or("");
        labels.push(parse_label(cell, row, &schema.label_column)?);
    }
    if labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    let features = Array2::from_shape_vec((labels.len(), p), values)
        .expect("row-major buffer matches shape");
    DefectDataset::new(features, labels, schema.clone(), provenance)
}
