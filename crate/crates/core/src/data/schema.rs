use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which family of defect data a schema describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Class-level static code metrics.
    Traditional,
    /// Commit-level change/process metrics.
    Jit,
    /// Generated data or any user-defined table.
    Synthetic,
}

/// Class-level static code metrics, in column order.
pub const TRADITIONAL_FEATURES: [&str; 20] = [
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3", "loc", "dam", "moa",
    "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc",
];

/// Commit-level change metrics, in column order.
pub const JIT_FEATURES: [&str; 13] = [
    "fix", "la", "ld", "nf", "nd", "ns", "entropy", "ndev", "age", "nuc", "exp", "rexp", "sexp",
];

/// Named, ordered predictor columns plus the label column of a defect table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub domain_kind: DomainKind,
    pub feature_names: Vec<String>,
    pub label_column: String,
    #[serde(default)]
    pub identifier_columns: Vec<String>,
    /// Alternative header spellings accepted for a feature (e.g. `ent` for `entropy`).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aliases: BTreeMap<String, Vec<String>>,
}

fn owned(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| (*s).to_owned()).collect()
}

impl FeatureSchema {
    pub fn traditional() -> Self {
        Self {
            domain_kind: DomainKind::Traditional,
            feature_names: owned(&TRADITIONAL_FEATURES),
            label_column: "bug".into(),
            identifier_columns: owned(&["name", "version"]),
            aliases: BTreeMap::new(),
        }
    }

    /// The commit schema. Accepts the ApacheJIT header spellings
    /// (`ent`, `aexp`, `arexp`, `asexp`) as aliases.
    pub fn jit() -> Self {
        let aliases = [
            ("entropy", "ent"),
            ("exp", "aexp"),
            ("rexp", "arexp"),
            ("sexp", "asexp"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), vec![v.to_owned()]))
        .collect();
        Self {
            domain_kind: DomainKind::Jit,
            feature_names: owned(&JIT_FEATURES),
            label_column: "buggy".into(),
            identifier_columns: owned(&["commit_id", "project", "author_date", "year"]),
            aliases,
        }
    }

    /// Generic schema with features `x1..xp` and label `label`.
    pub fn synthetic(p: usize) -> Self {
        Self {
            domain_kind: DomainKind::Synthetic,
            feature_names: (1..=p).map(|i| format!("x{i}")).collect(),
            label_column: "label".into(),
            identifier_columns: Vec::new(),
            aliases: BTreeMap::new(),
        }
    }

    /// Built-in schema by name (`traditional` or `jit`).
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "traditional" => Ok(Self::traditional()),
            "jit" => Ok(Self::jit()),
            other => Err(Error::Config(format!(
                "unknown schema `{other}` (expected traditional or jit)"
            ))),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: Self = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_names.is_empty() {
            return Err(Error::InvalidSchema("no feature names".into()));
        }
        let mut seen = HashSet::new();
        for name in &self.feature_names {
            if !seen.insert(name.to_ascii_lowercase()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{name}`")));
            }
        }
        if seen.contains(&self.label_column.to_ascii_lowercase()) {
            return Err(Error::InvalidSchema(format!(
                "label column `{}` is also a feature",
                self.label_column
            )));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Header spellings accepted for feature `index`, canonical name first.
    pub(crate) fn accepted_headers(&self, index: usize) -> Vec<&str> {
        let name = self.feature_names[index].as_str();
        let mut out = vec![name];
        if let Some(extra) = self.aliases.get(name) {
            out.extend(extra.iter().map(String::as_str));
        }
        out
    }
}
