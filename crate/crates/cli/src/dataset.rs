//! CSV ingestion and dataset resolution.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use qkbench::data::{Dataset, Synthetic};
use serde::{Deserialize, Serialize};

/// Subsample size used by `subsample = true`.
pub const DEFAULT_SUBSAMPLE: usize = 1000;

/// `subsample = true` takes `DEFAULT_SUBSAMPLE` rows, `subsample = N` takes N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Subsample {
    Enabled(bool),
    Size(usize),
}

impl Subsample {
    pub fn size(self) -> Option<usize> {
        match self {
            Subsample::Enabled(true) => Some(DEFAULT_SUBSAMPLE),
            Subsample::Enabled(false) => None,
            Subsample::Size(n) => Some(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    /// CSV file, relative to the config file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<Synthetic>,
    #[serde(default = "default_label")]
    pub label: String,
    /// Label value mapped to +1; every other value is −1.
    #[serde(default = "default_positive")]
    pub positive: String,
    #[serde(default)]
    pub group: Option<String>,
    /// Columns where 0 encodes a missing value.
    #[serde(default)]
    pub missing_as_zero: Vec<String>,
    /// Stratified subsample. Off unless set.
    #[serde(default)]
    pub subsample: Option<Subsample>,
}

fn default_label() -> String {
    "label".into()
}

fn default_positive() -> String {
    "1".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvSchema {
    pub label: String,
    pub positive: String,
    pub group: Option<String>,
    pub missing_as_zero: Vec<String>,
}

/// Every column other than the label and group columns is a feature, in
/// file order. Labels keep file order.
pub fn load_csv(path: &Path, name: &str, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let find = |col: &str| headers.iter().position(|h| h == col);
    let label_col = find(&schema.label).with_context(|| format!("{}: no label column '{}'", path.display(), schema.label))?;
    let group_col = match &schema.group {
        Some(g) => Some(find(g).with_context(|| format!("{}: no group column '{g}'", path.display()))?),
        None => None,
    };
    let features: Vec<usize> = (0..headers.len()).filter(|&c| c != label_col && Some(c) != group_col).collect();
    if features.is_empty() {
        bail!("{}: no feature columns", path.display());
    }
    let mut impute_zero = Vec::new();
    for col in &schema.missing_as_zero {
        let c = find(col).with_context(|| format!("{}: no column '{col}' to impute", path.display()))?;
        impute_zero.push(features.iter().position(|&f| f == c).with_context(|| format!("'{col}' is not a feature column"))?);
    }

    let mut values = Vec::new();
    let mut y = Vec::new();
    let mut groups = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let line = r + 2;
        let rec = rec.with_context(|| format!("{}: line {line}", path.display()))?;
        for &c in &features {
            let cell = &rec[c];
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).with_context(|| {
                format!("{}: line {line}, column '{}': '{cell}' is not a finite number", path.display(), &headers[c])
            })?;
            values.push(v);
        }
        y.push(if rec[label_col] == *schema.positive { 1 } else { -1 });
        if let Some(g) = group_col {
            groups.push(rec[g].to_string());
        }
    }
    if y.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let x = DMatrix::from_row_slice(y.len(), features.len(), &values);
    let mut ds = Dataset {
        name: name.to_string(),
        x,
        y,
        groups: group_col.map(|_| groups),
        impute_zero,
        source: path.display().to_string(),
        synthetic: false,
    };
    ds.impute_zero.sort_unstable();
    ds.validate().with_context(|| format!("{}: invalid dataset", path.display()))?;
    Ok(ds)
}

impl DatasetSpec {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            label: self.label.clone(),
            positive: self.positive.clone(),
            group: self.group.clone(),
            missing_as_zero: self.missing_as_zero.clone(),
        }
    }

    /// Load or generate, then subsample with `seed` when requested.
    pub fn resolve(&self, base: &Path, seed: u64) -> Result<Dataset> {
        let ds = match (&self.path, &self.synthetic) {
            (Some(p), None) => load_csv(&base.join(p), &self.name, &self.schema())?,
            (None, Some(s)) => {
                let mut ds = s.generate()?;
                ds.name = self.name.clone();
                ds
            }
            _ => bail!("dataset '{}' needs exactly one of `path` or `synthetic`", self.name),
        };
        Ok(match self.subsample.and_then(Subsample::size) {
            Some(n) if n < ds.n_samples() => {
                log::info!("{}: stratified subsample of {n} from {}", self.name, ds.n_samples());
                ds.stratified_subsample(n, seed)
            }
            _ => ds,
        })
    }
}
