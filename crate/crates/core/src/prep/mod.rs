//! Per-fold preprocessing. A pipeline is fitted on training rows only and
//! then applied unchanged to any rows:
//!
//! - pca:  impute → standard scale → PCA
//! - tree: impute → standard scale → CART Gini feature selection
//! - nmf:  impute → min-max scale → NMF
//!
//! Imputation replaces zeros in designated columns with the training median
//! of that column's non-zero values.

mod nmf;
mod pca;
mod tree;

pub use nmf::{nmf_fit, NmfFit, NMF_MAX_ITER, NMF_TOL};
pub use pca::{pca_fit, PcaFit};
pub use tree::{gini_importances, select_top_k};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed of every stochastic preprocessing step (NMF initialisation).
pub const PREP_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    Pca,
    Nmf,
    Tree,
}

impl Reducer {
    pub const ALL: [Reducer; 3] = [Reducer::Pca, Reducer::Nmf, Reducer::Tree];

    pub fn name(self) -> &'static str {
        match self {
            Reducer::Pca => "pca",
            Reducer::Nmf => "nmf",
            Reducer::Tree => "tree",
        }
    }
}

impl std::fmt::Display for Reducer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Reducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Reducer::Pca),
            "nmf" => Ok(Reducer::Nmf),
            "tree" => Ok(Reducer::Tree),
            other => Err(Error::InvalidArgument(format!("unknown reducer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub reducer: Reducer,
    pub k: usize,
    /// Columns where 0 encodes a missing value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub impute_zero: Vec<usize>,
}

impl PipelineSpec {
    pub fn new(reducer: Reducer, k: usize) -> Self {
        Self { reducer, k, impute_zero: Vec::new() }
    }

    pub fn with_imputation(mut self, columns: Vec<usize>) -> Self {
        self.impute_zero = columns;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Impute,
    StandardScale,
    MinmaxScale,
    Pca,
    Nmf,
    TreeSelect,
}

/// One fitted step. Parameters come from training rows only.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedTransform {
    Impute { columns: Vec<usize>, medians: Vec<f64> },
    StandardScale { means: Vec<f64>, scales: Vec<f64> },
    MinmaxScale { mins: Vec<f64>, ranges: Vec<f64> },
    Pca(PcaFit),
    Nmf(NmfFit),
    TreeSelect { indices: Vec<usize>, importances: Vec<f64> },
}

impl FittedTransform {
    pub fn kind(&self) -> TransformKind {
        match self {
            FittedTransform::Impute { .. } => TransformKind::Impute,
            FittedTransform::StandardScale { .. } => TransformKind::StandardScale,
            FittedTransform::MinmaxScale { .. } => TransformKind::MinmaxScale,
            FittedTransform::Pca(_) => TransformKind::Pca,
            FittedTransform::Nmf(_) => TransformKind::Nmf,
            FittedTransform::TreeSelect { .. } => TransformKind::TreeSelect,
        }
    }

    pub fn k_out(&self, k_in: usize) -> usize {
        match self {
            FittedTransform::Pca(p) => p.components.nrows(),
            FittedTransform::Nmf(n) => n.components.nrows(),
            FittedTransform::TreeSelect { indices, .. } => indices.len(),
            _ => k_in,
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            FittedTransform::Impute { columns, medians } => {
                let mut out = x.clone();
                for (&c, &m) in columns.iter().zip(medians) {
                    for i in 0..out.nrows() {
                        if out[(i, c)] == 0.0 {
                            out[(i, c)] = m;
                        }
                    }
                }
                out
            }
            FittedTransform::StandardScale { means, scales } => {
                DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - means[j]) / scales[j])
            }
            FittedTransform::MinmaxScale { mins, ranges } => {
                DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - mins[j]) / ranges[j])
            }
            FittedTransform::Pca(p) => p.transform(x),
            FittedTransform::Nmf(n) => n.transform(x),
            FittedTransform::TreeSelect { indices, .. } => {
                DMatrix::from_fn(x.nrows(), indices.len(), |i, j| x[(i, indices[j])])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub spec: PipelineSpec,
    pub n_features_in: usize,
    pub steps: Vec<FittedTransform>,
}

impl Pipeline {
    pub fn k_out(&self) -> usize {
        self.steps.iter().fold(self.n_features_in, |k, s| s.k_out(k))
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features_in {
            return Err(Error::DimensionMismatch(format!(
                "pipeline fitted on {} features, got {}",
                self.n_features_in,
                x.ncols()
            )));
        }
        Ok(self.steps.iter().fold(x.clone(), |acc, s| s.apply(&acc)))
    }
}

/// Median of the non-zero entries of each designated column (0 if none).
pub fn fit_imputer(x: &DMatrix<f64>, columns: &[usize]) -> FittedTransform {
    let medians = columns
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = x.column(c).iter().copied().filter(|&t| t != 0.0).collect();
            if v.is_empty() {
                return 0.0;
            }
            v.sort_by(f64::total_cmp);
            let m = v.len();
            if m % 2 == 1 {
                v[m / 2]
            } else {
                0.5 * (v[m / 2 - 1] + v[m / 2])
            }
        })
        .collect();
    FittedTransform::Impute { columns: columns.to_vec(), medians }
}

/// Population standard deviation; constant columns keep scale 1.
pub fn fit_standard_scaler(x: &DMatrix<f64>) -> FittedTransform {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let m = col.sum() / n;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        if sd == 0.0 {
            log::warn!("feature {j} is constant on the training rows; its scale is left at 1");
        }
        means.push(m);
        scales.push(if sd > 0.0 { sd } else { 1.0 });
    }
    FittedTransform::StandardScale { means, scales }
}

/// Maps the training range of each column to [0, 1]; constant columns map to 0.
pub fn fit_minmax_scaler(x: &DMatrix<f64>) -> FittedTransform {
    let mut mins = Vec::with_capacity(x.ncols());
    let mut ranges = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let (lo, hi) = (col.min(), col.max());
        mins.push(lo);
        ranges.push(if hi > lo { hi - lo } else { 1.0 });
    }
    FittedTransform::MinmaxScale { mins, ranges }
}

pub fn fit_pipeline(spec: &PipelineSpec, x_train: &DMatrix<f64>, y_train: &[i8]) -> Result<Pipeline> {
    let d = x_train.ncols();
    if x_train.nrows() < 2 {
        return Err(Error::InvalidArgument("preprocessing needs at least 2 training rows".into()));
    }
    if spec.k == 0 || spec.k > d {
        return Err(Error::InvalidArgument(format!("k = {} must be in 1..={d}", spec.k)));
    }
    if let Some(c) = spec.impute_zero.iter().find(|&&c| c >= d) {
        return Err(Error::InvalidArgument(format!("imputation column {c} out of range")));
    }
    if y_train.len() != x_train.nrows() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} rows", y_train.len(), x_train.nrows())));
    }
    crate::kern::check_finite(x_train)?;

    let mut steps = Vec::new();
    let mut current = x_train.clone();
    let push = |step: FittedTransform, current: &mut DMatrix<f64>, steps: &mut Vec<FittedTransform>| {
        *current = step.apply(current);
        steps.push(step);
    };
    if !spec.impute_zero.is_empty() {
        let step = fit_imputer(&current, &spec.impute_zero);
        push(step, &mut current, &mut steps);
    }
    match spec.reducer {
        Reducer::Pca => {
            let step = fit_standard_scaler(&current);
            push(step, &mut current, &mut steps);
            steps.push(FittedTransform::Pca(pca_fit(&current, spec.k)?));
        }
        Reducer::Tree => {
            let step = fit_standard_scaler(&current);
            push(step, &mut current, &mut steps);
            let importances = gini_importances(&current, y_train);
            let indices = select_top_k(&importances, spec.k);
            steps.push(FittedTransform::TreeSelect { indices, importances });
        }
        Reducer::Nmf => {
            let step = fit_minmax_scaler(&current);
            push(step, &mut current, &mut steps);
            steps.push(FittedTransform::Nmf(nmf_fit(&current, spec.k, PREP_SEED)?));
        }
    }
    Ok(Pipeline { spec: spec.clone(), n_features_in: d, steps })
}

#[cfg(test)]
mod tests;
