//! Comparison of externally produced kernel matrices (e.g. from hardware
//! runs) against the simulated ideal and noisy references.
//!
//! Downstream accuracy uses single-level stratified 5-fold CV. C is picked
//! per fold by resubstitution accuracy on the outer-train block, since at
//! this scale there is no room for an inner split.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::FeatureMapSpec;
use crate::error::{Error, Result};
use crate::harness::{make_fold_plan, C_GRID};
use crate::kern::{self, compare_kernels, KernelAgreement, KernelMatrix, INDEFINITE_TOL};
use crate::sim::NoiseModel;
use crate::stats::mean;
use crate::svm::{self, compute_metrics};

pub const HW_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceScore {
    /// Mean over folds.
    pub balanced_accuracy: f64,
    pub fold_ba: Vec<f64>,
    pub best_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwReport {
    pub n_samples: usize,
    pub spec: FeatureMapSpec,
    pub noise: Option<NoiseModel>,
    pub seed: u64,
    pub vs_ideal: KernelAgreement,
    pub vs_noisy: Option<KernelAgreement>,
    pub imported: SourceScore,
    pub ideal: SourceScore,
    pub noisy: Option<SourceScore>,
    /// (imported − ideal) BA in percentage points.
    pub delta_pp: f64,
    pub indefinite: bool,
    pub min_eigenvalue: f64,
}

/// `features` are the encoded inputs the imported kernel was built from, one
/// row per matrix row, already reduced and scaled.
pub fn validate_backend(
    imported: &KernelMatrix,
    features: &DMatrix<f64>,
    y: &[i8],
    spec: &FeatureMapSpec,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<HwReport> {
    let n = features.nrows();
    if !imported.is_square() || imported.rows() != n || y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "imported kernel is {}×{} for {n} samples and {} labels",
            imported.rows(),
            imported.cols(),
            y.len()
        )));
    }
    let ideal = kern::quantum_gram_ideal(features, spec)?.values;
    let noisy = noise.map(|p| kern::quantum_gram_noisy(features, spec, p)).transpose()?.map(|m| m.values);
    let min_eigenvalue = kern::min_eigenvalue(&imported.values);

    let imported_score = downstream_ba(&imported.values, y, seed)?;
    let ideal_score = downstream_ba(&ideal, y, seed)?;
    Ok(HwReport {
        n_samples: n,
        spec: spec.clone(),
        noise: noise.copied(),
        seed,
        vs_ideal: compare_kernels(&ideal, &imported.values)?,
        vs_noisy: noisy.as_ref().map(|k| compare_kernels(k, &imported.values)).transpose()?,
        delta_pp: 100.0 * (imported_score.balanced_accuracy - ideal_score.balanced_accuracy),
        imported: imported_score,
        ideal: ideal_score,
        noisy: noisy.as_ref().map(|k| downstream_ba(k, y, seed)).transpose()?,
        indefinite: min_eigenvalue < INDEFINITE_TOL,
        min_eigenvalue,
    })
}

/// Stratified 5-fold BA with C chosen by outer-train resubstitution BA
/// (ties to the smaller C).
pub fn downstream_ba(k: &DMatrix<f64>, y: &[i8], seed: u64) -> Result<SourceScore> {
    let plan = make_fold_plan(y, None, HW_FOLDS, 2, seed)?;
    let mut fold_ba = Vec::with_capacity(HW_FOLDS);
    let mut best_c = Vec::with_capacity(HW_FOLDS);
    for split in &plan.outer {
        let y_tr: Vec<i8> = split.train.iter().map(|&i| y[i]).collect();
        let y_te: Vec<i8> = split.test.iter().map(|&i| y[i]).collect();
        let k_tr = kern::select(k, &split.train, &split.train);
        let mut best: Option<(f64, f64)> = None;
        for &c in &C_GRID {
            let model = svm::train(&k_tr, &y_tr, c)?;
            let pred = svm::predict(&model, &k_tr)?;
            let ba = compute_metrics(&y_tr, &pred.labels, &pred.decision_values)?.balanced_accuracy;
            if best.is_none_or(|(b, _)| ba > b) {
                best = Some((ba, c));
            }
        }
        let c = best.expect("non-empty grid").1;
        let model = svm::train(&k_tr, &y_tr, c)?;
        let pred = svm::predict(&model, &kern::select(k, &split.test, &split.train))?;
        fold_ba.push(compute_metrics(&y_te, &pred.labels, &pred.decision_values)?.balanced_accuracy);
        best_c.push(c);
    }
    Ok(SourceScore { balanced_accuracy: mean(&fold_ba), fold_ba, best_c })
}
