//! Nested cross-validation, learning curves and seed sweeps.
//!
//! Every outer fold fits its own preprocessing and kernel on outer-train
//! rows only; inner folds select C on sub-matrices of that training kernel.

mod curves;
mod plan;

pub use curves::{
    compare_sweeps, default_seeds, learning_curve, seed_sweep, LearningCurve, LearningPoint,
    SeedComparison, SeedSweep, DEFAULT_FRACTIONS,
};
pub use plan::{make_fold_plan, FoldPlan, Split};

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuit::{FeatureMapKind, FeatureMapSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hash::ContentHash;
use crate::kern::{self, CacheKey, ClassicalKernel, ClassicalKind, KernelCache, KernelMatrix, Pathway, Provenance};
use crate::prep::{fit_pipeline, Pipeline, PipelineSpec};
use crate::qkt::{optimize_theta, QktResult};
use crate::sim::NoiseModel;
use crate::stats::{mean, sample_std};
use crate::svm::{self, compute_metrics, MetricBundle};

pub const C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const CODE_VERSION: &str = concat!("qkbench ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelConfig {
    Quantum {
        map: FeatureMapKind,
        #[serde(default = "one")]
        reps: usize,
        /// Present selects the density-matrix pathway.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<NoiseModel>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        qkt: Option<QktSettings>,
    },
    Classical {
        kind: ClassicalKind,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QktSettings {
    #[serde(default = "default_qkt_iter")]
    pub max_iter: usize,
}

fn default_qkt_iter() -> usize {
    crate::qkt::DEFAULT_MAX_ITER
}

impl Default for QktSettings {
    fn default() -> Self {
        Self { max_iter: default_qkt_iter() }
    }
}

impl KernelConfig {
    pub fn ideal(map: FeatureMapKind, reps: usize) -> Self {
        KernelConfig::Quantum { map, reps, noise: None, qkt: None }
    }

    pub fn classical(kind: ClassicalKind) -> Self {
        KernelConfig::Classical { kind }
    }

    pub fn pathway(&self) -> Pathway {
        match self {
            KernelConfig::Quantum { noise: None, .. } => Pathway::Ideal,
            KernelConfig::Quantum { noise: Some(_), .. } => Pathway::Noisy,
            KernelConfig::Classical { .. } => Pathway::Classical,
        }
    }

    pub fn noise(&self) -> Option<NoiseModel> {
        match self {
            KernelConfig::Quantum { noise, .. } => *noise,
            KernelConfig::Classical { .. } => None,
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, KernelConfig::Quantum { .. })
    }

    /// Short name such as `belis_r2_noisy` or `rbf_scale`.
    pub fn label(&self) -> String {
        match self {
            KernelConfig::Quantum { map, reps, noise, qkt } => {
                let path = if noise.is_some() { "noisy" } else { "ideal" };
                let tuned = if qkt.is_some() { "_qkt" } else { "" };
                format!("{}_r{reps}_{path}{tuned}", map.name())
            }
            KernelConfig::Classical { kind } => kind.name().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let KernelConfig::Quantum { reps, noise, qkt, .. } = self {
            if *reps == 0 {
                return Err(Error::InvalidArgument("reps must be >= 1".into()));
            }
            if let Some(n) = noise {
                n.validate()?;
                if qkt.is_some() {
                    return Err(Error::InvalidArgument("kernel alignment runs on the ideal pathway only".into()));
                }
            }
        }
        Ok(())
    }
}

/// Kernels for one outer fold, computed from transformed features.
#[derive(Debug, Clone)]
pub struct FoldKernels {
    pub outer: usize,
    /// `None` when the blocks were sliced from a fixed full-data kernel.
    pub pipeline: Option<Pipeline>,
    /// Outer-train × outer-train.
    pub train: DMatrix<f64>,
    /// Outer-test × outer-train.
    pub test: DMatrix<f64>,
    pub qkt: Option<QktResult>,
    pub kernel_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CScore {
    pub c: f64,
    /// Mean inner BA over the valid folds; `None` when every fold was missing.
    pub mean_ba: Option<f64>,
    pub valid_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub outer: usize,
    pub chosen_c: f64,
    pub metrics: MetricBundle,
    pub n_train: usize,
    pub n_test: usize,
    pub inner_scores: Vec<CScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kta_initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kta_final: Option<f64>,
    pub smo_converged: bool,
    pub kernel_time_s: f64,
    pub fit_time_s: f64,
}

/// One experiment. `folds.len() == ba.len() == n_outer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: ContentHash,
    pub dataset: String,
    pub dataset_fingerprint: ContentHash,
    pub synthetic: bool,
    pub n_samples: usize,
    pub pipeline: PipelineSpec,
    pub kernel: KernelConfig,
    pub kernel_label: String,
    pub pathway: Pathway,
    pub c_grid: Vec<f64>,
    pub seed: u64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub folds: Vec<FoldRecord>,
    pub ba: Vec<f64>,
    pub mean_ba: f64,
    /// Sample standard deviation over outer folds.
    pub std_ba: f64,
    pub code_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_curve: Option<LearningCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_sweep: Option<SeedSweep>,
}

/// Spectrum of the first outer fold's training kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub profile: crate::stats::SpectralProfile,
    /// Descending.
    pub eigenvalues: Vec<f64>,
}

impl ResultRecord {
    /// Copy with wall times zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for f in &mut r.folds {
            f.kernel_time_s = 0.0;
            f.fit_time_s = 0.0;
        }
        r
    }
}

/// Hash of every input that determines an experiment's metrics.
pub fn config_hash(
    ds: &Dataset,
    pipeline: &PipelineSpec,
    kernel: &KernelConfig,
    c_grid: &[f64],
    plan: &FoldPlan,
) -> Result<ContentHash> {
    ContentHash::of(&json!({
        "dataset": ds.fingerprint(),
        "pipeline": pipeline,
        "kernel": kernel,
        "c_grid": c_grid,
        "seed": plan.seed,
        "n_outer": plan.n_outer,
        "n_inner": plan.n_inner,
    }))
}

pub struct CvRun {
    pub record: ResultRecord,
    pub kernels: Vec<FoldKernels>,
}

pub fn nested_cv(
    ds: &Dataset,
    pipeline: &PipelineSpec,
    kernel: &KernelConfig,
    c_grid: &[f64],
    plan: &FoldPlan,
) -> Result<CvRun> {
    nested_cv_cached(ds, pipeline, kernel, c_grid, plan, None)
}

pub fn nested_cv_cached(
    ds: &Dataset,
    pipeline: &PipelineSpec,
    kernel: &KernelConfig,
    c_grid: &[f64],
    plan: &FoldPlan,
    cache: Option<&KernelCache>,
) -> Result<CvRun> {
    ds.validate()?;
    kernel.validate()?;
    check_grid(c_grid)?;
    if plan.outer.iter().flat_map(|s| s.train.iter().chain(&s.test)).any(|&i| i >= ds.n_samples()) {
        return Err(Error::DimensionMismatch("fold plan indexes past the dataset".into()));
    }
    let results: Vec<Result<(FoldKernels, FoldRecord)>> = (0..plan.outer.len())
        .into_par_iter()
        .map(|o| {
            let fk = compute_fold_kernels(ds, pipeline, kernel, plan, o, cache)?;
            let rec = evaluate_fold(&fk, &ds.y, &plan.outer[o], &plan.inner[o], c_grid)?;
            Ok((fk, rec))
        })
        .collect();
    let mut kernels = Vec::with_capacity(results.len());
    let mut folds = Vec::with_capacity(results.len());
    for r in results {
        let (fk, rec) = r?;
        kernels.push(fk);
        folds.push(rec);
    }
    let ba: Vec<f64> = folds.iter().map(|f| f.metrics.balanced_accuracy).collect();
    let record = ResultRecord {
        config_hash: config_hash(ds, pipeline, kernel, c_grid, plan)?,
        dataset: ds.name.clone(),
        dataset_fingerprint: ds.fingerprint(),
        synthetic: ds.synthetic,
        n_samples: ds.n_samples(),
        pipeline: pipeline.clone(),
        kernel: kernel.clone(),
        kernel_label: kernel.label(),
        pathway: kernel.pathway(),
        c_grid: c_grid.to_vec(),
        seed: plan.seed,
        n_outer: plan.n_outer,
        n_inner: plan.n_inner,
        mean_ba: mean(&ba),
        std_ba: sample_std(&ba),
        ba,
        folds,
        code_version: CODE_VERSION.to_string(),
        spectrum: None,
        learning_curve: None,
        seed_sweep: None,
    };
    Ok(CvRun { record, kernels })
}

fn check_grid(c_grid: &[f64]) -> Result<()> {
    if c_grid.is_empty() || c_grid.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(Error::InvalidArgument("C grid must be non-empty and positive".into()));
    }
    Ok(())
}

/// (train×train, test×train, alignment result).
pub type KernelBlocks = (DMatrix<f64>, Option<DMatrix<f64>>, Option<QktResult>);

/// Train×train block (and optionally a test×train block) for already
/// transformed features. Runs kernel alignment first when configured.
pub fn kernel_blocks(
    z_train: &DMatrix<f64>,
    y_train: &[i8],
    z_test: Option<&DMatrix<f64>>,
    kernel: &KernelConfig,
    label: &str,
) -> Result<KernelBlocks> {
    kernel.validate()?;
    match kernel {
        KernelConfig::Classical { kind } => {
            let ck = ClassicalKernel::fit(*kind, z_train, label)?;
            let test = z_test.map(|z| ck.matrix(z, z_train)).transpose()?;
            Ok((ck.gram(z_train)?.values, test.map(|m| m.values), None))
        }
        KernelConfig::Quantum { map, reps, noise, qkt } => {
            let mut spec = FeatureMapSpec::new(*map, z_train.ncols(), *reps);
            let mut tuned = None;
            if let Some(settings) = qkt {
                let res = optimize_theta(z_train, y_train, &spec, settings.max_iter)?;
                spec = spec.with_theta(res.theta_star.clone());
                tuned = Some(res);
            }
            let (train, test) = quantum_blocks(z_train, z_test, &spec, noise.as_ref())?;
            Ok((train, test, tuned))
        }
    }
}

fn quantum_blocks(
    z_train: &DMatrix<f64>,
    z_test: Option<&DMatrix<f64>>,
    spec: &FeatureMapSpec,
    noise: Option<&NoiseModel>,
) -> Result<(DMatrix<f64>, Option<DMatrix<f64>>)> {
    let train = match noise {
        None => kern::quantum_gram_ideal(z_train, spec)?,
        Some(n) => kern::quantum_gram_noisy(z_train, spec, n)?,
    };
    let test = match (z_test, noise) {
        (None, _) => None,
        (Some(z), None) => Some(kern::quantum_kernel_ideal(z, z_train, spec)?),
        (Some(z), Some(n)) => Some(kern::quantum_kernel_noisy(z, z_train, spec, n)?),
    };
    Ok((train.values, test.map(|m| m.values)))
}

/// Fit preprocessing on outer-train rows of fold `o` and build its kernels,
/// going through the cache when one is given. θ is not part of the cache key;
/// it is stored in the sidecar so a hit skips the alignment run.
pub fn compute_fold_kernels(
    ds: &Dataset,
    pipeline: &PipelineSpec,
    kernel: &KernelConfig,
    plan: &FoldPlan,
    o: usize,
    cache: Option<&KernelCache>,
) -> Result<FoldKernels> {
    let split = &plan.outer[o];
    let x_tr = ds.x.select_rows(split.train.iter());
    let x_te = ds.x.select_rows(split.test.iter());
    let y_tr: Vec<i8> = split.train.iter().map(|&i| ds.y[i]).collect();
    let fitted = fit_pipeline(pipeline, &x_tr, &y_tr)?;
    let z_tr = fitted.transform(&x_tr)?;
    let z_te = fitted.transform(&x_te)?;

    let keys = match cache {
        Some(_) => {
            let fold = json!({
                "outer": o,
                "train": ContentHash::of(&split.train)?,
                "test": ContentHash::of(&split.test)?,
            });
            let key = |side: &str| {
                CacheKey {
                    dataset: ds.fingerprint().to_string(),
                    fold: fold.clone(),
                    pipeline: serde_json::to_value(pipeline).expect("pipeline serialises"),
                    kernel: serde_json::to_value(kernel).expect("kernel serialises"),
                    noise: kernel.noise(),
                    pathway: kernel.pathway(),
                    side: side.to_string(),
                }
                .hash()
            };
            Some((key("train")?, key("test")?))
        }
        None => None,
    };
    if let (Some(c), Some((kt, ke))) = (cache, keys) {
        if let (Some(train), Some(test)) = (c.get(kt), c.get(ke)) {
            let qkt = match train.extra.get("qkt") {
                Some(v) => Some(serde_json::from_value(v.clone())?),
                None => None,
            };
            log::debug!("fold {o}: kernel cache hit");
            return Ok(FoldKernels {
                outer: o,
                pipeline: Some(fitted),
                train: train.kernel.values,
                test: test.kernel.values,
                qkt,
                kernel_time_s: 0.0,
            });
        }
    }

    let start = Instant::now();
    let label = format!("{} outer fold {o}", ds.name);
    let (train, test, qkt) = kernel_blocks(&z_tr, &y_tr, Some(&z_te), kernel, &label)?;
    let test = test.expect("test block requested");
    let kernel_time_s = start.elapsed().as_secs_f64();

    if let (Some(c), Some((kt, ke))) = (cache, keys) {
        let spec_hash = ContentHash::of(kernel)?;
        let prov = Provenance::new(kernel.pathway(), spec_hash, kernel.noise(), kernel_time_s);
        let extra = match &qkt {
            Some(q) => json!({ "qkt": q }),
            None => json!({}),
        };
        let wrap = |values: &DMatrix<f64>| KernelMatrix { values: values.clone(), provenance: prov.clone() };
        c.put(kt, &wrap(&train), extra)?;
        c.put(ke, &wrap(&test), json!({}))?;
    }
    Ok(FoldKernels { outer: o, pipeline: Some(fitted), train, test, qkt, kernel_time_s })
}

/// Positions of `indices` within the sorted list `within`.
pub(crate) fn positions(within: &[usize], indices: &[usize]) -> Vec<usize> {
    indices
        .iter()
        .map(|i| within.binary_search(i).expect("inner index outside outer-train"))
        .collect()
}

/// Choose C by mean inner-fold BA on sub-matrices of `k_train`. Inner splits
/// are positions into `k_train`. A (C, fold) pair whose training side has a
/// single class is missing. Ranking: higher mean BA, then more valid folds,
/// then smaller C.
pub fn select_c(
    k_train: &DMatrix<f64>,
    y_train: &[i8],
    inner: &[(Vec<usize>, Vec<usize>)],
    c_grid: &[f64],
) -> Result<(f64, Vec<CScore>)> {
    check_grid(c_grid)?;
    let mut grid = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut scores = Vec::with_capacity(grid.len());
    for &c in &grid {
        let mut bas = Vec::new();
        for (tr, va) in inner {
            if va.is_empty() || tr.is_empty() {
                continue;
            }
            let y_tr: Vec<i8> = tr.iter().map(|&i| y_train[i]).collect();
            if !(y_tr.contains(&1) && y_tr.contains(&-1)) {
                continue;
            }
            let model = svm::train(&kern::select(k_train, tr, tr), &y_tr, c)?;
            let pred = svm::predict(&model, &kern::select(k_train, va, tr))?;
            let y_va: Vec<i8> = va.iter().map(|&i| y_train[i]).collect();
            bas.push(compute_metrics(&y_va, &pred.labels, &pred.decision_values)?.balanced_accuracy);
        }
        scores.push(CScore { c, mean_ba: (!bas.is_empty()).then(|| mean(&bas)), valid_folds: bas.len() });
    }
    // Grid is ascending, so keeping the first maximum prefers smaller C.
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        let b = &scores[best];
        let better = match (s.mean_ba, b.mean_ba) {
            (Some(x), Some(y)) => x > y || (x == y && s.valid_folds > b.valid_folds),
            (Some(_), None) => true,
            _ => false,
        };
        if better {
            best = i;
        }
    }
    if scores[best].mean_ba.is_none() {
        log::info!("no valid inner fold for any C; falling back to C = {}", scores[best].c);
    }
    Ok((scores[best].c, scores))
}

/// Select C on the inner folds, refit on all of outer-train, score outer-test.
pub fn evaluate_fold(
    fk: &FoldKernels,
    y: &[i8],
    split: &Split,
    inner: &[Split],
    c_grid: &[f64],
) -> Result<FoldRecord> {
    let start = Instant::now();
    let y_tr: Vec<i8> = split.train.iter().map(|&i| y[i]).collect();
    let y_te: Vec<i8> = split.test.iter().map(|&i| y[i]).collect();
    let inner_pos: Vec<(Vec<usize>, Vec<usize>)> =
        inner.iter().map(|s| (positions(&split.train, &s.train), positions(&split.train, &s.test))).collect();
    let (chosen_c, inner_scores) = select_c(&fk.train, &y_tr, &inner_pos, c_grid)?;
    let model = svm::train(&fk.train, &y_tr, chosen_c)?;
    let pred = svm::predict(&model, &fk.test)?;
    let metrics = compute_metrics(&y_te, &pred.labels, &pred.decision_values)?;
    Ok(FoldRecord {
        outer: fk.outer,
        chosen_c,
        metrics,
        n_train: y_tr.len(),
        n_test: y_te.len(),
        inner_scores,
        theta: fk.qkt.as_ref().map(|q| q.theta_star.clone()),
        kta_initial: fk.qkt.as_ref().map(|q| q.kta_initial),
        kta_final: fk.qkt.as_ref().map(|q| q.kta_final),
        smo_converged: model.converged,
        kernel_time_s: fk.kernel_time_s,
        fit_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Nested CV on a kernel precomputed over the whole dataset; fold kernels
/// are sliced from it.
pub fn cv_fixed_kernel(k_full: &DMatrix<f64>, y: &[i8], plan: &FoldPlan, c_grid: &[f64]) -> Result<Vec<FoldRecord>> {
    if !k_full.is_square() || k_full.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}×{} kernel for {} labels",
            k_full.nrows(),
            k_full.ncols(),
            y.len()
        )));
    }
    plan.outer
        .par_iter()
        .enumerate()
        .map(|(o, split)| {
            let fk = FoldKernels {
                outer: o,
                pipeline: None,
                train: kern::select(k_full, &split.train, &split.train),
                test: kern::select(k_full, &split.test, &split.train),
                qkt: None,
                kernel_time_s: 0.0,
            };
            evaluate_fold(&fk, y, split, &plan.inner[o], c_grid)
        })
        .collect()
}

/// Kernel over the whole dataset with preprocessing fitted on all rows. This
/// is the fixed kernel of a seed sweep; it is not a leakage-free estimate.
pub fn full_data_kernel(ds: &Dataset, pipeline: &PipelineSpec, kernel: &KernelConfig) -> Result<(DMatrix<f64>, Option<QktResult>)> {
    let fitted = fit_pipeline(pipeline, &ds.x, &ds.y)?;
    let z = fitted.transform(&ds.x)?;
    let (k, _, qkt) = kernel_blocks(&z, &ds.y, None, kernel, &ds.name)?;
    Ok((k, qkt))
}
