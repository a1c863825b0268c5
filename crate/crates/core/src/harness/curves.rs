use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cv_fixed_kernel, positions, select_c, FoldKernels, FoldPlan};
use crate::error::{Error, Result};
use crate::kern;
use crate::rng::SplitMix64;
use crate::stats::{self, mean, ols_slope, OlsFit, TestReport};
use crate::svm::{self, compute_metrics};

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.1, 0.2, 0.3, 0.5, 0.7, 1.0];

/// Tag separating the subsampling stream from the fold-assignment streams.
const LEARNING_STREAM: u64 = 0x6c63_7276;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningPoint {
    pub fraction: f64,
    /// Per outer fold; `None` when a class kept fewer than 2 samples.
    pub ba: Vec<Option<f64>>,
    pub n_train: Vec<usize>,
    pub mean_ba: Option<f64>,
    /// Over the folds with a BA.
    pub mean_n_train: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<LearningPoint>,
    /// Mean BA regressed on ln(mean n_train); `None` with fewer than 3 points.
    pub slope: Option<OlsFit>,
}

pub fn default_seeds() -> Vec<u64> {
    (42..58).collect()
}

/// Retrain on stratified subsamples of each outer-train set, slicing the
/// precomputed fold kernels. Subsamples are nested: each class is shuffled
/// once per fold and a fraction keeps a prefix of that order.
pub fn learning_curve(
    kernels: &[FoldKernels],
    y: &[i8],
    plan: &FoldPlan,
    c_grid: &[f64],
    fractions: &[f64],
) -> Result<LearningCurve> {
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidArgument("fractions must lie in (0, 1]".into()));
    }
    if kernels.len() != plan.outer.len() {
        return Err(Error::DimensionMismatch(format!("{} fold kernels for {} outer folds", kernels.len(), plan.outer.len())));
    }
    let per_fold: Vec<Vec<Option<(f64, usize)>>> = kernels
        .par_iter()
        .enumerate()
        .map(|(o, fk)| fold_curve(fk, y, plan, o, c_grid, fractions))
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(fractions.len());
    for (p, &fraction) in fractions.iter().enumerate() {
        let cells: Vec<Option<(f64, usize)>> = per_fold.iter().map(|f| f[p]).collect();
        let valid: Vec<(f64, usize)> = cells.iter().flatten().copied().collect();
        let (mean_ba, mean_n_train) = if valid.is_empty() {
            (None, None)
        } else {
            let bas: Vec<f64> = valid.iter().map(|v| v.0).collect();
            let ns: Vec<f64> = valid.iter().map(|v| v.1 as f64).collect();
            (Some(mean(&bas)), Some(mean(&ns)))
        };
        points.push(LearningPoint {
            fraction,
            ba: cells.iter().map(|c| c.map(|v| v.0)).collect(),
            n_train: cells.iter().map(|c| c.map_or(0, |v| v.1)).collect(),
            mean_ba,
            mean_n_train,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| Some((p.mean_n_train?.ln(), p.mean_ba?)))
        .unzip();
    let slope = if xs.len() >= 3 { Some(ols_slope(&xs, &ys)?) } else { None };
    Ok(LearningCurve { points, slope })
}

fn fold_curve(
    fk: &FoldKernels,
    y: &[i8],
    plan: &FoldPlan,
    o: usize,
    c_grid: &[f64],
    fractions: &[f64],
) -> Result<Vec<Option<(f64, usize)>>> {
    let split = &plan.outer[o];
    let y_tr: Vec<i8> = split.train.iter().map(|&i| y[i]).collect();
    let y_te: Vec<i8> = split.test.iter().map(|&i| y[i]).collect();
    let mut rng = SplitMix64::derive(plan.seed ^ LEARNING_STREAM, o as u64);
    let orders: Vec<Vec<usize>> = [-1i8, 1]
        .iter()
        .map(|&label| {
            let mut v: Vec<usize> = (0..y_tr.len()).filter(|&p| y_tr[p] == label).collect();
            rng.shuffle(&mut v);
            v
        })
        .collect();
    let inner: Vec<(Vec<usize>, Vec<usize>)> = plan.inner[o]
        .iter()
        .map(|s| (positions(&split.train, &s.train), positions(&split.train, &s.test)))
        .collect();
    let all_test: Vec<usize> = (0..y_te.len()).collect();

    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let Some(sub) = nested_subsample(&orders, f) else {
            out.push(None);
            continue;
        };
        let mut slot = vec![None; y_tr.len()];
        for (s, &p) in sub.iter().enumerate() {
            slot[p] = Some(s);
        }
        let restrict = |ps: &[usize]| -> Vec<usize> { ps.iter().filter_map(|&p| slot[p]).collect() };
        let inner_sub: Vec<(Vec<usize>, Vec<usize>)> = inner.iter().map(|(a, b)| (restrict(a), restrict(b))).collect();
        let y_sub: Vec<i8> = sub.iter().map(|&p| y_tr[p]).collect();
        let k_sub = kern::select(&fk.train, &sub, &sub);
        let (c, _) = select_c(&k_sub, &y_sub, &inner_sub, c_grid)?;
        let model = svm::train(&k_sub, &y_sub, c)?;
        let pred = svm::predict(&model, &kern::select(&fk.test, &all_test, &sub))?;
        let ba = compute_metrics(&y_te, &pred.labels, &pred.decision_values)?.balanced_accuracy;
        out.push(Some((ba, sub.len())));
    }
    Ok(out)
}

/// Sorted union of a per-class prefix of each order; `None` when a class
/// would keep fewer than 2 samples.
pub(crate) fn nested_subsample(orders: &[Vec<usize>], fraction: f64) -> Option<Vec<usize>> {
    // The epsilon keeps e.g. 0.3·10 from rounding up to 4.
    let takes: Vec<usize> =
        orders.iter().map(|v| ((fraction * v.len() as f64 - 1e-9).ceil() as usize).min(v.len())).collect();
    if takes.iter().any(|&t| t < 2) {
        return None;
    }
    let mut sub: Vec<usize> = orders.iter().zip(&takes).flat_map(|(v, &t)| v[..t].iter().copied()).collect();
    sub.sort_unstable();
    Some(sub)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSweep {
    pub seeds: Vec<u64>,
    /// Mean outer BA per seed.
    pub mean_ba: Vec<f64>,
    /// Sample std / mean of `mean_ba`.
    pub cov: f64,
}

/// Re-split with each seed while the kernel stays fixed.
pub fn seed_sweep(
    k_full: &DMatrix<f64>,
    y: &[i8],
    groups: Option<&[String]>,
    n_outer: usize,
    n_inner: usize,
    c_grid: &[f64],
    seeds: &[u64],
) -> Result<SeedSweep> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument("a seed sweep needs at least 2 seeds".into()));
    }
    let mut mean_ba = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let plan = super::make_fold_plan(y, groups, n_outer, n_inner, seed)?;
        let folds = cv_fixed_kernel(k_full, y, &plan, c_grid)?;
        let bas: Vec<f64> = folds.iter().map(|f| f.metrics.balanced_accuracy).collect();
        mean_ba.push(mean(&bas));
    }
    let cov = stats::cov(&mean_ba)?;
    Ok(SeedSweep { seeds: seeds.to_vec(), mean_ba, cov })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    /// Seeds where `a` is strictly better.
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    pub wilcoxon: TestReport,
}

pub fn compare_sweeps(a: &SeedSweep, b: &SeedSweep) -> Result<SeedComparison> {
    if a.seeds != b.seeds {
        return Err(Error::InvalidArgument("seed sweeps were run on different seeds".into()));
    }
    let wins_a = a.mean_ba.iter().zip(&b.mean_ba).filter(|(x, y)| x > y).count();
    let wins_b = a.mean_ba.iter().zip(&b.mean_ba).filter(|(x, y)| x < y).count();
    Ok(SeedComparison {
        wins_a,
        wins_b,
        ties: a.seeds.len() - wins_a - wins_b,
        wilcoxon: stats::wilcoxon_signed_rank(&a.mean_ba, &b.mean_ba)?,
    })
}
