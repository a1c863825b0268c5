use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Sorted dataset indices.
    pub train: Vec<usize>,
    /// Sorted dataset indices.
    pub test: Vec<usize>,
}

/// Outer splits partition the dataset; `inner[o]` partitions `outer[o].train`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub outer: Vec<Split>,
    pub inner: Vec<Vec<Split>>,
    pub seed: u64,
    pub n_outer: usize,
    pub n_inner: usize,
}

/// Deterministic stratified (and optionally group-aware) nested plan.
/// The outer level draws from `SplitMix64::new(seed)`, inner level `o` from
/// `SplitMix64::derive(seed, o)`.
pub fn make_fold_plan(y: &[i8], groups: Option<&[String]>, n_outer: usize, n_inner: usize, seed: u64) -> Result<FoldPlan> {
    if n_outer < 2 || n_inner < 2 {
        return Err(Error::InvalidArgument("need at least 2 outer and 2 inner folds".into()));
    }
    if let Some(g) = groups {
        if g.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} group ids for {} labels", g.len(), y.len())));
        }
    }
    for label in [-1i8, 1] {
        let count = y.iter().filter(|&&v| v == label).count();
        if count < n_outer && groups.is_none() {
            return Err(Error::InvalidArgument(format!("class {label:+} has {count} members, fewer than {n_outer} outer folds")));
        }
    }
    let all: Vec<usize> = (0..y.len()).collect();
    let mut rng = SplitMix64::new(seed);
    let outer_folds = assign(&all, y, groups, n_outer, &mut rng, true)?;
    let outer = splits(&all, outer_folds);
    let mut inner = Vec::with_capacity(n_outer);
    for (o, split) in outer.iter().enumerate() {
        let mut r = SplitMix64::derive(seed, o as u64);
        let folds = assign(&split.train, y, groups, n_inner, &mut r, false)?;
        inner.push(splits(&split.train, folds));
    }
    Ok(FoldPlan { outer, inner, seed, n_outer, n_inner })
}

fn splits(indices: &[usize], folds: Vec<Vec<usize>>) -> Vec<Split> {
    folds
        .into_iter()
        .filter(|f| !f.is_empty())
        .map(|mut test| {
            test.sort_unstable();
            let train = indices.iter().copied().filter(|i| test.binary_search(i).is_err()).collect();
            Split { train, test }
        })
        .collect()
}

fn assign(indices: &[usize], y: &[i8], groups: Option<&[String]>, k: usize, rng: &mut SplitMix64, strict: bool) -> Result<Vec<Vec<usize>>> {
    match groups {
        Some(g) => {
            let mut seen = std::collections::HashSet::new();
            if indices.iter().all(|&i| seen.insert(g[i].as_str())) {
                Ok(stratified(indices, y, k, rng))
            } else {
                grouped(indices, y, g, k, rng, strict)
            }
        }
        None => Ok(stratified(indices, y, k, rng)),
    }
}

/// Shuffle each class, then deal round-robin with one counter running
/// across both classes.
fn stratified(indices: &[usize], y: &[i8], k: usize, rng: &mut SplitMix64) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    let mut counter = 0;
    for label in [-1i8, 1] {
        let mut members: Vec<usize> = indices.iter().copied().filter(|&i| y[i] == label).collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[counter % k].push(i);
            counter += 1;
        }
    }
    folds
}

/// Greedy group placement: largest groups first (shuffled order among equal
/// sizes), each into the fold whose class counts move least away from the
/// proportional targets; ties go to the smaller fold, then the lower index.
fn grouped(indices: &[usize], y: &[i8], groups: &[String], k: usize, rng: &mut SplitMix64, strict: bool) -> Result<Vec<Vec<usize>>> {
    let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in indices {
        by_group.entry(groups[i].as_str()).or_default().push(i);
    }
    if by_group.len() < k {
        if strict {
            return Err(Error::InvalidArgument(format!("{} groups cannot fill {k} folds", by_group.len())));
        }
        log::warn!("{} groups for {k} inner folds; some inner folds stay empty", by_group.len());
    }
    let mut members: Vec<Vec<usize>> = by_group.into_values().collect();
    rng.shuffle(&mut members);
    members.sort_by_key(|m| std::cmp::Reverse(m.len()));
    let n = indices.len() as f64;
    if members[0].len() as f64 > n / k as f64 {
        log::warn!("largest group ({} samples) exceeds 1/{k} of the data; stratification is best effort", members[0].len());
    }
    let total_pos = indices.iter().filter(|&&i| y[i] == 1).count() as f64;
    let targets = [(n - total_pos) / k as f64, total_pos / k as f64];
    let mut counts = vec![[0.0f64; 2]; k];
    let mut folds = vec![Vec::new(); k];
    for m in members {
        let pos = m.iter().filter(|&&i| y[i] == 1).count() as f64;
        let add = [m.len() as f64 - pos, pos];
        let cost = |f: usize| -> f64 {
            (0..2).map(|c| (counts[f][c] + add[c] - targets[c]).powi(2) - (counts[f][c] - targets[c]).powi(2)).sum()
        };
        let best = (0..k)
            .min_by(|&a, &b| {
                cost(a).total_cmp(&cost(b)).then(folds[a].len().cmp(&folds[b].len())).then(a.cmp(&b))
            })
            .expect("k >= 2");
        counts[best][0] += add[0];
        counts[best][1] += add[1];
        folds[best].extend(m);
    }
    Ok(folds)
}
