//! Greedy CART with Gini impurity, grown to purity (min 2 samples to split),
//! used only for its normalised impurity-decrease importances.

use nalgebra::DMatrix;

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Decreases closer than this are ties (incremental and from-scratch Gini
/// evaluation differ in the last bits).
const TIE_EPS: f64 = 1e-12;

struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Best split of `idx`; ties go to the lowest feature, then the lowest threshold.
fn best_split(x: &DMatrix<f64>, y: &[i8], idx: &[usize]) -> Option<Split> {
    let n = idx.len();
    let pos_total = idx.iter().filter(|&&i| y[i] == 1).count();
    let parent = gini(pos_total, n);
    let mut best: Option<Split> = None;
    let mut sorted = idx.to_vec();
    for f in 0..x.ncols() {
        sorted.sort_by(|&a, &b| x[(a, f)].total_cmp(&x[(b, f)]).then(a.cmp(&b)));
        let mut pos_left = 0;
        for s in 0..n - 1 {
            if y[sorted[s]] == 1 {
                pos_left += 1;
            }
            let (va, vb) = (x[(sorted[s], f)], x[(sorted[s + 1], f)]);
            if va == vb {
                continue;
            }
            let nl = s + 1;
            let nr = n - nl;
            let child = (nl as f64 * gini(pos_left, nl) + nr as f64 * gini(pos_total - pos_left, nr)) / n as f64;
            let decrease = parent - child;
            if best.as_ref().is_none_or(|b| decrease > b.decrease + TIE_EPS) {
                let mut threshold = 0.5 * (va + vb);
                if threshold >= vb {
                    threshold = va;
                }
                best = Some(Split { feature: f, threshold, decrease });
            }
        }
    }
    best
}

/// Impurity-decrease importances, normalised to sum 1 (all zero if the root
/// is already pure).
pub fn gini_importances(x: &DMatrix<f64>, y: &[i8]) -> Vec<f64> {
    let total = x.nrows();
    let mut imp = vec![0.0; x.ncols()];
    let mut stack = vec![(0..total).collect::<Vec<usize>>()];
    while let Some(idx) = stack.pop() {
        let pos = idx.iter().filter(|&&i| y[i] == 1).count();
        if idx.len() < 2 || pos == 0 || pos == idx.len() {
            continue;
        }
        let Some(split) = best_split(x, y, &idx) else { continue };
        imp[split.feature] += idx.len() as f64 / total as f64 * split.decrease;
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| x[(i, split.feature)] <= split.threshold);
        stack.push(right);
        stack.push(left);
    }
    let sum: f64 = imp.iter().sum();
    if sum > 0.0 {
        imp.iter_mut().for_each(|v| *v /= sum);
    }
    imp
}

/// Indices of the k largest importances (lowest index wins ties), returned
/// in ascending index order.
pub fn select_top_k(importances: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();
    chosen
}
