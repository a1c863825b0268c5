//! Soft-margin SVM on a precomputed kernel, solved in the dual by SMO, and
//! the binary classification metrics.
//!
//! Dual problem (minimisation form): f(α) = ½ αᵀQα − eᵀα with
//! Q = (y yᵀ) ∘ K, subject to 0 ≤ α ≤ C and yᵀα = 0.

mod metrics;

pub use metrics::{compute_metrics, MetricBundle};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Required KKT accuracy of a trained model.
pub const KKT_TOLERANCE: f64 = 1e-3;
/// Maximal-violating-pair gap at which SMO stops. Tighter than
/// `KKT_TOLERANCE`: stopping at 1e-3 leaves dual-objective errors of order
/// 1e-5 on small problems.
pub const SMO_TOLERANCE: f64 = 1e-5;
/// Iteration cap in passes; one pass is n pair updates.
pub const SMO_MAX_PASSES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub bias: f64,
    pub c: f64,
    pub support_indices: Vec<usize>,
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance was met.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<i8>,
    pub decision_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Lower,
    Upper,
    Free,
}

fn check_labels(y: &[i8]) -> Result<()> {
    if let Some(bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not ±1")));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Train on a square kernel. Indefinite kernels are accepted: a working pair
/// with non-positive curvature moves straight to the box edge.
pub fn train(k: &DMatrix<f64>, y: &[i8], c: f64) -> Result<SvmModel> {
    train_with_tolerance(k, y, c, SMO_TOLERANCE)
}

pub fn train_with_tolerance(k: &DMatrix<f64>, y: &[i8], c: f64, tol: f64) -> Result<SvmModel> {
    let n = y.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch(format!("kernel {}x{} for {n} labels", k.nrows(), k.ncols())));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive and finite, got {c}")));
    }
    check_labels(y)?;
    crate::kern::check_finite(k)?;

    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut alpha = vec![0.0; n];
    let mut state = vec![Bound::Lower; n];
    // G = Qα − e.
    let mut grad = vec![-1.0; n];
    let max_iter = SMO_MAX_PASSES.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        // i maximises −y G over I_up, j minimises it over I_low; first index wins ties.
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -yf[t] * grad[t];
            let up = if y[t] == 1 { state[t] != Bound::Upper } else { state[t] != Bound::Lower };
            let low = if y[t] == 1 { state[t] != Bound::Lower } else { state[t] != Bound::Upper };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Move α_i by +y_i·t and α_j by −y_j·t, t ≥ 0.
        let room_i = if y[i] == 1 { c - alpha[i] } else { alpha[i] };
        let room_j = if y[j] == 1 { alpha[j] } else { c - alpha[j] };
        let t_max = room_i.min(room_j);
        let eta = k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)];
        let t = if eta > 0.0 { ((gmax - gmin) / eta).min(t_max) } else { t_max };

        alpha[i] += yf[i] * t;
        alpha[j] -= yf[j] * t;
        if t == room_i {
            alpha[i] = if y[i] == 1 { c } else { 0.0 };
        }
        if t == room_j {
            alpha[j] = if y[j] == 1 { 0.0 } else { c };
        }
        for a in [i, j] {
            alpha[a] = alpha[a].clamp(0.0, c);
            state[a] = if alpha[a] <= 0.0 {
                Bound::Lower
            } else if alpha[a] >= c {
                Bound::Upper
            } else {
                Bound::Free
            };
        }
        for (s, g) in grad.iter_mut().enumerate() {
            *g += t * yf[s] * (k[(s, i)] - k[(s, j)]);
        }
    }
    if !converged {
        log::warn!("SMO hit the iteration cap ({max_iter}) before reaching tolerance {tol}");
    }

    let bias = -rho(&yf, &grad, &state);
    let support_indices = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel { alphas: alpha, labels: y.to_vec(), bias, c, support_indices, iterations, converged })
}

/// ρ = mean of y_i G_i over free vectors, else the midpoint of the interval
/// allowed by the bounded ones.
fn rho(yf: &[f64], grad: &[f64], state: &[Bound]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..yf.len() {
        let yg = yf[t] * grad[t];
        match (state[t], yf[t] > 0.0) {
            (Bound::Upper, false) | (Bound::Lower, true) => ub = ub.min(yg),
            (Bound::Upper, true) | (Bound::Lower, false) => lb = lb.max(yg),
            (Bound::Free, _) => {
                sum += yg;
                free += 1;
            }
        }
    }
    if free > 0 {
        sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    }
}

/// Decision value f(t) = Σ α_i y_i K[t][i] + b; exact zeros map to +1.
pub fn predict(model: &SvmModel, k_cross: &DMatrix<f64>) -> Result<Prediction> {
    if k_cross.ncols() != model.alphas.len() {
        return Err(Error::DimensionMismatch(format!(
            "cross kernel has {} columns, model has {} training samples",
            k_cross.ncols(),
            model.alphas.len()
        )));
    }
    let decision_values: Vec<f64> = (0..k_cross.nrows())
        .map(|t| {
            model.support_indices.iter().map(|&i| model.alphas[i] * f64::from(model.labels[i]) * k_cross[(t, i)]).sum::<f64>()
                + model.bias
        })
        .collect();
    let labels = decision_values.iter().map(|&d| if d >= 0.0 { 1 } else { -1 }).collect();
    Ok(Prediction { labels, decision_values })
}

/// f(α) = ½ αᵀQα − eᵀα (the quantity SMO minimises).
pub fn dual_objective(k: &DMatrix<f64>, y: &[i8], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * f64::from(y[i] * y[j]) * k[(i, j)];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}
