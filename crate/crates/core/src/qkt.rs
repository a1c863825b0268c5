//! Quantum kernel training: per-feature scalings θ chosen to maximise the
//! centred kernel-target alignment of the ideal fidelity kernel K(θ ⊙ X).
//!
//! The optimiser is a projected limited-memory BFGS on the box
//! [THETA_MIN, THETA_MAX]^k with Armijo backtracking along the projected
//! path and central finite-difference gradients.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{FeatureMapSpec, THETA_MAX, THETA_MIN};
use crate::error::{Error, Result};
use crate::kern::quantum_gram_ideal;

pub const DEFAULT_MAX_ITER: usize = 170;
pub const FD_STEP: f64 = 1e-6;
/// Convergence: ‖P(θ − ∇f) − θ‖∞ below this.
pub const PG_TOL: f64 = 1e-5;
const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QktResult {
    pub theta_star: Vec<f64>,
    pub kta_initial: f64,
    pub kta_final: f64,
    /// Accepted steps.
    pub iterations: usize,
    pub converged: bool,
    /// KTA at θ₀ followed by every accepted iterate; non-decreasing.
    pub kta_trace: Vec<f64>,
}

fn centre(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let row: Vec<f64> = (0..n).map(|i| m.row(i).sum() / n as f64).collect();
    let col: Vec<f64> = (0..n).map(|j| m.column(j).sum() / n as f64).collect();
    let all = m.sum() / (n * n) as f64;
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row[i] - col[j] + all)
}

/// ⟨HKH, HYH⟩_F / (‖HKH‖_F ‖HYH‖_F) with Y = y yᵀ and H = I − 11ᵀ/N.
pub fn centered_kta(k: &DMatrix<f64>, y: &[i8]) -> Result<f64> {
    let n = y.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch(format!("kernel {}x{} for {n} labels", k.nrows(), k.ncols())));
    }
    let yy = DMatrix::from_fn(n, n, |i, j| f64::from(y[i] * y[j]));
    let kc = centre(k);
    let yc = centre(&yy);
    let (nk, ny) = (kc.norm(), yc.norm());
    // Relative test: centring a constant matrix leaves rounding residue only.
    if nk <= 1e-12 * k.norm() || ny <= 1e-12 * yy.norm() {
        return Err(Error::Degenerate("centred kernel or label matrix has zero norm".into()));
    }
    Ok((kc.dot(&yc) / (nk * ny)).clamp(-1.0, 1.0))
}

fn scaled(x: &DMatrix<f64>, theta: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| theta[j] * x[(i, j)])
}

/// KTA of the ideal kernel on θ ⊙ X. θ is applied to the data directly, so
/// finite-difference probes may step slightly outside the box.
pub fn kta_at(x: &DMatrix<f64>, y: &[i8], spec: &FeatureMapSpec, theta: &[f64]) -> Result<f64> {
    let base = FeatureMapSpec { theta: None, ..spec.clone() };
    centered_kta(&quantum_gram_ideal(&scaled(x, theta), &base)?.values, y)
}

/// Central-difference gradient of KTA with step `h`, coordinates in parallel.
pub fn kta_gradient(x: &DMatrix<f64>, y: &[i8], spec: &FeatureMapSpec, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    (0..theta.len())
        .into_par_iter()
        .map(|j| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            Ok((kta_at(x, y, spec, &plus)? - kta_at(x, y, spec, &minus)?) / (2.0 * h))
        })
        .collect()
}

fn project(v: &mut [f64]) {
    v.iter_mut().for_each(|t| *t = t.clamp(THETA_MIN, THETA_MAX));
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: returns −H·g for the stored pairs.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, yv) in memory.iter().rev() {
        let rho = 1.0 / dot(yv, s);
        let a = rho * dot(s, &q);
        q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push((a, rho));
    }
    if let Some((s, yv)) = memory.back() {
        let gamma = dot(s, yv) / dot(yv, yv);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, yv), (a, rho)) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(yv, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter().map(|v| -v).collect()
}

/// Maximise KTA over θ ∈ [0.01, 5]^k starting from θ = 1. Minimises
/// f = −KTA internally.
pub fn optimize_theta(x: &DMatrix<f64>, y: &[i8], spec: &FeatureMapSpec, max_iter: usize) -> Result<QktResult> {
    if x.ncols() != spec.k {
        return Err(Error::DimensionMismatch(format!("{} feature columns for k = {}", x.ncols(), spec.k)));
    }
    let k = spec.k;
    let mut theta = vec![1.0; k];
    project(&mut theta);
    let objective = |t: &[f64]| -> Result<f64> { Ok(-kta_at(x, y, spec, t)?) };
    let gradient = |t: &[f64]| -> Result<Vec<f64>> {
        Ok(kta_gradient(x, y, spec, t, FD_STEP)?.into_iter().map(|v| -v).collect())
    };

    let mut f = objective(&theta)?;
    let kta_initial = -f;
    let mut trace = vec![kta_initial];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut g = if max_iter > 0 { gradient(&theta)? } else { Vec::new() };

    for _ in 0..max_iter {
        let mut pg: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - gi).collect();
        project(&mut pg);
        if theta.iter().zip(&pg).map(|(t, p)| (p - t).abs()).fold(0.0, f64::max) < PG_TOL {
            converged = true;
            break;
        }
        // Variables held at a bound by the gradient do not move.
        let active: Vec<bool> = (0..k)
            .map(|i| (theta[i] <= THETA_MIN && g[i] > 0.0) || (theta[i] >= THETA_MAX && g[i] < 0.0))
            .collect();
        let mut accepted = None;
        for attempt in 0..2 {
            let mut d = if attempt == 0 && !memory.is_empty() { lbfgs_direction(&g, &memory) } else { g.iter().map(|v| -v).collect() };
            for i in 0..k {
                if active[i] {
                    d[i] = 0.0;
                }
            }
            if dot(&d, &g) >= 0.0 {
                continue;
            }
            let mut step = 1.0;
            for _ in 0..MAX_BACKTRACK {
                let mut cand: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
                project(&mut cand);
                let moved: Vec<f64> = cand.iter().zip(&theta).map(|(c, t)| c - t).collect();
                if moved.iter().all(|&m| m == 0.0) {
                    break;
                }
                let fc = objective(&cand)?;
                if fc <= f + ARMIJO_C1 * dot(&g, &moved) {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            memory.clear();
        }
        let Some((cand, fc)) = accepted else { break };
        let gc = gradient(&cand)?;
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        // Cautious update: keep the pair only under positive curvature.
        if dot(&s, &yv) > 1e-10 * dot(&yv, &yv).max(f64::MIN_POSITIVE) {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, yv));
        }
        theta = cand;
        f = fc;
        g = gc;
        iterations += 1;
        trace.push(-f);
    }
    Ok(QktResult { theta_star: theta, kta_initial, kta_final: -f, iterations, converged, kta_trace: trace })
}
