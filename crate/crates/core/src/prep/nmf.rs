use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const NMF_MAX_ITER: usize = 200;
/// Relative change of the Frobenius loss below which updates stop.
pub const NMF_TOL: f64 = 1e-6;
const DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfFit {
    /// H, k × d, elementwise ≥ 0.
    pub components: DMatrix<f64>,
    /// Training coefficients W, n × k.
    pub train_coefficients: DMatrix<f64>,
    /// ½‖X − WH‖²_F after each iteration.
    pub loss_trace: Vec<f64>,
}

impl NmfFit {
    /// Coefficients for new rows with H held fixed: W starts at 1 and takes
    /// `NMF_MAX_ITER` multiplicative updates. Each row is solved on its own,
    /// and negative inputs (test rows below the training minimum) are
    /// clamped to 0 first.
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let x = x.map(|v| v.max(0.0));
        let h = &self.components;
        let hht = h * h.transpose();
        let xht = &x * h.transpose();
        let mut w = DMatrix::from_element(x.nrows(), h.nrows(), 1.0);
        for _ in 0..NMF_MAX_ITER {
            let den = &w * &hht;
            w.zip_zip_apply(&xht, &den, |wv, num, d| *wv *= num / d.max(DENOM_FLOOR));
        }
        w
    }
}

fn loss(x: &DMatrix<f64>, w: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    0.5 * (x - w * h).norm_squared()
}

/// Frobenius-loss multiplicative updates (Lee & Seung) from a seeded
/// uniform(0.1, 1.1) start.
pub fn nmf_fit(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<NmfFit> {
    let (n, d) = x.shape();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("nmf with k = {k} on {d} features")));
    }
    if x.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("nmf input has negative entries".into()));
    }
    let mut g = SplitMix64::new(seed);
    let mut w = DMatrix::from_fn(n, k, |_, _| g.uniform(0.1, 1.1));
    let mut h = DMatrix::from_fn(k, d, |_, _| g.uniform(0.1, 1.1));
    let mut trace = Vec::new();
    let mut prev = loss(x, &w, &h);
    for _ in 0..NMF_MAX_ITER {
        let num_h = w.transpose() * x;
        let den_h = w.transpose() * &w * &h;
        h.zip_zip_apply(&num_h, &den_h, |hv, num, den| *hv *= num / den.max(DENOM_FLOOR));
        let num_w = x * h.transpose();
        let den_w = &w * (&h * h.transpose());
        w.zip_zip_apply(&num_w, &den_w, |wv, num, den| *wv *= num / den.max(DENOM_FLOOR));
        let cur = loss(x, &w, &h);
        trace.push(cur);
        let rel = if prev > 0.0 { (prev - cur).abs() / prev } else { 0.0 };
        prev = cur;
        if rel < NMF_TOL {
            break;
        }
    }
    Ok(NmfFit { components: h, train_coefficients: w, loss_trace: trace })
}
