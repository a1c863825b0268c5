use super::average_ranks;
use super::special::t_two_sided;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest n for which the Spearman p-value is computed by full permutation.
pub const SPEARMAN_EXACT_MAX: usize = 9;

/// Pearson correlation without the length precondition; `None` when either
/// side has zero variance.
pub(crate) fn pearson_raw(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("arrays of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 3 {
        return Err(Error::InvalidArgument("correlation needs at least 3 pairs".into()));
    }
    Ok(())
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    pearson_raw(a, b).ok_or_else(|| Error::Degenerate("zero variance in correlation input".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    /// Exact permutation p for n ≤ 9, otherwise the t-approximation.
    pub p_value: f64,
    pub p_exact: Option<f64>,
    /// t = ρ·sqrt((n − 2)/(1 − ρ²)) with n − 2 df, reported at every n.
    pub p_t_approx: f64,
    pub n: usize,
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<SpearmanResult> {
    check_pair(a, b)?;
    let (ra, _) = average_ranks(a);
    let (rb, _) = average_ranks(b);
    let rho = pearson_raw(&ra, &rb).ok_or_else(|| Error::Degenerate("zero variance in spearman input".into()))?;
    let n = a.len();
    let p_t_approx = if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        t_two_sided(rho * (df / (1.0 - rho * rho)).sqrt(), df)
    };
    let p_exact = (n <= SPEARMAN_EXACT_MAX).then(|| permutation_p(&ra, &rb));
    Ok(SpearmanResult { rho, p_value: p_exact.unwrap_or(p_t_approx), p_exact, p_t_approx, n })
}

/// Two-sided permutation p over all n! reorderings of `rb`. The correlation
/// is affine in Σ ra·rb under permutation, so only the dot product moves.
fn permutation_p(ra: &[f64], rb: &[f64]) -> f64 {
    let n = ra.len();
    let centre = ra.iter().sum::<f64>() * rb.iter().sum::<f64>() / n as f64;
    let observed = (dot(ra, rb) - centre).abs();
    let tol = 1e-9 * (1.0 + observed);
    let mut perm = rb.to_vec();
    let mut c = vec![0usize; n];
    let (mut hits, mut total) = (0u64, 0u64);
    let mut visit = |p: &[f64]| {
        total += 1;
        if (dot(ra, p) - centre).abs() >= observed - tol {
            hits += 1;
        }
    };
    // Heap's algorithm.
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
