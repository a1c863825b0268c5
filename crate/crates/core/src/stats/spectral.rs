use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Eigenvalues at or below this fraction of λ_max are excluded from the
/// entropy and variance ratios.
const POSITIVE_CUTOFF: f64 = 1e-12;
/// Eigenvalues below −NEGATIVE_CUTOFF·(spectral radius) count as negative.
const NEGATIVE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    /// exp(H(p)) / N with p the normalised positive spectrum.
    pub effective_rank_ratio: f64,
    /// Natural-log entropy H(p).
    pub entropy: f64,
    pub top1_variance: f64,
    pub top5_variance: f64,
    /// Mean diagonal over |mean off-diagonal|.
    pub diag_dominance: f64,
    pub negative_eig_fraction: f64,
}

fn check_symmetric(k: &DMatrix<f64>) -> Result<()> {
    if k.nrows() != k.ncols() || k.nrows() == 0 {
        return Err(Error::InvalidArgument(format!("spectral input must be square and non-empty, got {}x{}", k.nrows(), k.ncols())));
    }
    let scale = k.amax().max(1.0);
    for i in 0..k.nrows() {
        for j in i + 1..k.ncols() {
            if (k[(i, j)] - k[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::InvalidArgument(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix, largest first.
pub fn eigenvalues_desc(k: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(k)?;
    let sym = (k + k.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

pub fn spectral_profile(k: &DMatrix<f64>) -> Result<SpectralProfile> {
    let ev = eigenvalues_desc(k)?;
    let n = ev.len();
    let radius = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if radius == 0.0 || ev[0] <= 0.0 {
        return Err(Error::Degenerate("kernel matrix has no positive eigenvalue".into()));
    }
    let positive: Vec<f64> = ev.iter().copied().filter(|&l| l > POSITIVE_CUTOFF * ev[0]).collect();
    let mass: f64 = positive.iter().sum();
    let entropy: f64 = positive.iter().map(|l| l / mass).map(|p| -p * p.ln()).sum();
    let top = |m: usize| positive.iter().take(m).sum::<f64>() / mass;
    let negative = ev.iter().filter(|&&l| l < -NEGATIVE_CUTOFF * radius).count();

    let diag_mean = k.diagonal().mean();
    let off_mean = if n > 1 { (k.sum() - k.trace()) / (n * (n - 1)) as f64 } else { 0.0 };
    let guard = (1e-12 * diag_mean.abs()).max(f64::MIN_POSITIVE);
    Ok(SpectralProfile {
        effective_rank_ratio: (entropy.exp() / n as f64).min(1.0),
        entropy,
        top1_variance: top(1),
        top5_variance: top(5),
        diag_dominance: diag_mean / off_mean.abs().max(guard),
        negative_eig_fraction: negative as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn identity_is_flat() {
        for n in [1, 2, 7, 50] {
            let p = spectral_profile(&DMatrix::identity(n, n)).unwrap();
            assert!((p.effective_rank_ratio - 1.0).abs() < 1e-9);
            assert!((p.top1_variance - 1.0 / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn all_ones_collapses() {
        let n = 20;
        let p = spectral_profile(&DMatrix::from_element(n, n, 1.0 / n as f64)).unwrap();
        assert!((p.effective_rank_ratio - 1.0 / n as f64).abs() < 1e-9);
        assert!((p.top1_variance - 1.0).abs() < 1e-9);
        assert_eq!(p.negative_eig_fraction, 0.0);
    }

    #[test]
    fn dominance_of_half_coupled_matrix() {
        let n = 6;
        let k = DMatrix::identity(n, n) + (DMatrix::from_element(n, n, 1.0) - DMatrix::identity(n, n)) * 0.5;
        assert!((spectral_profile(&k).unwrap().diag_dominance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_eigenvalues_counted() {
        // Eigenvalues 3 and -1.
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = spectral_profile(&k).unwrap();
        assert_eq!(p.negative_eig_fraction, 0.5);
        assert!((p.top1_variance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(spectral_profile(&k).is_err());
    }

    #[test]
    fn scale_invariance() {
        let mut g = SplitMix64::new(5);
        let x = DMatrix::from_fn(12, 4, |_, _| g.normal());
        let mut k = &x * x.transpose();
        k[(0, 0)] -= 3.0; // push one eigenvalue negative
        let base = spectral_profile(&k).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let p = spectral_profile(&(&k * c)).unwrap();
            assert!((p.effective_rank_ratio - base.effective_rank_ratio).abs() < 1e-9);
            assert!((p.top1_variance - base.top1_variance).abs() < 1e-9);
            assert!((p.top5_variance - base.top5_variance).abs() < 1e-9);
            assert!((p.diag_dominance - base.diag_dominance).abs() < 1e-9 * base.diag_dominance.abs());
            assert_eq!(p.negative_eig_fraction, base.negative_eig_fraction);
        }
    }
}
