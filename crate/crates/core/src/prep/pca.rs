use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// k × d, orthonormal rows, largest-magnitude loading of each row positive.
    pub components: DMatrix<f64>,
    /// Sample variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaFit {
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let centred = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - self.mean[j]);
        centred * self.components.transpose()
    }
}

/// Top-k eigenvectors of the training covariance (n − 1 denominator).
pub fn pca_fit(x: &DMatrix<f64>, k: usize) -> Result<PcaFit> {
    let (n, d) = x.shape();
    if n < 2 || k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("pca with k = {k} on {n}×{d} data")));
    }
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
    let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    // Descending eigenvalue, ties by lower index for determinism.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = DMatrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    for (r, &c) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(c);
        let lead = (0..d).fold(0, |best, j| if v[j].abs() > v[best].abs() { j } else { best });
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(r, j)] = sign * v[j];
        }
        explained_variance.push(eig.eigenvalues[c].max(0.0));
    }
    Ok(PcaFit { mean, components, explained_variance })
}
