//! Kernel matrices: quantum fidelity and Hilbert-Schmidt kernels, classical
//! baselines, agreement metrics, file IO and the content-addressed cache.
//!
//! Feature matrices are `DMatrix<f64>` with one sample per row. A kernel
//! matrix has the left sample set on rows and the right set on columns.

mod cache;
mod container;

pub use cache::{CacheKey, CachedKernel, KernelCache, CACHE_DIR_ENV};
pub use container::{
    export_kernel, import_kernel, read_container, read_csv, write_container, write_csv, ContainerHeader,
    KernelFormat, HEADER_LEN, MAGIC,
};

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_feature_map, decompose_native, FeatureMapSpec};
use crate::error::{Error, Result};
use crate::hash::ContentHash;
use crate::sim::{run_density, run_statevector, DensityMatrix, NoiseModel, Statevector};
use crate::stats::{self, average_ranks};

/// Minimum eigenvalue below which an imported matrix is flagged indefinite.
pub const INDEFINITE_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathway {
    Ideal,
    Noisy,
    Classical,
    Imported,
}

impl Pathway {
    pub fn code(self) -> u8 {
        match self {
            Pathway::Ideal => 0,
            Pathway::Noisy => 1,
            Pathway::Classical => 2,
            Pathway::Imported => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Pathway::Ideal,
            1 => Pathway::Noisy,
            2 => Pathway::Classical,
            3 => Pathway::Imported,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub pathway: Pathway,
    pub spec_hash: ContentHash,
    pub noise: Option<NoiseModel>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub wall_time_s: f64,
    /// Only meaningful for imported square matrices.
    #[serde(default)]
    pub indefinite: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
}

impl Provenance {
    pub fn new(pathway: Pathway, spec_hash: ContentHash, noise: Option<NoiseModel>, wall_time_s: f64) -> Self {
        Self { pathway, spec_hash, noise, timestamp: now_unix(), wall_time_s, indefinite: false, min_eigenvalue: None }
    }
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub provenance: Provenance,
}

impl KernelMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn max_asymmetry(&self) -> f64 {
        max_asymmetry(&self.values)
    }

    /// Smallest eigenvalue of the symmetric part; `None` for non-square.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.is_square().then(|| min_eigenvalue(&self.values))
    }

    /// Principal submatrix / cross block selected by row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        select(&self.values, rows, cols)
    }
}

pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn rows_of(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
}

fn check_columns(x: &DMatrix<f64>, k: usize, side: &str) -> Result<()> {
    if x.ncols() != k {
        return Err(Error::DimensionMismatch(format!("{side} features have {} columns, expected {k}", x.ncols())));
    }
    check_finite(x)
}

fn encode_ideal(spec: &FeatureMapSpec, x: &DMatrix<f64>) -> Result<Vec<Statevector>> {
    rows_of(x).par_iter().map(|r| run_statevector(&build_feature_map(spec, r)?)).collect()
}

/// Fidelity kernel K[i][j] = |⟨ψ(x_i)|ψ(z_j)⟩|². Each sample is simulated
/// once; entries are inner products of the stored states.
pub fn quantum_kernel_ideal(x: &DMatrix<f64>, z: &DMatrix<f64>, spec: &FeatureMapSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    check_columns(x, spec.k, "left")?;
    check_columns(z, spec.k, "right")?;
    let start = Instant::now();
    let left = encode_ideal(spec, x)?;
    let right = encode_ideal(spec, z)?;
    let values = fill(left.len(), right.len(), |i, j| left[i].fidelity(&right[j]));
    Ok(KernelMatrix {
        values,
        provenance: Provenance::new(Pathway::Ideal, ContentHash::of(spec)?, None, start.elapsed().as_secs_f64()),
    })
}

/// Symmetric train×train fidelity kernel, simulating each sample once.
pub fn quantum_gram_ideal(x: &DMatrix<f64>, spec: &FeatureMapSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    check_columns(x, spec.k, "train")?;
    let start = Instant::now();
    let states = encode_ideal(spec, x)?;
    let values = fill_symmetric(states.len(), |i, j| states[i].fidelity(&states[j]));
    Ok(KernelMatrix {
        values,
        provenance: Provenance::new(Pathway::Ideal, ContentHash::of(spec)?, None, start.elapsed().as_secs_f64()),
    })
}

/// Bytes of density matrices kept in memory at once by the noisy pathway.
const NOISY_MEMORY_BUDGET: usize = 1 << 30;

fn encode_noisy_one(spec: &FeatureMapSpec, row: &[f64], noise: &NoiseModel) -> Result<DensityMatrix> {
    let native = decompose_native(&build_feature_map(spec, row)?)?;
    run_density(&native, noise)
}

fn density_bytes(spec: &FeatureMapSpec) -> usize {
    let d = 1usize << spec.n_qubits();
    d * d * 16
}

/// Hilbert-Schmidt kernel K[i][j] = Tr(ρ(x_i)ρ(z_j)) on the native-gate
/// circuit with depolarising noise after every gate. Left densities are held
/// in memory-bounded blocks; right densities are streamed per block.
pub fn quantum_kernel_noisy(
    x: &DMatrix<f64>,
    z: &DMatrix<f64>,
    spec: &FeatureMapSpec,
    noise: &NoiseModel,
) -> Result<KernelMatrix> {
    spec.validate()?;
    noise.validate()?;
    check_columns(x, spec.k, "left")?;
    check_columns(z, spec.k, "right")?;
    let start = Instant::now();
    let (xl, zl) = (rows_of(x), rows_of(z));
    let block = (NOISY_MEMORY_BUDGET / density_bytes(spec)).max(1);
    let mut values = DMatrix::zeros(xl.len(), zl.len());
    for lo in (0..xl.len()).step_by(block) {
        let hi = (lo + block).min(xl.len());
        let left: Vec<DensityMatrix> =
            xl[lo..hi].par_iter().map(|r| encode_noisy_one(spec, r, noise)).collect::<Result<_>>()?;
        let columns: Vec<Vec<f64>> = zl
            .par_iter()
            .map(|r| {
                let rho = encode_noisy_one(spec, r, noise)?;
                Ok(left.iter().map(|l| l.hs_inner(&rho)).collect())
            })
            .collect::<Result<_>>()?;
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[(lo + i, j)] = *v;
            }
        }
    }
    Ok(KernelMatrix {
        values,
        provenance: Provenance::new(Pathway::Noisy, ContentHash::of(spec)?, Some(*noise), start.elapsed().as_secs_f64()),
    })
}

/// Symmetric noisy train×train kernel. Falls back to the blocked cross
/// evaluation (then exact symmetrisation of mirrored entries) when the
/// densities do not fit in memory.
pub fn quantum_gram_noisy(x: &DMatrix<f64>, spec: &FeatureMapSpec, noise: &NoiseModel) -> Result<KernelMatrix> {
    spec.validate()?;
    noise.validate()?;
    check_columns(x, spec.k, "train")?;
    if x.nrows() * density_bytes(spec) > NOISY_MEMORY_BUDGET {
        let mut k = quantum_kernel_noisy(x, x, spec, noise)?;
        let n = k.rows();
        for i in 0..n {
            for j in i + 1..n {
                k.values[(j, i)] = k.values[(i, j)];
            }
        }
        return Ok(k);
    }
    let start = Instant::now();
    let rhos: Vec<DensityMatrix> =
        rows_of(x).par_iter().map(|r| encode_noisy_one(spec, r, noise)).collect::<Result<_>>()?;
    let values = fill_symmetric(rhos.len(), |i, j| rhos[i].hs_inner(&rhos[j]));
    Ok(KernelMatrix {
        values,
        provenance: Provenance::new(Pathway::Noisy, ContentHash::of(spec)?, Some(*noise), start.elapsed().as_secs_f64()),
    })
}

fn fill(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
    let data: Vec<Vec<f64>> = (0..rows).into_par_iter().map(|i| (0..cols).map(|j| f(i, j)).collect()).collect();
    DMatrix::from_fn(rows, cols, |i, j| data[i][j])
}

/// Upper triangle (with diagonal) evaluated, lower triangle mirrored.
fn fill_symmetric(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
    let data: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (i..n).map(|j| f(i, j)).collect()).collect();
    DMatrix::from_fn(n, n, |i, j| if j >= i { data[i][j - i] } else { data[j][i - j] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalKind {
    Linear,
    RbfScale,
    Poly3,
}

impl ClassicalKind {
    pub const ALL: [ClassicalKind; 3] = [ClassicalKind::Linear, ClassicalKind::RbfScale, ClassicalKind::Poly3];

    pub fn name(self) -> &'static str {
        match self {
            ClassicalKind::Linear => "linear",
            ClassicalKind::RbfScale => "rbf_scale",
            ClassicalKind::Poly3 => "poly3",
        }
    }
}

impl std::fmt::Display for ClassicalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ClassicalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ClassicalKind::Linear),
            "rbf" | "rbf_scale" => Ok(ClassicalKind::RbfScale),
            "poly3" | "poly" => Ok(ClassicalKind::Poly3),
            other => Err(Error::InvalidArgument(format!("unknown classical kernel '{other}'"))),
        }
    }
}

/// A classical kernel with γ fitted on the training matrix, so that the
/// test×train block reuses the training-side γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalKernel {
    pub kind: ClassicalKind,
    /// 1/(d·Var(X)) with the population variance over all entries; 1 for linear.
    pub gamma: f64,
}

impl ClassicalKernel {
    /// `label` names the data in the degenerate-γ error.
    pub fn fit(kind: ClassicalKind, x_train: &DMatrix<f64>, label: &str) -> Result<Self> {
        check_finite(x_train)?;
        if kind == ClassicalKind::Linear {
            return Ok(Self { kind, gamma: 1.0 });
        }
        let n = x_train.len();
        if n == 0 {
            return Err(Error::DegenerateGamma(format!("{label} (empty matrix)")));
        }
        let first = x_train[(0, 0)];
        if x_train.iter().all(|&v| v == first) {
            return Err(Error::DegenerateGamma(label.to_string()));
        }
        let mean = x_train.sum() / n as f64;
        let var = x_train.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let gamma = 1.0 / (x_train.ncols() as f64 * var);
        if var == 0.0 || !gamma.is_finite() {
            return Err(Error::DegenerateGamma(label.to_string()));
        }
        Ok(Self { kind, gamma })
    }

    pub fn entry(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            ClassicalKind::Linear => dot(a, b),
            ClassicalKind::RbfScale => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-self.gamma * d2).exp()
            }
            ClassicalKind::Poly3 => (self.gamma * dot(a, b)).powi(3),
        }
    }

    pub fn matrix(&self, x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<KernelMatrix> {
        if x.ncols() != z.ncols() {
            return Err(Error::DimensionMismatch(format!("{} vs {} feature columns", x.ncols(), z.ncols())));
        }
        check_finite(x)?;
        check_finite(z)?;
        let start = Instant::now();
        let (xl, zl) = (rows_of(x), rows_of(z));
        let values = fill(xl.len(), zl.len(), |i, j| self.entry(&xl[i], &zl[j]));
        Ok(KernelMatrix {
            values,
            provenance: Provenance::new(Pathway::Classical, ContentHash::of(self)?, None, start.elapsed().as_secs_f64()),
        })
    }

    /// Symmetric train×train block.
    pub fn gram(&self, x: &DMatrix<f64>) -> Result<KernelMatrix> {
        check_finite(x)?;
        let start = Instant::now();
        let xl = rows_of(x);
        let values = fill_symmetric(xl.len(), |i, j| self.entry(&xl[i], &xl[j]));
        Ok(KernelMatrix {
            values,
            provenance: Provenance::new(Pathway::Classical, ContentHash::of(self)?, None, start.elapsed().as_secs_f64()),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Classical kernel with γ taken from the left matrix.
pub fn classical_kernel(x: &DMatrix<f64>, z: &DMatrix<f64>, kind: ClassicalKind) -> Result<KernelMatrix> {
    ClassicalKernel::fit(kind, x, "left feature matrix")?.matrix(x, z)
}

/// Agreement between two same-shape square kernels over the strict upper
/// triangle. Correlations are `None` when either side is constant there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelAgreement {
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    /// ‖K1 − K2‖_F / ‖K1‖_F over the same entries.
    pub rel_frobenius: f64,
    pub n_entries: usize,
}

pub fn compare_kernels(k1: &DMatrix<f64>, k2: &DMatrix<f64>) -> Result<KernelAgreement> {
    if k1.shape() != k2.shape() || k1.nrows() != k1.ncols() {
        return Err(Error::DimensionMismatch(format!("cannot compare {:?} with {:?}", k1.shape(), k2.shape())));
    }
    let n = k1.nrows();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            a.push(k1[(i, j)]);
            b.push(k2[(i, j)]);
        }
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 off-diagonal entries".into()));
    }
    let m = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let sq: f64 = diffs.iter().map(|d| d * d).sum();
    let norm1: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let spearman_rho = {
        let (ra, _) = average_ranks(&a);
        let (rb, _) = average_ranks(&b);
        stats::correlation_raw(&ra, &rb)
    };
    Ok(KernelAgreement {
        pearson_r: stats::correlation_raw(&a, &b),
        spearman_rho,
        mae: diffs.iter().map(|d| d.abs()).sum::<f64>() / m,
        rmse: (sq / m).sqrt(),
        rel_frobenius: if norm1 > 0.0 { sq.sqrt() / norm1 } else { f64::INFINITY },
        n_entries: a.len(),
    })
}

#[cfg(test)]
mod tests;
