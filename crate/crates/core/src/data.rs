//! In-memory datasets and the built-in synthetic generators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::ContentHash;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Samples × features, raw values (imputation happens at fold-fit time).
    pub x: DMatrix<f64>,
    pub y: Vec<i8>,
    pub groups: Option<Vec<String>>,
    /// Columns in which 0 means missing.
    pub impute_zero: Vec<usize>,
    /// Source path, or the generator description for synthetic data.
    pub source: String,
    pub synthetic: bool,
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: DMatrix<f64>, y: Vec<i8>) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            x,
            y,
            groups: None,
            impute_zero: Vec::new(),
            source: String::new(),
            synthetic: false,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.nrows() != self.y.len() {
            return Err(Error::DimensionMismatch(format!("{} rows but {} labels", self.x.nrows(), self.y.len())));
        }
        if let Some(g) = &self.groups {
            if g.len() != self.y.len() {
                return Err(Error::DimensionMismatch(format!("{} group ids for {} rows", g.len(), self.y.len())));
            }
        }
        if self.y.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument("labels must be ±1".into()));
        }
        if !(self.y.contains(&1) && self.y.contains(&-1)) {
            return Err(Error::SingleClass);
        }
        crate::kern::check_finite(&self.x)
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Content fingerprint of values, labels and groups (not the name).
    pub fn fingerprint(&self) -> ContentHash {
        let mut bytes = Vec::with_capacity(8 * self.x.len() + self.y.len() + 16);
        bytes.extend((self.x.nrows() as u64).to_le_bytes());
        bytes.extend((self.x.ncols() as u64).to_le_bytes());
        for i in 0..self.x.nrows() {
            for j in 0..self.x.ncols() {
                bytes.extend(self.x[(i, j)].to_le_bytes());
            }
        }
        bytes.extend(self.y.iter().map(|&v| v as u8));
        if let Some(g) = &self.groups {
            for id in g {
                bytes.extend(id.as_bytes());
                bytes.push(0);
            }
        }
        for c in &self.impute_zero {
            bytes.extend((*c as u64).to_le_bytes());
        }
        ContentHash::of_bytes(&bytes)
    }

    /// Stratified subsample of at most `n` rows (no-op when already small enough).
    pub fn stratified_subsample(&self, n: usize, seed: u64) -> Dataset {
        if n >= self.n_samples() {
            return self.clone();
        }
        let mut rng = SplitMix64::new(seed);
        let mut keep = Vec::with_capacity(n);
        for label in [-1i8, 1] {
            let mut members: Vec<usize> = (0..self.y.len()).filter(|&i| self.y[i] == label).collect();
            let quota = ((members.len() * n) as f64 / self.n_samples() as f64).round() as usize;
            rng.shuffle(&mut members);
            keep.extend(members.into_iter().take(quota.max(1)));
        }
        keep.sort_unstable();
        self.subset(&keep)
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            x: DMatrix::from_fn(rows.len(), self.x.ncols(), |i, j| self.x[(rows[i], j)]),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            groups: self.groups.as_ref().map(|g| rows.iter().map(|&i| g[i].clone()).collect()),
            impute_zero: self.impute_zero.clone(),
            source: self.source.clone(),
            synthetic: self.synthetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Synthetic {
    /// Two isotropic Gaussian blobs with unit σ whose centres are
    /// `separation` σ apart along the first axis; samples alternate classes.
    Blobs { n: usize, dim: usize, separation: f64, seed: u64 },
    /// Concentric XOR rings: label is the sign of x₀·x₁, radius in [1, 2].
    Xor { n: usize, seed: u64 },
}

impl Synthetic {
    pub fn generate(&self) -> Result<Dataset> {
        let (name, x, y) = match *self {
            Synthetic::Blobs { n, dim, separation, seed } => {
                if n < 2 || dim == 0 {
                    return Err(Error::InvalidArgument("blobs need n >= 2 and dim >= 1".into()));
                }
                let mut g = SplitMix64::new(seed);
                let y: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
                let x = DMatrix::from_fn(n, dim, |i, j| {
                    let shift = if j == 0 { f64::from(y[i]) * separation / 2.0 } else { 0.0 };
                    shift + g.normal()
                });
                (format!("blobs_n{n}_d{dim}_sep{separation}"), x, y)
            }
            Synthetic::Xor { n, seed } => {
                if n < 4 {
                    return Err(Error::InvalidArgument("xor needs n >= 4".into()));
                }
                let mut g = SplitMix64::new(seed);
                let mut rows = Vec::with_capacity(2 * n);
                let mut y = Vec::with_capacity(n);
                for i in 0..n {
                    let quadrant = i % 4;
                    let r = g.uniform(1.0, 2.0);
                    let a = g.uniform(0.1, std::f64::consts::FRAC_PI_2 - 0.1) + quadrant as f64 * std::f64::consts::FRAC_PI_2;
                    let (x0, x1) = (r * a.cos(), r * a.sin());
                    rows.extend([x0, x1]);
                    y.push(if x0 * x1 > 0.0 { 1 } else { -1 });
                }
                (format!("xor_n{n}"), DMatrix::from_row_slice(n, 2, &rows), y)
            }
        };
        let mut ds = Dataset::new(name, x, y)?;
        ds.source = serde_json::to_string(self)?;
        ds.synthetic = true;
        Ok(ds)
    }
}
