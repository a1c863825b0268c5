//! TOML configuration files. Campaign files hold `[campaign]`, `[[dataset]]`
//! and `[[experiment]]` tables; single-run files (kernel export, alignment,
//! hardware validation) hold one `[dataset]`, `[pipeline]` and `[kernel]`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qkbench::harness::{KernelConfig, DEFAULT_FRACTIONS, C_GRID};
use qkbench::prep::{PipelineSpec, Reducer};
use qkbench::sim::NoiseModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    #[serde(default)]
    pub name: Option<String>,
    /// JSONL results; defaults to `<config stem>.jsonl` beside the config.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Overridden by `QKBENCH_CACHE_DIR`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_outer")]
    pub n_outer: usize,
    #[serde(default = "default_inner")]
    pub n_inner: usize,
    #[serde(default = "default_grid")]
    pub c_grid: Vec<f64>,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            name: None,
            output: None,
            cache_dir: None,
            jobs: None,
            seed: default_seed(),
            n_outer: default_outer(),
            n_inner: default_inner(),
            c_grid: default_grid(),
        }
    }
}

fn default_seed() -> u64 {
    42
}

fn default_outer() -> usize {
    5
}

fn default_inner() -> usize {
    3
}

fn default_grid() -> Vec<f64> {
    C_GRID.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub datasets: Vec<String>,
    pub reducers: Vec<Reducer>,
    pub k: Vec<usize>,
    pub kernels: Vec<KernelConfig>,
    #[serde(default)]
    pub spectrum: bool,
    #[serde(default)]
    pub learning_curve: bool,
    #[serde(default)]
    pub fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub seed_sweep: bool,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub campaign: CampaignSection,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetSpec>,
    #[serde(rename = "experiment", default)]
    pub experiments: Vec<ExperimentSpec>,
}

/// One expanded unit of work: a single ResultRecord.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub dataset: usize,
    pub pipeline: PipelineSpec,
    pub kernel: KernelConfig,
    pub spectrum: bool,
    pub fractions: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.campaign;
        if c.n_outer < 2 || c.n_inner < 2 {
            bail!("n_outer and n_inner must be at least 2");
        }
        if c.c_grid.is_empty() || c.c_grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            bail!("c_grid must be non-empty and positive");
        }
        if c.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                bail!("dataset '{}' defined twice", d.name);
            }
        }
        if self.experiments.is_empty() {
            bail!("no [[experiment]] tables");
        }
        for e in &self.experiments {
            for name in &e.datasets {
                if !self.datasets.iter().any(|d| &d.name == name) {
                    bail!("experiment refers to unknown dataset '{name}'");
                }
            }
            if e.reducers.is_empty() || e.k.is_empty() || e.kernels.is_empty() || e.datasets.is_empty() {
                bail!("experiment grids must be non-empty");
            }
            for k in &e.kernels {
                k.validate()?;
            }
        }
        Ok(())
    }

    /// Cartesian product datasets × reducers × k × kernels, in file order.
    pub fn jobs(&self) -> Vec<Job> {
        let mut out = Vec::new();
        for e in &self.experiments {
            for name in &e.datasets {
                let dataset = self.datasets.iter().position(|d| &d.name == name).expect("validated");
                for &reducer in &e.reducers {
                    for &k in &e.k {
                        for kernel in &e.kernels {
                            out.push(Job {
                                dataset,
                                pipeline: PipelineSpec::new(reducer, k),
                                kernel: kernel.clone(),
                                spectrum: e.spectrum,
                                fractions: e
                                    .learning_curve
                                    .then(|| e.fractions.clone().unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec())),
                                seeds: e.seed_sweep.then(|| e.seeds.clone().unwrap_or_else(qkbench::harness::default_seeds)),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Config for the single-run subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub pipeline: PipelineSpec,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    /// Also run nested CV (used by `qkt`).
    #[serde(default)]
    pub cv: bool,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Directory that relative paths in a config resolve against.
pub fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
