//! Campaign runner: expands a config into jobs, runs them on a worker pool
//! and appends one JSON line per finished experiment.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{Context, Result};
use qkbench::data::Dataset;
use qkbench::harness::{
    full_data_kernel, learning_curve, make_fold_plan, nested_cv_cached, seed_sweep, ResultRecord, SpectrumRecord,
};
use qkbench::kern::KernelCache;
use qkbench::stats::{eigenvalues_desc, spectral_profile};
use rayon::prelude::*;

use crate::config::{base_dir, CampaignConfig, CampaignSection, Job};

pub const DEFAULT_CACHE_DIR: &str = ".qkbench-cache";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub no_cache: bool,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub output: PathBuf,
    pub succeeded: usize,
    pub failed: usize,
}

impl CampaignOutcome {
    /// 0 when everything ran, 2 when anything failed.
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            0
        } else {
            2
        }
    }
}

pub fn run_campaign(config_path: &Path, opts: &RunOptions) -> Result<CampaignOutcome> {
    let cfg: CampaignConfig = crate::config::load(config_path)?;
    cfg.validate().with_context(|| format!("invalid config {}", config_path.display()))?;
    let base = base_dir(config_path);
    let section = &cfg.campaign;
    let output = match (&opts.output, &section.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => base.join(p),
        (None, None) => config_path.with_extension("jsonl"),
    };
    let cache = if opts.no_cache {
        None
    } else {
        let default = section.cache_dir.as_ref().map(|d| base.join(d)).unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        Some(KernelCache::from_env_or(default)?)
    };

    // Dataset errors fail their jobs rather than the whole campaign.
    let datasets: Vec<std::result::Result<Dataset, String>> = cfg
        .datasets
        .iter()
        .map(|d| d.resolve(&base, section.seed).map_err(|e| format!("{e:#}")))
        .collect();
    let jobs = cfg.jobs();
    log::info!("{} experiments, writing {}", jobs.len(), output.display());

    let sink = Mutex::new(BufWriter::new(
        File::create(&output).with_context(|| format!("creating {}", output.display()))?,
    ));
    let threads = opts.jobs.or(section.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let failures: Vec<bool> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let name = &cfg.datasets[job.dataset].name;
                let what = format!("{name} {} {}{}", job.kernel.label(), job.pipeline.reducer, job.pipeline.k);
                let result = match &datasets[job.dataset] {
                    Ok(ds) => run_job(job, ds, section, cache.as_ref()).map_err(|e| format!("{e:#}")),
                    Err(e) => Err(e.clone()),
                };
                match result.and_then(|r| serde_json::to_string(&r).map_err(|e| e.to_string())) {
                    Ok(line) => {
                        let mut w = sink.lock().expect("sink poisoned");
                        if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                            log::error!("{what}: writing result: {e}");
                            return true;
                        }
                        log::info!("{what}: done");
                        false
                    }
                    Err(e) => {
                        log::error!("{what}: {e}");
                        true
                    }
                }
            })
            .collect()
    });
    let failed = failures.iter().filter(|&&f| f).count();
    Ok(CampaignOutcome { output, succeeded: failures.len() - failed, failed })
}

pub fn run_job(job: &Job, ds: &Dataset, section: &CampaignSection, cache: Option<&KernelCache>) -> Result<ResultRecord> {
    let pipeline = job.pipeline.clone().with_imputation(ds.impute_zero.clone());
    let plan = make_fold_plan(&ds.y, ds.groups.as_deref(), section.n_outer, section.n_inner, section.seed)?;
    let run = nested_cv_cached(ds, &pipeline, &job.kernel, &section.c_grid, &plan, cache)?;
    let mut record = run.record;
    if job.spectrum {
        let k = &run.kernels[0].train;
        record.spectrum = Some(SpectrumRecord { profile: spectral_profile(k)?, eigenvalues: eigenvalues_desc(k)? });
    }
    if let Some(fractions) = &job.fractions {
        record.learning_curve = Some(learning_curve(&run.kernels, &ds.y, &plan, &section.c_grid, fractions)?);
    }
    if let Some(seeds) = &job.seeds {
        let (k, _) = full_data_kernel(ds, &pipeline, &job.kernel)?;
        record.seed_sweep =
            Some(seed_sweep(&k, &ds.y, ds.groups.as_deref(), section.n_outer, section.n_inner, &section.c_grid, seeds)?);
    }
    Ok(record)
}

/// Parse a JSONL results file, naming the line of any malformed record.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).with_context(|| format!("{}: line {}", path.display(), i + 1))?);
    }
    Ok(out)
}
