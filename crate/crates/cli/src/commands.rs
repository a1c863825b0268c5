//! The single-run subcommands: kernel export/import, circuit inspection,
//! kernel alignment and hardware validation.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use qkbench::circuit::{
    build_feature_map, circuit_metrics, decompose_native, fidelity_circuit, FeatureMapKind, FeatureMapSpec,
};
use qkbench::hash::ContentHash;
use qkbench::harness::{full_data_kernel, make_fold_plan, nested_cv, KernelConfig, C_GRID};
use qkbench::hwcompare::validate_backend;
use qkbench::kern::{export_kernel, import_kernel, read_container, KernelFormat, KernelMatrix, Provenance, MAGIC};
use qkbench::prep::fit_pipeline;
use qkbench::qkt::optimize_theta;
use qkbench::stats::spectral_profile;
use serde_json::{json, Value};

use crate::config::{base_dir, load, RunConfig};

fn load_run(path: &Path) -> Result<(RunConfig, qkbench::data::Dataset)> {
    let cfg: RunConfig = load(path)?;
    cfg.kernel.validate()?;
    let ds = cfg.dataset.resolve(&base_dir(path), cfg.seed)?;
    Ok((cfg, ds))
}

/// Full-data kernel for the configured dataset, pipeline and kernel.
pub fn kernel_export(config: &Path, out: &Path, format: Option<KernelFormat>) -> Result<Value> {
    let (cfg, ds) = load_run(config)?;
    let pipeline = cfg.pipeline.clone().with_imputation(ds.impute_zero.clone());
    let start = Instant::now();
    let (values, _) = full_data_kernel(&ds, &pipeline, &cfg.kernel)?;
    let hash = ContentHash::of(&json!({ "dataset": ds.fingerprint(), "pipeline": pipeline, "kernel": cfg.kernel }))?;
    let km = KernelMatrix {
        values,
        provenance: Provenance::new(cfg.kernel.pathway(), hash, cfg.kernel.noise(), start.elapsed().as_secs_f64()),
    };
    let format = format.unwrap_or_else(|| KernelFormat::from_path(out));
    export_kernel(out, &km, format)?;
    Ok(json!({
        "path": out.display().to_string(),
        "rows": km.rows(),
        "cols": km.cols(),
        "pathway": km.provenance.pathway,
        "config_hash": hash,
        "wall_time_s": km.provenance.wall_time_s,
    }))
}

/// Describe a kernel file; optionally convert it.
pub fn kernel_import(path: &Path, to: Option<&Path>) -> Result<Value> {
    let km = import_kernel(path).with_context(|| format!("reading {}", path.display()))?;
    let bytes = std::fs::read(path)?;
    let header = if bytes.starts_with(&MAGIC[..8]) { Some(read_container(&mut bytes.as_slice())?.0) } else { None };
    let mut info = json!({
        "path": path.display().to_string(),
        "format": if header.is_some() { "container" } else { "csv" },
        "rows": km.rows(),
        "cols": km.cols(),
        "source_pathway": header.as_ref().map(|h| h.pathway),
        "config_hash": km.provenance.spec_hash,
        "max_asymmetry": km.max_asymmetry(),
        "min_eigenvalue": km.provenance.min_eigenvalue,
        "indefinite": km.provenance.indefinite,
    });
    if km.is_square() && km.max_asymmetry() <= 1e-8 * km.values.amax().max(1.0) {
        info["spectrum"] = serde_json::to_value(spectral_profile(&km.values)?)?;
    }
    if let Some(dest) = to {
        export_kernel(dest, &km, KernelFormat::from_path(dest))?;
        info["written"] = json!(dest.display().to_string());
    }
    Ok(info)
}

pub fn circuit_inspect(map: FeatureMapKind, k: usize, reps: usize) -> Result<Value> {
    let spec = FeatureMapSpec::new(map, k, reps);
    spec.validate()?;
    // Structure does not depend on the values; avoid zero angles anyway.
    let x: Vec<f64> = (0..k).map(|i| 0.5 + 0.01 * i as f64).collect();
    let abstract_circuit = build_feature_map(&spec, &x)?;
    let native = decompose_native(&abstract_circuit)?;
    let fidelity = decompose_native(&fidelity_circuit(&spec, &x, &x)?)?;
    Ok(json!({
        "map": map.name(),
        "k": k,
        "reps": reps,
        "n_qubits": spec.n_qubits(),
        "abstract": circuit_metrics(&abstract_circuit),
        "native": circuit_metrics(&native),
        "fidelity_native": circuit_metrics(&fidelity),
    }))
}

/// Kernel alignment on the full dataset, plus nested CV when `cv = true`.
pub fn qkt(config: &Path) -> Result<Value> {
    let (cfg, ds) = load_run(config)?;
    let KernelConfig::Quantum { map, reps, noise: None, qkt } = &cfg.kernel else {
        bail!("qkt needs an ideal quantum [kernel]");
    };
    let settings = qkt.unwrap_or_default();
    let pipeline = cfg.pipeline.clone().with_imputation(ds.impute_zero.clone());
    let fitted = fit_pipeline(&pipeline, &ds.x, &ds.y)?;
    let z = fitted.transform(&ds.x)?;
    let spec = FeatureMapSpec::new(*map, z.ncols(), *reps);
    let result = optimize_theta(&z, &ds.y, &spec, settings.max_iter)?;
    let mut out = json!({ "dataset": ds.name, "spec": spec, "alignment": result });
    if cfg.cv {
        let kernel = KernelConfig::Quantum { map: *map, reps: *reps, noise: None, qkt: Some(settings) };
        let plan = make_fold_plan(&ds.y, ds.groups.as_deref(), 5, 3, cfg.seed)?;
        out["record"] = serde_json::to_value(nested_cv(&ds, &pipeline, &kernel, &C_GRID, &plan)?.record)?;
    }
    Ok(out)
}

/// Compare an imported kernel against ideal (and noisy, when `[noise]` is
/// set) simulations of the same rows.
pub fn hw_validate(kernel: &Path, config: &Path) -> Result<Value> {
    let (cfg, ds) = load_run(config)?;
    let KernelConfig::Quantum { map, reps, .. } = &cfg.kernel else {
        bail!("hw-validate needs a quantum [kernel]");
    };
    let imported = import_kernel(kernel).with_context(|| format!("reading {}", kernel.display()))?;
    let pipeline = cfg.pipeline.clone().with_imputation(ds.impute_zero.clone());
    let fitted = fit_pipeline(&pipeline, &ds.x, &ds.y)?;
    let z = fitted.transform(&ds.x)?;
    let spec = FeatureMapSpec::new(*map, z.ncols(), *reps);
    let noise = cfg.noise.or(cfg.kernel.noise());
    let report = validate_backend(&imported, &z, &ds.y, &spec, noise.as_ref(), cfg.seed)?;
    Ok(serde_json::to_value(report)?)
}
