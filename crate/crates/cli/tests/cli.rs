use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qkbench::harness::ResultRecord;
use serde_json::Value;

fn qkbench(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkbench"))
        .args(args)
        .env("QKBENCH_CACHE_DIR", cache)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn records(path: &Path) -> Vec<ResultRecord> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

const BLOBS: &str = r#"
[[dataset]]
name = "blobs"
synthetic = { kind = "blobs", n = 40, dim = 2, separation = 4.0, seed = 42 }
"#;

fn campaign(kernels: &str) -> String {
    format!("{BLOBS}\n[[experiment]]\ndatasets = [\"blobs\"]\nreducers = [\"pca\"]\nk = [2]\nkernels = [{kernels}]\n")
}

#[test]
fn single_classical_config_gives_one_line_with_five_folds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &campaign(r#"{ family = "classical", kind = "rbf_scale" }"#));
    let out = qkbench(&["run", cfg.to_str().unwrap()], &dir.path().join("cache"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("c.jsonl"));
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].ba.len(), 5);
    assert_eq!(recs[0].folds.len(), 5);
}

#[test]
fn rerun_hits_cache_and_reproduces_records() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("kcache");
    let cfg = write(
        dir.path(),
        "c.toml",
        &campaign(r#"{ family = "classical", kind = "linear" }, { family = "quantum", map = "rot2dof", reps = 1 }"#),
    );
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    assert_eq!(qkbench(&["run", cfg.to_str().unwrap(), "--output", a.to_str().unwrap()], &cache).status.code(), Some(0));
    let cached = std::fs::read_dir(&cache).unwrap().count();
    assert!(cached > 0, "cache dir from QKBENCH_CACHE_DIR stays empty");
    assert_eq!(qkbench(&["run", cfg.to_str().unwrap(), "--output", b.to_str().unwrap()], &cache).status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), cached);
    let key = |r: &ResultRecord| r.config_hash;
    let mut ra: Vec<_> = records(&a).iter().map(ResultRecord::without_timings).collect();
    let mut rb: Vec<_> = records(&b).iter().map(ResultRecord::without_timings).collect();
    ra.sort_by_key(key);
    rb.sort_by_key(key);
    assert_eq!(ra, rb);
}

#[test]
fn records_round_trip_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = campaign(r#"{ family = "classical", kind = "poly3" }"#);
    text.push_str("spectrum = true\nlearning_curve = true\n");
    let cfg = write(dir.path(), "c.toml", &text);
    assert_eq!(qkbench(&["run", cfg.to_str().unwrap()], &dir.path().join("cache")).status.code(), Some(0));
    let line = std::fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    let rec: ResultRecord = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(serde_json::to_string(&rec).unwrap(), line.trim());
    assert!(rec.spectrum.is_some() && rec.learning_curve.is_some());
}

#[test]
fn failed_experiments_give_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[[dataset]]\nname = \"missing\"\npath = \"nope.csv\"\n\n[[experiment]]\ndatasets = [\"blobs\", \"missing\"]\nreducers = [\"pca\"]\nk = [2]\nkernels = [{{ family = \"classical\", kind = \"linear\" }}]\n",
        BLOBS
    );
    let cfg = write(dir.path(), "c.toml", &text);
    let out = qkbench(&["run", cfg.to_str().unwrap()], &dir.path().join("cache"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(records(&dir.path().join("c.jsonl")).len(), 1);
}

#[test]
fn usage_errors_give_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    assert_eq!(qkbench(&["run"], &cache).status.code(), Some(1));
    assert_eq!(qkbench(&["report", "--mode", "nope", "x.jsonl"], &cache).status.code(), Some(1));
    assert_eq!(qkbench(&["run", "/does/not/exist.toml"], &cache).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "[campaign]\nn_outer = 1\n");
    assert_eq!(qkbench(&["run", bad.to_str().unwrap()], &cache).status.code(), Some(1));
    assert_eq!(qkbench(&["--help"], &cache).status.code(), Some(0));
}

fn report_json(mode: &str, results: &Path, cache: &Path) -> Value {
    let out = qkbench(&["report", "--mode", mode, "--format", "json", results.to_str().unwrap()], cache);
    assert_eq!(out.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn reports_over_a_mixed_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write(
        dir.path(),
        "c.toml",
        &campaign(r#"{ family = "classical", kind = "rbf_scale" }, { family = "quantum", map = "rot2dof", reps = 1 }"#),
    );
    assert_eq!(qkbench(&["run", cfg.to_str().unwrap()], &cache).status.code(), Some(0));
    let results = dir.path().join("c.jsonl");

    let summary = report_json("summary", &results, &cache);
    let row = &summary["summary"][0];
    assert_eq!(row["dataset"], "blobs");
    assert!(row["wilcoxon_p"].is_number());
    let delta = row["delta"].as_f64().unwrap();
    let (q, c) = (row["quantum_ba"].as_f64().unwrap(), row["classical_ba"].as_f64().unwrap());
    assert!((delta - (q - c)).abs() < 1e-12);

    let w = report_json("wilcoxon", &results, &cache);
    assert_eq!(w["wilcoxon"].as_array().unwrap().len(), 1);

    // Two configs that differ in the kernel factor (and hence family).
    let f = report_json("factors", &results, &cache);
    let factors: Vec<&str> = f["factors"].as_array().unwrap().iter().map(|r| r["factor"].as_str().unwrap()).collect();
    assert_eq!(factors, ["family", "kernel", "pathway"]);

    let csv = qkbench(&["report", "--mode", "summary", results.to_str().unwrap()], &cache);
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("dataset,best_quantum,"));

    let missing = qkbench(&["report", "--mode", "learning", results.to_str().unwrap()], &cache);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("learning_curve"));
}

const RUN: &str = r#"
seed = 42

[dataset]
name = "blobs"
synthetic = { kind = "blobs", n = 30, dim = 3, separation = 3.0, seed = 1 }

[pipeline]
reducer = "pca"
k = 2

[kernel]
family = "quantum"
map = "rot2dof"
reps = 1
"#;

#[test]
fn kernel_export_import_and_hardware_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write(dir.path(), "run.toml", RUN);
    let bin = dir.path().join("k.qkk");
    let csv = dir.path().join("k.csv");
    let out = qkbench(&["kernel", "export", cfg.to_str().unwrap(), "--out", bin.to_str().unwrap()], &cache);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = qkbench(&["kernel", "import", bin.to_str().unwrap(), "--to", csv.to_str().unwrap()], &cache);
    let info: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["rows"], 30);
    assert_eq!(info["format"], "container");
    assert_eq!(info["source_pathway"], "ideal");
    assert_eq!(info["indefinite"], false);

    let cmp = qkbench(
        &["report", "--mode", "compare-kernels", "--format", "json", bin.to_str().unwrap(), csv.to_str().unwrap()],
        &cache,
    );
    let agreement: Value = serde_json::from_slice(&cmp.stdout).unwrap();
    assert_eq!(agreement["agreement"][0]["mae"], 0.0);

    let hw = qkbench(&["hw-validate", bin.to_str().unwrap(), cfg.to_str().unwrap()], &cache);
    assert_eq!(hw.status.code(), Some(0), "{}", String::from_utf8_lossy(&hw.stderr));
    let report: Value = serde_json::from_slice(&hw.stdout).unwrap();
    assert_eq!(report["vs_ideal"]["pearson_r"], 1.0);
    assert_eq!(report["delta_pp"], 0.0);
}

#[test]
fn circuit_inspect_reports_native_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = qkbench(&["circuit", "inspect", "--map", "sakhnenko10", "--k", "8", "--reps", "2"], dir.path());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["native"]["depth"], 48);
    assert_eq!(v["native"]["two_qubit_count"], 8);
    assert_eq!(v["n_qubits"], 4);
}

#[test]
fn qkt_command_respects_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.toml", &RUN.replace("reps = 1", "reps = 1\nqkt = { max_iter = 10 }"));
    let out = qkbench(&["qkt", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let a = &v["alignment"];
    assert!(a["kta_final"].as_f64().unwrap() >= a["kta_initial"].as_f64().unwrap());
    for t in a["theta_star"].as_array().unwrap() {
        assert!((0.01..=5.0).contains(&t.as_f64().unwrap()));
    }
    assert!(v.get("record").is_none());
}

#[test]
fn csv_datasets_load_through_configs() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("a,b,c,target\n");
    for i in 0..40 {
        let y = i % 2;
        let s = if y == 1 { 2.0 } else { -2.0 };
        rows.push_str(&format!("{},{},{},{}\n", s + (i as f64 * 0.37).sin(), (i as f64).cos(), i % 7, y));
    }
    write(dir.path(), "d.csv", &rows);
    let text = r#"
[[dataset]]
name = "d"
path = "d.csv"
label = "target"

[[experiment]]
datasets = ["d"]
reducers = ["tree", "nmf"]
k = [2]
kernels = [{ family = "classical", kind = "rbf_scale" }]
"#;
    let cfg = write(dir.path(), "c.toml", text);
    let out = qkbench(&["run", cfg.to_str().unwrap()], &dir.path().join("cache"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&dir.path().join("c.jsonl"));
    assert_eq!(recs.len(), 2);
    assert!(!recs[0].synthetic);
}
