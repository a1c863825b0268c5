//! Analysis reports over JSONL results. Each mode yields one or more named
//! tables, printed as CSV blocks or as a JSON object of row arrays.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use qkbench::harness::{compare_sweeps, ResultRecord};
use qkbench::kern::{compare_kernels, import_kernel, ClassicalKind, Pathway};
use qkbench::stats::{self, friedman, friedman_mean_ranks, kruskal_wallis, nemenyi, spearman, wilcoxon_signed_rank};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Summary,
    Wilcoxon,
    Friedman,
    Factors,
    Spectra,
    Learning,
    Seeds,
    Suitability,
    CompareKernels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| &r[c]).collect())
    }
}

pub type Report = Vec<Table>;

pub fn run_report(mode: Mode, inputs: &[PathBuf]) -> Result<Report> {
    if inputs.is_empty() {
        bail!("no input files");
    }
    if mode == Mode::CompareKernels {
        return compare_kernel_files(inputs);
    }
    let mut records = Vec::new();
    for p in inputs {
        records.extend(crate::campaign::read_records(p)?);
    }
    report_records(mode, records)
}

pub fn report_records(mode: Mode, mut records: Vec<ResultRecord>) -> Result<Report> {
    if records.is_empty() {
        bail!("no result records in the input");
    }
    records.sort_by_cached_key(sort_key);
    match mode {
        Mode::Summary => summary(&records),
        Mode::Wilcoxon => wilcoxon(&records),
        Mode::Friedman => friedman_report(&records),
        Mode::Factors => factors(&records),
        Mode::Spectra => spectra(&records),
        Mode::Learning => learning(&records),
        Mode::Seeds => seeds(&records),
        Mode::Suitability => suitability(&records),
        Mode::CompareKernels => bail!("compare-kernels takes kernel files, not results"),
    }
}

fn sort_key(r: &ResultRecord) -> (String, String, String, usize, String) {
    (r.dataset.clone(), r.kernel_label.clone(), r.pipeline.reducer.to_string(), r.pipeline.k, r.config_hash.to_string())
}

fn describe(r: &ResultRecord) -> String {
    format!("{} {}{}", r.kernel_label, r.pipeline.reducer, r.pipeline.k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Category {
    QuantumIdeal,
    QuantumNoisy,
    Classical,
}

fn category(r: &ResultRecord) -> Option<Category> {
    match r.pathway {
        Pathway::Ideal => Some(Category::QuantumIdeal),
        Pathway::Noisy => Some(Category::QuantumNoisy),
        Pathway::Classical => Some(Category::Classical),
        Pathway::Imported => None,
    }
}

fn by_dataset(records: &[ResultRecord]) -> BTreeMap<&str, Vec<&ResultRecord>> {
    let mut m: BTreeMap<&str, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        m.entry(r.dataset.as_str()).or_default().push(r);
    }
    m
}

/// Highest mean BA; the first in sort order wins ties.
fn best<'a>(rs: impl Iterator<Item = &'a ResultRecord>) -> Option<&'a ResultRecord> {
    rs.fold(None, |acc: Option<&ResultRecord>, r| match acc {
        Some(b) if b.mean_ba >= r.mean_ba => Some(b),
        _ => Some(r),
    })
}

fn best_of<'a>(rs: &[&'a ResultRecord], cat: Category) -> Option<&'a ResultRecord> {
    best(rs.iter().copied().filter(|r| category(r) == Some(cat)))
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn opt(v: Option<f64>) -> Value {
    v.map(num).unwrap_or(Value::Null)
}

fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

/// Paired test over outer folds; only defined when both records share a plan.
fn paired(a: &ResultRecord, b: &ResultRecord) -> Option<stats::TestReport> {
    if a.seed != b.seed || a.n_outer != b.n_outer || a.n_inner != b.n_inner || a.dataset_fingerprint != b.dataset_fingerprint {
        return None;
    }
    wilcoxon_signed_rank(&a.ba, &b.ba).ok()
}

fn summary(records: &[ResultRecord]) -> Result<Report> {
    let mut t = Table::new(
        "summary",
        &[
            "dataset",
            "best_quantum",
            "quantum_ba",
            "quantum_std",
            "best_noisy",
            "noisy_ba",
            "best_classical",
            "classical_ba",
            "classical_std",
            "delta",
            "wilcoxon_p",
        ],
    );
    for (ds, rs) in by_dataset(records) {
        let q = best_of(&rs, Category::QuantumIdeal);
        let n = best_of(&rs, Category::QuantumNoisy);
        let c = best_of(&rs, Category::Classical);
        t.push(vec![
            text(ds),
            q.map(|r| text(describe(r))).unwrap_or(Value::Null),
            opt(q.map(|r| r.mean_ba)),
            opt(q.map(|r| r.std_ba)),
            n.map(|r| text(describe(r))).unwrap_or(Value::Null),
            opt(n.map(|r| r.mean_ba)),
            c.map(|r| text(describe(r))).unwrap_or(Value::Null),
            opt(c.map(|r| r.mean_ba)),
            opt(c.map(|r| r.std_ba)),
            opt(q.zip(c).map(|(q, c)| q.mean_ba - c.mean_ba)),
            opt(q.zip(c).and_then(|(q, c)| paired(q, c)).map(|t| t.p_value)),
        ]);
    }
    Ok(vec![t])
}

fn wilcoxon(records: &[ResultRecord]) -> Result<Report> {
    let mut t = Table::new("wilcoxon", &["dataset", "a", "b", "statistic", "p_value", "n", "degenerate"]);
    for (ds, rs) in by_dataset(records) {
        let pairs = [
            (Category::QuantumIdeal, Category::Classical),
            (Category::QuantumNoisy, Category::Classical),
            (Category::QuantumIdeal, Category::QuantumNoisy),
        ];
        for (ca, cb) in pairs {
            let (Some(a), Some(b)) = (best_of(&rs, ca), best_of(&rs, cb)) else { continue };
            let Some(w) = paired(a, b) else {
                log::warn!("{ds}: {} and {} do not share a fold plan", describe(a), describe(b));
                continue;
            };
            t.push(vec![
                text(ds),
                text(describe(a)),
                text(describe(b)),
                num(w.statistic),
                num(w.p_value),
                json!(w.n),
                json!(w.degenerate),
            ]);
        }
    }
    if t.rows.is_empty() {
        bail!("no dataset has two comparable categories (quantum ideal, quantum noisy, classical)");
    }
    Ok(vec![t])
}

/// Datasets are blocks; each kernel label is scored by its best pipeline.
fn friedman_report(records: &[ResultRecord]) -> Result<Report> {
    let groups = by_dataset(records);
    let mut methods: Vec<String> = records.iter().map(|r| r.kernel_label.clone()).collect();
    methods.sort();
    methods.dedup();
    methods.retain(|m| {
        let everywhere = groups.values().all(|rs| rs.iter().any(|r| &r.kernel_label == m));
        if !everywhere {
            log::warn!("friedman: dropping {m}, not run on every dataset");
        }
        everywhere
    });
    if methods.len() < 2 || groups.len() < 2 {
        bail!("friedman needs at least 2 kernels run on each of at least 2 datasets");
    }
    let scores: Vec<Vec<f64>> = methods
        .iter()
        .map(|m| {
            groups
                .values()
                .map(|rs| best(rs.iter().copied().filter(|r| &r.kernel_label == m)).expect("retained").mean_ba)
                .collect()
        })
        .collect();
    let test = friedman(&scores)?;
    let ranks = friedman_mean_ranks(&scores)?;
    let nem = nemenyi(&ranks, groups.len()).ok();
    let mut overall = Table::new("friedman", &["statistic", "p_value", "df", "n_blocks", "n_methods", "critical_difference"]);
    overall.push(vec![
        num(test.statistic),
        num(test.p_value),
        opt(test.df),
        json!(groups.len()),
        json!(methods.len()),
        opt(nem.as_ref().map(|n| n.critical_difference)),
    ]);
    let mut rank_table = Table::new("ranks", &["method", "mean_rank"]);
    for (m, r) in methods.iter().zip(&ranks) {
        rank_table.push(vec![text(m.clone()), num(*r)]);
    }
    let mut pairs = Table::new("nemenyi", &["a", "b", "rank_difference", "significant"]);
    if let Some(n) = &nem {
        for p in &n.pairs {
            pairs.push(vec![text(methods[p.a].clone()), text(methods[p.b].clone()), num(p.rank_difference), json!(p.significant)]);
        }
    }
    Ok(vec![overall, rank_table, pairs])
}

fn factor_level(r: &ResultRecord, factor: &str) -> Option<String> {
    use qkbench::harness::KernelConfig;
    Some(match factor {
        "dataset" => r.dataset.clone(),
        "family" => if r.kernel.is_quantum() { "quantum" } else { "classical" }.to_string(),
        "kernel" => match &r.kernel {
            KernelConfig::Quantum { map, .. } => map.name().to_string(),
            KernelConfig::Classical { kind } => kind.name().to_string(),
        },
        "pathway" => format!("{:?}", r.pathway).to_lowercase(),
        "reducer" => r.pipeline.reducer.to_string(),
        "k" => r.pipeline.k.to_string(),
        "reps" => match &r.kernel {
            KernelConfig::Quantum { reps, .. } => reps.to_string(),
            KernelConfig::Classical { .. } => return None,
        },
        _ => unreachable!("unknown factor"),
    })
}

pub const FACTORS: [&str; 7] = ["dataset", "family", "kernel", "pathway", "reducer", "k", "reps"];

/// One Kruskal-Wallis test per factor that takes at least two levels.
fn factors(records: &[ResultRecord]) -> Result<Report> {
    let mut t = Table::new("factors", &["factor", "levels", "n", "h", "p_value", "epsilon_squared"]);
    for factor in FACTORS {
        let mut levels: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in records {
            if let Some(l) = factor_level(r, factor) {
                levels.entry(l).or_default().push(r.mean_ba);
            }
        }
        if levels.len() < 2 {
            continue;
        }
        let groups: Vec<Vec<f64>> = levels.into_values().collect();
        let n: usize = groups.iter().map(Vec::len).sum();
        let row = match kruskal_wallis(&groups) {
            Ok(kw) => vec![text(factor), json!(groups.len()), json!(n), num(kw.statistic), num(kw.p_value), opt(kw.effect_size)],
            Err(e) => {
                log::warn!("factor {factor}: {e}");
                vec![text(factor), json!(groups.len()), json!(n), Value::Null, Value::Null, Value::Null]
            }
        };
        t.push(row);
    }
    if t.rows.is_empty() {
        bail!("no factor takes two or more levels across the records");
    }
    Ok(vec![t])
}

fn spectra(records: &[ResultRecord]) -> Result<Report> {
    let id = ["dataset", "kernel", "reducer", "k"];
    let cols = |extra: &[&'static str]| -> Vec<&'static str> { id.iter().chain(extra).copied().collect() };
    let mut profiles = Table::new(
        "profiles",
        &cols(&["effective_rank_ratio", "entropy", "top1_variance", "top5_variance", "diag_dominance", "negative_eig_fraction"]),
    );
    let mut eig = Table::new("eigenvalues", &cols(&["index", "eigenvalue"]));
    for r in records {
        let Some(s) = &r.spectrum else { continue };
        let head = vec![text(r.dataset.clone()), text(r.kernel_label.clone()), text(r.pipeline.reducer.to_string()), json!(r.pipeline.k)];
        let p = &s.profile;
        let mut row = head.clone();
        row.extend([
            num(p.effective_rank_ratio),
            num(p.entropy),
            num(p.top1_variance),
            num(p.top5_variance),
            num(p.diag_dominance),
            num(p.negative_eig_fraction),
        ]);
        profiles.push(row);
        for (i, v) in s.eigenvalues.iter().enumerate() {
            let mut row = head.clone();
            row.extend([json!(i), num(*v)]);
            eig.push(row);
        }
    }
    if profiles.rows.is_empty() {
        bail!("no record has a 'spectrum' field (set spectrum = true in the experiment)");
    }
    Ok(vec![profiles, eig])
}

fn learning(records: &[ResultRecord]) -> Result<Report> {
    let mut curve = Table::new("curve", &["dataset", "kernel", "reducer", "k", "fraction", "mean_n_train", "mean_ba", "valid_folds"]);
    let mut slopes = Table::new("slopes", &["dataset", "kernel", "reducer", "k", "slope", "intercept", "p_value"]);
    for r in records {
        let Some(lc) = &r.learning_curve else { continue };
        let head = || vec![text(r.dataset.clone()), text(r.kernel_label.clone()), text(r.pipeline.reducer.to_string()), json!(r.pipeline.k)];
        for p in &lc.points {
            let mut row = head();
            row.extend([num(p.fraction), opt(p.mean_n_train), opt(p.mean_ba), json!(p.ba.iter().flatten().count())]);
            curve.push(row);
        }
        let mut row = head();
        row.extend([opt(lc.slope.map(|s| s.slope)), opt(lc.slope.map(|s| s.intercept)), opt(lc.slope.map(|s| s.p_two_sided))]);
        slopes.push(row);
    }
    if curve.rows.is_empty() {
        bail!("no record has a 'learning_curve' field (set learning_curve = true in the experiment)");
    }
    Ok(vec![curve, slopes])
}

fn seeds(records: &[ResultRecord]) -> Result<Report> {
    let mut sweeps = Table::new("sweeps", &["dataset", "kernel", "reducer", "k", "n_seeds", "mean_ba", "cov"]);
    let mut per_seed = Table::new("per_seed", &["dataset", "kernel", "reducer", "k", "seed", "mean_ba"]);
    let mut pairs = Table::new("paired", &["dataset", "quantum", "classical", "wins_quantum", "wins_classical", "ties", "wilcoxon_p"]);
    for r in records {
        let Some(s) = &r.seed_sweep else { continue };
        let head = || vec![text(r.dataset.clone()), text(r.kernel_label.clone()), text(r.pipeline.reducer.to_string()), json!(r.pipeline.k)];
        let mut row = head();
        row.extend([json!(s.seeds.len()), num(stats::mean(&s.mean_ba)), num(s.cov)]);
        sweeps.push(row);
        for (seed, ba) in s.seeds.iter().zip(&s.mean_ba) {
            let mut row = head();
            row.extend([json!(seed), num(*ba)]);
            per_seed.push(row);
        }
    }
    if sweeps.rows.is_empty() {
        bail!("no record has a 'seed_sweep' field (set seed_sweep = true in the experiment)");
    }
    for (ds, rs) in by_dataset(records) {
        let swept: Vec<&ResultRecord> = rs.into_iter().filter(|r| r.seed_sweep.is_some()).collect();
        let sweep_mean = |r: &ResultRecord| stats::mean(&r.seed_sweep.as_ref().expect("filtered").mean_ba);
        let pick = |cat: Category| {
            swept
                .iter()
                .copied()
                .filter(|r| category(r) == Some(cat))
                .fold(None, |acc: Option<&ResultRecord>, r| match acc {
                    Some(b) if sweep_mean(b) >= sweep_mean(r) => Some(b),
                    _ => Some(r),
                })
        };
        let (Some(q), Some(c)) = (pick(Category::QuantumIdeal), pick(Category::Classical)) else { continue };
        let (a, b) = (q.seed_sweep.as_ref().expect("filtered"), c.seed_sweep.as_ref().expect("filtered"));
        match compare_sweeps(a, b) {
            Ok(cmp) => pairs.push(vec![
                text(ds),
                text(describe(q)),
                text(describe(c)),
                json!(cmp.wins_a),
                json!(cmp.wins_b),
                json!(cmp.ties),
                num(cmp.wilcoxon.p_value),
            ]),
            Err(e) => log::warn!("{ds}: {e}"),
        }
    }
    Ok(vec![sweeps, per_seed, pairs])
}

/// Nonlinearity gap (best rbf/poly minus linear) against the quantum
/// advantage Δ (best ideal quantum minus best classical), per dataset.
fn suitability(records: &[ResultRecord]) -> Result<Report> {
    let mut rows = Table::new("datasets", &["dataset", "nl_gap", "delta"]);
    let (mut gaps, mut deltas) = (Vec::new(), Vec::new());
    for (ds, rs) in by_dataset(records) {
        let kind_is = |r: &&ResultRecord, ks: &[ClassicalKind]| {
            matches!(r.kernel, qkbench::harness::KernelConfig::Classical { kind } if ks.contains(&kind))
        };
        let linear = best(rs.iter().copied().filter(|r| kind_is(r, &[ClassicalKind::Linear])));
        let nonlinear = best(rs.iter().copied().filter(|r| kind_is(r, &[ClassicalKind::RbfScale, ClassicalKind::Poly3])));
        let (q, c) = (best_of(&rs, Category::QuantumIdeal), best_of(&rs, Category::Classical));
        let (Some(l), Some(nl), Some(q), Some(c)) = (linear, nonlinear, q, c) else {
            log::warn!("suitability: {ds} lacks linear, nonlinear classical or ideal quantum records; skipped");
            continue;
        };
        let (gap, delta) = (nl.mean_ba - l.mean_ba, q.mean_ba - c.mean_ba);
        rows.push(vec![text(ds), num(gap), num(delta)]);
        gaps.push(gap);
        deltas.push(delta);
    }
    if gaps.len() < 3 {
        bail!("suitability needs at least 3 datasets with linear, nonlinear classical and ideal quantum records");
    }
    let s = spearman(&gaps, &deltas)?;
    let mut corr = Table::new("correlation", &["n", "rho", "p_value", "p_exact", "p_t_approx"]);
    corr.push(vec![json!(s.n), num(s.rho), num(s.p_value), opt(s.p_exact), num(s.p_t_approx)]);
    Ok(vec![rows, corr])
}

fn compare_kernel_files(inputs: &[PathBuf]) -> Result<Report> {
    let [a, b] = inputs else { bail!("compare-kernels takes exactly two kernel files") };
    let ka = import_kernel(a).with_context(|| format!("reading {}", a.display()))?;
    let kb = import_kernel(b).with_context(|| format!("reading {}", b.display()))?;
    let g = compare_kernels(&ka.values, &kb.values)?;
    let mut t = Table::new("agreement", &["reference", "other", "pearson_r", "spearman_rho", "mae", "rmse", "rel_frobenius", "n_entries"]);
    t.push(vec![
        text(a.display().to_string()),
        text(b.display().to_string()),
        opt(g.pearson_r),
        opt(g.spearman_rho),
        num(g.mae),
        num(g.rmse),
        num(g.rel_frobenius),
        json!(g.n_entries),
    ]);
    Ok(vec![t])
}

pub fn write_report<W: Write>(report: &Report, format: Format, out: &mut W) -> Result<()> {
    match format {
        Format::Json => {
            let mut obj = Map::new();
            for t in report {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| Value::Object(t.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                    .collect();
                obj.insert(t.name.clone(), Value::Array(rows));
            }
            serde_json::to_writer_pretty(&mut *out, &Value::Object(obj))?;
            writeln!(out)?;
        }
        Format::Csv => {
            for (i, t) in report.iter().enumerate() {
                if report.len() > 1 {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    writeln!(out, "# {}", t.name)?;
                }
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&t.columns)?;
                for row in &t.rows {
                    w.write_record(row.iter().map(|v| match v {
                        Value::Null => String::new(),
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    }))?;
                }
                w.flush()?;
            }
        }
    }
    Ok(())
}
