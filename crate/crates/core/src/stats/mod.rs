//! Nonparametric tests, correlations, spectral kernel diagnostics and small
//! descriptive helpers. Every function here is pure.

mod correlation;
mod descriptive;
mod nonparametric;
pub mod special;
mod spectral;

pub use correlation::{pearson, spearman, SpearmanResult};
pub(crate) use correlation::pearson_raw as correlation_raw;
pub use descriptive::{cov, mean, ols_slope, sample_std, OlsFit};
pub use nonparametric::{
    friedman, friedman_mean_ranks, kruskal_wallis, nemenyi, nemenyi_q, wilcoxon_signed_rank, NemenyiPair, NemenyiReport,
};
pub use spectral::{eigenvalues_desc, spectral_profile, SpectralProfile};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WilcoxonExact,
    WilcoxonNormal,
    Friedman,
    KruskalWallis,
}

/// Outcome of a hypothesis test. `p_value` is always in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: TestMethod,
    pub statistic: f64,
    pub p_value: f64,
    /// Observations entering the test (after zero-dropping for Wilcoxon).
    pub n: usize,
    pub df: Option<f64>,
    pub effect_size: Option<f64>,
    pub critical_difference: Option<f64>,
    /// Set when the test has no information (e.g. all paired differences zero).
    pub degenerate: bool,
}

/// Average (mid) ranks, 1-based, ascending. Returns the ranks and the tie
/// group sizes (only groups larger than one).
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}
