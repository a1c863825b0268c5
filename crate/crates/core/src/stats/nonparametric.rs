use super::special::{chi2_sf, normal_two_sided};
use super::{average_ranks, TestMethod, TestReport};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest number of non-zero differences handled by the exact null.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// Paired two-sided Wilcoxon signed-rank test on `a − b`.
///
/// Zero differences are dropped. The statistic is T+, the rank sum of the
/// positive differences. For m ≤ 25 the null distribution over all 2^m sign
/// assignments is counted exactly; ties are handled by working with doubled
/// (hence integral) mid-ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestReport> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("paired arrays of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("wilcoxon needs at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(TestReport {
            method: TestMethod::WilcoxonExact,
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            df: None,
            effect_size: None,
            critical_difference: None,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let t_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).fold(0.0, |acc, r| acc + r);

    if m <= WILCOXON_EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let observed = (2.0 * t_plus).round() as usize;
        let p = exact_signed_rank_p(&doubled, observed);
        return Ok(TestReport {
            method: TestMethod::WilcoxonExact,
            statistic: t_plus,
            p_value: p,
            n: m,
            df: None,
            effect_size: None,
            critical_difference: None,
            degenerate: false,
        });
    }

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 { 1.0 } else { normal_two_sided((t_plus - mean) / var.sqrt()) };
    Ok(TestReport {
        method: TestMethod::WilcoxonNormal,
        statistic: t_plus,
        p_value: p,
        n: m,
        df: None,
        effect_size: None,
        critical_difference: None,
        degenerate: false,
    })
}

/// Two-sided exact p for the signed-rank sum given doubled ranks.
/// counts[s] = number of sign assignments with doubled positive sum s.
fn exact_signed_rank_p(doubled: &[usize], observed: usize) -> f64 {
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let n_assign = (1u64 << doubled.len()) as f64;
    let lower: u64 = counts[..=observed].iter().sum();
    let upper: u64 = counts[observed..].iter().sum();
    (2.0 * lower.min(upper) as f64 / n_assign).min(1.0)
}

/// Friedman test. `scores[j][i]` is method j on block i; higher is better
/// and receives rank 1. Reports the Nemenyi critical difference when k ≤ 20.
pub fn friedman(scores: &[Vec<f64>]) -> Result<TestReport> {
    let (mean_ranks, tie_sum, n) = friedman_ranks(scores)?;
    let k = scores.len();
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = mean_ranks.iter().map(|r| (r * nf).powi(2)).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_sum / (nf * (kf * kf * kf - kf));
    let (stat, p) = if correction <= 1e-12 {
        (0.0, 1.0)
    } else {
        let s = (raw / correction).max(0.0);
        (s, chi2_sf(s, kf - 1.0))
    };
    Ok(TestReport {
        method: TestMethod::Friedman,
        statistic: stat,
        p_value: p,
        n,
        df: Some(kf - 1.0),
        effect_size: None,
        critical_difference: nemenyi_q(k).map(|q| critical_difference(q, k, n)),
        degenerate: correction <= 1e-12,
    })
}

/// Mean rank of each method across blocks (rank 1 = highest score).
pub fn friedman_mean_ranks(scores: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(friedman_ranks(scores)?.0)
}

fn friedman_ranks(scores: &[Vec<f64>]) -> Result<(Vec<f64>, f64, usize)> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::InvalidArgument("friedman needs at least 2 methods".into()));
    }
    let n = scores[0].len();
    if n < 2 {
        return Err(Error::InvalidArgument("friedman needs at least 2 blocks".into()));
    }
    if scores.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("ragged friedman score matrix".into()));
    }
    let mut rank_sums = vec![0.0; k];
    let mut tie_sum = 0.0;
    for i in 0..n {
        let block: Vec<f64> = scores.iter().map(|row| -row[i]).collect();
        let (ranks, ties) = average_ranks(&block);
        for (s, r) in rank_sums.iter_mut().zip(ranks) {
            *s += r;
        }
        tie_sum += ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>();
    }
    Ok((rank_sums.into_iter().map(|s| s / n as f64).collect(), tie_sum, n))
}

/// Studentized range quantile q(0.05; k, ∞) divided by √2, for 2 ≤ k ≤ 20.
pub fn nemenyi_q(k: usize) -> Option<f64> {
    const Q: [f64; 19] = [
        1.9600, 2.3437, 2.5690, 2.7278, 2.8497, 2.9483, 3.0309, 3.1017, 3.1637, 3.2187, 3.2680,
        3.3127, 3.3536, 3.3912, 3.4260, 3.4584, 3.4887, 3.5171, 3.5438,
    ];
    (2..=20).contains(&k).then(|| Q[k - 2])
}

fn critical_difference(q: f64, k: usize, n: usize) -> f64 {
    q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiPair {
    pub a: usize,
    pub b: usize,
    pub rank_difference: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiReport {
    pub critical_difference: f64,
    pub mean_ranks: Vec<f64>,
    pub pairs: Vec<NemenyiPair>,
}

/// Pairwise Nemenyi comparisons at α = 0.05 from Friedman mean ranks.
pub fn nemenyi(mean_ranks: &[f64], n_blocks: usize) -> Result<NemenyiReport> {
    let k = mean_ranks.len();
    let q = nemenyi_q(k).ok_or_else(|| Error::InvalidArgument(format!("nemenyi table covers 2..=20 methods, got {k}")))?;
    if n_blocks == 0 {
        return Err(Error::InvalidArgument("nemenyi needs at least one block".into()));
    }
    let cd = critical_difference(q, k, n_blocks);
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let d = (mean_ranks[a] - mean_ranks[b]).abs();
            pairs.push(NemenyiPair { a, b, rank_difference: d, significant: d > cd });
        }
    }
    Ok(NemenyiReport { critical_difference: cd, mean_ranks: mean_ranks.to_vec(), pairs })
}

/// Kruskal-Wallis H with tie correction and ε² = H/(n − 1).
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestReport> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("kruskal-wallis needs at least 2 groups".into()));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::InvalidArgument("kruskal-wallis group is empty".into()));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len();
    if n < 3 {
        return Err(Error::InvalidArgument("kruskal-wallis needs at least 3 observations".into()));
    }
    let (ranks, ties) = average_ranks(&pooled);
    let nf = n as f64;
    let mut offset = 0;
    let mut acc = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        acc += r * r / g.len() as f64;
        offset += g.len();
    }
    let raw = 12.0 / (nf * (nf + 1.0)) * acc - 3.0 * (nf + 1.0);
    let correction = 1.0 - ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (nf * nf * nf - nf);
    let df = (groups.len() - 1) as f64;
    let (h, p, degenerate) = if correction <= 1e-12 {
        (0.0, 1.0, true)
    } else {
        let h = (raw / correction).max(0.0);
        (h, chi2_sf(h, df), false)
    };
    Ok(TestReport {
        method: TestMethod::KruskalWallis,
        statistic: h,
        p_value: p,
        n,
        df: Some(df),
        effect_size: Some((h / (nf - 1.0)).clamp(0.0, 1.0)),
        critical_difference: None,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    /// Enumerate every sign assignment of the given absolute ranks.
    fn enumeration_p(ranks: &[f64], t_plus: f64) -> f64 {
        let m = ranks.len();
        let (mut lo, mut hi) = (0u64, 0u64);
        for mask in 0u64..(1 << m) {
            let s: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if s <= t_plus + 1e-9 {
                lo += 1;
            }
            if s >= t_plus - 1e-9 {
                hi += 1;
            }
        }
        (2.0 * lo.min(hi) as f64 / (1u64 << m) as f64).min(1.0)
    }

    #[test]
    fn five_same_sign_pairs_give_floor() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.statistic, 15.0);
    }

    #[test]
    fn identical_arrays_are_degenerate() {
        let r = wilcoxon_signed_rank(&[0.7, 0.8], &[0.7, 0.8]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let mut g = SplitMix64::new(42);
        for m in 2..=12 {
            for _ in 0..20 {
                // Coarse grid so ties and zeros appear.
                let a: Vec<f64> = (0..m).map(|_| g.below(7) as f64 * 0.5).collect();
                let b: Vec<f64> = (0..m).map(|_| g.below(7) as f64 * 0.5).collect();
                let r = wilcoxon_signed_rank(&a, &b).unwrap();
                if r.degenerate {
                    continue;
                }
                let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
                let (ranks, _) = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
                assert_eq!(r.p_value, enumeration_p(&ranks, r.statistic), "m={m}");
            }
        }
    }

    #[test]
    fn exact_matches_reference_values() {
        // Two-sided exact p values from a reference implementation.
        let d = [3.0, -1.0, 9.0, 6.0, 8.0, 2.0, -4.0, 7.0];
        let r = wilcoxon_signed_rank(&d, &[0.0; 8]).unwrap();
        assert_eq!(r.statistic, 31.0);
        assert!((r.p_value - 0.078125).abs() < 1e-15);
        let d = [5.0, -2.0, 11.0, -7.0, 1.0, 13.0, 4.0, -3.0, 10.0, 12.0];
        let r = wilcoxon_signed_rank(&d, &[0.0; 10]).unwrap();
        assert_eq!(r.statistic, 44.0);
        assert!((r.p_value - 0.10546875).abs() < 1e-15);
    }

    #[test]
    fn normal_approximation_above_cap() {
        let a: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let b: Vec<f64> = (1..=30).map(|i| if i % 4 == 0 { 2.0 * i as f64 } else { 0.0 }).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, TestMethod::WilcoxonNormal);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }

    #[test]
    fn friedman_strict_order() {
        // Method j scores 3 − j in every block: ranks 1, 2, 3, sums 4, 8, 12.
        let scores = vec![vec![0.9; 4], vec![0.8; 4], vec![0.7; 4]];
        let r = friedman(&scores).unwrap();
        let direct = 12.0 / (4.0 * 3.0 * 4.0) * (16.0 + 64.0 + 144.0) - 3.0 * 4.0 * 4.0;
        assert!((r.statistic - direct).abs() < 1e-12);
        assert!((r.statistic - 8.0).abs() < 1e-12);
        assert_eq!(r.df, Some(2.0));
        assert!((r.p_value - (-4.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn friedman_all_tied() {
        let r = friedman(&[vec![0.5, 0.6], vec![0.5, 0.6], vec![0.5, 0.6]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn friedman_column_permutation_invariant() {
        let s = vec![vec![0.7, 0.8, 0.6, 0.9], vec![0.75, 0.7, 0.65, 0.8], vec![0.6, 0.6, 0.7, 0.85]];
        let p = vec![s[2].clone(), s[0].clone(), s[1].clone()];
        assert!((friedman(&s).unwrap().statistic - friedman(&p).unwrap().statistic).abs() < 1e-12);
        let ranks = friedman_mean_ranks(&s).unwrap();
        let permuted = friedman_mean_ranks(&p).unwrap();
        assert_eq!(ranks[2], permuted[0]);
    }

    #[test]
    fn nemenyi_critical_difference() {
        // k = 3, n = 4: CD = 2.3437 · sqrt(12 / 24).
        let rep = nemenyi(&[1.0, 2.0, 3.0], 4).unwrap();
        assert!((rep.critical_difference - 2.3437 * 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rep.pairs.len(), 3);
        assert!(rep.pairs.iter().find(|p| p.a == 0 && p.b == 2).unwrap().significant);
        assert!(nemenyi_q(21).is_none());
    }

    #[test]
    fn kruskal_separated_groups() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let direct = 12.0 / (6.0 * 7.0) * (36.0 / 3.0 + 225.0 / 3.0) - 3.0 * 7.0;
        assert!((r.statistic - direct).abs() < 1e-12);
        assert!((r.statistic - 3.857142857142857).abs() < 1e-12);
        assert_eq!(r.effect_size, Some(direct / 5.0));
    }

    #[test]
    fn kruskal_identical_groups() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!(r.effect_size.unwrap().abs() < 1e-12);
        assert!(kruskal_wallis(&[vec![1.0], vec![]]).is_err());
    }

    proptest! {
        #[test]
        fn kruskal_effect_size_bounded(groups in proptest::collection::vec(
            proptest::collection::vec(-5i32..5, 1..6), 2..5)) {
            let groups: Vec<Vec<f64>> = groups.into_iter().map(|g| g.into_iter().map(f64::from).collect()).collect();
            let n: usize = groups.iter().map(Vec::len).sum();
            prop_assume!(n >= 3);
            let r = kruskal_wallis(&groups).unwrap();
            let e = r.effect_size.unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }

        #[test]
        fn wilcoxon_p_in_unit_interval(d in proptest::collection::vec(-3i32..4, 2..30)) {
            let a: Vec<f64> = d.iter().map(|&v| f64::from(v)).collect();
            let r = wilcoxon_signed_rank(&a, &vec![0.0; a.len()]).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }
}
