use super::*;
use crate::rng::SplitMix64;
use proptest::prelude::*;

fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut g = SplitMix64::new(seed);
    DMatrix::from_fn(n, d, |_, j| g.normal() * (j + 1) as f64 + j as f64)
}

fn labels(n: usize) -> Vec<i8> {
    (0..n).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect()
}

#[test]
fn standard_scaler_centres_and_scales() {
    let x = random(40, 3, 1);
    let out = fit_standard_scaler(&x).apply(&x);
    for j in 0..3 {
        let col = out.column(j);
        let m = col.mean();
        let v = col.iter().map(|t| (t - m).powi(2)).sum::<f64>() / 40.0;
        assert!(m.abs() < 1e-10);
        assert!((v - 1.0).abs() < 1e-10);
    }
}

#[test]
fn constant_feature_keeps_unit_scale() {
    let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
    match fit_standard_scaler(&x) {
        FittedTransform::StandardScale { scales, .. } => assert_eq!(scales[1], 1.0),
        _ => unreachable!(),
    }
}

#[test]
fn minmax_maps_training_range_to_unit_interval() {
    let x = random(20, 2, 2);
    let out = fit_minmax_scaler(&x).apply(&x);
    for j in 0..2 {
        assert_eq!(out.column(j).min(), 0.0);
        assert!((out.column(j).max() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn imputer_uses_nonzero_training_median() {
    let x = DMatrix::from_row_slice(5, 2, &[0.0, 1.0, 4.0, 0.0, 2.0, 3.0, 0.0, 2.0, 9.0, 5.0]);
    let imp = fit_imputer(&x, &[0]);
    // Non-zero values of column 0: 4, 2, 9 → median 4.
    assert_eq!(imp, FittedTransform::Impute { columns: vec![0], medians: vec![4.0] });
    let out = imp.apply(&x);
    assert_eq!(out[(0, 0)], 4.0);
    assert_eq!(out[(1, 1)], 0.0);
}

#[test]
fn pca_axis_aligned_variance() {
    let mut g = SplitMix64::new(3);
    let x = DMatrix::from_fn(30, 2, |_, j| if j == 0 { g.normal() * 3.0 } else { 0.0 });
    let p = pca_fit(&x, 1).unwrap();
    assert!((p.components[(0, 0)] - 1.0).abs() < 1e-12);
    assert!(p.components[(0, 1)].abs() < 1e-12);
}

#[test]
fn pca_diagonal_direction() {
    // Points on the line x1 = x0: first component (1, 1)/√2, variance 2·var(x0).
    let x = DMatrix::from_row_slice(4, 2, &[-3.0, -3.0, -1.0, -1.0, 1.0, 1.0, 3.0, 3.0]);
    let p = pca_fit(&x, 2).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((p.components[(0, 0)] - r).abs() < 1e-12);
    assert!((p.components[(0, 1)] - r).abs() < 1e-12);
    assert!((p.explained_variance[0] - 2.0 * 20.0 / 3.0).abs() < 1e-10);
    assert!(p.explained_variance[1].abs() < 1e-10);
}

#[test]
fn full_rank_pca_preserves_distances() {
    let x = random(15, 4, 4);
    let out = pca_fit(&x, 4).unwrap().transform(&x);
    for i in 0..15 {
        for j in 0..15 {
            let a = (x.row(i) - x.row(j)).norm();
            let b = (out.row(i) - out.row(j)).norm();
            assert!((a - b).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_orthonormal_and_sorted(seed in 0u64..10_000, d in 2usize..7, n in 3usize..25) {
        let x = random(n, d, seed);
        let p = pca_fit(&x, d).unwrap();
        let gram = &p.components * p.components.transpose();
        prop_assert!((gram - DMatrix::<f64>::identity(d, d)).amax() < 1e-8);
        prop_assert!(p.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn nmf_nonnegative_and_monotone(seed in 0u64..10_000, k in 1usize..4) {
        let mut g = SplitMix64::new(seed);
        let x = DMatrix::from_fn(12, 5, |_, _| g.next_f64());
        let fit = nmf_fit(&x, k, 42).unwrap();
        prop_assert!(fit.components.iter().all(|&v| v >= 0.0));
        prop_assert!(fit.train_coefficients.iter().all(|&v| v >= 0.0));
        prop_assert!(fit.loss_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(fit.transform(&x).iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn nmf_recovers_rank_one() {
    let u = [0.2, 1.0, 0.5, 0.8, 0.1, 0.9];
    let v = [0.3, 0.7, 1.0, 0.4];
    let x = DMatrix::from_fn(6, 4, |i, j| u[i] * v[j]);
    let fit = nmf_fit(&x, 1, 42).unwrap();
    let recon = &fit.train_coefficients * &fit.components;
    assert!((&x - recon).norm() < 1e-3 * x.norm());
    let w = fit.transform(&x);
    assert!((&x - w * &fit.components).norm() < 1e-3 * x.norm());
}

#[test]
fn nmf_transform_is_row_independent() {
    let mut g = SplitMix64::new(8);
    let x = DMatrix::from_fn(10, 4, |_, _| g.next_f64());
    let fit = nmf_fit(&x, 2, 42).unwrap();
    let all = fit.transform(&x);
    let single = fit.transform(&x.rows(3, 1).into_owned());
    assert_eq!(all.row(3).into_owned(), single.row(0).into_owned());
    // Out-of-range test rows are clamped, never negative coefficients.
    let neg = DMatrix::from_row_slice(1, 4, &[-0.5, 0.2, 1.4, 0.0]);
    assert!(fit.transform(&neg).iter().all(|&v| v >= 0.0 && v.is_finite()));
}

/// Direct transcription of recursive CART: recompute both child impurities
/// from scratch for every candidate threshold.
fn naive_importances(x: &DMatrix<f64>, y: &[i8]) -> Vec<f64> {
    fn g(ids: &[usize], y: &[i8]) -> f64 {
        if ids.is_empty() {
            return 0.0;
        }
        let p = ids.iter().filter(|&&i| y[i] == 1).count() as f64 / ids.len() as f64;
        2.0 * p * (1.0 - p)
    }
    fn grow(x: &DMatrix<f64>, y: &[i8], ids: Vec<usize>, total: f64, imp: &mut [f64]) {
        let parent = g(&ids, y);
        if ids.len() < 2 || parent == 0.0 {
            return;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..x.ncols() {
            let mut vals: Vec<f64> = ids.iter().map(|&i| x[(i, f)]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<usize>, Vec<usize>) = ids.iter().partition(|&&i| x[(i, f)] <= t);
                let n = ids.len() as f64;
                let dec = parent - (l.len() as f64 * g(&l, y) + r.len() as f64 * g(&r, y)) / n;
                if best.is_none_or(|b| dec > b.0 + 1e-12) {
                    best = Some((dec, f, t));
                }
            }
        }
        let Some((dec, f, t)) = best else { return };
        imp[f] += ids.len() as f64 / total * dec;
        let (l, r): (Vec<usize>, Vec<usize>) = ids.iter().partition(|&&i| x[(i, f)] <= t);
        grow(x, y, l, total, imp);
        grow(x, y, r, total, imp);
    }
    let mut imp = vec![0.0; x.ncols()];
    grow(x, y, (0..x.nrows()).collect(), x.nrows() as f64, &mut imp);
    let s: f64 = imp.iter().sum();
    imp.iter().map(|v| v / s).collect()
}

#[test]
fn tree_importances_match_naive_cart() {
    let mut g = SplitMix64::new(21);
    for _ in 0..20 {
        let x = DMatrix::from_fn(30, 4, |_, _| (g.normal() * 4.0).round() / 4.0);
        let y: Vec<i8> = (0..30).map(|i| if x[(i, 0)] + 0.5 * x[(i, 2)] + g.normal() > 0.0 { 1 } else { -1 }).collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let ours = gini_importances(&x, &y);
        let oracle = naive_importances(&x, &y);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{ours:?} vs {oracle:?}");
        }
        assert!((ours.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn tree_ties_go_to_lowest_feature() {
    let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
    let imp = gini_importances(&x, &[-1, -1, 1, 1]);
    assert_eq!(imp, vec![1.0, 0.0]);
    assert_eq!(select_top_k(&[0.2, 0.5, 0.2, 0.1], 2), vec![0, 1]);
    assert_eq!(select_top_k(&[0.0, 0.0, 0.0], 2), vec![0, 1]);
}

#[test]
fn pipelines_have_the_documented_chains() {
    let x = random(30, 5, 6);
    let y = labels(30);
    let kinds = |r: Reducer| -> Vec<TransformKind> {
        fit_pipeline(&PipelineSpec::new(r, 3), &x, &y).unwrap().steps.iter().map(|s| s.kind()).collect()
    };
    assert_eq!(kinds(Reducer::Pca), vec![TransformKind::StandardScale, TransformKind::Pca]);
    assert_eq!(kinds(Reducer::Tree), vec![TransformKind::StandardScale, TransformKind::TreeSelect]);
    assert_eq!(kinds(Reducer::Nmf), vec![TransformKind::MinmaxScale, TransformKind::Nmf]);
    let spec = PipelineSpec::new(Reducer::Pca, 2).with_imputation(vec![1]);
    assert_eq!(fit_pipeline(&spec, &x, &y).unwrap().steps[0].kind(), TransformKind::Impute);
}

#[test]
fn tree_with_k_equal_d_keeps_everything() {
    let x = random(20, 4, 9);
    let p = fit_pipeline(&PipelineSpec::new(Reducer::Tree, 4), &x, &labels(20)).unwrap();
    match &p.steps[1] {
        FittedTransform::TreeSelect { indices, .. } => assert_eq!(indices, &vec![0, 1, 2, 3]),
        _ => unreachable!(),
    }
}

#[test]
fn transform_is_pure_and_checks_shape() {
    let x = random(20, 4, 10);
    let y = labels(20);
    for r in Reducer::ALL {
        let p = fit_pipeline(&PipelineSpec::new(r, 2), &x, &y).unwrap();
        let t = random(3, 4, 11);
        let a = p.transform(&t).unwrap();
        assert_eq!(a, p.transform(&t).unwrap());
        assert_eq!(a.ncols(), 2);
        assert_eq!(p.k_out(), 2);
        assert!(p.transform(&random(3, 5, 1)).is_err());
    }
}

#[test]
fn pipeline_argument_errors() {
    let x = random(10, 3, 12);
    let y = labels(10);
    assert!(fit_pipeline(&PipelineSpec::new(Reducer::Pca, 4), &x, &y).is_err());
    assert!(fit_pipeline(&PipelineSpec::new(Reducer::Pca, 0), &x, &y).is_err());
    assert!(fit_pipeline(&PipelineSpec::new(Reducer::Pca, 2), &x.rows(0, 1).into_owned(), &y[..1]).is_err());
    assert!(fit_pipeline(&PipelineSpec::new(Reducer::Pca, 2).with_imputation(vec![7]), &x, &y).is_err());
}
