use super::*;
use crate::circuit::FeatureMapKind;
use crate::rng::SplitMix64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::io::BufReader;

fn random_features(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut g = SplitMix64::new(seed);
    DMatrix::from_fn(n, k, |_, _| g.uniform(0.0, PI))
}

fn spec(kind: FeatureMapKind, k: usize, reps: usize) -> FeatureMapSpec {
    FeatureMapSpec::new(kind, k, reps)
}

#[test]
fn ideal_diagonal_is_one_for_every_map() {
    for kind in FeatureMapKind::ALL {
        let x = random_features(5, 4, 11);
        let k = quantum_gram_ideal(&x, &spec(kind, 4, 2)).unwrap();
        for i in 0..5 {
            assert!((k.values[(i, i)] - 1.0).abs() < 1e-12, "{kind}");
        }
        assert!(k.max_asymmetry() < 1e-10);
        assert!(k.min_eigenvalue().unwrap() > -1e-9);
        let cross = quantum_kernel_ideal(&x, &x, &spec(kind, 4, 2)).unwrap();
        assert!((&cross.values - &k.values).amax() < 1e-12);
    }
}

#[test]
fn rot2dof_orthogonal_pair() {
    let x = DMatrix::from_row_slice(1, 2, &[PI, 0.0]);
    let z = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
    let k = quantum_kernel_ideal(&x, &z, &spec(FeatureMapKind::Rot2dof, 2, 1)).unwrap();
    assert!(k.values[(0, 0)].abs() < 1e-15);
    assert_eq!(k.provenance.pathway, Pathway::Ideal);
}

proptest! {
    #[test]
    fn rot2dof_closed_form(x0 in -6.0f64..6.0, z0 in -6.0f64..6.0, shared in -6.0f64..6.0) {
        let x = DMatrix::from_row_slice(1, 2, &[x0, shared]);
        let z = DMatrix::from_row_slice(1, 2, &[z0, shared]);
        let k = quantum_kernel_ideal(&x, &z, &spec(FeatureMapKind::Rot2dof, 2, 1)).unwrap();
        let expected = ((x0 - z0) / 2.0).cos().powi(2);
        prop_assert!((k.values[(0, 0)] - expected).abs() < 1e-12);
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let x = random_features(2, 3, 1);
    assert!(matches!(
        quantum_kernel_ideal(&x, &x, &spec(FeatureMapKind::Belis, 4, 1)),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn width_cap_is_enforced() {
    let x = random_features(1, 12, 1);
    let r = quantum_gram_noisy(&x, &spec(FeatureMapKind::Zzfm, 12, 1), &NoiseModel::REFERENCE);
    assert!(matches!(r, Err(Error::WidthOverCap { .. })));
}

#[test]
fn noiseless_density_matches_ideal() {
    for kind in FeatureMapKind::ALL {
        let s = spec(kind, 4, 2);
        let x = random_features(4, 4, 21);
        let z = random_features(3, 4, 22);
        let ideal = quantum_kernel_ideal(&x, &z, &s).unwrap();
        let noisy = quantum_kernel_noisy(&x, &z, &s, &NoiseModel::noiseless()).unwrap();
        assert!((&ideal.values - &noisy.values).amax() < 1e-10, "{kind}");
    }
}

#[test]
fn noisy_gram_is_symmetric_psd_with_purity_diagonal() {
    let s = spec(FeatureMapKind::Sakhnenko10, 4, 2);
    let x = random_features(6, 4, 5);
    let k = quantum_gram_noisy(&x, &s, &NoiseModel::REFERENCE).unwrap();
    assert!(k.max_asymmetry() < 1e-12);
    assert!(k.min_eigenvalue().unwrap() > -1e-9);
    for i in 0..6 {
        let d = k.values[(i, i)];
        assert!(d < 1.0 && d > 0.25);
    }
    let cross = quantum_kernel_noisy(&x, &x, &s, &NoiseModel::REFERENCE).unwrap();
    assert!((&cross.values - &k.values).amax() < 1e-12);
    assert_eq!(k.provenance.noise, Some(NoiseModel::REFERENCE));
}

#[test]
fn noise_contracts_toward_mixed_limit() {
    for (kind, k) in [(FeatureMapKind::Rot2dof, 2), (FeatureMapKind::Belis, 4)] {
        let s = spec(kind, k, 1);
        let x = random_features(1, k, 31);
        let z = random_features(1, k, 32);
        let limit = 1.0 / (1u32 << s.n_qubits()) as f64;
        let mut prev = f64::INFINITY;
        for step in 0..=20 {
            let p = step as f64 / 20.0;
            let e = quantum_kernel_noisy(&x, &z, &s, &NoiseModel::new(p, p).unwrap()).unwrap().values[(0, 0)];
            let gap = (e - limit).abs();
            assert!(gap <= prev + 1e-12, "{kind} p={p}");
            prev = gap;
        }
        assert!(prev < 1e-12);
    }
}

#[test]
fn classical_examples() {
    let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
    let z = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
    assert_eq!(classical_kernel(&x, &z, ClassicalKind::Linear).unwrap().values[(0, 0)], 11.0);
    let xs = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 5.0]);
    let rbf = classical_kernel(&xs, &xs, ClassicalKind::RbfScale).unwrap();
    assert_eq!(rbf.values[(0, 0)], 1.0);
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
    let b = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
    let poly = classical_kernel(&a, &b, ClassicalKind::Poly3).unwrap();
    assert_eq!(poly.values[(0, 0)], 0.0);
}

#[test]
fn gamma_uses_population_variance_of_training_matrix() {
    // Entries 1, 2, 3, 4: mean 2.5, population variance 1.25, d = 2.
    let train = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let kern = ClassicalKernel::fit(ClassicalKind::RbfScale, &train, "t").unwrap();
    assert!((kern.gamma - 1.0 / 2.5).abs() < 1e-15);
    let test = DMatrix::from_row_slice(1, 2, &[10.0, 10.0]);
    let cross = kern.matrix(&test, &train).unwrap();
    let expected = (-(1.0 / 2.5) * (81.0 + 64.0f64)).exp();
    assert!((cross.values[(0, 0)] - expected).abs() < 1e-300_f64.max(expected * 1e-14));
    let poly = ClassicalKernel::fit(ClassicalKind::Poly3, &train, "t").unwrap();
    assert!((poly.entry(&[1.0, 2.0], &[3.0, 4.0]) - (11.0f64 / 2.5).powi(3)).abs() < 1e-12);
}

#[test]
fn degenerate_gamma_names_the_data() {
    let flat = DMatrix::from_element(3, 2, 0.7);
    match ClassicalKernel::fit(ClassicalKind::RbfScale, &flat, "haberman") {
        Err(Error::DegenerateGamma(s)) => assert!(s.contains("haberman")),
        other => panic!("{other:?}"),
    }
    assert!(ClassicalKernel::fit(ClassicalKind::Linear, &flat, "x").is_ok());
}

#[test]
fn classical_gram_matches_cross() {
    let x = random_features(7, 3, 8);
    for kind in ClassicalKind::ALL {
        let kern = ClassicalKernel::fit(kind, &x, "x").unwrap();
        let g = kern.gram(&x).unwrap();
        let c = kern.matrix(&x, &x).unwrap();
        assert!((&g.values - &c.values).amax() < 1e-12);
    }
}

fn sample_kernel(n: usize, seed: u64) -> DMatrix<f64> {
    let x = random_features(n, 4, seed);
    quantum_gram_ideal(&x, &spec(FeatureMapKind::Belis, 4, 1)).unwrap().values
}

#[test]
fn agreement_identical() {
    let k = sample_kernel(6, 1);
    let a = compare_kernels(&k, &k).unwrap();
    assert_eq!(a.pearson_r, Some(1.0));
    assert_eq!(a.mae, 0.0);
    assert_eq!(a.rmse, 0.0);
    assert_eq!(a.n_entries, 15);
}

#[test]
fn agreement_offset_and_anticorrelation() {
    let k = sample_kernel(6, 2);
    let mut shifted = k.clone();
    let mut negated = k.clone();
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                shifted[(i, j)] += 0.01;
                negated[(i, j)] = -k[(i, j)];
            }
        }
    }
    let a = compare_kernels(&k, &shifted).unwrap();
    assert!((a.mae - 0.01).abs() < 1e-12);
    assert!((a.pearson_r.unwrap() - 1.0).abs() < 1e-12);
    assert!(a.mae <= a.rmse + 1e-15);
    let b = compare_kernels(&k, &negated).unwrap();
    assert!((b.pearson_r.unwrap() + 1.0).abs() < 1e-12);
    assert!((b.spearman_rho.unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn agreement_errors() {
    let k = sample_kernel(4, 3);
    assert!(compare_kernels(&k, &DMatrix::zeros(3, 3)).is_err());
    assert!(compare_kernels(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2)).is_err());
}

#[test]
fn container_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let x = random_features(5, 4, 4);
    let k = quantum_gram_ideal(&x, &spec(FeatureMapKind::Zzfm, 4, 2)).unwrap();
    for name in ["k.qkk", "k.csv"] {
        let path = dir.path().join(name);
        export_kernel(&path, &k, KernelFormat::from_path(&path)).unwrap();
        let back = import_kernel(&path).unwrap();
        assert_eq!(back.provenance.pathway, Pathway::Imported);
        for (a, b) in k.values.iter().zip(back.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits(), "{name}");
        }
        assert!(!back.provenance.indefinite);
    }
    let bytes = std::fs::read(dir.path().join("k.qkk")).unwrap();
    assert_eq!(bytes.len(), HEADER_LEN + 8 * 25);
    assert_eq!(&bytes[..8], b"QKBKERN1");
    assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 5);
    assert_eq!(bytes[24], 0);
    let back = import_kernel(&dir.path().join("k.qkk")).unwrap();
    assert_eq!(back.provenance.spec_hash, k.provenance.spec_hash);
}

#[test]
fn container_rejects_bad_input() {
    let mut buf = Vec::new();
    let mut m = DMatrix::identity(2, 2);
    m[(0, 1)] = f64::NAN;
    write_container(&mut buf, &m, Pathway::Imported, ContentHash(0)).unwrap();
    assert!(matches!(read_container(&mut buf.as_slice()), Err(Error::NonFinite { row: 0, col: 1 })));
    assert!(read_container(&mut &buf[..30]).is_err());
    let mut bad = buf.clone();
    bad[3] = b'X';
    assert!(matches!(read_container(&mut bad.as_slice()), Err(Error::MalformedKernel(_))));
    let mut short = Vec::new();
    write_container(&mut short, &DMatrix::identity(2, 2), Pathway::Ideal, ContentHash(0)).unwrap();
    short.pop();
    assert!(read_container(&mut short.as_slice()).is_err());
    assert!(read_csv(BufReader::new("1,2\n3\n".as_bytes())).is_err());
    assert!(read_csv(BufReader::new("1,nan\n3,4\n".as_bytes())).is_err());
}

#[test]
fn slightly_indefinite_import_is_flagged() {
    // Q diag(λ) Qᵀ with one eigenvalue −0.003, Q from Householder reflection.
    let n = 60;
    let mut g = SplitMix64::new(77);
    let v = nalgebra::DVector::from_fn(n, |_, _| g.normal()).normalize();
    let q = DMatrix::identity(n, n) - &v * v.transpose() * 2.0;
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| if i == 0 { -0.003 } else { 0.5 + i as f64 / n as f64 }));
    let k = &q * lambda * q.transpose();
    let k = (&k + k.transpose()) * 0.5;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hw.qkk");
    let km = KernelMatrix { values: k, provenance: Provenance::new(Pathway::Imported, ContentHash(1), None, 0.0) };
    export_kernel(&path, &km, KernelFormat::Container).unwrap();
    let back = import_kernel(&path).unwrap();
    assert!(back.provenance.indefinite);
    assert!((back.provenance.min_eigenvalue.unwrap() + 0.003).abs() < 1e-9);
}

fn key(reps: usize) -> CacheKey {
    CacheKey {
        dataset: "abc".into(),
        fold: serde_json::json!({"outer": 0, "train": [0, 1, 2]}),
        pipeline: serde_json::json!({"reducer": "pca", "k": 4}),
        kernel: serde_json::to_value(spec(FeatureMapKind::Belis, 4, reps)).unwrap(),
        noise: None,
        pathway: Pathway::Ideal,
        side: "train".into(),
    }
}

#[test]
fn cache_round_trip_miss_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let cache = KernelCache::new(dir.path()).unwrap();
    let k1 = key(1).hash().unwrap();
    let k2 = key(2).hash().unwrap();
    assert_ne!(k1, k2);
    assert_eq!(k1, key(1).hash().unwrap());
    assert!(cache.get(k1).is_none());
    let km = quantum_gram_ideal(&random_features(4, 4, 9), &spec(FeatureMapKind::Belis, 4, 1)).unwrap();
    cache.put(k1, &km, serde_json::json!({"theta": [1.0, 2.0]})).unwrap();
    let hit = cache.get(k1).unwrap();
    assert_eq!(hit.kernel.values, km.values);
    assert_eq!(hit.kernel.provenance, km.provenance);
    assert_eq!(hit.extra["theta"][1], 2.0);
    assert!(cache.get(k2).is_none());
    std::fs::write(dir.path().join(format!("{k1}.qkk")), b"garbage").unwrap();
    assert!(cache.get(k1).is_none());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}
