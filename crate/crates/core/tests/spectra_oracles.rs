use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use subspec_core::gauss::gauss_legendre;
use subspec_core::spectra::{enumerate_levels, eval_eigenfunction, EigenIndex, SpectralCatalog, Spectrum};

/// Brute-force count of `k in Z^m` with `|k|^2 <= cap`, scanning the full cube.
fn brute_lattice_count(m: usize, cap: u64) -> u64 {
    let r = (cap as f64).sqrt() as i64 + 1;
    let side = (2 * r + 1) as u64;
    let mut count = 0;
    for flat in 0..side.pow(m as u32) {
        let mut rest = flat;
        let mut norm = 0u64;
        for _ in 0..m {
            let c = (rest % side) as i64 - r;
            rest /= side;
            norm += (c * c) as u64;
        }
        if norm <= cap {
            count += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn torus_enumeration_is_exhaustive(m in 1usize..=3, lambda_max in 1.0f64..2000.0) {
        let levels = enumerate_levels(SpectralCatalog::FlatTorus(m), lambda_max).unwrap();
        let total: u64 = levels.iter().map(|l| l.multiplicity() as u64).sum();
        prop_assert_eq!(total, brute_lattice_count(m, lambda_max.floor() as u64));
        prop_assert!(levels.windows(2).all(|w| w[0].lambda < w[1].lambda));
        prop_assert!(levels.iter().all(|l| l.lambda as f64 <= lambda_max));
    }

    #[test]
    fn sphere_enumeration_is_exhaustive(lambda_max in 1.0f64..1e4) {
        let levels = enumerate_levels(SpectralCatalog::Sphere2, lambda_max).unwrap();
        let total: u64 = levels.iter().map(|l| l.multiplicity() as u64).sum();
        let want: u64 = (0u64..).take_while(|l| (l * (l + 1)) as f64 <= lambda_max).map(|l| 2 * l + 1).sum();
        prop_assert_eq!(total, want);
    }
}

#[test]
fn circle_enumeration_up_to_ten_thousand() {
    let levels = enumerate_levels(SpectralCatalog::FlatTorus(1), 1e4).unwrap();
    assert_eq!(levels.len(), 101);
    assert!(levels.iter().skip(1).all(|l| l.multiplicity() == 2));
}

#[test]
fn torus_orthonormality_is_exact_on_a_fine_enough_grid() {
    let catalog = SpectralCatalog::FlatTorus(2);
    let indices: Vec<EigenIndex> = enumerate_levels(catalog, 10.0)
        .unwrap()
        .into_iter()
        .flat_map(|l| l.indices)
        .collect();
    // max |k_i| = 3, so 2 * 3 + 1 = 7 points per axis suffice.
    let n = 7;
    let h = 2.0 * PI / n as f64;
    let nodes: Vec<[f64; 2]> = (0..n * n).map(|f| [(f / n) as f64 * h, (f % n) as f64 * h]).collect();
    let values: Vec<Vec<Complex64>> = indices
        .iter()
        .map(|i| nodes.iter().map(|x| eval_eigenfunction(catalog, i, x).unwrap()).collect())
        .collect();
    for (a, va) in values.iter().enumerate() {
        for (b, vb) in values.iter().enumerate() {
            let ip: Complex64 = va.iter().zip(vb).map(|(x, y)| x * y.conj() * h * h).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((ip - Complex64::new(want, 0.0)).norm() < 1e-13, "{a} {b}: {ip}");
        }
    }
}

#[test]
fn sphere_orthonormality_by_gauss_legendre() {
    let catalog = SpectralCatalog::Sphere2;
    let indices: Vec<EigenIndex> = enumerate_levels(catalog, 12.0 * 13.0)
        .unwrap()
        .into_iter()
        .flat_map(|l| l.indices)
        .collect();
    let n_theta = 14;
    let n_phi = 28;
    let (x, w) = gauss_legendre(n_theta);
    let h = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::new();
    for (xi, wi) in x.iter().zip(&w) {
        for j in 0..n_phi {
            nodes.push(([xi.acos(), j as f64 * h], wi * h));
        }
    }
    let values: Vec<Vec<Complex64>> = indices
        .iter()
        .map(|i| nodes.iter().map(|(p, _)| eval_eigenfunction(catalog, i, p).unwrap()).collect())
        .collect();
    for (a, va) in values.iter().enumerate() {
        for (b, vb) in values.iter().enumerate().skip(a) {
            let ip: Complex64 = va.iter().zip(vb).zip(&nodes).map(|((x, y), (_, w))| x * y.conj() * *w).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((ip - Complex64::new(want, 0.0)).norm() <= 1e-12, "{} {}: {ip}", indices[a], indices[b]);
        }
    }
}

#[test]
fn weyl_law_on_the_flat_two_torus() {
    let spec = Spectrum::new(SpectralCatalog::FlatTorus(2), 1e6).unwrap();
    let t = 1e6;
    let ratio = spec.weyl_count(t).unwrap() as f64 / (spec.catalog.weyl_constant() * t);
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    assert!((spec.catalog.weyl_constant() - PI).abs() < 1e-14);
}

#[test]
fn weyl_law_on_the_sphere() {
    let spec = Spectrum::new(SpectralCatalog::Sphere2, 1e6).unwrap();
    let t = 1e6;
    let ratio = spec.weyl_count(t).unwrap() as f64 / (spec.catalog.weyl_constant() * t);
    assert!((spec.catalog.weyl_constant() - 1.0).abs() < 1e-14);
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
}
