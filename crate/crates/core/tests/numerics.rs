mod common;

use common::*;
use proptest::prelude::*;
use vi_kit::{dot, matvec, norm, spectral_norm, DenseMatrix, Vector};

#[test]
fn norm_of_ones_500() {
    assert!((norm(&Vector::ones(500)) - 500f64.sqrt()).abs() < 1e-12);
    assert!((norm(&Vector::ones(500)) - 22.3607).abs() < 1e-4);
}

#[test]
fn self_dot_matches_squared_norm() {
    let mut r = rng(1);
    for _ in 0..100 {
        let a = random_vector(&mut r, 17, -3.0, 3.0);
        let n = norm(&a);
        let d = dot(&a, &a).unwrap();
        assert!((d - n * n).abs() <= 1e-12 * d.max(1.0));
    }
}

#[test]
fn matvec_matches_entrywise_sum() {
    let mut r = rng(2);
    for _ in 0..50 {
        let m = random_matrix(&mut r, 7, 9, -2.0, 2.0);
        let x = random_vector(&mut r, 9, -2.0, 2.0);
        let got = matvec(&m, &x).unwrap();
        let want = naive_matvec(&m, x.as_slice());
        for (g, w) in got.as_slice().iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12);
        }
    }
}

#[test]
fn spectral_norm_matches_jacobi_oracle() {
    let mut r = rng(3);
    for _ in 0..20 {
        let m = random_matrix(&mut r, 10, 10, -1.0, 1.0);
        let got = spectral_norm(&m, 1e-12, 200_000).unwrap();
        let want = oracle_spectral_norm(&m);
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }
}

#[test]
fn spectral_norm_rectangular() {
    let mut r = rng(4);
    let m = random_matrix(&mut r, 4, 9, -1.0, 1.0);
    let got = spectral_norm(&m, 1e-12, 200_000).unwrap();
    assert!((got - oracle_spectral_norm(&m)).abs() <= 1e-6 * got);
}

#[test]
fn operator_norm_bound() {
    let mut r = rng(5);
    for _ in 0..5 {
        let m = random_matrix(&mut r, 8, 8, -2.0, 2.0);
        let s = spectral_norm(&m, 1e-10, 200_000).unwrap();
        for _ in 0..100 {
            let x = random_vector(&mut r, 8, -5.0, 5.0);
            assert!(norm(&matvec(&m, &x).unwrap()) <= s * norm(&x) + 1e-8);
        }
    }
}

#[test]
fn spectral_norm_of_diag() {
    let d = DenseMatrix::diag(&[1.0, 2.0, 3.0]).unwrap();
    assert!((spectral_norm(&d, 1e-12, 10_000).unwrap() - 3.0).abs() < 1e-9);
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, dim)
}

proptest! {
    #[test]
    fn dot_is_symmetric((a, b) in (1usize..20).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d)))) {
        let a = Vector::new(a).unwrap();
        let b = Vector::new(b).unwrap();
        prop_assert_eq!(dot(&a, &b).unwrap(), dot(&b, &a).unwrap());
    }

    #[test]
    fn cauchy_schwarz((a, b) in (1usize..20).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d)))) {
        let a = Vector::new(a).unwrap();
        let b = Vector::new(b).unwrap();
        prop_assert!(dot(&a, &b).unwrap().abs() <= norm(&a) * norm(&b) * (1.0 + 1e-12));
    }
}
