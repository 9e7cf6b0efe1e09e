mod common;

use common::*;
use vi_kit::operators::{ScalarField, PSEUDOMONOTONE_OFFSET};
use vi_kit::{
    load_problem, make_antidiagonal, make_hp_instance, make_pseudomonotone_scaled,
    monotonicity_probe, pseudomonotonicity_probe, save_problem, DenseMatrix, Monotonicity,
    ProblemInstanceFile, VIOperator, Vector,
};

#[test]
fn antidiagonal_small_cases() {
    let p = make_antidiagonal(2).unwrap();
    let a = p.operator.linear_part().unwrap();
    assert_eq!(
        a,
        DenseMatrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
    );
    assert_eq!(
        p.operator.eval(&vector(&[1.0, 0.0])).unwrap(),
        vector(&[0.0, 1.0])
    );

    let a4 = make_antidiagonal(4)
        .unwrap()
        .operator
        .linear_part()
        .unwrap();
    let nonzeros: Vec<(usize, usize, f64)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| a4.get(i, j) != 0.0)
        .map(|(i, j)| (i + 1, j + 1, a4.get(i, j)))
        .collect();
    assert_eq!(
        nonzeros,
        vec![(1, 4, -1.0), (2, 3, -1.0), (3, 2, 1.0), (4, 1, 1.0)]
    );
    assert!(make_antidiagonal(3).is_err());
}

#[test]
fn antidiagonal_eval_matches_matrix_and_is_skew() {
    let mut r = rng(20);
    for m in [2, 6, 500] {
        let p = make_antidiagonal(m).unwrap();
        let a = p.operator.linear_part().unwrap();
        for _ in 0..100 {
            let x = random_vector(&mut r, m, -2.0, 2.0);
            let fx = p.operator.eval(&x).unwrap();
            assert_eq!(fx.as_slice(), naive_matvec(&a, x.as_slice()).as_slice());
            assert!(inner(fx.as_slice(), x.as_slice()).abs() <= 1e-12 * x.norm_sq());
        }
        let report = monotonicity_probe(&p.operator, 100, 3.0, 1).unwrap();
        assert!(report.min_pairing.abs() <= 1e-12);
    }
}

#[test]
fn hp_instances_are_monotone_with_zero_solution() {
    for seed in 0..10 {
        let p = make_hp_instance(8, 5, seed).unwrap();
        assert_eq!(p.operator.class, Monotonicity::Monotone);
        let report = monotonicity_probe(&p.operator, 100, 5.0, seed).unwrap();
        assert!(report.min_pairing >= -1e-10);
        let zero = Vector::zeros(8);
        assert_eq!(p.residual_at(&zero).unwrap().norm_sq(), 0.0);
        assert!(p.feasible_set.violation(&zero).unwrap() == 0.0);
    }
}

#[test]
fn hp_generation_is_deterministic() {
    assert_eq!(
        make_hp_instance(5, 3, 9).unwrap(),
        make_hp_instance(5, 3, 9).unwrap()
    );
    assert_ne!(
        make_hp_instance(5, 3, 9).unwrap(),
        make_hp_instance(5, 3, 10).unwrap()
    );
}

#[test]
fn hp_symmetric_part_equals_gram_plus_diagonal() {
    // ⟨M d, d⟩ = ⟨(B₀B₀ᵀ + D) d, d⟩, so it must be at least the smallest
    // diagonal draw times ‖d‖²
    let p = make_hp_instance(6, 2, 3).unwrap();
    let m = p.operator.linear_part().unwrap();
    let mut r = rng(21);
    for _ in 0..100 {
        let d = random_vector(&mut r, 6, -1.0, 1.0);
        let q = inner(&naive_matvec(&m, d.as_slice()), d.as_slice());
        assert!(q >= 0.1 * d.norm_sq() - 1e-10);
    }
}

#[test]
fn saved_instance_reloads_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let p = make_hp_instance(3, 2, 42).unwrap();
    save_problem(&p, &path).unwrap();
    let back = load_problem(&path).unwrap();
    assert_eq!(back, p);
    assert_eq!(
        back.operator.linear_part().unwrap().as_slice(),
        p.operator.linear_part().unwrap().as_slice()
    );

    let mut r = rng(22);
    for _ in 0..100 {
        let x = random_vector(&mut r, 3, -10.0, 10.0);
        let a = p.operator.eval(&x).unwrap();
        let b = back.operator.eval(&x).unwrap();
        let bits = |v: &Vector| v.as_slice().iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn pseudomonotone_wrapper_round_trips() {
    let p = make_pseudomonotone_scaled(make_hp_instance(4, 3, 1).unwrap()).unwrap();
    let text = ProblemInstanceFile::from(&p).to_json().unwrap();
    let back = ProblemInstanceFile::from_json(&text)
        .unwrap()
        .into_problem()
        .unwrap();
    assert_eq!(back, p);
    assert_eq!(back.meta.generator, "pseudomonotone_hp");
}

#[test]
fn scaled_identity_vanishes_at_origin() {
    let inner_op = VIOperator::affine(
        DenseMatrix::identity(3),
        Vector::zeros(3),
        Monotonicity::Monotone,
    )
    .unwrap();
    let f = VIOperator::scaled(ScalarField::GaussianBump { offset: 0.0 }, inner_op).unwrap();
    assert_eq!(f.eval(&Vector::zeros(3)).unwrap(), Vector::zeros(3));
}

#[test]
fn scaling_preserves_sign_of_pairing() {
    let base = make_hp_instance(5, 3, 7).unwrap();
    let scaled = make_pseudomonotone_scaled(base.clone()).unwrap();
    let mut r = rng(23);
    for _ in 0..100 {
        let x = random_vector(&mut r, 5, -2.0, 2.0);
        let y = random_vector(&mut r, 5, -2.0, 2.0);
        let step = y.sub(&x);
        let a = inner(
            scaled.operator.eval(&x).unwrap().as_slice(),
            step.as_slice(),
        );
        let b = inner(base.operator.eval(&x).unwrap().as_slice(), step.as_slice());
        assert_eq!(a.signum(), b.signum());
        let g = PSEUDOMONOTONE_OFFSET + (-x.norm_sq()).exp();
        assert!((a - g * b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn pseudomonotone_probe_on_wrapper() {
    let scaled = make_pseudomonotone_scaled(make_hp_instance(10, 5, 2).unwrap()).unwrap();
    let report = pseudomonotonicity_probe(&scaled.operator, 1000, 2.0, 5).unwrap();
    assert_eq!(report.pairs, 1000);
    assert!(report.min_consequent >= -1e-10);
}

#[test]
fn pseudomonotone_probe_detects_a_counterexample() {
    let neg = VIOperator::affine(
        DenseMatrix::diag(&[-1.0, -1.0]).unwrap(),
        Vector::zeros(2),
        Monotonicity::Unknown,
    )
    .unwrap();
    assert!(
        pseudomonotonicity_probe(&neg, 200, 1.0, 3)
            .unwrap()
            .min_consequent
            < 0.0
    );
}

#[test]
fn wrapper_requires_monotone_inner() {
    let mut p = make_hp_instance(3, 2, 1).unwrap();
    p.operator.class = Monotonicity::Unknown;
    assert!(make_pseudomonotone_scaled(p).is_err());
}
