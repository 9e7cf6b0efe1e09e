//! Fixtures shared by the benchmarks.

use vi_kit::harness::alg1_validated;
use vi_kit::{make_hp_instance, DenseMatrix, SolverConfig, VIProblem, Vector};

/// Random polyhedral instance; its constraint matrix and rhs double as a
/// projection workload.
pub fn instance(m: usize, k: usize) -> VIProblem {
    make_hp_instance(m, k, 7).expect("generator accepts positive sizes")
}

pub fn polyhedron(m: usize, k: usize) -> (DenseMatrix, Vector) {
    match &instance(m, k).feasible_set {
        vi_kit::FeasibleSet::Polyhedron(p) => (p.matrix().clone(), p.rhs().clone()),
        _ => unreachable!("hp instances are polyhedral"),
    }
}

/// A point well outside the polyhedron so several constraints become active.
pub fn outside_point(m: usize) -> Vector {
    Vector::ones(m).scale(3.0)
}

pub fn operator_matrix(m: usize) -> DenseMatrix {
    instance(m, 1)
        .operator
        .linear_part()
        .expect("affine operator")
}

pub fn solver_config() -> SolverConfig {
    SolverConfig {
        record_history: false,
        check_invariants: false,
        ..alg1_validated()
    }
}
