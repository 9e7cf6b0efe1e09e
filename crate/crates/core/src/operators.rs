//! VI operators, test-problem generators and sampling probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::feasible::{residual, FeasibleSet};
use crate::numerics::{dot_slices, matvec, DenseMatrix, Vector};

/// Residual norm a declared solution must meet.
pub const KNOWN_SOLUTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Monotone,
    PseudoMonotone,
    Unknown,
}

/// Positive scalar field multiplying a scaled operator:
/// `g(x) = offset + exp(−‖x‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarField {
    GaussianBump { offset: f64 },
}

impl ScalarField {
    pub fn eval(&self, x: &Vector) -> f64 {
        match *self {
            ScalarField::GaussianBump { offset } => offset + (-x.norm_sq()).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorRule {
    /// `F(x) = M x + q`.
    Affine { matrix: DenseMatrix, offset: Vector },
    /// `F(x) = A x` with `A` the skew antidiagonal matrix
    /// (`−1` above the antidiagonal's midpoint, `+1` below).
    Antidiagonal { dim: usize },
    /// `F(x) = g(x) · F_inner(x)`.
    Scaled {
        field: ScalarField,
        inner: Box<VIOperator>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VIOperator {
    pub rule: OperatorRule,
    pub class: Monotonicity,
}

impl VIOperator {
    pub fn affine(matrix: DenseMatrix, offset: Vector, class: Monotonicity) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::invalid("affine operator", "matrix must be square"));
        }
        check_dim(matrix.rows(), offset.dim())?;
        Ok(VIOperator {
            rule: OperatorRule::Affine { matrix, offset },
            class,
        })
    }

    pub fn antidiagonal(dim: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::invalid(
                "antidiagonal operator",
                format!("dimension must be even and at least 2, got {dim}"),
            ));
        }
        Ok(VIOperator {
            rule: OperatorRule::Antidiagonal { dim },
            class: Monotonicity::Monotone,
        })
    }

    /// Multiplies `inner` by a positive scalar field. A positive multiple of a
    /// monotone operator keeps the sign of `⟨F(x), y − x⟩`, hence is
    /// pseudo-monotone.
    pub fn scaled(field: ScalarField, inner: VIOperator) -> Result<Self> {
        let ScalarField::GaussianBump { offset } = field;
        if !(offset >= 0.0) || !offset.is_finite() {
            return Err(Error::invalid(
                "scalar field",
                "offset must be finite and nonnegative",
            ));
        }
        let class = match inner.class {
            Monotonicity::Monotone | Monotonicity::PseudoMonotone => Monotonicity::PseudoMonotone,
            Monotonicity::Unknown => Monotonicity::Unknown,
        };
        Ok(VIOperator {
            rule: OperatorRule::Scaled {
                field,
                inner: Box::new(inner),
            },
            class,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.rule {
            OperatorRule::Affine { matrix, .. } => matrix.rows(),
            OperatorRule::Antidiagonal { dim } => *dim,
            OperatorRule::Scaled { inner, .. } => inner.dim(),
        }
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.dim())?;
        let out = match &self.rule {
            OperatorRule::Affine { matrix, offset } => matvec(matrix, x)?.add(offset),
            OperatorRule::Antidiagonal { dim } => {
                let m = *dim;
                let xs = x.as_slice();
                // row i has its single nonzero in column m−1−i (0-based)
                Vector::from_raw(
                    (0..m)
                        .map(|i| {
                            let j = m - 1 - i;
                            if j > i {
                                -xs[j]
                            } else {
                                xs[j]
                            }
                        })
                        .collect(),
                )
            }
            OperatorRule::Scaled { field, inner } => inner.eval(x)?.scale(field.eval(x)),
        };
        if !out.is_finite() {
            return Err(Error::NonFinite("operator value"));
        }
        Ok(out)
    }

    /// The matrix of the operator when it is linear or affine.
    pub fn linear_part(&self) -> Option<DenseMatrix> {
        match &self.rule {
            OperatorRule::Affine { matrix, .. } => Some(matrix.clone()),
            OperatorRule::Antidiagonal { dim } => Some(antidiagonal_matrix(*dim)),
            OperatorRule::Scaled { .. } => None,
        }
    }
}

fn antidiagonal_matrix(m: usize) -> DenseMatrix {
    let mut data = vec![0.0; m * m];
    for i in 0..m {
        let j = m - 1 - i;
        data[i * m + j] = if j > i { -1.0 } else { 1.0 };
    }
    DenseMatrix::from_row_major(m, m, data).expect("finite entries")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    pub seed: Option<u64>,
    pub m: usize,
    /// Number of inequality constraints, when the set is a polyhedron.
    pub k: Option<usize>,
}

/// `VI(F, C)`: find `x ∈ C` with `⟨F(x), y − x⟩ ≥ 0` for all `y ∈ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct VIProblem {
    pub operator: VIOperator,
    pub feasible_set: FeasibleSet,
    pub known_solution: Option<Vector>,
    pub meta: InstanceMeta,
}

impl VIProblem {
    pub fn new(
        operator: VIOperator,
        feasible_set: FeasibleSet,
        known_solution: Option<Vector>,
        meta: InstanceMeta,
    ) -> Result<Self> {
        check_dim(operator.dim(), feasible_set.dim())?;
        if let Some(sol) = &known_solution {
            check_dim(operator.dim(), sol.dim())?;
            let r = residual(&feasible_set, &operator.eval(sol)?, sol)?;
            let norm = r.norm_sq().sqrt();
            if norm > KNOWN_SOLUTION_TOL {
                return Err(Error::invalid(
                    "known solution",
                    format!("residual norm {norm:e} exceeds {KNOWN_SOLUTION_TOL:e}"),
                ));
            }
        }
        Ok(VIProblem {
            operator,
            feasible_set,
            known_solution,
            meta,
        })
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn residual_at(&self, x: &Vector) -> Result<Vector> {
        residual(&self.feasible_set, &self.operator.eval(x)?, x)
    }
}

/// Unconstrained skew problem on `ℝ^m` whose unique solution is the origin.
pub fn make_antidiagonal(m: usize) -> Result<VIProblem> {
    let operator = VIOperator::antidiagonal(m)?;
    VIProblem::new(
        operator,
        FeasibleSet::whole_space(m)?,
        Some(Vector::zeros(m)),
        InstanceMeta {
            generator: "antidiagonal".into(),
            seed: None,
            m,
            k: None,
        },
    )
}

/// Random affine problem `F(x) = (B₀B₀ᵀ + S + D) x` over `{x : G x ≤ g}`
/// with `g ≥ 0`, so the origin is the unique solution.
///
/// Draw order from a ChaCha8 stream seeded with `seed`: `B₀` and `R`
/// row-major with entries in `[−2, 2)`, then `diag(D)` in `[0.1, 2)`,
/// then `G` row-major in `[−2, 2)`, then `g` in `[0, 1)`. `S = (R − Rᵀ)/2`.
pub fn make_hp_instance(m: usize, k: usize, seed: u64) -> Result<VIProblem> {
    if m == 0 || k == 0 {
        return Err(Error::invalid(
            "instance size",
            "m and k must be at least 1",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    };
    let factor = DenseMatrix::from_row_major(m, m, uniform(m * m, -2.0, 2.0))?;
    let raw = uniform(m * m, -2.0, 2.0);
    let diag = uniform(m, 0.1, 2.0);
    let constraints = DenseMatrix::from_row_major(k, m, uniform(k * m, -2.0, 2.0))?;
    let rhs = Vector::new(uniform(k, 0.0, 1.0))?;

    let mut skew = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            skew[i * m + j] = (raw[i * m + j] - raw[j * m + i]) / 2.0;
        }
    }
    let matrix = factor
        .matmul(&factor.transpose())?
        .add(&DenseMatrix::from_row_major(m, m, skew)?)?
        .add(&DenseMatrix::diag(&diag)?)?;

    let operator = VIOperator::affine(matrix, Vector::zeros(m), Monotonicity::Monotone)?;
    VIProblem::new(
        operator,
        FeasibleSet::polyhedron(constraints, rhs)?,
        Some(Vector::zeros(m)),
        InstanceMeta {
            generator: "hp".into(),
            seed: Some(seed),
            m,
            k: Some(k),
        },
    )
}

/// Offset of the scalar field used by [`make_pseudomonotone_scaled`].
pub const PSEUDOMONOTONE_OFFSET: f64 = 0.1;

/// Wraps a monotone problem as `F(x) = (0.1 + e^{−‖x‖²}) F_inner(x)`.
pub fn make_pseudomonotone_scaled(inner: VIProblem) -> Result<VIProblem> {
    if inner.operator.class != Monotonicity::Monotone {
        return Err(Error::invalid("inner operator", "must be tagged monotone"));
    }
    let operator = VIOperator::scaled(
        ScalarField::GaussianBump {
            offset: PSEUDOMONOTONE_OFFSET,
        },
        inner.operator,
    )?;
    let mut meta = inner.meta;
    meta.generator = format!("pseudomonotone_{}", meta.generator);
    VIProblem::new(operator, inner.feasible_set, inner.known_solution, meta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub pairs: usize,
    /// Smallest observed `⟨F(x) − F(y), x − y⟩`.
    pub min_pairing: f64,
}

/// Samples `n_pairs` point pairs uniformly in the ball of `radius` and
/// records the smallest monotonicity pairing.
pub fn monotonicity_probe(
    operator: &VIOperator,
    n_pairs: usize,
    radius: f64,
    seed: u64,
) -> Result<MonotonicityReport> {
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = operator.dim();
    let mut min_pairing = f64::INFINITY;
    for _ in 0..n_pairs {
        let x = sample_ball(&mut rng, dim, radius);
        let y = sample_ball(&mut rng, dim, radius);
        let diff_f = operator.eval(&x)?.sub(&operator.eval(&y)?);
        let pairing = dot_slices(diff_f.as_slice(), x.sub(&y).as_slice());
        min_pairing = min_pairing.min(pairing);
    }
    Ok(MonotonicityReport {
        pairs: n_pairs,
        min_pairing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoMonotonicityReport {
    pub pairs: usize,
    /// Pairs whose sampled `y` already satisfied `⟨F(x), y − x⟩ ≥ 0`; the
    /// others were reflected through `x`.
    pub direct_pairs: usize,
    /// Smallest `⟨F(y), y − x⟩` over all pairs.
    pub min_consequent: f64,
}

/// Checks the implication `⟨F(x), y − x⟩ ≥ 0 ⇒ ⟨F(y), y − x⟩ ≥ 0` on
/// `n_pairs` pairs satisfying the premise. `x` and a candidate `y` are drawn
/// in the ball of `radius`; when the premise fails, `y` is replaced by its
/// reflection `2x − y`, for which it holds.
pub fn pseudomonotonicity_probe(
    operator: &VIOperator,
    n_pairs: usize,
    radius: f64,
    seed: u64,
) -> Result<PseudoMonotonicityReport> {
    if n_pairs == 0 {
        return Err(Error::invalid("n_pairs", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = operator.dim();
    let mut direct_pairs = 0;
    let mut min_consequent = f64::INFINITY;
    for _ in 0..n_pairs {
        let x = sample_ball(&mut rng, dim, radius);
        let y = sample_ball(&mut rng, dim, radius);
        let mut step = y.sub(&x);
        if dot_slices(operator.eval(&x)?.as_slice(), step.as_slice()) >= 0.0 {
            direct_pairs += 1;
        } else {
            step = step.scale(-1.0);
        }
        let y = x.add(&step);
        let consequent = dot_slices(operator.eval(&y)?.as_slice(), step.as_slice());
        min_consequent = min_consequent.min(consequent);
    }
    Ok(PseudoMonotonicityReport {
        pairs: n_pairs,
        direct_pairs,
        min_consequent,
    })
}

fn sample_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vector {
    loop {
        let direction: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot_slices(&direction, &direction).sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / dim as f64);
        return Vector::from_raw(direction.into_iter().map(|d| d * r / norm).collect());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn affine_identity_eval() {
        let op = VIOperator::affine(
            DenseMatrix::identity(3),
            Vector::zeros(3),
            Monotonicity::Monotone,
        )
        .unwrap();
        let x = v(&[1.0, -2.0, 0.5]);
        assert_eq!(op.eval(&x).unwrap(), x);
        assert!(op.eval(&v(&[1.0])).is_err());
    }

    #[test]
    fn antidiagonal_matrices() {
        let p2 = make_antidiagonal(2).unwrap();
        assert_eq!(p2.operator.eval(&v(&[1.0, 0.0])).unwrap(), v(&[0.0, 1.0]));
        assert_eq!(
            p2.operator.linear_part().unwrap(),
            DenseMatrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
        );

        let a4 = VIOperator::antidiagonal(4).unwrap().linear_part().unwrap();
        let mut nonzeros = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if a4.get(i, j) != 0.0 {
                    nonzeros.push((i + 1, j + 1, a4.get(i, j)));
                }
            }
        }
        assert_eq!(
            nonzeros,
            vec![(1, 4, -1.0), (2, 3, -1.0), (3, 2, 1.0), (4, 1, 1.0)]
        );
        assert!(make_antidiagonal(3).is_err());
        assert!(make_antidiagonal(0).is_err());
    }

    #[test]
    fn antidiagonal_implicit_matches_matrix() {
        let op = VIOperator::antidiagonal(6).unwrap();
        let a = op.linear_part().unwrap();
        let x = v(&[0.3, -1.2, 2.0, 0.7, -0.1, 5.0]);
        assert_eq!(op.eval(&x).unwrap(), matvec(&a, &x).unwrap());
    }

    #[test]
    fn scaled_at_origin_is_zero() {
        let inner = VIOperator::affine(
            DenseMatrix::identity(4),
            Vector::zeros(4),
            Monotonicity::Monotone,
        )
        .unwrap();
        let op = VIOperator::scaled(ScalarField::GaussianBump { offset: 0.0 }, inner).unwrap();
        assert!(op.eval(&Vector::zeros(4)).unwrap().is_zero());
        assert_eq!(op.class, Monotonicity::PseudoMonotone);
    }

    #[test]
    fn hp_instance_has_zero_residual_at_origin() {
        let p = make_hp_instance(5, 3, 7).unwrap();
        let zero = Vector::zeros(5);
        assert!(p.operator.eval(&zero).unwrap().is_zero());
        assert!(p.residual_at(&zero).unwrap().is_zero());
        assert_eq!(p.meta.k, Some(3));
    }

    #[test]
    fn hp_instance_is_deterministic_per_seed() {
        assert_eq!(
            make_hp_instance(4, 2, 11).unwrap(),
            make_hp_instance(4, 2, 11).unwrap()
        );
        assert_ne!(
            make_hp_instance(4, 2, 11).unwrap(),
            make_hp_instance(4, 2, 12).unwrap()
        );
    }

    #[test]
    fn wrong_known_solution_rejected() {
        let op = VIOperator::affine(
            DenseMatrix::identity(2),
            Vector::zeros(2),
            Monotonicity::Monotone,
        )
        .unwrap();
        let res = VIProblem::new(
            op,
            FeasibleSet::whole_space(2).unwrap(),
            Some(v(&[1.0, 0.0])),
            InstanceMeta {
                generator: "test".into(),
                seed: None,
                m: 2,
                k: None,
            },
        );
        assert!(res.is_err());
    }

    #[test]
    fn probes_on_identity_and_skew() {
        let id = VIOperator::affine(
            DenseMatrix::identity(3),
            Vector::zeros(3),
            Monotonicity::Monotone,
        )
        .unwrap();
        let r = monotonicity_probe(&id, 50, 2.0, 1).unwrap();
        assert!(r.min_pairing > 0.0);
        let skew = VIOperator::antidiagonal(4).unwrap();
        let r = monotonicity_probe(&skew, 50, 2.0, 1).unwrap();
        assert!(r.min_pairing.abs() <= 1e-12);
        assert!(monotonicity_probe(&skew, 0, 1.0, 0).is_err());
    }

    #[test]
    fn pseudomonotone_wrapper_requires_monotone_inner() {
        let p = make_pseudomonotone_scaled(make_hp_instance(3, 2, 5).unwrap()).unwrap();
        assert_eq!(p.operator.class, Monotonicity::PseudoMonotone);
        assert!(make_pseudomonotone_scaled(p).is_err());
    }
}
