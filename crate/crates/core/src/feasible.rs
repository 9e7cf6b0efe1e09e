//! Feasible sets and their metric projections.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numerics::{cholesky, cholesky_solve, dot_slices, matvec, DenseMatrix, Vector};

/// Default KKT tolerance for polyhedral projection.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;

const RANK_TOL: f64 = 1e-10;
const CHOLESKY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vector,
    /// Indices of constraints active at the solution (polyhedra only).
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
}

impl ProjectionResult {
    fn exact(point: Vector) -> Self {
        ProjectionResult {
            point,
            active_set: Vec::new(),
            kkt_residual: 0.0,
        }
    }
}

/// A closed convex set with a computable projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub enum FeasibleSet {
    WholeSpace(usize),
    /// `{x : ⟨normal, x⟩ ≤ offset}`.
    HalfSpace {
        normal: Vector,
        offset: f64,
    },
    Affine(AffineSet),
    /// Coordinate bounds; infinite entries leave that side open.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Polyhedron(Polyhedron),
}

/// `{x : A x = b}` with `A` of full row rank.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    matrix: DenseMatrix,
    rhs: Vector,
    /// Cholesky factor of `A Aᵀ`.
    gram_factor: Vec<f64>,
}

/// `{x : G x ≤ h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    matrix: DenseMatrix,
    rhs: Vector,
    tol: f64,
}

impl FeasibleSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(
                "whole space",
                "dimension must be at least 1",
            ));
        }
        Ok(FeasibleSet::WholeSpace(dim))
    }

    pub fn half_space(normal: Vector, offset: f64) -> Result<Self> {
        if normal.is_zero() {
            return Err(Error::ZeroNormal);
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite("half-space offset"));
        }
        Ok(FeasibleSet::HalfSpace { normal, offset })
    }

    pub fn affine(matrix: DenseMatrix, rhs: Vector) -> Result<Self> {
        AffineSet::new(matrix, rhs).map(FeasibleSet::Affine)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::invalid("box", "dimension must be at least 1"));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if lo.is_nan() || hi.is_nan() {
                return Err(Error::NonFinite("box bound"));
            }
            if lo > hi || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                return Err(Error::invalid(
                    "box",
                    format!("empty interval [{lo}, {hi}]"),
                ));
            }
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn polyhedron(matrix: DenseMatrix, rhs: Vector) -> Result<Self> {
        Polyhedron::new(matrix, rhs, DEFAULT_PROJECTION_TOL).map(FeasibleSet::Polyhedron)
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::WholeSpace(m) => *m,
            FeasibleSet::HalfSpace { normal, .. } => normal.dim(),
            FeasibleSet::Affine(a) => a.matrix.cols(),
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Polyhedron(p) => p.matrix.cols(),
        }
    }

    /// Whether the set is a closed affine subspace, the setting in which the
    /// inertial method's convergence theory is stated.
    pub fn is_affine(&self) -> bool {
        matches!(self, FeasibleSet::WholeSpace(_) | FeasibleSet::Affine(_))
    }

    pub fn project(&self, x: &Vector) -> Result<ProjectionResult> {
        check_dim(self.dim(), x.dim())?;
        match self {
            FeasibleSet::WholeSpace(_) => Ok(ProjectionResult::exact(x.clone())),
            FeasibleSet::HalfSpace { normal, offset } => {
                project_halfspace(normal, *offset, x).map(ProjectionResult::exact)
            }
            FeasibleSet::Affine(a) => Ok(ProjectionResult::exact(a.project(x))),
            FeasibleSet::Box { lower, upper } => {
                let clamped = x
                    .as_slice()
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (lo, hi))| v.max(*lo).min(*hi))
                    .collect();
                Ok(ProjectionResult::exact(Vector::from_raw(clamped)))
            }
            FeasibleSet::Polyhedron(p) => p.project(x),
        }
    }

    /// Largest constraint violation of `x` (zero when feasible).
    pub fn violation(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(match self {
            FeasibleSet::WholeSpace(_) => 0.0,
            FeasibleSet::HalfSpace { normal, offset } => {
                (dot_slices(normal.as_slice(), x.as_slice()) - offset).max(0.0)
            }
            FeasibleSet::Affine(a) => matvec(&a.matrix, x)?.sub(&a.rhs).norm_inf(),
            FeasibleSet::Box { lower, upper } => x
                .as_slice()
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Polyhedron(p) => p.max_violation(x),
        })
    }
}

/// Projection of `x` onto `{y : ⟨a, y⟩ ≤ c}`.
pub fn project_halfspace(a: &Vector, c: f64, x: &Vector) -> Result<Vector> {
    check_dim(a.dim(), x.dim())?;
    let a_sq = a.norm_sq();
    if a_sq == 0.0 {
        return Err(Error::ZeroNormal);
    }
    let excess = dot_slices(a.as_slice(), x.as_slice()) - c;
    if excess <= 0.0 {
        return Ok(x.clone());
    }
    Ok(x.axpy(-excess / a_sq, a))
}

/// Natural residual `x − P_C(x − F(x))`; zero exactly at solutions.
pub fn residual(set: &FeasibleSet, f_at_x: &Vector, x: &Vector) -> Result<Vector> {
    check_dim(x.dim(), f_at_x.dim())?;
    let projected = set.project(&x.sub(f_at_x))?;
    Ok(x.sub(&projected.point))
}

/// Projection onto a polyhedron `{y : G y ≤ h}`.
pub fn project_polyhedron(
    matrix: &DenseMatrix,
    rhs: &Vector,
    x: &Vector,
    tol: f64,
) -> Result<ProjectionResult> {
    check_dim(matrix.rows(), rhs.dim())?;
    check_dim(matrix.cols(), x.dim())?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    DualActiveSet::new(matrix, rhs, tol).solve(x)
}

impl AffineSet {
    pub fn new(matrix: DenseMatrix, rhs: Vector) -> Result<Self> {
        check_dim(matrix.rows(), rhs.dim())?;
        let rank = numerical_rank(&matrix, RANK_TOL);
        if rank < matrix.rows() {
            return Err(Error::invalid(
                "affine set",
                format!("matrix has rank {rank} < {} rows", matrix.rows()),
            ));
        }
        let gram = gram_rows(&matrix, &(0..matrix.rows()).collect::<Vec<_>>());
        let gram_factor = cholesky(&gram, matrix.rows(), CHOLESKY_FLOOR)
            .ok_or_else(|| Error::invalid("affine set", "A Aᵀ is numerically singular"))?;
        Ok(AffineSet {
            matrix,
            rhs,
            gram_factor,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    fn project(&self, x: &Vector) -> Vector {
        // x − Aᵀ (A Aᵀ)⁻¹ (A x − b)
        let mut mult = self
            .matrix
            .as_slice()
            .chunks(self.matrix.cols())
            .zip(self.rhs.as_slice())
            .map(|(row, b)| dot_slices(row, x.as_slice()) - b)
            .collect::<Vec<_>>();
        cholesky_solve(&self.gram_factor, self.matrix.rows(), &mut mult);
        let mut out = x.clone();
        for (i, lambda) in mult.iter().enumerate() {
            for (o, a) in out.as_mut_slice().iter_mut().zip(self.matrix.row(i)) {
                *o -= lambda * a;
            }
        }
        out
    }
}

impl Polyhedron {
    pub fn new(matrix: DenseMatrix, rhs: Vector, tol: f64) -> Result<Self> {
        check_dim(matrix.rows(), rhs.dim())?;
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if matrix
            .as_slice()
            .chunks(matrix.cols())
            .any(|row| row.iter().all(|&v| v == 0.0))
        {
            return Err(Error::ZeroNormal);
        }
        let poly = Polyhedron { matrix, rhs, tol };
        if poly.rhs.as_slice().iter().any(|&h| h < 0.0) {
            // origin infeasible: phase 1 is a projection of the origin
            poly.project(&Vector::zeros(poly.matrix.cols()))?;
        }
        Ok(poly)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    fn project(&self, x: &Vector) -> Result<ProjectionResult> {
        DualActiveSet::new(&self.matrix, &self.rhs, self.tol).solve(x)
    }

    fn max_violation(&self, x: &Vector) -> f64 {
        (0..self.matrix.rows())
            .map(|i| dot_slices(self.matrix.row(i), x.as_slice()) - self.rhs[i])
            .fold(0.0, f64::max)
    }
}

/// Dual active-set method (Goldfarb–Idnani with identity Hessian) for
/// `min ½‖y − x‖²  s.t.  G y ≤ h`.
///
/// Starts at the unconstrained minimizer `y = x` with no active constraints
/// and repeatedly adds the most violated constraint (lowest index on ties),
/// dropping active constraints whose multiplier would turn negative. The
/// multipliers stay nonnegative throughout.
struct DualActiveSet<'a> {
    matrix: &'a DenseMatrix,
    rhs: &'a Vector,
    tol: f64,
}

impl<'a> DualActiveSet<'a> {
    fn new(matrix: &'a DenseMatrix, rhs: &'a Vector, tol: f64) -> Self {
        DualActiveSet { matrix, rhs, tol }
    }

    fn violation(&self, i: usize, y: &[f64]) -> f64 {
        dot_slices(self.matrix.row(i), y) - self.rhs[i]
    }

    fn solve(&self, x: &Vector) -> Result<ProjectionResult> {
        let rows = self.matrix.rows();
        let cols = self.matrix.cols();
        let cap = 10 * (rows + cols) + 100;
        let mut steps = 0usize;

        let mut y = x.as_slice().to_vec();
        let mut active: Vec<usize> = Vec::new();
        let mut lambda: Vec<f64> = Vec::new();

        while let Some(p) = self.most_violated(&y, &active) {
            let normal = self.matrix.row(p);
            let normal_sq = dot_slices(normal, normal);
            let mut lambda_p = 0.0;
            loop {
                steps += 1;
                if steps > cap {
                    return Err(Error::ProjectionCycle { iterations: cap });
                }
                // dual direction r = (N Nᵀ)⁻¹ N n_p, primal direction z = n_p − Nᵀ r
                let r = self.solve_gram(&active, |i| dot_slices(self.matrix.row(i), normal))?;
                let mut z = normal.to_vec();
                for (j, &i) in active.iter().enumerate() {
                    for (zk, a) in z.iter_mut().zip(self.matrix.row(i)) {
                        *zk -= r[j] * a;
                    }
                }
                let z_sq = dot_slices(&z, &z);

                let mut partial: Option<(f64, usize)> = None;
                for (j, (&rj, &lj)) in r.iter().zip(&lambda).enumerate() {
                    if rj > 0.0 {
                        let t = lj / rj;
                        if partial.is_none_or(|(best, _)| t < best) {
                            partial = Some((t, j));
                        }
                    }
                }
                let dependent = z_sq <= 1e-14 * normal_sq;
                let full = if dependent {
                    None
                } else {
                    Some(self.violation(p, &y).max(0.0) / z_sq)
                };

                match (full, partial) {
                    (None, None) => return Err(Error::Infeasible),
                    (Some(t_full), partial) if partial.is_none_or(|(t, _)| t_full <= t) => {
                        for (yk, zk) in y.iter_mut().zip(&z) {
                            *yk -= t_full * zk;
                        }
                        for (lj, rj) in lambda.iter_mut().zip(&r) {
                            *lj -= t_full * rj;
                        }
                        active.push(p);
                        lambda.push(lambda_p + t_full);
                        break;
                    }
                    (_, Some((t, blocking))) => {
                        if !dependent {
                            for (yk, zk) in y.iter_mut().zip(&z) {
                                *yk -= t * zk;
                            }
                        }
                        for (lj, rj) in lambda.iter_mut().zip(&r) {
                            *lj -= t * rj;
                        }
                        lambda_p += t;
                        active.remove(blocking);
                        lambda.remove(blocking);
                    }
                    (Some(_), None) => unreachable!(),
                }
            }
        }

        // Re-solve the equality projection on the final active set so the
        // stationarity condition holds to rounding.
        if !active.is_empty() {
            let polished = self.solve_gram(&active, |i| {
                dot_slices(self.matrix.row(i), x.as_slice()) - self.rhs[i]
            })?;
            let mut candidate = x.as_slice().to_vec();
            for (j, &i) in active.iter().enumerate() {
                for (c, a) in candidate.iter_mut().zip(self.matrix.row(i)) {
                    *c -= polished[j] * a;
                }
            }
            let old = self.kkt_residual(x.as_slice(), &y, &active, &lambda);
            let new = self.kkt_residual(x.as_slice(), &candidate, &active, &polished);
            if new <= old {
                y = candidate;
                lambda = polished;
            }
        }

        let kkt_residual = self.kkt_residual(x.as_slice(), &y, &active, &lambda);
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by_key(|&j| active[j]);
        let active_set = order.into_iter().map(|j| active[j]).collect();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polyhedral projection"));
        }
        Ok(ProjectionResult {
            point: Vector::from_raw(y),
            active_set,
            kkt_residual,
        })
    }

    fn most_violated(&self, y: &[f64], active: &[usize]) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.matrix.rows() {
            if active.contains(&i) {
                continue;
            }
            let v = self.violation(i, y);
            if v > self.tol * (1.0 + self.rhs[i].abs()) && best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, i));
            }
        }
        best.map(|(_, i)| i)
    }

    /// Solves `(N Nᵀ) u = b` for the active rows `N`, with `b_j = rhs(active[j])`.
    fn solve_gram(&self, active: &[usize], rhs: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
        let n = active.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let gram = gram_rows(self.matrix, active);
        let factor = cholesky(&gram, n, 0.0).ok_or(Error::Infeasible)?;
        let mut b: Vec<f64> = active.iter().map(|&i| rhs(i)).collect();
        cholesky_solve(&factor, n, &mut b);
        Ok(b)
    }

    fn kkt_residual(&self, x: &[f64], y: &[f64], active: &[usize], lambda: &[f64]) -> f64 {
        let primal = (0..self.matrix.rows())
            .map(|i| self.violation(i, y))
            .fold(0.0, f64::max);
        let mut stationarity: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let mut dual = 0.0f64;
        let mut complementarity = 0.0f64;
        for (&i, &l) in active.iter().zip(lambda) {
            for (s, a) in stationarity.iter_mut().zip(self.matrix.row(i)) {
                *s += l * a;
            }
            dual = dual.max(-l);
            complementarity = complementarity.max((l * self.violation(i, y)).abs());
        }
        let stationarity = stationarity
            .iter()
            .fold(0.0, |acc: f64, v| acc.max(v.abs()));
        primal.max(dual).max(complementarity).max(stationarity)
    }
}

fn gram_rows(matrix: &DenseMatrix, rows: &[usize]) -> Vec<f64> {
    let n = rows.len();
    let mut gram = vec![0.0; n * n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in rows.iter().enumerate().take(a + 1) {
            let v = dot_slices(matrix.row(i), matrix.row(j));
            gram[a * n + b] = v;
            gram[b * n + a] = v;
        }
    }
    gram
}

/// Row rank by Gaussian elimination with complete pivoting.
fn numerical_rank(matrix: &DenseMatrix, tol: f64) -> usize {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let mut a = matrix.as_slice().to_vec();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut rank = 0;
    let mut col_used = vec![false; cols];
    let mut row_used = vec![false; rows];
    for _ in 0..rows.min(cols) {
        let mut pivot = (0.0, 0, 0);
        for i in (0..rows).filter(|&i| !row_used[i]) {
            for j in (0..cols).filter(|&j| !col_used[j]) {
                let v = a[i * cols + j].abs();
                if v > pivot.0 {
                    pivot = (v, i, j);
                }
            }
        }
        let (value, pi, pj) = pivot;
        if value <= tol * scale {
            break;
        }
        row_used[pi] = true;
        col_used[pj] = true;
        rank += 1;
        for i in (0..rows).filter(|&i| !row_used[i]) {
            let factor = a[i * cols + pj] / a[pi * cols + pj];
            for j in 0..cols {
                a[i * cols + j] -= factor * a[pi * cols + j];
            }
        }
    }
    rank
}

// JSON representation

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SetRepr {
    WholeSpace {
        dim: usize,
    },
    HalfSpace {
        normal: Vector,
        offset: f64,
    },
    Affine {
        matrix: DenseMatrix,
        rhs: Vector,
    },
    Box {
        lower: Vec<Bound>,
        upper: Vec<Bound>,
    },
    Polyhedron {
        matrix: DenseMatrix,
        rhs: Vector,
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

fn default_tol() -> f64 {
    DEFAULT_PROJECTION_TOL
}

/// A box bound: a JSON number, or the strings `"inf"` / `"-inf"`.
#[derive(Clone, Copy)]
struct Bound(f64);

impl Serialize for Bound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bound(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(Bound(f64::INFINITY)),
                "-inf" => Ok(Bound(f64::NEG_INFINITY)),
                other => Err(serde::de::Error::custom(format!("invalid bound `{other}`"))),
            },
        }
    }
}

impl TryFrom<SetRepr> for FeasibleSet {
    type Error = Error;

    fn try_from(repr: SetRepr) -> Result<Self> {
        match repr {
            SetRepr::WholeSpace { dim } => FeasibleSet::whole_space(dim),
            SetRepr::HalfSpace { normal, offset } => FeasibleSet::half_space(normal, offset),
            SetRepr::Affine { matrix, rhs } => FeasibleSet::affine(matrix, rhs),
            SetRepr::Box { lower, upper } => FeasibleSet::boxed(
                lower.into_iter().map(|b| b.0).collect(),
                upper.into_iter().map(|b| b.0).collect(),
            ),
            SetRepr::Polyhedron { matrix, rhs, tol } => {
                Polyhedron::new(matrix, rhs, tol).map(FeasibleSet::Polyhedron)
            }
        }
    }
}

impl From<FeasibleSet> for SetRepr {
    fn from(set: FeasibleSet) -> Self {
        match set {
            FeasibleSet::WholeSpace(dim) => SetRepr::WholeSpace { dim },
            FeasibleSet::HalfSpace { normal, offset } => SetRepr::HalfSpace { normal, offset },
            FeasibleSet::Affine(a) => SetRepr::Affine {
                matrix: a.matrix,
                rhs: a.rhs,
            },
            FeasibleSet::Box { lower, upper } => SetRepr::Box {
                lower: lower.into_iter().map(Bound).collect(),
                upper: upper.into_iter().map(Bound).collect(),
            },
            FeasibleSet::Polyhedron(p) => SetRepr::Polyhedron {
                matrix: p.matrix,
                rhs: p.rhs,
                tol: p.tol,
            },
        }
    }
}
