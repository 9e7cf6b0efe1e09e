//! Dense vectors and matrices over `f64`.
//!
//! Both types reject NaN and infinities at construction. Arithmetic helpers
//! are infallible; callers that iterate (the solvers) re-check finiteness of
//! their iterates.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector", "dimension must be at least 1"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn ones(dim: usize) -> Self {
        Vector(vec![1.0; dim])
    }

    /// Standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Vector(v)
    }

    /// Unchecked; arithmetic results may overflow and callers check
    /// finiteness where it matters.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// `self - other`; dimensions must already agree.
    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector::from_raw(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self + factor * direction`.
    pub fn axpy(&self, factor: f64, direction: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), direction.dim());
        Vector::from_raw(
            self.0
                .iter()
                .zip(&direction.0)
                .map(|(a, d)| a + factor * d)
                .collect(),
        )
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix", "dimensions must be at least 1"));
        }
        check_dim(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::invalid("matrix", "ragged rows"));
        }
        DenseMatrix::from_row_major(nrows, ncols, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in entries.iter().enumerate() {
            data[i * n + i] = d;
        }
        DenseMatrix::from_row_major(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim(self.cols, other.rows)?;
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                let out = &mut data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::from_row_major(self.rows, other.cols, data)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        DenseMatrix::from_row_major(self.rows, self.cols, data)
    }

    /// `Mᵀ y`.
    pub fn matvec_transpose(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.rows, y.dim())?;
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Ok(Vector::from_raw(out))
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DenseMatrix::from_rows(rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.data.chunks(m.cols).map(<[f64]>::to_vec).collect()
    }
}

pub fn dot(a: &Vector, b: &Vector) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(dot_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &Vector) -> f64 {
    a.norm_sq().sqrt()
}

pub fn matvec(m: &DenseMatrix, x: &Vector) -> Result<Vector> {
    check_dim(m.cols(), x.dim())?;
    Ok(Vector::from_raw(
        (0..m.rows())
            .map(|i| dot_slices(m.row(i), x.as_slice()))
            .collect(),
    ))
}

/// Largest singular value of `m`, by power iteration on `MᵀM`.
///
/// Starts from the normalized all-ones vector. Stops once the Rayleigh
/// quotient changes by at most `tol` relative to its current value.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let n = m.cols();
    let start = Vector::ones(n).scale(1.0 / (n as f64).sqrt());
    match power_iterate(m, start, tol, max_iter)? {
        PowerOutcome::Converged(sigma) => Ok(sigma),
        PowerOutcome::Degenerate => {
            // start vector annihilated by MᵀM: perturb the first entry once
            let mut perturbed = Vector::ones(n);
            perturbed.as_mut_slice()[0] += 1e-3;
            let norm = norm(&perturbed);
            match power_iterate(m, perturbed.scale(1.0 / norm), tol, max_iter)? {
                PowerOutcome::Converged(sigma) => Ok(sigma),
                // MᵀM kills both starts; for a genuinely zero matrix that is exact
                PowerOutcome::Degenerate if m.as_slice().iter().all(|&v| v == 0.0) => Ok(0.0),
                PowerOutcome::Degenerate => Err(Error::SpectralNormNotConverged {
                    estimate: 0.0,
                    iterations: 0,
                }),
            }
        }
    }
}

enum PowerOutcome {
    Converged(f64),
    Degenerate,
}

fn power_iterate(
    m: &DenseMatrix,
    mut v: Vector,
    tol: f64,
    max_iter: usize,
) -> Result<PowerOutcome> {
    let mut estimate = f64::NAN;
    for _ in 0..max_iter {
        let mv = matvec(m, &v)?;
        // Rayleigh quotient of MᵀM at unit v
        let rayleigh = mv.norm_sq();
        let next = m.matvec_transpose(&mv)?;
        let next_norm = norm(&next);
        if next_norm <= f64::MIN_POSITIVE {
            return Ok(PowerOutcome::Degenerate);
        }
        if estimate.is_finite() && (rayleigh - estimate).abs() <= tol * rayleigh {
            return Ok(PowerOutcome::Converged(rayleigh.sqrt()));
        }
        estimate = rayleigh;
        v = next.scale(1.0 / next_norm);
    }
    Err(Error::SpectralNormNotConverged {
        estimate: if estimate.is_finite() {
            estimate.sqrt()
        } else {
            0.0
        },
        iterations: max_iter,
    })
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix
/// stored as a dense row-major `n × n` slice. Pivots below `floor` are
/// reported as rank deficiency.
pub(crate) fn cholesky(a: &[f64], n: usize, floor: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - dot_slices(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if s <= floor {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` in place.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s = b[i] - dot_slices(&l[i * n..i * n + i], &b[..i]);
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
