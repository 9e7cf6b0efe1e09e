//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vi_kit::{DenseMatrix, Vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(xs: &[f64]) -> Vector {
    Vector::new(xs.to_vec()).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Vector {
    Vector::new((0..dim).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn random_matrix(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> DenseMatrix {
    DenseMatrix::from_row_major(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect(),
    )
    .unwrap()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Entrywise-sum matrix-vector product.
pub fn naive_matvec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| {
            let mut s = 0.0;
            for j in 0..m.cols() {
                s += m.get(i, j) * x[j];
            }
            s
        })
        .collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Largest singular value from the eigenvalues of `MᵀM`.
pub fn oracle_spectral_norm(m: &DenseMatrix) -> f64 {
    let n = m.cols();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..m.rows()).map(|k| m.get(k, i) * m.get(k, j)).sum())
                .collect()
        })
        .collect();
    jacobi_eigenvalues(&gram)
        .into_iter()
        .fold(0.0, f64::max)
        .sqrt()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Projection onto `{y : Gy ≤ g}` by enumerating every candidate active
/// set, keeping the primal-feasible points with nonnegative multipliers,
/// and returning the closest one.
pub fn brute_force_projection(g_mat: &DenseMatrix, g: &[f64], x: &[f64]) -> Vec<f64> {
    let k = g_mat.rows();
    let m = g_mat.cols();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let active: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let y = if active.is_empty() {
            x.to_vec()
        } else {
            let gram: Vec<Vec<f64>> = active
                .iter()
                .map(|&i| {
                    active
                        .iter()
                        .map(|&j| inner(g_mat.row(i), g_mat.row(j)))
                        .collect()
                })
                .collect();
            let rhs: Vec<f64> = active
                .iter()
                .map(|&i| inner(g_mat.row(i), x) - g[i])
                .collect();
            let Some(lambda) = solve_linear(gram, rhs) else {
                continue;
            };
            if lambda.iter().any(|&l| l < -1e-9) {
                continue;
            }
            let mut y = x.to_vec();
            for (&i, &l) in active.iter().zip(&lambda) {
                for j in 0..m {
                    y[j] -= l * g_mat.get(i, j);
                }
            }
            y
        };
        if (0..k).any(|i| inner(g_mat.row(i), &y) - g[i] > 1e-9) {
            continue;
        }
        let d = dist(&y, x);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, y));
        }
    }
    best.expect("feasible polyhedron has a projection").1
}
