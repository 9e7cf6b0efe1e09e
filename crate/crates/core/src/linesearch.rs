//! Armijo-type backtracking along the residual direction.

use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot_slices, Vector};
use crate::operators::VIOperator;

pub const DEFAULT_MAX_BACKTRACKS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    /// `gamma^m`, built by repeated multiplication.
    pub eta: f64,
    pub m: usize,
    /// Accepted trial point `w − eta·r`.
    pub y: Vector,
    /// `F(y)` at the accepted point.
    pub f_y: Vector,
    /// Operator evaluations spent (`m + 1`).
    pub f_evals: usize,
}

/// Finds the smallest `m ≥ 0` with `⟨F(w − γ^m r), r⟩ ≥ (σ/2)‖r‖²`.
pub fn armijo(
    operator: &VIOperator,
    w: &Vector,
    r: &Vector,
    gamma: f64,
    sigma: f64,
    max_backtracks: usize,
) -> Result<LineSearchOutcome> {
    check_dim(w.dim(), r.dim())?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config("gamma", "must lie in (0, 1)"));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::config("sigma", "must lie in (0, 1)"));
    }
    let r_sq = r.norm_sq();
    if r_sq == 0.0 {
        return Err(Error::ZeroResidual);
    }
    let target = 0.5 * sigma * r_sq;
    let mut eta = 1.0;
    for m in 0..=max_backtracks {
        let y = w.axpy(-eta, r);
        let f_y = operator.eval(&y)?;
        if dot_slices(f_y.as_slice(), r.as_slice()) >= target {
            return Ok(LineSearchOutcome {
                eta,
                m,
                y,
                f_y,
                f_evals: m + 1,
            });
        }
        eta *= gamma;
    }
    Err(Error::LineSearchFailed {
        tried: max_backtracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use crate::operators::Monotonicity;

    fn identity(dim: usize) -> VIOperator {
        VIOperator::affine(
            DenseMatrix::identity(dim),
            Vector::zeros(dim),
            Monotonicity::Monotone,
        )
        .unwrap()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn one_backtrack() {
        let out = armijo(&identity(1), &v(&[1.0]), &v(&[1.0]), 0.1, 0.8, 80).unwrap();
        assert_eq!(out.m, 1);
        assert_eq!(out.eta, 0.1);
        assert_eq!(out.f_evals, 2);
        assert_eq!(out.y, v(&[0.9]));
    }

    #[test]
    fn accepted_immediately() {
        let out = armijo(&identity(1), &v(&[10.0]), &v(&[1.0]), 0.1, 0.8, 80).unwrap();
        assert_eq!((out.m, out.eta, out.f_evals), (0, 1.0, 1));
        assert_eq!(out.y, v(&[9.0]));
    }

    #[test]
    fn zero_residual_is_rejected() {
        assert!(matches!(
            armijo(
                &identity(2),
                &v(&[1.0, 1.0]),
                &Vector::zeros(2),
                0.1,
                0.8,
                80
            ),
            Err(Error::ZeroResidual)
        ));
    }

    #[test]
    fn failure_reports_cap() {
        // F = −I never satisfies the rule for w = 1, r = 1
        let neg = VIOperator::affine(
            DenseMatrix::diag(&[-1.0]).unwrap(),
            Vector::zeros(1),
            Monotonicity::Unknown,
        )
        .unwrap();
        assert!(matches!(
            armijo(&neg, &v(&[1.0]), &v(&[1.0]), 0.5, 0.5, 5),
            Err(Error::LineSearchFailed { tried: 5 })
        ));
    }

    #[test]
    fn parameter_ranges() {
        let id = identity(1);
        assert!(armijo(&id, &v(&[1.0]), &v(&[1.0]), 1.0, 0.8, 80).is_err());
        assert!(armijo(&id, &v(&[1.0]), &v(&[1.0]), 0.1, 0.0, 80).is_err());
    }
}
