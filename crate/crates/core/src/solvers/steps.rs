//! Single iterations of each method.

use crate::error::{Error, Result};
use crate::feasible::project_halfspace;
use crate::linesearch::armijo;
use crate::numerics::{dot_slices, Vector};
use crate::operators::VIProblem;

use super::{Algorithm, IterationRecord, SolverConfig};

/// Iterates `x_{n−1}` and `x_n` at iteration `n` (starting at `n = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x_prev: Vector,
    pub x_cur: Vector,
    pub n: usize,
}

impl SolverState {
    /// `x₀ = x₁ = start`.
    pub fn start(x: Vector) -> Self {
        SolverState {
            x_prev: x.clone(),
            x_cur: x,
            n: 1,
        }
    }
}

/// The accepted trial point of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPoint {
    pub y: Vector,
    pub f_y: Vector,
    /// Step length: `η_n` for the projection methods, `λ_n` for the
    /// extragradient ones.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: SolverState,
    pub record: IterationRecord,
    pub solved: bool,
    /// `w_n` (equal to `x_n` for methods without inertia).
    pub extrapolated: Vector,
    /// Residual vector `r(w_n) = w_n − z_n` (projection methods) or
    /// `w_n − y_n` (extragradient methods).
    pub residual: Vector,
    pub trial: Option<TrialPoint>,
}

/// Projection of `w` onto `{x : ⟨F(y), x − y⟩ ≤ 0}`.
pub fn halfspace_update(w: &Vector, y: &Vector, f_y: &Vector) -> Result<Vector> {
    let f_sq = f_y.norm_sq();
    if f_sq == 0.0 {
        return Err(Error::ZeroNormal);
    }
    let h = dot_slices(f_y.as_slice(), w.sub(y).as_slice());
    if h <= 0.0 {
        return Ok(w.clone());
    }
    Ok(w.axpy(-h / f_sq, f_y))
}

fn extrapolate(state: &SolverState, alpha: f64) -> Vector {
    if alpha == 0.0 {
        state.x_cur.clone()
    } else {
        state.x_cur.axpy(alpha, &state.x_cur.sub(&state.x_prev))
    }
}

fn residual_tol(cfg: &SolverConfig) -> f64 {
    cfg.stopping.eps_residual.unwrap_or(0.0)
}

fn advance(state: &SolverState, next: Vector) -> Result<SolverState> {
    if !next.is_finite() {
        return Err(Error::NonFinite("iterate"));
    }
    Ok(SolverState {
        x_prev: state.x_cur.clone(),
        x_cur: next,
        n: state.n + 1,
    })
}

fn record(
    n: usize,
    x: &Vector,
    residual_norm: f64,
    eta: f64,
    evals: usize,
    gap: f64,
) -> IterationRecord {
    IterationRecord {
        n,
        x_norm: x.norm_sq().sqrt(),
        residual_norm,
        eta,
        inner_f_evals: evals,
        gap,
        elapsed_ns: 0,
    }
}

/// One iteration of the inertial projection method (or its `α ≡ 0`
/// variant for [`Algorithm::Opm`]).
pub fn alg1_iterate(
    problem: &VIProblem,
    cfg: &SolverConfig,
    state: &SolverState,
) -> Result<StepOutcome> {
    let alpha = match cfg.algorithm {
        Algorithm::Alg1 => cfg.alpha.at(state.n),
        Algorithm::Opm => 0.0,
        other => {
            return Err(Error::config(
                "algorithm",
                format!("{other:?} is not a projection-type method"),
            ))
        }
    };
    let op = &problem.operator;
    let w = extrapolate(state, alpha);
    let f_w = op.eval(&w)?;
    let z = problem.feasible_set.project(&w.sub(&f_w))?.point;
    let r = w.sub(&z);
    let r_norm = r.norm_sq().sqrt();

    if r_norm <= residual_tol(cfg) {
        return Ok(StepOutcome {
            record: record(state.n, &state.x_cur, r_norm, 0.0, 0, 0.0),
            state: advance(state, w.clone())?,
            solved: true,
            extrapolated: w,
            residual: r,
            trial: None,
        });
    }

    let ls = armijo(op, &w, &r, cfg.gamma, cfg.sigma, cfg.max_backtracks)?;
    let next = halfspace_update(&w, &ls.y, &ls.f_y)?;
    let gap = next.sub(&w).norm_sq();
    Ok(StepOutcome {
        record: record(state.n, &state.x_cur, r_norm, ls.eta, ls.f_evals, gap),
        state: advance(state, next)?,
        solved: false,
        extrapolated: w,
        residual: r,
        trial: Some(TrialPoint {
            y: ls.y,
            f_y: ls.f_y,
            step: ls.eta,
        }),
    })
}

/// Shared tail of the subgradient extragradient methods: given the base
/// point, its operator value and a step `λ` with `y = P_C(base − λF(base))`
/// already computed, project `base − λF(y)` onto the half-space
/// `T = {v : ⟨base − λF(base) − y, v − y⟩ ≤ 0}`.
fn extragradient_correction(
    base: &Vector,
    f_base: &Vector,
    y: &Vector,
    f_y: &Vector,
    lambda: f64,
) -> Result<Vector> {
    let normal = base.axpy(-lambda, f_base).sub(y);
    let target = base.axpy(-lambda, f_y);
    if normal.is_zero() {
        // T is the whole space
        return Ok(target);
    }
    let offset = dot_slices(normal.as_slice(), y.as_slice());
    project_halfspace(&normal, offset, &target)
}

fn extragradient_step(
    problem: &VIProblem,
    cfg: &SolverConfig,
    state: &SolverState,
    base: Vector,
    lambda: f64,
) -> Result<StepOutcome> {
    let op = &problem.operator;
    let f_base = op.eval(&base)?;
    let y = problem
        .feasible_set
        .project(&base.axpy(-lambda, &f_base))?
        .point;
    let r = base.sub(&y);
    let r_norm = r.norm_sq().sqrt();
    if r_norm <= residual_tol(cfg) {
        return Ok(StepOutcome {
            record: record(state.n, &state.x_cur, r_norm, 0.0, 0, 0.0),
            state: advance(state, base.clone())?,
            solved: true,
            extrapolated: base,
            residual: r,
            trial: None,
        });
    }
    let f_y = op.eval(&y)?;
    let next = extragradient_correction(&base, &f_base, &y, &f_y, lambda)?;
    let gap = next.sub(&base).norm_sq();
    Ok(StepOutcome {
        record: record(state.n, &state.x_cur, r_norm, lambda, 0, gap),
        state: advance(state, next)?,
        solved: false,
        extrapolated: base,
        residual: r,
        trial: Some(TrialPoint {
            y,
            f_y,
            step: lambda,
        }),
    })
}

/// One subgradient extragradient iteration, with a fixed step
/// ([`Algorithm::SpmFixed`]) or a backtracked one ([`Algorithm::SpmArmijo`]).
pub fn spm_iterate(
    problem: &VIProblem,
    cfg: &SolverConfig,
    state: &SolverState,
) -> Result<StepOutcome> {
    match cfg.algorithm {
        Algorithm::SpmFixed => {
            let lambda = cfg
                .spm
                .lambda
                .ok_or_else(|| Error::config("spm.lambda", "required for SPM_FIXED"))?;
            extragradient_step(problem, cfg, state, state.x_cur.clone(), lambda)
        }
        Algorithm::SpmArmijo => spm_armijo_step(problem, cfg, state),
        other => Err(Error::config(
            "algorithm",
            format!("{other:?} is not a subgradient extragradient method"),
        )),
    }
}

/// Backtracks `λ = ρ μ^m` until `λ‖F(x) − F(y(λ))‖ ≤ σ‖x − y(λ)‖`.
fn spm_armijo_step(
    problem: &VIProblem,
    cfg: &SolverConfig,
    state: &SolverState,
) -> Result<StepOutcome> {
    let op = &problem.operator;
    let x = &state.x_cur;
    let f_x = op.eval(x)?;
    let params = &cfg.spm;
    let mut lambda = params.rho;
    let mut evals = 0;
    for _ in 0..=cfg.max_backtracks {
        let y = problem.feasible_set.project(&x.axpy(-lambda, &f_x))?.point;
        let r = x.sub(&y);
        let r_norm = r.norm_sq().sqrt();
        if r_norm <= residual_tol(cfg) {
            return Ok(StepOutcome {
                record: record(state.n, x, r_norm, 0.0, evals, 0.0),
                state: advance(state, x.clone())?,
                solved: true,
                extrapolated: x.clone(),
                residual: r,
                trial: None,
            });
        }
        let f_y = op.eval(&y)?;
        evals += 1;
        if lambda * f_x.sub(&f_y).norm_sq().sqrt() <= params.sigma_ls * r_norm {
            let next = extragradient_correction(x, &f_x, &y, &f_y, lambda)?;
            let gap = next.sub(x).norm_sq();
            return Ok(StepOutcome {
                record: record(state.n, x, r_norm, lambda, evals, gap),
                state: advance(state, next)?,
                solved: false,
                extrapolated: x.clone(),
                residual: r,
                trial: Some(TrialPoint {
                    y,
                    f_y,
                    step: lambda,
                }),
            });
        }
        lambda *= params.mu;
    }
    Err(Error::LineSearchFailed {
        tried: cfg.max_backtracks,
    })
}

/// One inertial subgradient extragradient iteration with step `λ`
/// (normally `τ(α)/L`).
pub fn ispm_iterate(
    problem: &VIProblem,
    cfg: &SolverConfig,
    state: &SolverState,
    lambda: f64,
) -> Result<StepOutcome> {
    if cfg.algorithm != Algorithm::Ispm {
        return Err(Error::config("algorithm", "expected ISPM"));
    }
    let w = extrapolate(state, cfg.ispm.alpha);
    extragradient_step(problem, cfg, state, w, lambda)
}
