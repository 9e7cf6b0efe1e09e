//! Solver configuration, the instrumented driver and run reports.
//!
//! Four methods share one driver:
//!
//! * [`Algorithm::Alg1`]: inertial projection method. Extrapolate
//!   `w = x_n + α_n(x_n − x_{n−1})`, take `z = P_C(w − F(w))`, backtrack
//!   along `r = w − z` and project `w` onto the separating half-space
//!   `{x : ⟨F(y), x − y⟩ ≤ 0}`.
//! * [`Algorithm::Opm`]: the same with `α_n ≡ 0`.
//! * [`Algorithm::SpmFixed`] / [`Algorithm::SpmArmijo`]: subgradient
//!   extragradient method with a fixed or backtracked step.
//! * [`Algorithm::Ispm`]: its inertial variant with `λ = τ(α)/‖M‖`.

mod params;
mod steps;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::feasible::FeasibleSet;
use crate::linesearch::DEFAULT_MAX_BACKTRACKS;
use crate::numerics::{dot_slices, spectral_norm, Vector};
use crate::operators::VIProblem;

pub use params::{
    ispm_alpha_limit, ispm_tau, iteration_bound, rate_constant, validate_params, ParamCheck,
};
pub use steps::{
    alg1_iterate, halfspace_update, ispm_iterate, spm_iterate, SolverState, StepOutcome, TrialPoint,
};

/// Absolute slack for the cut inequalities.
pub const CUT_TOL: f64 = 1e-10;
/// Absolute slack for the Fejér-type decrease and the rate bound.
pub const DECREASE_TOL: f64 = 1e-8;
/// Relative slack added to the absolute tolerances so that checks stay
/// meaningful on iterates of very large norm.
pub const ROUNDOFF_TOL: f64 = 1e-12;
/// Relative slack (times `‖r‖²`) for the re-verified line-search certificate.
pub const CERTIFICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    #[serde(rename = "ALG1")]
    Alg1,
    Opm,
    SpmFixed,
    SpmArmijo,
    Ispm,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "ALG1",
            Algorithm::Opm => "OPM",
            Algorithm::SpmFixed => "SPM_FIXED",
            Algorithm::SpmArmijo => "SPM_ARMIJO",
            Algorithm::Ispm => "ISPM",
        }
    }

    pub fn is_projection_type(self) -> bool {
        matches!(self, Algorithm::Alg1 | Algorithm::Opm)
    }
}

/// Inertial weights `α_n`: a constant, or an explicit non-decreasing
/// sequence indexed from `n = 1` whose last entry repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSchedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule::Constant(0.0)
    }
}

impl AlphaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            AlphaSchedule::Constant(a) => *a,
            AlphaSchedule::Sequence(seq) => seq[(n.max(1) - 1).min(seq.len() - 1)],
        }
    }

    /// The cap `α` bounding every `α_n`.
    pub fn cap(&self) -> f64 {
        match self {
            AlphaSchedule::Constant(a) => *a,
            AlphaSchedule::Sequence(seq) => seq.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn first(&self) -> f64 {
        self.at(1)
    }

    fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            AlphaSchedule::Constant(a) => std::slice::from_ref(a),
            AlphaSchedule::Sequence(seq) => seq,
        };
        if values.is_empty() {
            return Err(Error::config("alpha", "sequence must not be empty"));
        }
        if values.iter().any(|a| !(0.0..1.0).contains(a)) {
            return Err(Error::config("alpha", "every α_n must lie in [0, 1)"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("alpha", "sequence must be non-decreasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpmParams {
    /// Fixed step for [`Algorithm::SpmFixed`]; should lie in `(0, 1/L)`.
    pub lambda: Option<f64>,
    pub rho: f64,
    pub mu: f64,
    pub sigma_ls: f64,
}

impl Default for SpmParams {
    fn default() -> Self {
        SpmParams {
            lambda: None,
            rho: 0.1,
            mu: 0.2,
            sigma_ls: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IspmParams {
    pub alpha: f64,
    /// Lipschitz constant override; computed as `‖M‖` when absent.
    pub lipschitz: Option<f64>,
}

impl Default for IspmParams {
    fn default() -> Self {
        IspmParams {
            alpha: 0.2,
            lipschitz: None,
        }
    }
}

/// Stopping rule; whichever condition is met first ends the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingRule {
    /// Stop once `‖x_{n+1}‖ ≤ eps` (meaningful when the solution is 0).
    pub eps_x_norm: Option<f64>,
    /// Stop once the residual norm at the current point is at most `eps`.
    pub eps_residual: Option<f64>,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            eps_x_norm: Some(1e-3),
            eps_residual: None,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    /// All-ones vector.
    Ones,
    /// First standard basis vector.
    E1,
    /// Projection of the all-ones vector onto the feasible set.
    ProjectedOnes,
    Point(Vector),
}

impl StartPoint {
    pub fn resolve(&self, set: &FeasibleSet) -> Result<Vector> {
        let dim = set.dim();
        match self {
            StartPoint::Ones => Ok(Vector::ones(dim)),
            StartPoint::E1 => Ok(Vector::basis(dim, 0)),
            StartPoint::ProjectedOnes => Ok(set.project(&Vector::ones(dim))?.point),
            StartPoint::Point(p) => {
                check_dim(dim, p.dim())?;
                Ok(p.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub sigma: f64,
    pub alpha: AlphaSchedule,
    pub beta: f64,
    pub delta: f64,
    pub spm: SpmParams,
    pub ispm: IspmParams,
    pub stopping: StoppingRule,
    pub max_backtracks: usize,
    pub record_history: bool,
    pub check_invariants: bool,
    /// Allows ALG1 parameters that fail [`validate_params`]; rate-bound
    /// checking is then skipped.
    pub unvalidated: bool,
    pub start: StartPoint,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Alg1,
            gamma: 0.1,
            sigma: 0.8,
            alpha: AlphaSchedule::Constant(0.1),
            beta: 0.5,
            delta: 1.0,
            spm: SpmParams::default(),
            ispm: IspmParams::default(),
            stopping: StoppingRule::default(),
            max_backtracks: DEFAULT_MAX_BACKTRACKS,
            record_history: true,
            check_invariants: true,
            unvalidated: false,
            start: StartPoint::Ones,
        }
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("{v} is outside {field} ∈ (0,1)"),
        ))
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("{v} must be positive and finite"),
        ))
    }
}

impl SolverConfig {
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            ..SolverConfig::default()
        }
    }

    /// Effective inertial schedule (`α ≡ 0` for OPM).
    pub fn effective_alpha(&self) -> AlphaSchedule {
        match self.algorithm {
            Algorithm::Opm => AlphaSchedule::Constant(0.0),
            _ => self.alpha.clone(),
        }
    }

    /// Checks parameter ranges and, for ALG1/OPM, the convergence
    /// conditions (unless `unvalidated` is set).
    pub fn validate(&self) -> Result<ParamCheck> {
        if self.stopping.eps_x_norm.is_some() && self.stopping.eps_residual.is_some() {
            return Err(Error::config(
                "stopping",
                "eps_x_norm and eps_residual are mutually exclusive",
            ));
        }
        if let Some(eps) = self.stopping.eps_x_norm {
            positive("stopping.eps_x_norm", eps)?;
        }
        if let Some(eps) = self.stopping.eps_residual {
            positive("stopping.eps_residual", eps)?;
        }
        if self.stopping.max_iter == 0 {
            return Err(Error::config("stopping.max_iter", "must be at least 1"));
        }
        let check = match self.algorithm {
            Algorithm::Alg1 | Algorithm::Opm => {
                open_unit("gamma", self.gamma)?;
                open_unit("sigma", self.sigma)?;
                positive("beta", self.beta)?;
                positive("delta", self.delta)?;
                self.alpha.validate()?;
                let alpha = self.effective_alpha().cap();
                validate_params(alpha, self.sigma, self.delta, self.beta)
            }
            Algorithm::SpmFixed => {
                match self.spm.lambda {
                    Some(l) => positive("spm.lambda", l)?,
                    None => return Err(Error::config("spm.lambda", "required for SPM_FIXED")),
                }
                unchecked()
            }
            Algorithm::SpmArmijo => {
                positive("spm.rho", self.spm.rho)?;
                open_unit("spm.mu", self.spm.mu)?;
                open_unit("spm.sigma_ls", self.spm.sigma_ls)?;
                unchecked()
            }
            Algorithm::Ispm => {
                let a = self.ispm.alpha;
                if !(a >= 0.0 && a < ispm_alpha_limit()) {
                    return Err(Error::config(
                        "ispm.alpha",
                        format!("{a} is outside [0, √5 − 2)"),
                    ));
                }
                if let Some(l) = self.ispm.lipschitz {
                    positive("ispm.lipschitz", l)?;
                }
                unchecked()
            }
        };
        if self.algorithm.is_projection_type() && !check.valid && !self.unvalidated {
            return Err(Error::ParametersRejected {
                margin: check.margin,
            });
        }
        Ok(check)
    }
}

fn unchecked() -> ParamCheck {
    ParamCheck {
        valid: false,
        margin: f64::NAN,
        delta_bound: f64::NAN,
        beta_bound: f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    /// `‖x_n‖` at the start of the iteration.
    pub x_norm: f64,
    /// `‖r(w_n)‖` (projection methods) or `‖w_n − y_n‖` (extragradient).
    pub residual_norm: f64,
    /// Accepted step (`η_n` or `λ_n`); 0 when the iteration stopped at a
    /// solution.
    pub eta: f64,
    pub inner_f_evals: usize,
    /// `‖x_{n+1} − w_n‖²`.
    pub gap: f64,
    /// Nanoseconds since the start of the run.
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `‖x_{n+1}‖ ≤ eps_x_norm`.
    XNorm,
    /// Residual at or below `eps_residual` (exactly zero when unset).
    Residual,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    /// `h_n(w_n) ≥ (σ η_n / 2)‖w_n − z_n‖²`.
    CutLowerBound,
    /// `h_n(x*) ≤ 0`.
    SolutionInCut,
    /// `‖x_{n+1} − x*‖² ≤ ‖w_n − x*‖² − ‖x_{n+1} − w_n‖²`.
    FejerDecrease,
    /// `min_{i ≤ n} ‖x_{i+1} − w_i‖² ≤ C ‖x₀ − x*‖² / n`.
    RateBound,
    /// `⟨F(w − η r), r⟩ ≥ (σ/2)‖r‖²` re-evaluated from the stored step.
    LineSearchCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub n: usize,
    pub invariant: Invariant,
    /// The two sides of `lhs ≤ rhs` (tolerance included in `rhs`).
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    /// Outer iterations ("Iter").
    pub iterations: usize,
    /// Inner operator evaluations spent in step-size searches ("InIt").
    pub inner_evals: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub final_x: Vector,
    pub history: Vec<IterationRecord>,
    pub violations: Vec<InvariantViolation>,
    /// Whether the ALG1/OPM parameters satisfy the convergence conditions.
    pub params_validated: bool,
    /// Coefficient of the rate bound when it was checked.
    pub rate_constant: Option<f64>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.termination != Termination::MaxIter
    }
}

/// Per-run invariant bookkeeping for the projection-type methods.
struct InvariantChecker<'a> {
    solution: &'a Vector,
    sigma: f64,
    /// `C · ‖x₀ − x*‖²` when the rate bound applies.
    rate_numerator: Option<f64>,
    running_min_gap: f64,
    violations: Vec<InvariantViolation>,
}

impl InvariantChecker<'_> {
    fn flag(&mut self, n: usize, invariant: Invariant, lhs: f64, rhs: f64) {
        if !(lhs <= rhs) {
            self.violations.push(InvariantViolation {
                n,
                invariant,
                lhs,
                rhs,
            });
        }
    }

    fn check(&mut self, problem: &VIProblem, step: &StepOutcome) -> Result<()> {
        let n = step.record.n;
        let w = &step.extrapolated;
        let next = &step.state.x_cur;
        let r_sq = step.residual.norm_sq();

        if let Some(trial) = &step.trial {
            let eta = trial.step;
            let h = |x: &Vector| dot_slices(trial.f_y.as_slice(), x.sub(&trial.y).as_slice());
            let f_norm = trial.f_y.norm_sq().sqrt();
            let cut_scale = |x: &Vector| f_norm * x.sub(&trial.y).norm_sq().sqrt();
            // h_n(w_n) ≥ ση/2 ‖r‖²  ⇔  ση/2 ‖r‖² ≤ h_n(w_n) + tol
            self.flag(
                n,
                Invariant::CutLowerBound,
                0.5 * self.sigma * eta * r_sq,
                h(w) + CUT_TOL + ROUNDOFF_TOL * cut_scale(w),
            );
            self.flag(
                n,
                Invariant::SolutionInCut,
                h(self.solution),
                CUT_TOL + ROUNDOFF_TOL * cut_scale(self.solution),
            );

            let y = w.axpy(-eta, &step.residual);
            let f_y = problem.operator.eval(&y)?;
            let pairing = dot_slices(f_y.as_slice(), step.residual.as_slice());
            self.flag(
                n,
                Invariant::LineSearchCertificate,
                0.5 * self.sigma * r_sq,
                pairing + CERTIFICATE_TOL * r_sq,
            );
        }

        let lhs = next.sub(self.solution).norm_sq();
        let w_dist = w.sub(self.solution).norm_sq();
        let rhs = w_dist - step.record.gap + DECREASE_TOL + ROUNDOFF_TOL * w_dist;
        self.flag(n, Invariant::FejerDecrease, lhs, rhs);

        if let Some(num) = self.rate_numerator {
            self.running_min_gap = self.running_min_gap.min(step.record.gap);
            self.flag(
                n,
                Invariant::RateBound,
                self.running_min_gap,
                num / n as f64 + DECREASE_TOL,
            );
        }
        Ok(())
    }
}

/// Runs `cfg.algorithm` on `problem` from `x₀ = x₁ = cfg.start`.
///
/// Reaching `max_iter` is reported through [`Termination::MaxIter`], not as
/// an error. When the problem carries a known solution and
/// `cfg.check_invariants` is set, ALG1/OPM runs re-check the cut and
/// decrease inequalities at every iteration, plus the `O(1/n)` rate bound
/// when the parameters pass [`validate_params`].
pub fn solve(problem: &VIProblem, cfg: &SolverConfig) -> Result<RunReport> {
    let check = cfg.validate()?;
    let start = cfg.start.resolve(&problem.feasible_set)?;

    let ispm_lambda = if cfg.algorithm == Algorithm::Ispm {
        let lipschitz = match cfg.ispm.lipschitz {
            Some(l) => l,
            None => {
                let m = problem.operator.linear_part().ok_or_else(|| {
                    Error::config(
                        "ispm.lipschitz",
                        "operator is not affine; supply a constant",
                    )
                })?;
                spectral_norm(&m, 1e-10, 100_000)?
            }
        };
        Some(ispm_tau(cfg.ispm.alpha) / lipschitz)
    } else {
        None
    };

    let params_validated = cfg.algorithm.is_projection_type() && check.valid;
    let rate = params_validated.then(|| {
        let alpha = cfg.effective_alpha();
        rate_constant(alpha.cap(), cfg.beta, alpha.first())
    });

    let mut checker = match (&problem.known_solution, cfg.check_invariants) {
        (Some(solution), true) if cfg.algorithm.is_projection_type() => Some(InvariantChecker {
            solution,
            sigma: cfg.sigma,
            rate_numerator: rate.map(|c| c * start.sub(solution).norm_sq()),
            running_min_gap: f64::INFINITY,
            violations: Vec::new(),
        }),
        _ => None,
    };

    let clock = Instant::now();
    let mut state = SolverState::start(start);
    let mut history = Vec::new();
    let mut inner_evals = 0;
    let mut iterations;
    let termination = loop {
        let step = match cfg.algorithm {
            Algorithm::Alg1 | Algorithm::Opm => alg1_iterate(problem, cfg, &state)?,
            Algorithm::SpmFixed | Algorithm::SpmArmijo => spm_iterate(problem, cfg, &state)?,
            Algorithm::Ispm => ispm_iterate(problem, cfg, &state, ispm_lambda.unwrap_or_default())?,
        };
        iterations = step.record.n;
        inner_evals += step.record.inner_f_evals;
        if let Some(c) = checker.as_mut() {
            c.check(problem, &step)?;
        }
        if cfg.record_history {
            let mut record = step.record.clone();
            record.elapsed_ns = clock.elapsed().as_nanos() as u64;
            history.push(record);
        }
        let solved = step.solved;
        state = step.state;
        if solved {
            break Termination::Residual;
        }
        if let Some(eps) = cfg.stopping.eps_x_norm {
            if state.x_cur.norm_sq().sqrt() <= eps {
                break Termination::XNorm;
            }
        }
        if iterations >= cfg.stopping.max_iter {
            break Termination::MaxIter;
        }
    };

    Ok(RunReport {
        algorithm: cfg.algorithm,
        iterations,
        inner_evals,
        wall_seconds: clock.elapsed().as_secs_f64(),
        termination,
        final_x: state.x_cur,
        history,
        violations: checker.map(|c| c.violations).unwrap_or_default(),
        params_validated,
        rate_constant: rate,
    })
}
