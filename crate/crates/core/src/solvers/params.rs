//! Parameter conditions and derived constants.

/// Outcome of checking `(α, σ, δ, β)` against the inertial method's
/// parameter conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCheck {
    pub valid: bool,
    /// `min(δ − δ_bound, β_bound − β)`; positive iff both conditions hold.
    pub margin: f64,
    /// Lower bound `δ` must strictly exceed.
    pub delta_bound: f64,
    /// Upper bound `β` must stay strictly below.
    pub beta_bound: f64,
}

/// Checks
///
/// ```text
/// δ > [α(1+α)(α+δσ) + ασδ(α+δσ)] / σ
/// β < δσ/(α+δσ) − α(1+α) − ασδ
/// ```
///
/// together with `β > 0`.
pub fn validate_params(alpha: f64, sigma: f64, delta: f64, beta: f64) -> ParamCheck {
    let ads = alpha + delta * sigma;
    let delta_bound = (alpha * (1.0 + alpha) * ads + alpha * sigma * delta * ads) / sigma;
    let beta_bound = delta * sigma / ads - alpha * (1.0 + alpha) - alpha * sigma * delta;
    let margin = (delta - delta_bound).min(beta_bound - beta);
    let in_range = (0.0..1.0).contains(&alpha) && sigma > 0.0 && sigma < 1.0 && delta > 0.0;
    ParamCheck {
        valid: in_range && beta > 0.0 && delta > delta_bound && beta < beta_bound,
        margin,
        delta_bound,
        beta_bound,
    }
}

/// Coefficient of `‖x₀ − x*‖²` in the `O(1/n)` bound on
/// `min_{i ≤ n} ‖x_{i+1} − w_i‖²`:
///
/// `1 + (α/(1−α) + α(1−α)/β)(1 + (1−α₀)/(1−α))`
///
/// with `α` the inertial cap and `α₀` the first inertial weight.
pub fn rate_constant(alpha: f64, beta: f64, alpha0: f64) -> f64 {
    1.0 + (alpha / (1.0 - alpha) + alpha * (1.0 - alpha) / beta)
        * (1.0 + (1.0 - alpha0) / (1.0 - alpha))
}

/// Iterations sufficient for `‖x_{n+1} − w_n‖² < ε` from the rate bound.
pub fn iteration_bound(alpha: f64, beta: f64, alpha0: f64, initial_dist_sq: f64, eps: f64) -> f64 {
    rate_constant(alpha, beta, alpha0) * initial_dist_sq / eps
}

/// Upper limit on the inertial weight of the inertial subgradient
/// extragradient method, `√5 − 2`.
pub fn ispm_alpha_limit() -> f64 {
    5f64.sqrt() - 2.0
}

/// Step factor `τ` with `λ = τ / L` for the inertial subgradient
/// extragradient method.
pub fn ispm_tau(alpha: f64) -> f64 {
    0.5 * (0.5 - 2.0 * alpha - 0.5 * alpha * alpha) / (0.5 - alpha + 0.5 * alpha * alpha)
}
