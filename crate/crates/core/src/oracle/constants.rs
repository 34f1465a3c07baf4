use crate::error::{Error, Result};
use crate::estimators::warm_start_batch;
use crate::policies::PolicyBounds;

/// Smoothness and variance constants implied by the policy bounds `(G, M)`,
/// the horizon, `R_max`, `γ` and the measured IS-weight variance bound `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub g: f64,
    pub m: f64,
    /// Measured bound on `Var(w)`.
    pub w_hat: f64,
    /// Measured bound on the gradient-estimate standard deviation `σ`.
    pub sigma_hat: f64,
    /// Smoothness of every `J_i`: `H R_max (M + H G²) / (1 − γ)`.
    pub l: f64,
    /// Lipschitz constant of `θ ↦ g(τ|θ)`: `H M R_max / (1 − γ)`.
    pub l_g: f64,
    /// `‖g(τ|θ)‖ ≤ C_g = H G R_max / (1 − γ)`.
    pub c_g: f64,
    /// `Var(w(τ|θ₁,θ₂)) ≤ C_w ‖θ₁ − θ₂‖²` with `C_w = H (2 H G² + M)(W + 1)`.
    pub c_w: f64,
    /// `√(L² + 24 C_w C_g² + 6 L_g²)`.
    pub l1_t: f64,
    /// `√(L_g² + 2 C_w C_g²)`.
    pub l2_t: f64,
    /// `√(2 C_w C_g² + 2 L_g²)`.
    pub l3_t: f64,
    /// Bound on the Hessian estimate: `√((H² G⁴ R_max² + M² R_max²) / (1 − γ)⁴)`.
    pub l4_t: f64,
}

impl TheoryConstants {
    /// `L̄ = max{L, L̃₁, L̃₂, L̃₃}`, the constant governing the first-order method.
    pub fn l_bar(&self) -> f64 {
        self.l.max(self.l1_t).max(self.l2_t).max(self.l3_t)
    }

    /// `L̂ = √(2L² + 4L̃₄²)`, the constant governing the Hessian-aided method.
    pub fn l_hat(&self) -> f64 {
        (2.0 * self.l * self.l + 4.0 * self.l4_t * self.l4_t).sqrt()
    }
}

/// The discount appears as `(1 − γ)` in every denominator.
pub fn theory_constants(
    bounds: PolicyBounds<f64>,
    horizon: usize,
    r_max: f64,
    gamma: f64,
    measured_w: f64,
    measured_sigma: f64,
) -> Result<TheoryConstants> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Construction(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let inputs = [bounds.g, bounds.m, r_max, measured_w, measured_sigma];
    if inputs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Construction("constants need finite non-negative inputs".into()));
    }
    let (g, m) = (bounds.g, bounds.m);
    let h = horizon as f64;
    let one_minus = 1.0 - gamma;
    let l = h * r_max * (m + h * g * g) / one_minus;
    let l_g = h * m * r_max / one_minus;
    let c_g = h * g * r_max / one_minus;
    let c_w = h * (2.0 * h * g * g + m) * (measured_w + 1.0);
    let cwcg = c_w * c_g * c_g;
    Ok(TheoryConstants {
        g,
        m,
        w_hat: measured_w,
        sigma_hat: measured_sigma,
        l,
        l_g,
        c_g,
        c_w,
        l1_t: (l * l + 24.0 * cwcg + 6.0 * l_g * l_g).sqrt(),
        l2_t: (l_g * l_g + 2.0 * cwcg).sqrt(),
        l3_t: (2.0 * cwcg + 2.0 * l_g * l_g).sqrt(),
        l4_t: ((h * h * g.powi(4) * r_max * r_max + m * m * r_max * r_max) / one_minus.powi(4)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    FedSvrpgM,
    FedHapgM,
}

/// Hyperparameters prescribed by the convergence theorems. The `≲` constants
/// in the step-size condition are taken as 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperparamPlan {
    /// `min{1, (N K L² Δ² / (σ⁴ R²))^{1/3}}` with `L = L̄` or `L̂`.
    pub beta: f64,
    /// Global step `min{1/(24L), √(β N K / (c L²))}`, `c = 162` (first
    /// order) or `72` (Hessian-aided).
    pub global_step: f64,
    /// Warm-start batch `⌈K / (R β²)⌉`.
    pub warm_batch: usize,
    /// Upper bound on the local step from
    /// `η K L ≤ min{(Δ / (G₀ λ R))^{1/2}, (β/N)^{1/2}, (β/(NK))^{1/4}}`.
    pub local_step_bound: f64,
    /// The smoothness constant used (`L̄` or `L̂`).
    pub smoothness: f64,
}

/// Theorem-prescribed `(β, λ, B, η-bound)`. `g0` is `(1/N) Σ ‖∇J_i(θ₀)‖²`;
/// `delta` an estimate (or upper bound) of `J(θ*) − J(θ₀)`.
pub fn recommended_hyperparams(
    constants: &TheoryConstants,
    algorithm: Algorithm,
    n_agents: usize,
    local_steps: usize,
    rounds: usize,
    delta: f64,
    g0: f64,
) -> Result<HyperparamPlan> {
    if n_agents == 0 || local_steps == 0 || rounds == 0 {
        return Err(Error::Construction("N, K and R must be at least 1".into()));
    }
    if !(delta > 0.0) || !delta.is_finite() || !(g0 >= 0.0) {
        return Err(Error::Construction(format!("need delta > 0 and G0 >= 0, got {delta}, {g0}")));
    }
    let (smooth, denom) = match algorithm {
        Algorithm::FedSvrpgM => (constants.l_bar(), 162.0),
        Algorithm::FedHapgM => (constants.l_hat(), 72.0),
    };
    let (n, k, r) = (n_agents as f64, local_steps as f64, rounds as f64);
    let sigma4 = constants.sigma_hat.powi(4);
    let beta =
        if sigma4 > 0.0 { ((n * k * smooth * smooth * delta * delta) / (sigma4 * r * r)).cbrt().min(1.0) } else { 1.0 };
    let global_step = (1.0 / (24.0 * smooth)).min((beta * n * k / (denom * smooth * smooth)).sqrt());
    let warm_batch = warm_start_batch(local_steps, rounds, beta)?;
    let first = if g0 > 0.0 { (delta / (g0 * global_step * r)).sqrt() } else { f64::INFINITY };
    let eta_k_l = first.min((beta / n).sqrt()).min((beta / (n * k)).powf(0.25));
    Ok(HyperparamPlan { beta, global_step, warm_batch, local_step_bound: eta_k_l / (k * smooth), smoothness: smooth })
}

/// `R_max (1 − γ^H) / (1 − γ) − J(θ₀)`: an upper bound on `J(θ*) − J(θ₀)`.
pub fn default_delta(r_max: f64, gamma: f64, horizon: usize, j0: f64) -> f64 {
    r_max * (1.0 - gamma.powi(horizon as i32)) / (1.0 - gamma) - j0
}
