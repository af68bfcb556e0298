//! Tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// Absolute tolerance for coefficient case splits.
pub const COEFF_TOL: f64 = 1e-12;

/// Below this value of |Kθ²/N| the coefficients return `t`.
pub const TAYLOR_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Coefficient comparisons.
    pub coefficient: f64,
    /// Probability mass check.
    pub probability: f64,
    /// Marginal agreement of couplings and plans.
    pub marginal: f64,
    /// Metric axioms (triangle inequality, symmetry).
    pub metric: f64,
    /// Lipschitz check and Γ_u membership, relative to the diameter.
    pub ray_relative: f64,
    /// Duality gap of Kantorovich potentials.
    pub duality: f64,
    /// W₁-optimality of supplied plans.
    pub optimality: f64,
    /// Margins of purely discrete checks.
    pub discrete_check: f64,
    /// Margins of needle checks.
    pub needle_check: f64,
    /// Snapping of sample times to registered chain times.
    pub time_snap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            coefficient: COEFF_TOL,
            probability: 1e-12,
            marginal: 1e-10,
            metric: 1e-9,
            ray_relative: 1e-9,
            duality: 1e-9,
            optimality: 1e-8,
            discrete_check: 1e-9,
            needle_check: 1e-6,
            time_snap: 1e-9,
        }
    }
}

impl Tolerances {
    /// Needle tolerance at grid step `step`: the larger of the configured
    /// floor and the second-difference error `10·Δ²`.
    pub fn needle_at(&self, step: f64) -> f64 {
        self.needle_check.max(10.0 * step * step)
    }
}

/// Default sample times for dynamic checks.
pub fn default_t_samples() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

/// The N′ probe set `{N, N+1, 2N, 10N}`, deduplicated and sorted.
pub fn nprime_samples(n: f64) -> Vec<f64> {
    let mut v = vec![n, n + 1.0, 2.0 * n, 10.0 * n];
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}
