//! Independent reference implementations used by tests and `--oracle`.

pub mod branching;
pub mod fd;
pub mod hp;
pub mod lp;

pub use branching::branching_sets_brute;
pub use fd::{fd_concavity_defect, FdDefect};
pub use hp::{hp_sigma, hp_tau, HpValue};
pub use lp::{brute_force_ot, exact_lp_min, OracleOt};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Bound on each support size; the program has at most `max_points²`
    /// variables.
    pub max_points: usize,
    /// Decimal digits for high-precision coefficients.
    pub precision: u32,
    /// Spacing for second differences; the needle grid step when `None`.
    pub fd_step: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_points: 8,
            precision: 50,
            fd_step: None,
        }
    }
}
