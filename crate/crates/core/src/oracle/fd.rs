//! Finite-difference check of the needle differential inequality.

use serde::Serialize;

use super::OracleConfig;
use crate::error::{Error, Result};
use crate::space::Needle;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdDefect {
    /// `max (g″ + K/(N−1)·g)` over interior nodes, `g = h^{1/(N−1)}`.
    pub max_defect: f64,
    pub at: f64,
    pub step: f64,
    /// `10·step²`; larger defects flag a violation.
    pub threshold: f64,
    pub violated: bool,
}

/// Central second differences of `h^{1/(N−1)}` on the needle grid, or on
/// every `fd_step/Δ`-th node when `cfg.fd_step` is set.
pub fn fd_concavity_defect(
    needle: &Needle,
    k: f64,
    n: f64,
    cfg: &OracleConfig,
) -> Result<FdDefect> {
    if !(n > 1.0) {
        return Err(Error::Domain(format!("N = {n} must exceed 1")));
    }
    let d = needle.density();
    let stride = cfg
        .fd_step
        .map_or(1, |s| ((s / d.step()).round() as usize).max(1));
    let g: Vec<f64> = d
        .values()
        .iter()
        .step_by(stride)
        .map(|h| h.powf(1.0 / (n - 1.0)))
        .collect();
    if g.len() < 3 {
        return Err(Error::Input(format!(
            "{} nodes are too few for second differences",
            g.len()
        )));
    }
    let step = d.step() * stride as f64;
    let mut max_defect = f64::NEG_INFINITY;
    let mut at = 0.0;
    for i in 1..g.len() - 1 {
        let defect = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (step * step) + k / (n - 1.0) * g[i];
        if defect > max_defect {
            max_defect = defect;
            at = i as f64 * step;
        }
    }
    let threshold = 10.0 * step * step;
    Ok(FdDefect {
        max_defect,
        at,
        step,
        threshold,
        violated: max_defect > threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_density() {
        let nd = Needle::constant(1.0, 4.0, 0.01).unwrap();
        let cfg = OracleConfig::default();
        let r = fd_concavity_defect(&nd, 1.0, 3.0, &cfg).unwrap();
        assert!((r.max_defect - 0.5 * 2.0).abs() < 1e-9 && r.violated);
        let r = fd_concavity_defect(&nd, -1.0, 3.0, &cfg).unwrap();
        assert!(r.max_defect < 0.0 && !r.violated);
    }

    #[test]
    fn sine_saturates() {
        let nd = Needle::sine_model(1.0, 3.0, 1e-3).unwrap();
        let r = fd_concavity_defect(&nd, 1.0, 3.0, &OracleConfig::default()).unwrap();
        assert!(r.max_defect.abs() <= r.threshold, "{r:?}");
    }

    #[test]
    fn gaussian_growth_flagged() {
        let nd = Needle::from_fn(1.0, 1e-3, |x| (x * x).exp()).unwrap();
        let r = fd_concavity_defect(&nd, 0.0, 2.0, &OracleConfig::default()).unwrap();
        assert!(r.violated && r.max_defect > 1.0);
    }

    #[test]
    fn coarse_stride() {
        let nd = Needle::sine_model(1.0, 2.0, 1e-3).unwrap();
        let cfg = OracleConfig {
            fd_step: Some(1e-2),
            ..OracleConfig::default()
        };
        let r = fd_concavity_defect(&nd, 1.0, 2.0, &cfg).unwrap();
        assert!((r.step - 10.0 * nd.step()).abs() < 1e-15);
        assert!(!r.violated);
    }
}
