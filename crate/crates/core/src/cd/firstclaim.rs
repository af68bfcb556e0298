use serde::{Deserialize, Serialize};

use super::report::{CheckReport, ReportBuilder};
use crate::coefficients::{sigma, tau};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::space::Needle;

/// Two intervals `[R₀, R₀+L₀]` and `[R₁, R₁+L₁]` on every selected needle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub r0: f64,
    pub r1: f64,
    pub l0: f64,
    pub l1: f64,
}

impl Window {
    pub fn validate(&self, needles: &[(usize, &Needle)]) -> Result<()> {
        let w = self;
        if !(w.r0 >= 0.0 && w.r0 < w.r1) {
            return Err(Error::Window(format!(
                "need 0 <= R0 < R1, got R0={}, R1={}",
                w.r0, w.r1
            )));
        }
        if !(w.l0 > 0.0 && w.l1 > 0.0) {
            return Err(Error::Window(format!(
                "need L0, L1 > 0, got {}, {}",
                w.l0, w.l1
            )));
        }
        for (id, nd) in needles {
            if w.r1 + w.l1 > nd.length() * (1.0 + 1e-12) {
                return Err(Error::Window(format!(
                    "R1+L1 = {} exceeds the length {} of ray {id}",
                    w.r1 + w.l1,
                    nd.length()
                )));
            }
        }
        Ok(())
    }
}

/// Checks `L_t^{1/N}·sup h^{1/N}(R_t) ≥ L₀^{1/N}τ^{(1−t)}·inf h^{1/N}(R₀) +
/// L₁^{1/N}τ^{(t)}·inf h^{1/N}(R₁)` over the selected needles.
pub fn firstclaim_check(
    needles: &[(usize, &Needle)],
    k: f64,
    n: f64,
    w: &Window,
    t_samples: &[f64],
    tol: &Tolerances,
) -> Result<CheckReport> {
    if needles.is_empty() {
        return Err(Error::Input("no needles selected".into()));
    }
    if n.is_nan() || n <= 1.0 {
        return Err(Error::Domain(format!("N = {n} must exceed 1")));
    }
    w.validate(needles)?;
    let inv = 1.0 / n;
    let theta = w.r1 - w.r0;
    let extreme = |x: f64, sup: bool| {
        let vals = needles.iter().map(|(_, nd)| nd.h(x).powf(inv));
        if sup {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    };
    let step = needles.iter().map(|(_, nd)| nd.step()).fold(0.0, f64::max);
    let mut b = ReportBuilder::new(tol.needle_at(step), 5);
    for &t in t_samples {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0,1]")));
        }
        let rt = (1.0 - t) * w.r0 + t * w.r1;
        let lt = (1.0 - t) * w.l0 + t * w.l1;
        let lhs = lt.powf(inv) * extreme(rt, true);
        let rhs = tau(1.0 - t, k, n, theta)?.weighted(w.l0.powf(inv) * extreme(w.r0, false))
            + tau(t, k, n, theta)?.weighted(w.l1.powf(inv) * extreme(w.r1, false));
        b.record(
            "firstclaim",
            &[
                ("t", t),
                ("r0", w.r0),
                ("r1", w.r1),
                ("l0", w.l0),
                ("l1", w.l1),
            ],
            lhs - rhs,
        );
    }
    Ok(b.finish())
}

/// Runs [`firstclaim_check`] with each needle as its own selection and
/// merges the results, tagging witnesses with the ray id.
pub fn firstclaim_per_ray(
    needles: &[(usize, &Needle)],
    k: f64,
    n: f64,
    w: &Window,
    t_samples: &[f64],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let mut parts = Vec::new();
    for &(id, nd) in needles {
        parts.push((
            id as f64,
            firstclaim_check(&[(id, nd)], k, n, w, t_samples, tol)?,
        ));
    }
    Ok(CheckReport::merge(parts, "ray", 5))
}

/// Both sides of the per-needle estimate under the choice
/// `L₀ = σ^{(1−t)}h(R₀)^{1/(N−1)}/(1−t)`, `L₁ = σ^{(t)}h(R₁)^{1/(N−1)}/t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Substitution {
    pub l0: f64,
    pub l1: f64,
    pub lt: f64,
    /// Right side of the per-needle estimate in τ form.
    pub rhs_tau: f64,
    /// Right side of the σ-concavity inequality.
    pub rhs_sigma: f64,
    /// Margin of the τ-form estimate `L_t^{1/N}h(R_t)^{1/N} − rhs_tau`.
    pub margin_tau: f64,
    /// Margin of the σ-concavity inequality `h(R_t)^{1/(N−1)} − rhs_sigma`.
    pub margin_sigma: f64,
}

impl Substitution {
    /// Largest discrepancy among the identities `rhs_tau = rhs_sigma = L_t`.
    pub fn residual(&self) -> f64 {
        let scale = self.rhs_sigma.abs().max(1.0);
        ((self.rhs_tau - self.rhs_sigma)
            .abs()
            .max((self.lt - self.rhs_sigma).abs()))
            / scale
    }
}

pub fn substitution(
    h0: f64,
    h1: f64,
    ht: f64,
    k: f64,
    n: f64,
    theta: f64,
    t: f64,
) -> Result<Substitution> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "substitution needs t in (0,1), got {t}"
        )));
    }
    if n.is_nan() || n <= 1.0 {
        return Err(Error::Domain(format!("N = {n} must exceed 1")));
    }
    let s0 = sigma(1.0 - t, k, n - 1.0, theta)?
        .finite()
        .ok_or_else(|| Error::Domain("sigma is infinite at this separation".into()))?;
    let s1 = sigma(t, k, n - 1.0, theta)?
        .finite()
        .ok_or_else(|| Error::Domain("sigma is infinite at this separation".into()))?;
    let q = 1.0 / (n - 1.0);
    let a = s0 * h0.powf(q);
    let b = s1 * h1.powf(q);
    let l0 = a / (1.0 - t);
    let l1 = b / t;
    let lt = (1.0 - t) * l0 + t * l1;
    let inv = 1.0 / n;
    let rhs_tau = l0.powf(inv) * tau(1.0 - t, k, n, theta)?.to_f64() * h0.powf(inv)
        + l1.powf(inv) * tau(t, k, n, theta)?.to_f64() * h1.powf(inv);
    Ok(Substitution {
        l0,
        l1,
        lt,
        rhs_tau,
        rhs_sigma: a + b,
        margin_tau: lt.powf(inv) * ht.powf(inv) - rhs_tau,
        margin_sigma: ht.powf(q) - (a + b),
    })
}

/// Window realizing the substitution at `(R₀, R₁, t)` on `needle`, scaled
/// down (both sides are homogeneous in `(L₀, L₁)`) so that it fits.
pub fn substitution_window(
    needle: &Needle,
    k: f64,
    n: f64,
    r0: f64,
    r1: f64,
    t: f64,
) -> Result<Window> {
    let rt = (1.0 - t) * r0 + t * r1;
    let s = substitution(needle.h(r0), needle.h(r1), needle.h(rt), k, n, r1 - r0, t)?;
    if !(s.l0 > 0.0 && s.l1 > 0.0) {
        return Err(Error::Window("substitution gives a zero length".into()));
    }
    let room = needle.length() - r1;
    if !(room > 0.0) {
        return Err(Error::Window("R1 sits at the end of the needle".into()));
    }
    let c = (room / s.l1).min(1.0);
    Ok(Window {
        r0,
        r1,
        l0: c * s.l0,
        l1: c * s.l1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_needle_passes() {
        let nd = Needle::constant(2.0, 0.5, 1e-2).unwrap();
        let w = Window {
            r0: 0.2,
            r1: 0.9,
            l0: 0.3,
            l1: 0.7,
        };
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let r = firstclaim_check(&[(0, &nd)], 0.0, 3.0, &w, &ts, &Tolerances::default()).unwrap();
        assert!(r.passed);
        assert!(r.worst_margin >= 0.0);
    }

    #[test]
    fn t_zero_margin_nonnegative() {
        let a = Needle::constant(2.0, 0.5, 1e-2).unwrap();
        let b = Needle::from_fn(2.0, 1e-2, |x| 0.25 + 0.1 * x).unwrap();
        let w = Window {
            r0: 0.2,
            r1: 0.9,
            l0: 0.3,
            l1: 0.7,
        };
        let r = firstclaim_check(
            &[(0, &a), (1, &b)],
            0.0,
            3.0,
            &w,
            &[0.0],
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.worst_margin >= 0.0);
    }

    #[test]
    fn window_outside_domain() {
        let nd = Needle::constant(1.0, 1.0, 1e-2).unwrap();
        let w = Window {
            r0: 0.2,
            r1: 0.9,
            l0: 0.3,
            l1: 0.7,
        };
        assert!(matches!(
            firstclaim_check(&[(0, &nd)], 0.0, 3.0, &w, &[0.5], &Tolerances::default()),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn substitution_identity() {
        let s = substitution(0.3, 0.8, 0.6, 1.0, 3.0, 1.2, 0.35).unwrap();
        assert!(s.residual() < 1e-14);
        assert_eq!(s.margin_tau >= 0.0, s.margin_sigma >= 0.0);
    }

    #[test]
    fn sine_needles_pass() {
        let nd = Needle::sine_model(1.0, 3.0, 1e-3).unwrap();
        let w = Window {
            r0: 0.5,
            r1: 2.0,
            l0: 0.8,
            l1: 1.5,
        };
        let ts: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let r = firstclaim_check(
            &[(0, &nd), (1, &nd)],
            1.0,
            3.0,
            &w,
            &ts,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
    }
}
