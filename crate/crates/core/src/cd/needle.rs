use serde::{Deserialize, Serialize};

use super::report::{CheckReport, ReportBuilder};
use crate::coefficients::sigma;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::space::Needle;

/// Which `(R₀, R₁, t)` triples a needle check samples.
///
/// `anchors` grid nodes are spread evenly over the needle; every ordered
/// pair of anchors is combined with `t_steps − 1` interior times chosen so
/// that `R_t` is a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeedleSampling {
    pub anchors: usize,
    pub t_steps: usize,
    pub max_witnesses: usize,
}

impl Default for NeedleSampling {
    fn default() -> Self {
        Self {
            anchors: 65,
            t_steps: 8,
            max_witnesses: 5,
        }
    }
}

fn anchor_nodes(nodes: usize, anchors: usize) -> Vec<usize> {
    let last = nodes - 1;
    if anchors >= nodes {
        return (0..nodes).collect();
    }
    let mut v: Vec<usize> = (0..anchors)
        .map(|k| (k * last + (anchors - 1) / 2) / (anchors - 1))
        .collect();
    v.dedup();
    v
}

/// `h^{1/(N−1)}` at every grid node.
fn root_density(needle: &Needle, n: f64) -> Vec<f64> {
    needle
        .density()
        .values()
        .iter()
        .map(|v| v.powf(1.0 / (n - 1.0)))
        .collect()
}

/// Checks the σ-concavity inequality and the second-difference form of
/// `(h^{1/(N−1)})'' + K/(N−1)·h^{1/(N−1)} ≤ 0`.
pub fn needle_cd_check(
    needle: &Needle,
    k: f64,
    n: f64,
    sampling: &NeedleSampling,
    tol: &Tolerances,
) -> Result<CheckReport> {
    if n.is_nan() || n <= 1.0 {
        return Err(Error::Domain(format!("needle check needs N > 1, got {n}")));
    }
    let d = needle.density();
    let step = d.step();
    let g = root_density(needle, n);
    let mut b = ReportBuilder::new(tol.needle_at(step), sampling.max_witnesses);
    let nodes = g.len();
    let anchors = anchor_nodes(nodes, sampling.anchors.max(2));
    let steps = sampling.t_steps.max(2);
    for (ai, &i) in anchors.iter().enumerate() {
        for &j in &anchors[ai + 1..] {
            let (r0, r1) = (d.position(i), d.position(j));
            let theta = r1 - r0;
            let mut last = i;
            for s in 1..steps {
                let m = i + ((s * (j - i)) as f64 / steps as f64).round() as usize;
                if m == last || m == j {
                    continue;
                }
                last = m;
                let t = (m - i) as f64 / (j - i) as f64;
                let rhs = sigma(1.0 - t, k, n - 1.0, theta)?.weighted(g[i])
                    + sigma(t, k, n - 1.0, theta)?.weighted(g[j]);
                b.record(
                    "interpolation",
                    &[("r0", r0), ("r1", r1), ("t", t)],
                    g[m] - rhs,
                );
            }
        }
    }
    let c = k / (n - 1.0);
    for i in 1..nodes - 1 {
        let defect = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (step * step) + c * g[i];
        b.record("ode", &[("x", d.position(i))], -defect);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_needle_flat() {
        let n = Needle::constant(1.0, 1.0, 1e-2).unwrap();
        let r = needle_cd_check(
            &n,
            0.0,
            3.0,
            &NeedleSampling::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.passed);
        assert!(r.worst_margin.abs() < 1e-12);
    }

    #[test]
    fn sine_model_saturates() {
        let n = Needle::sine_model(1.0, 3.0, 1e-3).unwrap();
        let r = needle_cd_check(
            &n,
            1.0,
            3.0,
            &NeedleSampling::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_margin.abs() <= 10.0 * n.step() * n.step());
    }

    #[test]
    fn convex_density_fails() {
        let n = Needle::from_fn(1.0, 1e-3, |x| (x * x).exp()).unwrap();
        let r = needle_cd_check(
            &n,
            0.0,
            2.0,
            &NeedleSampling::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert!(!r.passed);
        let w = r.worst().unwrap();
        assert!(w.param("t").is_some() || w.param("x").is_some());
        assert!(w.margin < -r.tolerance);
    }

    #[test]
    fn rejects_small_dimension() {
        let n = Needle::constant(1.0, 1.0, 0.1).unwrap();
        assert!(needle_cd_check(
            &n,
            0.0,
            1.0,
            &NeedleSampling::default(),
            &Tolerances::default()
        )
        .is_err());
    }

    #[test]
    fn anchors_cover_ends() {
        let a = anchor_nodes(1001, 65);
        assert_eq!(a[0], 0);
        assert_eq!(*a.last().unwrap(), 1000);
        assert_eq!(anchor_nodes(5, 65), vec![0, 1, 2, 3, 4]);
    }
}
