use serde::Serialize;

use crate::cd::{CheckReport, ReportBuilder};
use crate::coefficients::tau;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::measures::DensityOnNeedle;
use crate::space::Needle;

/// Default number of quantile cells per needle.
pub const DEFAULT_QUANTILES: usize = 512;

/// Lebesgue density `ρ·h`, constant on each grid cell with the trapezoidal
/// cell mass, and its cumulative masses at the grid nodes.
struct CellDensity {
    step: f64,
    cell: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CellDensity {
    fn new(rho: &DensityOnNeedle, h: &DensityOnNeedle) -> Self {
        let f: Vec<f64> = rho
            .values()
            .iter()
            .zip(h.values())
            .map(|(r, w)| r * w)
            .collect();
        let cell: Vec<f64> = f.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let step = rho.step();
        let mut cumulative = vec![0.0; f.len()];
        for i in 0..cell.len() {
            cumulative[i + 1] = cumulative[i] + cell[i] * step;
        }
        Self {
            step,
            cell,
            cumulative,
        }
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Smallest `x` with `F(x) = s·total`, with the cell index used.
    fn quantile(&self, s: f64) -> (f64, usize) {
        let target = s * self.total();
        let cells = self.cell.len();
        let i = self.cumulative[1..]
            .partition_point(|&c| c < target)
            .min(cells - 1);
        let mut i = i;
        while i + 1 < cells && self.cell[i] == 0.0 {
            i += 1;
        }
        let within = if self.cell[i] > 0.0 {
            (target - self.cumulative[i]) / self.cell[i]
        } else {
            0.0
        };
        let x = (i as f64 * self.step + within.clamp(0.0, self.step)).min(cells as f64 * self.step);
        (x, i)
    }
}

/// Monotone-rearrangement geodesic between two densities on a needle.
#[derive(Clone, Debug, Serialize)]
pub struct NeedlePlan {
    pub length: f64,
    pub quantiles: usize,
    /// Source and target positions at levels `k/Q`, `k = 0..=Q`.
    pub source_knots: Vec<f64>,
    pub target_knots: Vec<f64>,
    /// Source and target positions at levels `(k+½)/Q`.
    pub source_mid: Vec<f64>,
    pub target_mid: Vec<f64>,
    /// Lebesgue densities of μ₀ and μ₁ at the midpoint quantiles.
    pub source_density: Vec<f64>,
    pub target_density: Vec<f64>,
    pub t_samples: Vec<f64>,
    /// `ρ_t` against the needle measure at each sampled `t`, normalized to
    /// needle mass 1.
    pub densities: Vec<DensityOnNeedle>,
    pub degenerate_cells: Vec<usize>,
}

impl NeedlePlan {
    /// Position of quantile knot `k` at time `t`.
    pub fn knot(&self, t: f64, k: usize) -> f64 {
        (1.0 - t) * self.source_knots[k] + t * self.target_knots[k]
    }

    /// `T_t` at source position `x`, interpolated between knots.
    pub fn transport_map(&self, t: f64, x: f64) -> f64 {
        let k = self
            .source_knots
            .partition_point(|&s| s <= x)
            .clamp(1, self.quantiles);
        let (a, b) = (self.source_knots[k - 1], self.source_knots[k]);
        let f = if b > a {
            ((x - a) / (b - a)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (1.0 - f) * self.knot(t, k - 1) + f * self.knot(t, k)
    }

    /// Lebesgue density of `μ_t` at `z`: each quantile cell carries `1/Q`.
    pub fn lebesgue_density(&self, t: f64, z: f64) -> f64 {
        let q = self.quantiles;
        let mut total = 0.0;
        for k in 0..q {
            let (a, b) = (self.knot(t, k), self.knot(t, k + 1));
            if b > a && z >= a && z < b {
                total += 1.0 / (q as f64 * (b - a));
            }
        }
        total
    }

    /// Total mass of `μ_t` as a sum of cell masses.
    pub fn mass(&self, t: f64) -> f64 {
        let q = self.quantiles;
        (0..q)
            .filter(|&k| self.knot(t, k + 1) > self.knot(t, k))
            .map(|k| {
                (self.knot(t, k + 1) - self.knot(t, k))
                    / (q as f64 * (self.knot(t, k + 1) - self.knot(t, k)))
            })
            .sum()
    }

    /// `ρ_t` against the needle measure, sampled on the needle grid and
    /// normalized to needle mass 1.
    pub fn sampled_density(&self, t: f64, needle: &Needle) -> Result<DensityOnNeedle> {
        let d = needle.density();
        let values = (0..d.nodes())
            .map(|i| {
                let h = d.values()[i];
                if h > 0.0 {
                    self.lebesgue_density(t, d.position(i)) / h
                } else {
                    0.0
                }
            })
            .collect();
        let rho = DensityOnNeedle::new(d.length(), values)?;
        let mass = rho.weighted_mass(d)?;
        Ok(if mass > 0.0 {
            rho.scaled(1.0 / mass)
        } else {
            rho
        })
    }

    /// Pointwise inequality along every midpoint quantile chain:
    /// `ρ_t^{−1/N'}(γ_t) ≥ τ^{(1−t)}(|γ₁−γ₀|)ρ₀^{−1/N'}(γ₀) + τ^{(t)}(|γ₁−γ₀|)ρ₁^{−1/N'}(γ₁)`.
    pub fn pointwise_check(
        &self,
        needle: &Needle,
        k: f64,
        nprimes: &[f64],
        tol: &Tolerances,
    ) -> Result<CheckReport> {
        let mut b = ReportBuilder::new(tol.needle_at(needle.step()), 5);
        let mut skipped = 0usize;
        for q in 0..self.quantiles {
            let (x, y) = (self.source_mid[q], self.target_mid[q]);
            let (f0, f1) = (self.source_density[q], self.target_density[q]);
            let (h0, h1) = (needle.h(x), needle.h(y));
            if !(f0 > 0.0 && f1 > 0.0 && h0 > 0.0 && h1 > 0.0) {
                skipped += 1;
                continue;
            }
            let theta = (y - x).abs();
            for &t in &self.t_samples {
                let z = (1.0 - t) * x + t * y;
                let hz = needle.h(z);
                let ft = 1.0 / ((1.0 - t) / f0 + t / f1);
                for &np in nprimes {
                    let e = -1.0 / np;
                    let lhs = if hz > 0.0 { (ft / hz).powf(e) } else { 0.0 };
                    let rhs = tau(1.0 - t, k, np, theta)?.weighted((f0 / h0).powf(e))
                        + tau(t, k, np, theta)?.weighted((f1 / h1).powf(e));
                    b.record(
                        "pointwise",
                        &[
                            ("quantile", (q as f64 + 0.5) / self.quantiles as f64),
                            ("t", t),
                            ("nprime", np),
                        ],
                        lhs - rhs,
                    );
                }
            }
        }
        if skipped > 0 {
            b.note(format!("{skipped} quantiles skipped at zero density"));
        }
        Ok(b.finish())
    }
}

/// Builds the quantile coupling between `mu0a` and `mu1a`, both densities
/// against the needle measure `h dx`.
pub fn needle_geodesic(
    needle: &Needle,
    mu0a: &DensityOnNeedle,
    mu1a: &DensityOnNeedle,
    t_samples: &[f64],
    quantiles: usize,
) -> Result<NeedlePlan> {
    let h = needle.density();
    for mu in [mu0a, mu1a] {
        if mu.nodes() != h.nodes() || (mu.length() - h.length()).abs() > 1e-12 * h.length() {
            return Err(Error::Input("densities must share the needle grid".into()));
        }
    }
    let c0 = CellDensity::new(mu0a, h);
    let c1 = CellDensity::new(mu1a, h);
    let (m0, m1) = (c0.total(), c1.total());
    if !(m0 > 0.0) || (m0 - m1).abs() > 1e-8 * m0.max(m1) {
        return Err(Error::Input(format!("needle masses differ: {m0} vs {m1}")));
    }
    let q = quantiles.max(1);
    let level = |k: f64| k / q as f64;
    let source_knots: Vec<f64> = (0..=q).map(|k| c0.quantile(level(k as f64)).0).collect();
    let target_knots: Vec<f64> = (0..=q).map(|k| c1.quantile(level(k as f64)).0).collect();
    let mut source_mid = Vec::with_capacity(q);
    let mut target_mid = Vec::with_capacity(q);
    let mut source_density = Vec::with_capacity(q);
    let mut target_density = Vec::with_capacity(q);
    for k in 0..q {
        let (x, i) = c0.quantile(level(k as f64 + 0.5));
        let (y, j) = c1.quantile(level(k as f64 + 0.5));
        source_mid.push(x);
        target_mid.push(y);
        source_density.push(c0.cell[i] / m0);
        target_density.push(c1.cell[j] / m1);
    }
    let mut degenerate_cells = Vec::new();
    for k in 0..q {
        if t_samples.iter().any(|&t| {
            (1.0 - t) * source_knots[k + 1] + t * target_knots[k + 1]
                <= (1.0 - t) * source_knots[k] + t * target_knots[k]
        }) {
            degenerate_cells.push(k);
        }
    }
    let mut plan = NeedlePlan {
        length: h.length(),
        quantiles: q,
        source_knots,
        target_knots,
        source_mid,
        target_mid,
        source_density,
        target_density,
        t_samples: t_samples.to_vec(),
        densities: Vec::new(),
        degenerate_cells,
    };
    plan.densities = t_samples
        .iter()
        .map(|&t| plan.sampled_density(t, needle))
        .collect::<Result<_>>()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts() -> Vec<f64> {
        vec![0.0, 0.25, 0.5, 0.75, 1.0]
    }

    #[test]
    fn static_transport() {
        let nd = Needle::constant(1.0, 1.0, 1e-2).unwrap();
        let rho = DensityOnNeedle::from_fn(1.0, 100, |x| 0.5 + x).unwrap();
        let p = needle_geodesic(&nd, &rho, &rho, &ts(), 64).unwrap();
        for k in 0..=64 {
            assert!((p.knot(0.5, k) - p.source_knots[k]).abs() < 1e-12);
        }
        let r = p
            .pointwise_check(&nd, 0.0, &[2.0, 3.0], &Tolerances::default())
            .unwrap();
        assert!(r.worst_margin.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn block_translation() {
        let nd = Needle::constant(1.0, 1.0, 1e-2).unwrap();
        let eps = 0.2;
        let r0 =
            DensityOnNeedle::from_fn(1.0, 100, |x| if x < eps - 1e-9 { 1.0 / eps } else { 0.0 })
                .unwrap();
        let r1 = DensityOnNeedle::from_fn(1.0, 100, |x| {
            if x > 0.6 + 1e-9 && x < 0.8 + 1e-9 {
                1.0 / eps
            } else {
                0.0
            }
        })
        .unwrap();
        let m0 = r0.mass();
        let r0 = r0.scaled(1.0 / m0);
        let r1 = r1.scaled(1.0 / r1.mass());
        let p = needle_geodesic(&nd, &r0, &r1, &ts(), 128).unwrap();
        for (i, &t) in ts().iter().enumerate() {
            assert!((p.mass(t) - 1.0).abs() < 1e-12);
            assert!((p.densities[i].weighted_mass(nd.density()).unwrap() - 1.0).abs() < 1e-10);
        }
        let mid = p.sampled_density(0.5, &nd).unwrap();
        assert!(mid.eval(0.4) > 0.0 && mid.eval(0.1) == 0.0 && mid.eval(0.7) == 0.0);
        let r = p
            .pointwise_check(&nd, 0.0, &[2.0], &Tolerances::default())
            .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn mass_mismatch_rejected() {
        let nd = Needle::constant(1.0, 1.0, 0.1).unwrap();
        let a = DensityOnNeedle::new(1.0, vec![1.0; 11]).unwrap();
        let b = DensityOnNeedle::new(1.0, vec![2.0; 11]).unwrap();
        assert!(needle_geodesic(&nd, &a, &b, &ts(), 16).is_err());
    }

    #[test]
    fn sine_needle_step_densities() {
        let nd = Needle::sine_model(1.0, 3.0, 1e-3).unwrap();
        let l = nd.length();
        let h = nd.density().clone();
        let step = |a: f64, b: f64| {
            let raw = DensityOnNeedle::from_fn(l, h.nodes() - 1, |x| {
                if x > a * l && x < b * l {
                    1.0
                } else {
                    0.0
                }
            })
            .unwrap();
            let m = raw.weighted_mass(&h).unwrap();
            raw.scaled(1.0 / m)
        };
        let p = needle_geodesic(
            &nd,
            &step(0.1, 0.4),
            &step(0.5, 0.9),
            &ts(),
            DEFAULT_QUANTILES,
        )
        .unwrap();
        let r = p
            .pointwise_check(&nd, 1.0, &[3.0, 4.0, 6.0, 30.0], &Tolerances::default())
            .unwrap();
        assert!(r.worst_margin >= -1e-5, "{r:?}");
    }
}
