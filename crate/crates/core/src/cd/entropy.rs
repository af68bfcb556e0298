use super::report::{CheckReport, ReportBuilder};
use crate::coefficients::tau;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::measures::{ac_decompose, kahan_sum, DiscreteMeasure};
use crate::space::FiniteMMSpace;
use crate::transport::{pushforward_at, wasserstein_p, Coupling, DynamicPlan};

/// Inputs shared by the dynamic entropy checks.
#[derive(Clone, Debug)]
pub struct EntropyCheckConfig {
    pub k: f64,
    pub n: f64,
    pub t_samples: Vec<f64>,
    pub nprime_samples: Vec<f64>,
    pub tol: Tolerances,
    pub max_witnesses: usize,
}

impl EntropyCheckConfig {
    pub fn new(k: f64, n: f64) -> Self {
        Self {
            k,
            n,
            t_samples: crate::config::default_t_samples(),
            nprime_samples: crate::config::nprime_samples(n),
            tol: Tolerances::default(),
            max_witnesses: 5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n.is_nan() || self.n < 1.0 {
            return Err(Error::Domain(format!("N = {} must be at least 1", self.n)));
        }
        if let Some(&np) = self
            .nprime_samples
            .iter()
            .find(|&&np| !(np > 1.0) || np < self.n)
        {
            return Err(Error::Domain(format!(
                "N' = {np} must exceed 1 and be at least N = {}",
                self.n
            )));
        }
        if let Some(&t) = self.t_samples.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Domain(format!("sample time {t} outside [0,1]")));
        }
        Ok(())
    }
}

fn chain_tol(space: &FiniteMMSpace, tol: &Tolerances) -> f64 {
    tol.metric * space.diameter().max(1.0)
}

fn check_chains(space: &FiniteMMSpace, plan: &DynamicPlan, tol: &Tolerances) -> Result<()> {
    if let Some(i) = plan.first_bad_chain(space, chain_tol(space, tol))? {
        return Err(Error::PlanMismatch(format!(
            "chain {i} is not a constant-speed geodesic"
        )));
    }
    Ok(())
}

fn check_endpoints(
    space: &FiniteMMSpace,
    plan: &DynamicPlan,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    tol: &Tolerances,
) -> Result<()> {
    for (t, mu) in [(0.0, mu0), (1.0, mu1)] {
        if mu.len() != space.n() {
            return Err(Error::MismatchedSpace {
                expected: space.n(),
                found: mu.len(),
            });
        }
        let pushed = pushforward_at(plan, t, space, tol.time_snap)?;
        let err = pushed.max_abs_diff(mu);
        if err > tol.marginal {
            return Err(Error::PlanMismatch(format!(
                "e_{t} pushforward differs from the marginal by {err}"
            )));
        }
    }
    Ok(())
}

/// `∫ρ_t^{−1/N'} dμ_t` over the absolutely continuous part.
fn entropy_mass(rho: &[f64], m: &DiscreteMeasure, np: f64) -> f64 {
    let e = 1.0 - 1.0 / np;
    kahan_sum(
        rho.iter()
            .zip(m.weights())
            .filter(|(r, _)| **r > 0.0)
            .map(|(r, w)| r.powf(e) * w),
    )
}

/// `Σ π(x,y)·[τ^{(1−t)}(d)ρ₀(x)^{−1/N'} + τ^{(t)}(d)ρ₁(y)^{−1/N'}]`.
fn distortion_rhs(
    space: &FiniteMMSpace,
    pairs: &[(usize, usize, f64)],
    rho0: &[f64],
    rho1: &[f64],
    k: f64,
    np: f64,
    t: f64,
) -> Result<f64> {
    let mut terms = Vec::with_capacity(2 * pairs.len());
    for &(x, y, mass) in pairs {
        if mass <= 0.0 {
            continue;
        }
        let d = space.d(x, y);
        let a = tau(1.0 - t, k, np, d)?.weighted(mass * rho0[x].powf(-1.0 / np));
        let b = tau(t, k, np, d)?.weighted(mass * rho1[y].powf(-1.0 / np));
        terms.push(a);
        terms.push(b);
    }
    Ok(kahan_sum(terms))
}

fn absolutely_continuous(
    mu: &DiscreteMeasure,
    m: &DiscreteMeasure,
    name: &str,
) -> Result<Vec<f64>> {
    let ac = ac_decompose(mu, m)?;
    let s = ac.singular_mass();
    if s > 0.0 {
        return Err(Error::PlanMismatch(format!("{name} has singular mass {s}")));
    }
    Ok(ac.density)
}

fn entropy_inequality(
    space: &FiniteMMSpace,
    plan: &DynamicPlan,
    pairs: &[(usize, usize, f64)],
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    cfg: &EntropyCheckConfig,
) -> Result<CheckReport> {
    let m = space.reference();
    let rho0 = absolutely_continuous(mu0, m, "mu0")?;
    let rho1 = absolutely_continuous(mu1, m, "mu1")?;
    let mut b = ReportBuilder::new(cfg.tol.discrete_check, cfg.max_witnesses);
    for &t in &cfg.t_samples {
        let mu_t = pushforward_at(plan, t, space, cfg.tol.time_snap)?;
        let ac = ac_decompose(&mu_t, m)?;
        let singular = ac.singular_mass();
        for &np in &cfg.nprime_samples {
            if singular > cfg.tol.discrete_check {
                b.record(
                    "singular",
                    &[("t", t), ("nprime", np), ("singular_mass", singular)],
                    f64::NEG_INFINITY,
                );
                continue;
            }
            let lhs = entropy_mass(&ac.density, m, np);
            let rhs = distortion_rhs(space, pairs, &rho0, &rho1, cfg.k, np, t)?;
            b.record("entropy", &[("t", t), ("nprime", np)], lhs - rhs);
        }
        if singular > cfg.tol.discrete_check {
            b.note(format!("mu_t at t = {t} has singular mass {singular}"));
        }
    }
    Ok(b.finish())
}

/// Entropy inequality along a W₁-optimal plan of constant-speed chains.
pub fn cd1_entropy_check(
    space: &FiniteMMSpace,
    plan: &DynamicPlan,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    cfg: &EntropyCheckConfig,
) -> Result<CheckReport> {
    cfg.validate()?;
    check_endpoints(space, plan, mu0, mu1, &cfg.tol)?;
    check_chains(space, plan, &cfg.tol)?;
    let (w1, _) = wasserstein_p(space, mu0, mu1, 1.0)?;
    let gap = plan.cost(space, 1.0) - w1;
    if gap > cfg.tol.optimality {
        return Err(Error::NonOptimal { gap });
    }
    let pairs: Vec<(usize, usize, f64)> = plan
        .entries
        .iter()
        .map(|e| (e.chain.start(), e.chain.end(), e.mass))
        .collect();
    entropy_inequality(space, plan, &pairs, mu0, mu1, cfg)
}

/// Entropy inequality along a W₂-geodesic with an optimal coupling.
pub fn cd2_check(
    space: &FiniteMMSpace,
    coupling: &Coupling,
    plan: &DynamicPlan,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    cfg: &EntropyCheckConfig,
) -> Result<CheckReport> {
    cfg.validate()?;
    let err = coupling.marginal_error(mu0, mu1);
    if err > cfg.tol.marginal {
        return Err(Error::PlanMismatch(format!(
            "coupling marginals are off by {err}"
        )));
    }
    let (w2, _) = wasserstein_p(space, mu0, mu1, 2.0)?;
    let gap = coupling.cost(space, 2.0) - w2 * w2;
    if gap > cfg.tol.optimality {
        return Err(Error::NonOptimal { gap });
    }
    check_endpoints(space, plan, mu0, mu1, &cfg.tol)?;
    check_chains(space, plan, &cfg.tol)?;
    let (a, b) = (plan.endpoint_coupling().as_map(), coupling.as_map());
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    for key in keys {
        let diff = (a.get(key).unwrap_or(&0.0) - b.get(key).unwrap_or(&0.0)).abs();
        if diff > cfg.tol.marginal {
            return Err(Error::PlanMismatch(format!(
                "plan and coupling disagree at {key:?} by {diff}"
            )));
        }
    }
    let pairs: Vec<(usize, usize, f64)> = coupling
        .entries
        .iter()
        .map(|e| (e.x, e.y, e.mass))
        .collect();
    entropy_inequality(space, plan, &pairs, mu0, mu1, cfg)
}

/// Measure contraction inequality for a plan collapsing `μ₀` onto `δ_{x₀}`.
///
/// The left side uses the absolutely continuous part of `μ_t` only.
pub fn mcp_check(
    space: &FiniteMMSpace,
    mu0: &DiscreteMeasure,
    x0: usize,
    plan: &DynamicPlan,
    cfg: &EntropyCheckConfig,
) -> Result<CheckReport> {
    cfg.validate()?;
    if x0 >= space.n() {
        return Err(Error::UnknownPoint(x0.to_string()));
    }
    let target = DiscreteMeasure::dirac(space.n(), x0).scaled(mu0.total_mass());
    check_endpoints(space, plan, mu0, &target, &cfg.tol)?;
    check_chains(space, plan, &cfg.tol)?;
    let m = space.reference();
    let rho0 = absolutely_continuous(mu0, m, "mu0")?;
    let mut b = ReportBuilder::new(cfg.tol.discrete_check, cfg.max_witnesses);
    for &t in cfg.t_samples.iter().filter(|&&t| t < 1.0) {
        let mu_t = pushforward_at(plan, t, space, cfg.tol.time_snap)?;
        let ac = ac_decompose(&mu_t, m)?;
        if ac.singular_mass() > 0.0 {
            b.note(format!(
                "mu_t at t = {t} has singular mass {}; left side uses the a.c. part",
                ac.singular_mass()
            ));
        }
        for &np in &cfg.nprime_samples {
            let lhs = entropy_mass(&ac.density, m, np);
            let mut terms = Vec::new();
            for (x, w) in mu0.atoms() {
                terms.push(
                    tau(1.0 - t, cfg.k, np, space.d(x, x0))?.weighted(w * rho0[x].powf(-1.0 / np)),
                );
            }
            let rhs = kahan_sum(terms);
            let kind = if rhs.is_infinite() {
                "infinite_rhs"
            } else {
                "mcp"
            };
            b.record(kind, &[("t", t), ("nprime", np)], lhs - rhs);
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GeodesicChain;
    use crate::transport::PlanEntry;

    fn line(n: usize, spacing: f64) -> FiniteMMSpace {
        let coords = (0..n).map(|i| vec![i as f64 * spacing]).collect();
        FiniteMMSpace::from_coords(
            coords,
            FiniteMMSpace::euclidean,
            DiscreteMeasure::uniform(n),
        )
        .unwrap()
    }

    fn static_plan(mu: &DiscreteMeasure, times: &[f64]) -> DynamicPlan {
        DynamicPlan::new(
            mu.atoms()
                .map(|(x, w)| PlanEntry {
                    chain: GeodesicChain::constant(x, times).unwrap(),
                    mass: w,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn static_plan_has_zero_margin() {
        let s = line(5, 1.0);
        let mu = DiscreteMeasure::new(vec![0.1, 0.2, 0.3, 0.4, 0.0]).unwrap();
        let cfg = EntropyCheckConfig::new(0.0, 2.0);
        let r = cd1_entropy_check(&s, &static_plan(&mu, &cfg.t_samples), &mu, &mu, &cfg).unwrap();
        assert!(r.passed);
        assert!(r.worst_margin.abs() < 1e-14);
    }

    #[test]
    fn non_optimal_plan_rejected() {
        let s = line(3, 1.0);
        let mu0 = DiscreteMeasure::new(vec![0.5, 0.5, 0.0]).unwrap();
        let mu1 = DiscreteMeasure::new(vec![0.5, 0.0, 0.5]).unwrap();
        let plan = DynamicPlan::new(vec![
            PlanEntry {
                chain: GeodesicChain::segment(0, 2),
                mass: 0.5,
            },
            PlanEntry {
                chain: GeodesicChain::segment(1, 0),
                mass: 0.5,
            },
        ])
        .unwrap();
        let cfg = EntropyCheckConfig {
            t_samples: vec![0.0, 1.0],
            ..EntropyCheckConfig::new(0.0, 2.0)
        };
        assert!(matches!(
            cd1_entropy_check(&s, &plan, &mu0, &mu1, &cfg),
            Err(Error::NonOptimal { .. })
        ));
    }

    fn contraction(s: &FiniteMMSpace, starts: &[usize]) -> (DiscreteMeasure, DynamicPlan) {
        let mu0 = DiscreteMeasure::uniform_on(s.n(), starts);
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let entries = starts
            .iter()
            .map(|&x| {
                let nodes = times
                    .iter()
                    .map(|t| ((1.0 - t) * x as f64).round() as usize)
                    .collect();
                PlanEntry {
                    chain: GeodesicChain::new(nodes, times.to_vec()).unwrap(),
                    mass: 1.0 / starts.len() as f64,
                }
            })
            .collect();
        (mu0, DynamicPlan::new(entries).unwrap())
    }

    #[test]
    fn contraction_passes_flat() {
        let s = line(17, 1.0 / 16.0);
        let (mu0, plan) = contraction(&s, &[0, 4, 8, 12, 16]);
        let cfg = EntropyCheckConfig {
            nprime_samples: vec![2.0, 5.0],
            ..EntropyCheckConfig::new(0.0, 2.0)
        };
        let r = mcp_check(&s, &mu0, 0, &plan, &cfg).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_margin.abs() < 1e-14);
    }

    #[test]
    fn contraction_beyond_diameter_fails() {
        let s = line(17, 1.0);
        let (mu0, plan) = contraction(&s, &[0, 4, 8, 12, 16]);
        let cfg = EntropyCheckConfig {
            nprime_samples: vec![2.0, 5.0],
            ..EntropyCheckConfig::new(1.0, 2.0)
        };
        let r = mcp_check(&s, &mu0, 0, &plan, &cfg).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_margin, f64::NEG_INFINITY);
        assert_eq!(r.worst().unwrap().kind, "infinite_rhs");
    }

    #[test]
    fn block_translation_on_flat_needle() {
        let s = line(4, 1.0);
        let mu0 = DiscreteMeasure::uniform_on(4, &[0, 1]);
        let mu1 = DiscreteMeasure::uniform_on(4, &[2, 3]);
        let (_, coupling) = wasserstein_p(&s, &mu0, &mu1, 2.0).unwrap();
        let times = vec![0.0, 0.5, 1.0];
        let plan = DynamicPlan::new(vec![
            PlanEntry {
                chain: GeodesicChain::new(vec![0, 1, 2], times.clone()).unwrap(),
                mass: 0.5,
            },
            PlanEntry {
                chain: GeodesicChain::new(vec![1, 2, 3], times.clone()).unwrap(),
                mass: 0.5,
            },
        ])
        .unwrap();
        let cfg = EntropyCheckConfig {
            t_samples: times,
            ..EntropyCheckConfig::new(0.0, 2.0)
        };
        let r = cd2_check(&s, &coupling, &plan, &mu0, &mu1, &cfg).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
