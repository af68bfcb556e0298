//! Construction of W₁-geodesics by gluing monotone rearrangements along
//! transport rays, and the entropy check along the glued plan.

mod lift;
mod needle_geodesic;

pub use lift::{lattice_lift, time_denominator, LatticeLift, LiftedRay, MAX_LIFTED_POINTS};
pub use needle_geodesic::{needle_geodesic, NeedlePlan, DEFAULT_QUANTILES};

use serde::Serialize;

use crate::cd::{cd1_entropy_check, localize, CheckReport, EntropyCheckConfig};
use crate::config::{default_t_samples, Tolerances};
use crate::disintegration::{disintegrate_transport_marginals, RayMarginals, TransportMarginals};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::rays::Ray;
use crate::space::{FiniteMMSpace, GeodesicChain};
use crate::transport::{
    kantorovich_potential, pushforward_at, wasserstein_p, DynamicPlan, PlanEntry,
};

/// One piece of a monotone coupling along a ray, by member position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayPair {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Monotone rearrangement of a ray's normalized marginals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayPlan {
    pub ray: usize,
    pub q0: f64,
    pub pairs: Vec<RayPair>,
}

/// Couples `μ_{0,α}` to `μ_{1,α}` monotonically along the ray parameter.
pub fn ray_geodesic(ray: &Ray, marginals: &RayMarginals) -> RayPlan {
    let atoms = |mu: &DiscreteMeasure| -> Vec<(f64, f64)> {
        ray.members
            .iter()
            .zip(&ray.params)
            .map(|(&x, &s)| (s, mu.mass(x)))
            .collect()
    };
    let pairs = crate::transport::monotone::monotone_coupling(
        &atoms(&marginals.mu0),
        &atoms(&marginals.mu1),
    )
    .into_iter()
    .map(|(source, target, mass)| RayPair {
        source,
        target,
        mass,
    })
    .collect();
    RayPlan {
        ray: ray.id,
        q0: marginals.q0,
        pairs,
    }
}

fn sample_times(t_samples: &[f64]) -> Result<Vec<f64>> {
    let mut times: Vec<f64> = t_samples.to_vec();
    times.extend([0.0, 1.0]);
    if let Some(t) = times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain(format!("sample time {t} outside [0,1]")));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    Ok(times)
}

/// `ν = Σ_α q₀(α)·ν_α` plus static chains for the mass off the rays, on the
/// lattice-lifted space. Returns the plan and the ray of each chain.
pub fn glue_geodesics(
    lift: &LatticeLift,
    marginals: &TransportMarginals,
    plans: &[RayPlan],
    t_samples: &[f64],
) -> Result<(DynamicPlan, Vec<Option<usize>>)> {
    let times = sample_times(t_samples)?;
    let d = lift.denominator as f64;
    let mut entries = Vec::new();
    let mut rays = Vec::new();
    for plan in plans {
        let lr = lift.rays.get(plan.ray).ok_or_else(|| Error::Structural {
            ray: Some(plan.ray),
            message: "ray missing from the lift".into(),
        })?;
        for pair in plan.pairs.iter().filter(|p| p.mass > 0.0) {
            let (a, b) = (lr.slots[pair.source] as f64, lr.slots[pair.target] as f64);
            let nodes = times
                .iter()
                .map(|&t| {
                    let j = a + t * (b - a);
                    if (j - j.round()).abs() > 1e-9 * d.max(b - a) {
                        return Err(Error::Input(format!(
                            "time {t} does not land on the ray lattice"
                        )));
                    }
                    Ok(lr.point(j.round() as usize))
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push(PlanEntry {
                chain: GeodesicChain::new(nodes, times.clone())?,
                mass: plan.q0 * pair.mass,
            });
            rays.push(Some(plan.ray));
        }
    }
    for (x, w) in marginals.static_part.atoms() {
        entries.push(PlanEntry {
            chain: GeodesicChain::constant(x, &times)?,
            mass: w,
        });
        rays.push(None);
    }
    Ok((DynamicPlan::new(entries)?, rays))
}

#[derive(Clone, Debug)]
pub struct GlueOptions {
    pub t_samples: Vec<f64>,
    pub ray_tol: Option<f64>,
    pub tol: Tolerances,
}

impl Default for GlueOptions {
    fn default() -> Self {
        Self {
            t_samples: default_t_samples(),
            ray_tol: None,
            tol: Tolerances::default(),
        }
    }
}

/// A glued W₁-geodesic together with the data it was built from.
#[derive(Clone, Debug, Serialize)]
pub struct GluedPlan {
    pub u: Vec<f64>,
    pub w1: f64,
    pub lift: LatticeLift,
    pub marginals: TransportMarginals,
    pub ray_plans: Vec<RayPlan>,
    pub plan: DynamicPlan,
    /// Ray of each chain; `None` for static chains.
    pub chain_rays: Vec<Option<usize>>,
    pub t_samples: Vec<f64>,
    pub mu0: DiscreteMeasure,
    pub mu1: DiscreteMeasure,
}

impl GluedPlan {
    /// `μ_t` on the lifted space.
    pub fn pushforward(&self, t: f64) -> Result<DiscreteMeasure> {
        pushforward_at(&self.plan, t, &self.lift.space, 1e-9)
    }

    /// Chains of one ray, renormalized by `q₀(α)`.
    pub fn ray_subplan(&self, ray: usize) -> Result<DynamicPlan> {
        let q0 = self
            .ray_plans
            .iter()
            .find(|p| p.ray == ray)
            .map(|p| p.q0)
            .unwrap_or(0.0);
        if !(q0 > 0.0) {
            return Err(Error::Structural {
                ray: Some(ray),
                message: "ray carries no transported mass".into(),
            });
        }
        DynamicPlan::new(
            self.plan
                .entries
                .iter()
                .zip(&self.chain_rays)
                .filter(|(_, r)| **r == Some(ray))
                .map(|(e, _)| PlanEntry {
                    chain: e.chain.clone(),
                    mass: e.mass / q0,
                })
                .collect(),
        )
    }

    /// `μ_{t,α}`, a probability measure on the lifted space.
    pub fn ray_pushforward(&self, ray: usize, t: f64) -> Result<DiscreteMeasure> {
        pushforward_at(&self.ray_subplan(ray)?, t, &self.lift.space, 1e-9)
    }

    /// Largest atom-wise deviation of `μ_t` from `Σ_α q₀(α)μ_{t,α} + static`.
    pub fn mixture_error(&self, t: f64) -> Result<f64> {
        let mut mix = self.lift.lift_measure(&self.marginals.static_part);
        for p in &self.ray_plans {
            for (x, w) in self.ray_pushforward(p.ray, t)?.atoms() {
                mix.add_mass(x, p.q0 * w);
            }
        }
        Ok(self.pushforward(t)?.max_abs_diff(&mix))
    }
}

/// Builds the glued W₁-geodesic from `mu0` to `mu1`.
///
/// Without `u`, a Kantorovich potential is computed; a supplied `u` must
/// close the duality gap.
pub fn glue(
    space: &FiniteMMSpace,
    u: Option<&[f64]>,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    opts: &GlueOptions,
) -> Result<GluedPlan> {
    let (w1, coupling) = wasserstein_p(space, mu0, mu1, 1.0)?;
    let u = match u {
        Some(u) => {
            if u.len() != space.n() {
                return Err(Error::MismatchedSpace {
                    expected: space.n(),
                    found: u.len(),
                });
            }
            let gap = w1 - (mu0.integrate(u) - mu1.integrate(u));
            if gap.abs() > opts.tol.duality * w1.max(1.0) {
                return Err(Error::NonOptimal { gap });
            }
            u.to_vec()
        }
        None => kantorovich_potential(space, mu0, mu1)?.values,
    };
    let loc = localize(space, &u, opts.ray_tol, None)?;
    let marginals = disintegrate_transport_marginals(
        mu0,
        mu1,
        &loc.decomposition,
        &coupling,
        opts.tol.marginal,
    )?;
    let ray_plans: Vec<RayPlan> = marginals
        .parts
        .iter()
        .map(|m| ray_geodesic(&loc.decomposition.rays[m.ray], m))
        .collect();
    let t_samples = sample_times(&opts.t_samples)?;
    let denominator = time_denominator(&t_samples, opts.tol.time_snap)?;
    let lift = lattice_lift(space, &loc, denominator)?;
    let (plan, chain_rays) = glue_geodesics(&lift, &marginals, &ray_plans, &t_samples)?;
    let (mu0, mu1) = (lift.lift_measure(mu0), lift.lift_measure(mu1));
    Ok(GluedPlan {
        u,
        w1,
        lift,
        marginals,
        ray_plans,
        plan,
        chain_rays,
        t_samples,
        mu0,
        mu1,
    })
}

/// Entropy inequality along the glued plan, globally (tagged ray −1) and
/// along each ray's renormalized subplan.
pub fn verify_glued_cd1(
    glued: &GluedPlan,
    k: f64,
    n: f64,
    nprime_samples: &[f64],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let cfg = EntropyCheckConfig {
        t_samples: glued.t_samples.clone(),
        nprime_samples: nprime_samples.to_vec(),
        tol: *tol,
        ..EntropyCheckConfig::new(k, n)
    };
    let space = &glued.lift.space;
    let mut parts = vec![(
        -1.0,
        cd1_entropy_check(space, &glued.plan, &glued.mu0, &glued.mu1, &cfg)?,
    )];
    for p in &glued.ray_plans {
        let sub = glued.ray_subplan(p.ray)?;
        let mu0 = pushforward_at(&sub, 0.0, space, tol.time_snap)?;
        let mu1 = pushforward_at(&sub, 1.0, space, tol.time_snap)?;
        parts.push((
            p.ray as f64,
            cd1_entropy_check(space, &sub, &mu0, &mu1, &cfg)?,
        ));
    }
    Ok(CheckReport::merge(parts, "ray", cfg.max_witnesses))
}
