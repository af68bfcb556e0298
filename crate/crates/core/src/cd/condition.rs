use serde::Serialize;

use super::needle::{needle_cd_check, NeedleSampling};
use super::report::{CheckReport, ReportBuilder};
use crate::config::Tolerances;
use crate::disintegration::{disintegrate, Disintegration};
use crate::error::{Error, Result};
use crate::rays::{
    branching_sets, build_gamma, decompose_rays, ray_to_needle, BranchingSets, RayDecomposition,
    TransportStructure,
};
use crate::space::{FiniteMMSpace, Needle};

/// Everything derived from a potential: transport structure, rays,
/// disintegration of the reference measure and one needle per ray.
#[derive(Clone, Debug)]
pub struct Localization {
    pub u: Vec<f64>,
    pub structure: TransportStructure,
    pub branching: BranchingSets,
    pub decomposition: RayDecomposition,
    pub disintegration: Disintegration,
    /// Indexed by ray id; `None` for single-point or massless rays.
    pub needles: Vec<Option<Needle>>,
}

impl Localization {
    pub fn needle(&self, ray: usize) -> Option<&Needle> {
        self.needles.get(ray).and_then(|n| n.as_ref())
    }

    /// Ray ids carrying a needle.
    pub fn needle_rays(&self) -> Vec<usize> {
        (0..self.needles.len())
            .filter(|&r| self.needles[r].is_some())
            .collect()
    }
}

/// Builds the full localization of `space` along `u`.
pub fn localize(
    space: &FiniteMMSpace,
    u: &[f64],
    tol: Option<f64>,
    step: Option<f64>,
) -> Result<Localization> {
    let structure = build_gamma(space, u, tol)?;
    let branching = branching_sets(&structure);
    let decomposition = decompose_rays(&structure, &branching, space, u)?;
    let disintegration = disintegrate(space.reference(), &decomposition)?;
    let mut needles = vec![None; decomposition.rays.len()];
    for part in &disintegration.parts {
        let ray = &decomposition.rays[part.ray];
        if ray.members.len() >= 2 {
            needles[part.ray] = Some(ray_to_needle(ray, &part.conditional, step)?);
        }
    }
    Ok(Localization {
        u: u.to_vec(),
        structure,
        branching,
        decomposition,
        disintegration,
        needles,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayCheck {
    pub ray: usize,
    pub representative: usize,
    pub members: Vec<usize>,
    pub quotient_mass: f64,
    pub length: f64,
    pub report: Option<CheckReport>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub report: CheckReport,
    pub rays: Vec<RayCheck>,
    pub branching_mass: f64,
    pub reconstruction_error: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ConditionOptions {
    pub ray_tol: Option<f64>,
    pub step: Option<f64>,
    pub sampling: NeedleSampling,
    pub tol: Tolerances,
}

/// Checks that `u` localizes the space into transport rays whose needles
/// satisfy CD(K, N).
pub fn cd1_condition_check(
    space: &FiniteMMSpace,
    u: &[f64],
    k: f64,
    n: f64,
    opts: &ConditionOptions,
) -> Result<ConditionReport> {
    if n.is_nan() || n <= 1.0 {
        return Err(Error::Domain(format!("condition needs N > 1, got {n}")));
    }
    let loc = localize(space, u, opts.ray_tol, opts.step)?;
    condition_from_localization(space, &loc, k, n, opts)
}

pub fn condition_from_localization(
    space: &FiniteMMSpace,
    loc: &Localization,
    k: f64,
    n: f64,
    opts: &ConditionOptions,
) -> Result<ConditionReport> {
    let m = space.reference();
    let target = m.restrict(&loc.decomposition.nonbranched);
    let reconstruction_error = loc
        .disintegration
        .reconstruct(space.n())
        .max_abs_diff(&target);
    let branching_mass = loc.branching.mass(m);

    let mut base = ReportBuilder::new(opts.tol.discrete_check, opts.sampling.max_witnesses);
    base.record("reconstruction", &[], -reconstruction_error);
    if loc.structure.transport_set().is_empty() {
        base.note("no transport set: the condition holds vacuously");
    }
    if branching_mass > 0.0 {
        base.note(format!(
            "branching sets carry reference mass {branching_mass}"
        ));
    }
    let mut parts = vec![(-1.0, base.finish())];
    let mut rays = Vec::new();
    for part in &loc.disintegration.parts {
        let ray = &loc.decomposition.rays[part.ray];
        let (report, note) = match loc.needle(part.ray) {
            Some(needle) => {
                let r = needle_cd_check(needle, k, n, &opts.sampling, &opts.tol)?;
                parts.push((ray.id as f64, r.clone()));
                (Some(r), None)
            }
            None => (None, Some("single-point ray".to_string())),
        };
        rays.push(RayCheck {
            ray: ray.id,
            representative: ray.representative,
            members: ray.members.clone(),
            quotient_mass: part.mass,
            length: ray.length(),
            report,
            note,
        });
    }
    let report = CheckReport::merge(parts, "ray", opts.sampling.max_witnesses);
    Ok(ConditionReport {
        report,
        rays,
        branching_mass,
        reconstruction_error,
    })
}
