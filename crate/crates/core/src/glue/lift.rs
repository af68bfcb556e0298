use serde::Serialize;

use crate::cd::Localization;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::rays::nodal_density;
use crate::space::FiniteMMSpace;

/// Largest lifted space built by [`lattice_lift`].
pub const MAX_LIFTED_POINTS: usize = 4096;

/// Lattice of one ray inside the lifted space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftedRay {
    pub ray: usize,
    /// Lattice spacing; zero for single-point rays.
    pub step: f64,
    /// Lifted index of lattice point `j`, `j = 0..=J`.
    pub points: Vec<usize>,
    /// Lattice index of each ray member, in member order.
    pub slots: Vec<usize>,
}

impl LiftedRay {
    pub fn point(&self, j: usize) -> usize {
        self.points[j]
    }
}

/// The space with every ray refined to a uniform lattice, so that chains
/// sampled at the requested times land on points.
///
/// Original points keep their indices; lattice points are appended.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeLift {
    pub space: FiniteMMSpace,
    pub original: usize,
    pub denominator: usize,
    pub rays: Vec<LiftedRay>,
    pub potential: Vec<f64>,
}

impl LatticeLift {
    /// Embeds a measure on the original space.
    pub fn lift_measure(&self, mu: &DiscreteMeasure) -> DiscreteMeasure {
        mu.extended(self.space.n())
    }

    /// Restricts a lifted measure to original points, failing if mass sits
    /// on lattice points.
    pub fn project_measure(&self, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let off: f64 = mu.weights()[self.original..].iter().sum();
        if off > 0.0 {
            return Err(Error::Input(format!(
                "{off} of the mass sits on lattice points"
            )));
        }
        DiscreteMeasure::new(mu.weights()[..self.original].to_vec())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest `D` such that `D·t` is an integer for every sample time.
pub fn time_denominator(t_samples: &[f64], tol: f64) -> Result<usize> {
    let mut d = 1usize;
    for &t in t_samples {
        let q = (1..=1024)
            .find(|&q| ((t * q as f64) - (t * q as f64).round()).abs() <= tol)
            .ok_or_else(|| {
                Error::Input(format!(
                    "sample time {t} is not a rational with denominator at most 1024"
                ))
            })?;
        d = d / gcd(d, q) * q;
    }
    Ok(d)
}

/// Common spacing `g` of a ray's parameters: each is an integer multiple.
fn ray_spacing(params: &[f64], tol: f64) -> Result<f64> {
    let gmin = params
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    (1..=64)
        .map(|k| gmin / k as f64)
        .find(|&g| {
            params
                .iter()
                .all(|&p| ((p / g) - (p / g).round()).abs() * g <= tol)
        })
        .ok_or_else(|| Error::Input("ray parameters are not commensurable".into()))
}

/// Refines every ray of `loc` into a lattice of spacing `g/D`.
pub fn lattice_lift(
    space: &FiniteMMSpace,
    loc: &Localization,
    denominator: usize,
) -> Result<LatticeLift> {
    let n = space.n();
    let tol = 1e-9 * space.diameter().max(1.0);
    let mut labels: Vec<String> = space.labels().to_vec();
    let mut coords: Vec<Option<Vec<f64>>> = (0..n)
        .map(|x| space.coords(x).map(<[f64]>::to_vec))
        .collect();
    let mut weights = vec![0.0; n];
    let mut potential = loc.u.clone();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut rays = Vec::new();
    for x in 0..n {
        if loc.decomposition.quotient[x].is_none() {
            weights[x] = space.reference().mass(x);
        }
    }
    for ray in &loc.decomposition.rays {
        if ray.members.len() < 2 {
            let x = ray.members[0];
            weights[x] = space.reference().mass(x);
            rays.push(LiftedRay {
                ray: ray.id,
                step: 0.0,
                points: vec![x],
                slots: vec![0],
            });
            continue;
        }
        let g = ray_spacing(&ray.params, tol)?;
        let step = g / denominator as f64;
        let last = (ray.length() / step).round() as usize;
        let slots: Vec<usize> = ray
            .params
            .iter()
            .map(|&p| (p / step).round() as usize)
            .collect();
        let mut points = Vec::with_capacity(last + 1);
        let mut next_member = 0;
        for j in 0..=last {
            if next_member < slots.len() && slots[next_member] == j {
                points.push(ray.members[next_member]);
                next_member += 1;
                continue;
            }
            let idx = labels.len();
            if idx >= MAX_LIFTED_POINTS {
                return Err(Error::SizeCap {
                    size: idx + 1,
                    cap: MAX_LIFTED_POINTS,
                });
            }
            let i = slots.partition_point(|&s| s < j);
            let (a, b) = (ray.members[i - 1], ray.members[i]);
            let f = (j - slots[i - 1]) as f64 / (slots[i] - slots[i - 1]) as f64;
            coords.push(match (space.coords(a), space.coords(b)) {
                (Some(ca), Some(cb)) => Some(
                    ca.iter()
                        .zip(cb)
                        .map(|(p, q)| (1.0 - f) * p + f * q)
                        .collect(),
                ),
                _ => None,
            });
            labels.push(format!("{}~{}", space.label(ray.representative), j));
            potential.push(loc.u[ray.representative] - j as f64 * step);
            weights.push(0.0);
            points.push(idx);
        }
        for w in points.windows(2) {
            edges.push((w[0], w[1], step));
        }
        let q = loc
            .disintegration
            .part_for_ray(ray.id)
            .map_or(0.0, |p| p.mass);
        let masses: Vec<f64> = ray
            .members
            .iter()
            .map(|&x| space.reference().mass(x))
            .collect();
        let nodal = nodal_density(&ray.params, &masses);
        let pl = |s: f64| {
            let p = &ray.params;
            let i = p.partition_point(|&v| v <= s).clamp(1, p.len() - 1);
            let f = ((s - p[i - 1]) / (p[i] - p[i - 1])).clamp(0.0, 1.0);
            (1.0 - f) * nodal[i - 1] + f * nodal[i]
        };
        let raw: Vec<f64> = (0..=last).map(|j| pl(j as f64 * step)).collect();
        let total: f64 = raw.iter().sum();
        for (j, &p) in points.iter().enumerate() {
            weights[p] = if total > 0.0 { q * raw[j] / total } else { 0.0 };
        }
        rays.push(LiftedRay {
            ray: ray.id,
            step,
            points,
            slots,
        });
    }
    let big = labels.len();
    let mut dist = vec![vec![f64::INFINITY; big]; big];
    for (x, row) in dist.iter_mut().enumerate() {
        row[x] = 0.0;
    }
    for x in 0..n {
        for y in 0..n {
            dist[x][y] = space.d(x, y);
        }
    }
    for &(a, b, w) in &edges {
        dist[a][b] = dist[a][b].min(w);
        dist[b][a] = dist[b][a].min(w);
    }
    for k in 0..big {
        let dk = dist[k].clone();
        for row in dist.iter_mut() {
            let dik = row[k];
            if dik.is_infinite() {
                continue;
            }
            for (dij, &dkj) in row.iter_mut().zip(&dk) {
                let via = dik + dkj;
                if via < *dij {
                    *dij = via;
                }
            }
        }
    }
    let reference = DiscreteMeasure::new(weights)?;
    let lifted = FiniteMMSpace::new(labels, coords, dist, reference, Vec::new())?;
    Ok(LatticeLift {
        space: lifted,
        original: n,
        denominator,
        rays,
        potential,
    })
}
