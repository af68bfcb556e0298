//! Transport structure of a 1-Lipschitz function and its ray decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DensityOnNeedle, DiscreteMeasure};
use crate::space::{is_one_lipschitz, FiniteMMSpace, Needle};

/// Γ_u, R_u and 𝒯_u of a potential `u`.
#[derive(Clone, Debug)]
pub struct TransportStructure {
    n: usize,
    tol: f64,
    gamma: Vec<bool>,
    transport_set: Vec<bool>,
}

impl TransportStructure {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `(x, y) ∈ Γ_u`.
    pub fn in_gamma(&self, x: usize, y: usize) -> bool {
        self.gamma[x * self.n + y]
    }

    /// `(x, y) ∈ R_u = Γ_u ∪ Γ_u⁻¹`.
    pub fn in_relation(&self, x: usize, y: usize) -> bool {
        self.in_gamma(x, y) || self.in_gamma(y, x)
    }

    pub fn in_transport_set(&self, x: usize) -> bool {
        self.transport_set[x]
    }

    pub fn transport_set(&self) -> Vec<usize> {
        (0..self.n).filter(|&x| self.transport_set[x]).collect()
    }

    pub fn gamma_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|x| (0..self.n).map(move |y| (x, y)))
            .filter(|&(x, y)| self.in_gamma(x, y))
            .collect()
    }

    /// Γ_u(x) = {y : (x, y) ∈ Γ_u}.
    pub fn forward(&self, x: usize) -> Vec<usize> {
        (0..self.n).filter(|&y| self.in_gamma(x, y)).collect()
    }

    /// Γ_u⁻¹(x) = {y : (y, x) ∈ Γ_u}.
    pub fn backward(&self, x: usize) -> Vec<usize> {
        (0..self.n).filter(|&y| self.in_gamma(y, x)).collect()
    }
}

/// Default Γ_u tolerance: `1e-9·diam(X)`.
pub fn default_ray_tol(space: &FiniteMMSpace) -> f64 {
    let d = space.diameter();
    1e-9 * if d > 0.0 { d } else { 1.0 }
}

pub fn build_gamma(
    space: &FiniteMMSpace,
    u: &[f64],
    tol: Option<f64>,
) -> Result<TransportStructure> {
    let n = space.n();
    if u.len() != n {
        return Err(Error::MismatchedSpace {
            expected: n,
            found: u.len(),
        });
    }
    let tol = tol.unwrap_or_else(|| default_ray_tol(space));
    let (ok, bad) = is_one_lipschitz(u, space, tol);
    if !ok {
        let (x, y) = bad[0];
        return Err(Error::NotLipschitz {
            x,
            y,
            excess: (u[x] - u[y]).abs() - space.d(x, y),
        });
    }
    let mut gamma = vec![false; n * n];
    for x in 0..n {
        for y in 0..n {
            gamma[x * n + y] = (u[x] - u[y] - space.d(x, y)).abs() <= tol;
        }
    }
    let mut transport_set = vec![false; n];
    for x in 0..n {
        for y in 0..n {
            if x != y && (gamma[x * n + y] || gamma[y * n + x]) {
                transport_set[x] = true;
            }
        }
    }
    Ok(TransportStructure {
        n,
        tol,
        gamma,
        transport_set,
    })
}

/// Forward and backward branching points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchingSets {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

impl BranchingSets {
    /// 𝒯_u^b = 𝒯_u \ (A₊ ∪ A₋) as a membership mask.
    pub fn nonbranched(&self, s: &TransportStructure) -> Vec<bool> {
        (0..s.n())
            .map(|x| s.in_transport_set(x) && !self.plus.contains(&x) && !self.minus.contains(&x))
            .collect()
    }

    pub fn mass(&self, m: &DiscreteMeasure) -> f64 {
        let mut pts: Vec<usize> = self.plus.iter().chain(&self.minus).copied().collect();
        pts.sort_unstable();
        pts.dedup();
        pts.iter().map(|&x| m.mass(x)).sum()
    }
}

pub fn branching_sets(s: &TransportStructure) -> BranchingSets {
    let incomparable = |set: &[usize]| {
        set.iter()
            .enumerate()
            .any(|(i, &z)| set[i + 1..].iter().any(|&w| !s.in_relation(z, w)))
    };
    let plus = s
        .transport_set()
        .into_iter()
        .filter(|&x| incomparable(&s.forward(x)))
        .collect();
    let minus = s
        .transport_set()
        .into_iter()
        .filter(|&x| incomparable(&s.backward(x)))
        .collect();
    BranchingSets { plus, minus }
}

/// A transport ray: members ordered by decreasing `u`, with arc-length
/// parameters measured from the representative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub id: usize,
    pub representative: usize,
    pub members: Vec<usize>,
    pub params: Vec<f64>,
}

impl Ray {
    pub fn length(&self) -> f64 {
        self.params.last().copied().unwrap_or(0.0)
    }

    pub fn position(&self, x: usize) -> Option<usize> {
        self.members.iter().position(|&m| m == x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayDecomposition {
    pub rays: Vec<Ray>,
    /// Ray index of each point of 𝒯_u^b.
    pub quotient: Vec<Option<usize>>,
    pub nonbranched: Vec<bool>,
}

impl RayDecomposition {
    pub fn ray_of(&self, x: usize) -> Option<&Ray> {
        self.quotient[x].map(|r| &self.rays[r])
    }

    /// The quotient map f.
    pub fn representative_of(&self, x: usize) -> Option<usize> {
        self.ray_of(x).map(|r| r.representative)
    }
}

pub fn decompose_rays(
    s: &TransportStructure,
    branching: &BranchingSets,
    space: &FiniteMMSpace,
    u: &[f64],
) -> Result<RayDecomposition> {
    let n = s.n();
    let tb = branching.nonbranched(s);
    let mut quotient: Vec<Option<usize>> = vec![None; n];
    let mut rays = Vec::new();
    for x in 0..n {
        if !tb[x] || quotient[x].is_some() {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&y| tb[y] && s.in_relation(x, y)).collect();
        for (i, &y) in class.iter().enumerate() {
            if let Some(other) = quotient[y] {
                return Err(Error::Data(format!(
                    "point {y} is related to rays {other} and {}",
                    rays.len()
                )));
            }
            for &z in &class[i + 1..] {
                if !s.in_relation(y, z) {
                    return Err(Error::Data(format!(
                        "relation is not transitive on ({x}, {y}, {z}); check the tolerance"
                    )));
                }
            }
        }
        let mut members = class;
        members.sort_by(|&a, &b| u[b].partial_cmp(&u[a]).unwrap().then(a.cmp(&b)));
        let rep = members[0];
        let params: Vec<f64> = members.iter().map(|&m| space.d(rep, m)).collect();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a, b) = (members[i], members[j]);
                let dt = params[j] - params[i];
                if (space.d(a, b) - dt).abs() > s.tol() || (u[a] - u[b] - dt).abs() > s.tol() {
                    return Err(Error::Data(format!(
                        "ray through {rep} is not isometric to an interval at ({a}, {b})"
                    )));
                }
            }
        }
        let id = rays.len();
        for &m in &members {
            quotient[m] = Some(id);
        }
        rays.push(Ray {
            id,
            representative: rep,
            members,
            params,
        });
    }
    for r in &rays {
        for z in 0..n {
            if tb[z] && quotient[z] != Some(r.id) && r.members.iter().any(|&m| s.in_relation(z, m))
            {
                return Err(Error::Data(format!(
                    "ray {} is not maximal: {z} extends it",
                    r.id
                )));
            }
        }
    }
    Ok(RayDecomposition {
        rays,
        quotient,
        nonbranched: tb,
    })
}

/// Nodal density values `m_i/|C_i|` with mirrored end cells.
pub fn nodal_density(params: &[f64], masses: &[f64]) -> Vec<f64> {
    let k = params.len();
    (0..k)
        .map(|i| {
            let w = if i == 0 {
                params[1] - params[0]
            } else if i == k - 1 {
                params[k - 1] - params[k - 2]
            } else {
                (params[i + 1] - params[i - 1]) / 2.0
            };
            masses[i] / w
        })
        .collect()
}

/// True if consecutive parameters are equally spaced within `tol`.
pub fn equally_spaced(params: &[f64], tol: f64) -> bool {
    let g = params[1] - params[0];
    params.windows(2).all(|w| (w[1] - w[0] - g).abs() <= tol)
}

/// Needle of a ray: piecewise-linear interpolant of the nodal density,
/// normalized to unit trapezoidal mass.
pub fn ray_to_needle(
    ray: &Ray,
    conditional: &DiscreteMeasure,
    step: Option<f64>,
) -> Result<Needle> {
    if ray.members.len() < 2 {
        return Err(Error::DegenerateRay {
            ray: ray.id,
            message: "single-point ray".into(),
        });
    }
    let len = ray.length();
    let step = step.unwrap_or(1e-3 * len);
    let masses: Vec<f64> = ray.members.iter().map(|&x| conditional.mass(x)).collect();
    let nodal = nodal_density(&ray.params, &masses);
    let mut cells = Needle::cells_for(len, step);
    if equally_spaced(&ray.params, 1e-9 * len) {
        let k = ray.members.len() - 1;
        cells = k * cells.div_ceil(k);
    }
    let pl = |x: f64| {
        let p = &ray.params;
        let j = p.partition_point(|&v| v <= x).clamp(1, p.len() - 1);
        let f = ((x - p[j - 1]) / (p[j] - p[j - 1])).clamp(0.0, 1.0);
        nodal[j - 1] * (1.0 - f) + nodal[j] * f
    };
    let raw = DensityOnNeedle::from_fn(len, cells, pl)?;
    let mass = raw.mass();
    if !(mass > 0.0) {
        return Err(Error::DegenerateRay {
            ray: ray.id,
            message: "zero conditional mass".into(),
        });
    }
    Ok(Needle::new(raw.scaled(1.0 / mass)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GeodesicChain;

    fn line(n: usize) -> FiniteMMSpace {
        let coords = (0..n).map(|i| vec![i as f64]).collect();
        FiniteMMSpace::from_coords(
            coords,
            FiniteMMSpace::euclidean,
            DiscreteMeasure::uniform(n),
        )
        .unwrap()
    }

    #[test]
    fn zero_potential_has_empty_transport_set() {
        let s = line(3);
        let g = build_gamma(&s, &[0.0; 3], None).unwrap();
        assert!(g.transport_set().is_empty());
        assert_eq!(g.gamma_pairs(), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn line_gamma() {
        let s = line(3);
        let g = build_gamma(&s, &[0.0, -1.0, -2.0], None).unwrap();
        let expect: Vec<_> = (0..3).flat_map(|i| (i..3).map(move |j| (i, j))).collect();
        assert_eq!(g.gamma_pairs(), expect);
        assert_eq!(g.transport_set(), vec![0, 1, 2]);
        let b = branching_sets(&g);
        assert!(b.plus.is_empty() && b.minus.is_empty());
        let d = decompose_rays(&g, &b, &s, &[0.0, -1.0, -2.0]).unwrap();
        assert_eq!(d.rays.len(), 1);
        assert_eq!(d.rays[0].representative, 0);
        assert_eq!(d.rays[0].params, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn distance_potential_contains_chain_pairs() {
        let s = line(4)
            .with_geodesics(vec![
                GeodesicChain::new(vec![0, 1, 2], vec![0.0, 0.5, 1.0]).unwrap()
            ])
            .unwrap();
        let u: Vec<f64> = (0..4).map(|x| s.d(x, 2)).collect();
        let g = build_gamma(&s, &u, None).unwrap();
        for &x in s.geodesics()[0].nodes() {
            assert!(g.in_gamma(x, 2));
        }
    }

    #[test]
    fn non_lipschitz_rejected() {
        let s = line(2);
        assert!(matches!(
            build_gamma(&s, &[0.0, 3.0], None),
            Err(Error::NotLipschitz { .. })
        ));
    }

    #[test]
    fn single_pair_has_no_branching() {
        let s = line(2);
        let g = build_gamma(&s, &[1.0, 0.0], None).unwrap();
        let b = branching_sets(&g);
        assert!(b.plus.is_empty() && b.minus.is_empty());
    }

    #[test]
    fn tripod_center_branches() {
        let dist = vec![
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![1.0, 2.0, 2.0, 0.0],
        ];
        let s = FiniteMMSpace::new(
            vec!["c".into(), "l1".into(), "l2".into(), "l3".into()],
            vec![None; 4],
            dist,
            DiscreteMeasure::uniform(4),
            vec![],
        )
        .unwrap();
        let u: Vec<f64> = (0..4).map(|x| -s.d(x, 1)).collect();
        let g = build_gamma(&s, &u, None).unwrap();
        let b = branching_sets(&g);
        assert!(b.plus.contains(&0));
        assert!(b.minus.is_empty());
        let d = decompose_rays(&g, &b, &s, &u).unwrap();
        assert_eq!(d.rays.len(), 2);
        assert!(d.rays.iter().all(|r| r.members.len() == 1));
    }

    #[test]
    fn empty_nonbranched_set() {
        let s = line(3);
        let g = build_gamma(&s, &[0.0; 3], None).unwrap();
        let d = decompose_rays(&g, &branching_sets(&g), &s, &[0.0; 3]).unwrap();
        assert!(d.rays.is_empty());
    }

    #[test]
    fn needle_of_uniform_ray_is_constant() {
        let ray = Ray {
            id: 0,
            representative: 0,
            members: vec![0, 1, 2],
            params: vec![0.0, 1.0, 2.0],
        };
        let n = ray_to_needle(&ray, &DiscreteMeasure::uniform(3), None).unwrap();
        assert!(n
            .density()
            .values()
            .iter()
            .all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn needle_of_two_point_ray() {
        let ray = Ray {
            id: 0,
            representative: 0,
            members: vec![0, 1],
            params: vec![0.0, 1.0],
        };
        let n = ray_to_needle(&ray, &DiscreteMeasure::new(vec![0.5, 0.5]).unwrap(), None).unwrap();
        assert!(n
            .density()
            .values()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn needle_of_tent_masses() {
        let ray = Ray {
            id: 0,
            representative: 0,
            members: vec![0, 1, 2],
            params: vec![0.0, 1.0, 2.0],
        };
        let m = DiscreteMeasure::new(vec![0.25, 0.5, 0.25]).unwrap();
        let n = ray_to_needle(&ray, &m, None).unwrap();
        assert!((n.h(0.0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((n.h(1.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((n.density().mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_ray_rejected() {
        let ray = Ray {
            id: 3,
            representative: 0,
            members: vec![0],
            params: vec![0.0],
        };
        assert!(matches!(
            ray_to_needle(&ray, &DiscreteMeasure::uniform(1), None),
            Err(Error::DegenerateRay { ray: 3, .. })
        ));
    }
}
