//! Disintegration of measures along a ray decomposition.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::rays::RayDecomposition;
use crate::transport::Coupling;

/// One ray's share: quotient mass and conditional probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayMass {
    pub ray: usize,
    pub representative: usize,
    pub mass: f64,
    pub conditional: DiscreteMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Disintegration {
    pub parts: Vec<RayMass>,
}

impl Disintegration {
    /// The quotient measure, carried by representatives.
    pub fn quotient_measure(&self, n: usize) -> DiscreteMeasure {
        let mut q = DiscreteMeasure::zeros(n);
        for p in &self.parts {
            q.add_mass(p.representative, p.mass);
        }
        q
    }

    pub fn part_for_ray(&self, ray: usize) -> Option<&RayMass> {
        self.parts.iter().find(|p| p.ray == ray)
    }

    pub fn conditional(&self, representative: usize) -> Option<&DiscreteMeasure> {
        self.parts
            .iter()
            .find(|p| p.representative == representative)
            .map(|p| &p.conditional)
    }

    /// `Σ_α q(α)·m_α`.
    pub fn reconstruct(&self, n: usize) -> DiscreteMeasure {
        let mut m = DiscreteMeasure::zeros(n);
        for p in &self.parts {
            for (x, w) in p.conditional.atoms() {
                m.add_mass(x, p.mass * w);
            }
        }
        m
    }
}

pub fn disintegrate(m: &DiscreteMeasure, d: &RayDecomposition) -> Result<Disintegration> {
    if m.len() != d.quotient.len() {
        return Err(Error::MismatchedSpace {
            expected: d.quotient.len(),
            found: m.len(),
        });
    }
    let mut parts = Vec::new();
    for r in &d.rays {
        let q: f64 = r.members.iter().map(|&x| m.mass(x)).sum();
        if q <= 0.0 {
            continue;
        }
        let mut c = DiscreteMeasure::zeros(m.len());
        for &x in &r.members {
            c.add_mass(x, m.mass(x) / q);
        }
        parts.push(RayMass {
            ray: r.id,
            representative: r.representative,
            mass: q,
            conditional: c,
        });
    }
    Ok(Disintegration { parts })
}

/// Per-ray normalized marginals of a transport problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayMarginals {
    pub ray: usize,
    pub representative: usize,
    pub q0: f64,
    pub q1: f64,
    pub mu0: DiscreteMeasure,
    pub mu1: DiscreteMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportMarginals {
    pub parts: Vec<RayMarginals>,
    /// Mass of μ₀ outside 𝒯_u^b, which stays in place.
    pub static_part: DiscreteMeasure,
}

impl TransportMarginals {
    pub fn q0(&self) -> Vec<(usize, f64)> {
        self.parts.iter().map(|p| (p.ray, p.q0)).collect()
    }
}

/// Splits `(μ₀, μ₁)` along the rays, given a coupling that moves mass only
/// within rays.
pub fn disintegrate_transport_marginals(
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    d: &RayDecomposition,
    coupling: &Coupling,
    tol: f64,
) -> Result<TransportMarginals> {
    let n = d.quotient.len();
    for mu in [mu0, mu1] {
        if mu.len() != n {
            return Err(Error::MismatchedSpace {
                expected: n,
                found: mu.len(),
            });
        }
    }
    for e in coupling.entries.iter().filter(|e| e.mass > tol) {
        if e.x == e.y {
            continue;
        }
        let (rx, ry) = (d.quotient[e.x], d.quotient[e.y]);
        if rx.is_none() || rx != ry {
            return Err(Error::Structural {
                ray: rx.or(ry),
                message: format!(
                    "coupling moves mass {} from {} to {} across rays",
                    e.mass, e.x, e.y
                ),
            });
        }
    }
    let mut static_part = DiscreteMeasure::zeros(n);
    for x in 0..n {
        if d.quotient[x].is_none() {
            if (mu0.mass(x) - mu1.mass(x)).abs() > tol {
                return Err(Error::Structural {
                    ray: None,
                    message: format!("mass at {x} outside the non-branched set is not static"),
                });
            }
            static_part.add_mass(x, mu0.mass(x));
        }
    }
    let mut parts = Vec::new();
    for r in &d.rays {
        let q0: f64 = r.members.iter().map(|&x| mu0.mass(x)).sum();
        let q1: f64 = r.members.iter().map(|&x| mu1.mass(x)).sum();
        if (q0 - q1).abs() > tol {
            return Err(Error::Structural {
                ray: Some(r.id),
                message: format!("quotient masses differ: {q0} vs {q1}"),
            });
        }
        if q0 <= 0.0 && q1 <= 0.0 {
            continue;
        }
        let mut a = DiscreteMeasure::zeros(n);
        let mut b = DiscreteMeasure::zeros(n);
        for &x in &r.members {
            a.add_mass(x, mu0.mass(x) / q0);
            b.add_mass(x, mu1.mass(x) / q1);
        }
        parts.push(RayMarginals {
            ray: r.id,
            representative: r.representative,
            q0,
            q1,
            mu0: a,
            mu1: b,
        });
    }
    Ok(TransportMarginals { parts, static_part })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rays::Ray;
    use crate::transport::CouplingEntry;

    fn rows3() -> RayDecomposition {
        let rays = (0..3)
            .map(|r| Ray {
                id: r,
                representative: 3 * r,
                members: vec![3 * r, 3 * r + 1, 3 * r + 2],
                params: vec![0.0, 1.0, 2.0],
            })
            .collect();
        let quotient = (0..9).map(|x| Some(x / 3)).collect();
        RayDecomposition {
            rays,
            quotient,
            nonbranched: vec![true; 9],
        }
    }

    #[test]
    fn single_ray_uniform() {
        let d = RayDecomposition {
            rays: vec![Ray {
                id: 0,
                representative: 0,
                members: vec![0, 1, 2],
                params: vec![0.0, 1.0, 2.0],
            }],
            quotient: vec![Some(0); 3],
            nonbranched: vec![true; 3],
        };
        let m = DiscreteMeasure::uniform(3);
        let dis = disintegrate(&m, &d).unwrap();
        assert_eq!(dis.parts.len(), 1);
        assert!((dis.parts[0].mass - 1.0).abs() < 1e-15);
        assert!(dis.parts[0]
            .conditional
            .weights()
            .iter()
            .all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn grid_rows() {
        let m = DiscreteMeasure::uniform(9);
        let dis = disintegrate(&m, &rows3()).unwrap();
        let q = dis.quotient_measure(9);
        for r in 0..3 {
            assert!((q.mass(3 * r) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(dis.reconstruct(9).max_abs_diff(&m) <= 1e-15);
    }

    #[test]
    fn zero_mass_ray_dropped() {
        let mut w = vec![1.0 / 6.0; 9];
        for x in 3..6 {
            w[x] = 0.0;
        }
        let m = DiscreteMeasure::new(w).unwrap();
        let dis = disintegrate(&m, &rows3()).unwrap();
        assert_eq!(dis.parts.len(), 2);
        assert!(dis.reconstruct(9).max_abs_diff(&m) <= 1e-15);
    }

    #[test]
    fn transport_marginals_rows() {
        let d = rows3();
        let mu0 = DiscreteMeasure::uniform_on(9, &[0, 3, 6]);
        let mu1 = DiscreteMeasure::uniform_on(9, &[2, 5, 8]);
        let c = Coupling::new(
            (0..3)
                .map(|r| CouplingEntry {
                    x: 3 * r,
                    y: 3 * r + 2,
                    mass: 1.0 / 3.0,
                })
                .collect(),
        )
        .unwrap();
        let tm = disintegrate_transport_marginals(&mu0, &mu1, &d, &c, 1e-10).unwrap();
        assert_eq!(tm.parts.len(), 3);
        for p in &tm.parts {
            assert!((p.q0 - 1.0 / 3.0).abs() < 1e-15 && (p.q1 - p.q0).abs() < 1e-15);
        }
        let same =
            disintegrate_transport_marginals(&mu0, &mu0, &d, &Coupling::default(), 1e-10).unwrap();
        assert!(same.parts.iter().all(|p| p.mu0 == p.mu1));
    }

    #[test]
    fn cross_ray_coupling_rejected() {
        let d = rows3();
        let mu0 = DiscreteMeasure::dirac(9, 0);
        let mu1 = DiscreteMeasure::dirac(9, 5);
        let c = Coupling::new(vec![CouplingEntry {
            x: 0,
            y: 5,
            mass: 1.0,
        }])
        .unwrap();
        let r = disintegrate_transport_marginals(&mu0, &mu1, &d, &c, 1e-10);
        assert!(matches!(r, Err(Error::Structural { ray: Some(0), .. })));
    }
}
