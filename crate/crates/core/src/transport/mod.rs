//! Discrete optimal transport: couplings, W_p, Kantorovich potentials and
//! dynamic plans.

pub mod monotone;
pub mod simplex;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{kahan_sum, DiscreteMeasure};
use crate::space::{check_constant_speed, FiniteMMSpace, GeodesicChain};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub x: usize,
    pub y: usize,
    pub mass: f64,
}

/// A transport plan between two discrete measures.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub entries: Vec<CouplingEntry>,
}

impl Coupling {
    pub fn new(mut entries: Vec<CouplingEntry>) -> Result<Self> {
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.mass >= 0.0) || !e.mass.is_finite())
        {
            return Err(Error::Input(format!(
                "coupling mass {} is not finite and nonnegative",
                e.mass
            )));
        }
        entries.sort_by_key(|e| (e.x, e.y));
        Ok(Self { entries })
    }

    pub fn marginals(&self, n: usize) -> (DiscreteMeasure, DiscreteMeasure) {
        let mut a = DiscreteMeasure::zeros(n);
        let mut b = DiscreteMeasure::zeros(n);
        for e in &self.entries {
            a.add_mass(e.x, e.mass);
            b.add_mass(e.y, e.mass);
        }
        (a, b)
    }

    /// `∫ d^p dπ`.
    pub fn cost(&self, space: &FiniteMMSpace, p: f64) -> f64 {
        kahan_sum(
            self.entries
                .iter()
                .map(|e| e.mass * space.d(e.x, e.y).powf(p)),
        )
    }

    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .filter(|e| e.mass > 0.0)
            .map(|e| (e.x, e.y))
            .collect()
    }

    /// Largest marginal deviation from `(mu0, mu1)`.
    pub fn marginal_error(&self, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> f64 {
        let (a, b) = self.marginals(mu0.len());
        a.max_abs_diff(mu0).max(b.max_abs_diff(mu1))
    }

    /// Entry masses keyed by `(x, y)`, merging duplicates.
    pub fn as_map(&self) -> BTreeMap<(usize, usize), f64> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry((e.x, e.y)).or_insert(0.0) += e.mass;
        }
        m
    }
}

fn check_pair(space: &FiniteMMSpace, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> Result<()> {
    for mu in [mu0, mu1] {
        if mu.len() != space.n() {
            return Err(Error::MismatchedSpace {
                expected: space.n(),
                found: mu.len(),
            });
        }
    }
    let (a, b) = (mu0.total_mass(), mu1.total_mass());
    if (a - b).abs() > 1e-10 * a.max(b).max(1.0) {
        return Err(Error::Infeasible { mass0: a, mass1: b });
    }
    Ok(())
}

struct Solved {
    rows: Vec<usize>,
    cols: Vec<usize>,
    sol: simplex::SimplexSolution,
}

fn solve_lp(
    space: &FiniteMMSpace,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    p: f64,
) -> Result<Solved> {
    check_pair(space, mu0, mu1)?;
    let rows = mu0.support();
    let cols = mu1.support();
    let supply: Vec<f64> = rows.iter().map(|&i| mu0.mass(i)).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| mu1.mass(j)).collect();
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| space.d(i, j).powf(p)).collect())
        .collect();
    let sol = simplex::solve(&supply, &demand, &cost)?;
    Ok(Solved { rows, cols, sol })
}

/// `W_p(μ₀, μ₁)` and an optimal vertex coupling.
pub fn wasserstein_p(
    space: &FiniteMMSpace,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    p: f64,
) -> Result<(f64, Coupling)> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be at least 1")));
    }
    if mu0.total_mass() == 0.0 && mu1.total_mass() == 0.0 {
        return Ok((0.0, Coupling::default()));
    }
    let s = solve_lp(space, mu0, mu1, p)?;
    let entries = s
        .sol
        .basis
        .iter()
        .filter(|c| c.flow > 0.0)
        .map(|c| CouplingEntry {
            x: s.rows[c.row],
            y: s.cols[c.col],
            mass: c.flow,
        })
        .collect();
    let coupling = Coupling::new(entries)?;
    let value = coupling.cost(space, p).max(0.0).powf(1.0 / p);
    Ok((value, coupling))
}

/// A 1-Lipschitz dual optimizer for the `p = 1` problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KantorovichPotential {
    pub values: Vec<f64>,
    pub w1: f64,
    pub duality_gap: f64,
}

/// Kantorovich potential normalized by `u(y₀) = 0` at the lowest-index
/// point of `supp μ₁`.
pub fn kantorovich_potential(
    space: &FiniteMMSpace,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
) -> Result<KantorovichPotential> {
    if mu1.total_mass() == 0.0 {
        return Err(Error::Input("target measure is zero".into()));
    }
    let s = solve_lp(space, mu0, mu1, 1.0)?;
    let v = &s.sol.col_duals;
    let mut u: Vec<f64> = (0..space.n())
        .map(|z| {
            s.cols
                .iter()
                .zip(v)
                .map(|(&y, &vy)| space.d(z, y) - vy)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let base = u[s.cols[0]];
    for x in &mut u {
        *x -= base;
    }
    let w1 = s.sol.objective;
    let duality_gap = (w1 - (mu0.integrate(&u) - mu1.integrate(&u))).abs();
    if duality_gap > 1e-9 * w1.max(1.0) {
        return Err(Error::Solver(format!(
            "duality gap {duality_gap} after potential extraction"
        )));
    }
    Ok(KantorovichPotential {
        values: u,
        w1,
        duality_gap,
    })
}

/// Cyclical monotonicity for cost `d`.
pub fn is_cyclically_monotone(
    support: &[(usize, usize)],
    space: &FiniteMMSpace,
    max_cycle: usize,
) -> bool {
    is_cyclically_monotone_p(support, space, max_cycle, 1.0)
}

/// Cyclical monotonicity for cost `d^p` over cycles of length `≤ max_cycle`.
pub fn is_cyclically_monotone_p(
    support: &[(usize, usize)],
    space: &FiniteMMSpace,
    max_cycle: usize,
    p: f64,
) -> bool {
    let c = |x: usize, y: usize| space.d(x, y).powf(p);
    let scale = support.iter().map(|&(x, y)| c(x, y)).fold(1.0, f64::max);
    let tol = 1e-12 * scale * max_cycle as f64;
    let k = support.len();
    let mut cycle = Vec::with_capacity(max_cycle);
    fn rec(
        support: &[(usize, usize)],
        cycle: &mut Vec<usize>,
        used: &mut [bool],
        max: usize,
        ok: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if cycle.len() >= 2 && !ok(cycle) {
            return false;
        }
        if cycle.len() == max {
            return true;
        }
        for i in cycle[0] + 1..support.len() {
            if !used[i] {
                used[i] = true;
                cycle.push(i);
                let r = rec(support, cycle, used, max, ok);
                cycle.pop();
                used[i] = false;
                if !r {
                    return false;
                }
            }
        }
        true
    }
    let mut check = |cyc: &[usize]| {
        let m = cyc.len();
        let lhs: f64 = cyc.iter().map(|&i| c(support[i].0, support[i].1)).sum();
        let rhs: f64 = (0..m)
            .map(|a| c(support[cyc[a]].0, support[cyc[(a + 1) % m]].1))
            .sum();
        lhs <= rhs + tol
    };
    let mut used = vec![false; k];
    for start in 0..k {
        used[start] = true;
        cycle.push(start);
        let r = rec(support, &mut cycle, &mut used, max_cycle.max(2), &mut check);
        cycle.pop();
        used[start] = false;
        if !r {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub chain: GeodesicChain,
    pub mass: f64,
}

/// A weighted family of geodesic chains.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicPlan {
    pub entries: Vec<PlanEntry>,
}

impl DynamicPlan {
    pub fn new(entries: Vec<PlanEntry>) -> Result<Self> {
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.mass >= 0.0) || !e.mass.is_finite())
        {
            return Err(Error::Input(format!(
                "plan mass {} is not finite and nonnegative",
                e.mass
            )));
        }
        Ok(Self { entries })
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.entries.iter().map(|e| e.mass))
    }

    /// `(e₀, e₁)_♯` of the plan.
    pub fn endpoint_coupling(&self) -> Coupling {
        let mut m: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in &self.entries {
            *m.entry((e.chain.start(), e.chain.end())).or_insert(0.0) += e.mass;
        }
        Coupling {
            entries: m
                .into_iter()
                .map(|((x, y), mass)| CouplingEntry { x, y, mass })
                .collect(),
        }
    }

    /// `∫ d(γ₀, γ₁)^p dν`.
    pub fn cost(&self, space: &FiniteMMSpace, p: f64) -> f64 {
        kahan_sum(
            self.entries
                .iter()
                .map(|e| e.mass * space.d(e.chain.start(), e.chain.end()).powf(p)),
        )
    }

    /// Index of the first chain failing the constant-speed identity.
    pub fn first_bad_chain(&self, space: &FiniteMMSpace, tol: f64) -> Result<Option<usize>> {
        for (i, e) in self.entries.iter().enumerate() {
            if !check_constant_speed(&e.chain, space, tol)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// `(e_t)_♯ν`, snapping `t` to registered chain times within `snap`.
pub fn pushforward_at(
    plan: &DynamicPlan,
    t: f64,
    space: &FiniteMMSpace,
    snap: f64,
) -> Result<DiscreteMeasure> {
    let mut mu = DiscreteMeasure::zeros(space.n());
    for (i, e) in plan.entries.iter().enumerate() {
        let x = e
            .chain
            .at(t, snap)
            .ok_or(Error::UnregisteredTime { chain: i, t })?;
        if x >= space.n() {
            return Err(Error::UnknownPoint(x.to_string()));
        }
        mu.add_mass(x, e.mass);
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> FiniteMMSpace {
        let coords = (0..n).map(|i| vec![i as f64]).collect();
        FiniteMMSpace::from_coords(
            coords,
            FiniteMMSpace::euclidean,
            DiscreteMeasure::uniform(n),
        )
        .unwrap()
    }

    fn m(w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(w.to_vec()).unwrap()
    }

    #[test]
    fn identical_marginals() {
        let s = line(3);
        let mu = m(&[0.2, 0.3, 0.5]);
        let (v, c) = wasserstein_p(&s, &mu, &mu, 1.0).unwrap();
        assert_eq!(v, 0.0);
        assert!(c.entries.iter().all(|e| e.x == e.y));
        let k = kantorovich_potential(&s, &mu, &mu).unwrap();
        assert!(k.duality_gap <= 1e-12);
    }

    #[test]
    fn two_diracs() {
        let s = line(3);
        let (v, c) = wasserstein_p(
            &s,
            &DiscreteMeasure::dirac(3, 0),
            &DiscreteMeasure::dirac(3, 2),
            2.0,
        )
        .unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(
            c.entries,
            vec![CouplingEntry {
                x: 0,
                y: 2,
                mass: 1.0
            }]
        );
        let k = kantorovich_potential(
            &s,
            &DiscreteMeasure::dirac(3, 0),
            &DiscreteMeasure::dirac(3, 2),
        )
        .unwrap();
        assert_eq!(k.values, vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn three_point_line() {
        let s = line(3);
        let (mu0, mu1) = (m(&[0.5, 0.5, 0.0]), m(&[0.0, 0.5, 0.5]));
        let (v, c) = wasserstein_p(&s, &mu0, &mu1, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(c.marginal_error(&mu0, &mu1) < 1e-15);
        let k = kantorovich_potential(&s, &mu0, &mu1).unwrap();
        let u = &k.values;
        assert!((u[0] - u[1] - 1.0).abs() < 1e-12 && (u[1] - u[2] - 1.0).abs() < 1e-12);
        assert_eq!(u[1], 0.0);
        assert!(k.duality_gap < 1e-12);
    }

    #[test]
    fn infeasible_masses() {
        let s = line(2);
        let r = wasserstein_p(&s, &m(&[1.0, 0.0]), &m(&[0.0, 0.5]), 1.0);
        assert!(matches!(r, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn crossing_pairs() {
        let s = line(3);
        assert!(is_cyclically_monotone(&[(0, 2), (1, 1)], &s, 2));
        assert!(!is_cyclically_monotone_p(&[(0, 2), (1, 1)], &s, 2, 2.0));
        assert!(is_cyclically_monotone(&[(0, 0), (1, 1), (2, 2)], &s, 4));
        assert!(!is_cyclically_monotone(&[(0, 2), (2, 0)], &s, 2));
    }

    #[test]
    fn pushforward_midpoints() {
        let s = line(3);
        let plan = DynamicPlan::new(vec![
            PlanEntry {
                chain: GeodesicChain::new(vec![0, 1, 2], vec![0.0, 0.5, 1.0]).unwrap(),
                mass: 0.5,
            },
            PlanEntry {
                chain: GeodesicChain::new(vec![2, 1, 0], vec![0.0, 0.5, 1.0]).unwrap(),
                mass: 0.5,
            },
        ])
        .unwrap();
        assert_eq!(
            pushforward_at(&plan, 0.5, &s, 1e-9).unwrap().weights(),
            &[0.0, 1.0, 0.0]
        );
        assert_eq!(
            pushforward_at(&plan, 0.0, &s, 1e-9).unwrap().weights(),
            &[0.5, 0.0, 0.5]
        );
        assert!(matches!(
            pushforward_at(&plan, 0.3, &s, 1e-9),
            Err(Error::UnregisteredTime { .. })
        ));
    }
}
