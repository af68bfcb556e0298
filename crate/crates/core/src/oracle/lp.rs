//! Exact rational simplex for transportation problems.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::OracleConfig;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::space::FiniteMMSpace;

pub fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Domain(format!("{x} is not finite")))
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let (prow, prhs) = (self.rows[r].clone(), self.rhs[r].clone());
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        self.basis[r] = c;
    }

    /// Bland's rule over columns `0..allowed`.
    fn optimize(&mut self, cost: &[BigRational], allowed: usize) -> Result<()> {
        loop {
            let entering = (0..allowed).filter(|j| !self.basis.contains(j)).find(|&j| {
                let mut r = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.rows[i][j].is_zero() {
                        r -= &cost[b] * &self.rows[i][j];
                    }
                }
                r.is_negative()
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][c].is_positive() {
                    let ratio = &self.rhs[i] / &self.rows[i][c];
                    let better = match &leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (r, _) = leave.ok_or_else(|| Error::Solver("unbounded exact program".into()))?;
            self.pivot(r, c);
        }
    }
}

/// `min c·x` subject to `Ax = b`, `x ≥ 0`, `b ≥ 0`, in exact arithmetic.
pub fn exact_lp_min(
    cost: &[BigRational],
    a: &[Vec<BigRational>],
    b: &[BigRational],
) -> Result<BigRational> {
    let (m, n) = (a.len(), cost.len());
    if b.iter().any(Signed::is_negative) {
        return Err(Error::Input("right-hand side must be nonnegative".into()));
    }
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let mut r = row.clone();
        r.extend((0..m).map(|k| {
            if k == i {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        }));
        rows.push(r);
    }
    let mut t = Tableau {
        rows,
        rhs: b.to_vec(),
        basis: (n..n + m).collect(),
    };
    let phase1: Vec<BigRational> = (0..n + m)
        .map(|j| {
            if j < n {
                BigRational::zero()
            } else {
                BigRational::one()
            }
        })
        .collect();
    t.optimize(&phase1, n + m)?;
    let infeasibility: BigRational = t
        .basis
        .iter()
        .zip(&t.rhs)
        .filter(|(&b, _)| b >= n)
        .map(|(_, v)| v.clone())
        .sum();
    if infeasibility.is_positive() {
        return Err(Error::Solver("exact program is infeasible".into()));
    }
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut full = cost.to_vec();
    full.extend((0..m).map(|_| BigRational::zero()));
    t.optimize(&full, n)?;
    Ok(t.basis.iter().zip(&t.rhs).map(|(&j, v)| &full[j] * v).sum())
}

/// Exact optimal transport value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleOt {
    /// `min ∫ d^p dπ` as an exact fraction of the floating-point costs.
    pub cost_exact: String,
    pub cost: f64,
    /// `W_p`, the `p`-th root of the cost.
    pub value: f64,
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let (n, d) = (r.numer().clone(), r.denom().clone());
        let shift = d.bits().saturating_sub(60) as usize;
        (n >> shift).to_f64().unwrap_or(f64::NAN) / (d >> shift).to_f64().unwrap_or(f64::NAN)
    })
}

/// Reference `W_p` by an exact rational transportation program.
pub fn brute_force_ot(
    space: &FiniteMMSpace,
    mu0: &DiscreteMeasure,
    mu1: &DiscreteMeasure,
    p: f64,
    cfg: &OracleConfig,
) -> Result<OracleOt> {
    let rows = mu0.support();
    let cols = mu1.support();
    let size = rows.len() * cols.len();
    let cap = cfg.max_points * cfg.max_points;
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    if rows.is_empty() || cols.is_empty() {
        return Ok(OracleOt {
            cost_exact: "0".into(),
            cost: 0.0,
            value: 0.0,
        });
    }
    let supply: Vec<BigRational> = rows
        .iter()
        .map(|&i| rational(mu0.mass(i)))
        .collect::<Result<_>>()?;
    let mut demand: Vec<BigRational> = cols
        .iter()
        .map(|&j| rational(mu1.mass(j)))
        .collect::<Result<_>>()?;
    let total: BigRational = supply.iter().cloned().sum();
    let others: BigRational = demand[..cols.len() - 1].iter().cloned().sum();
    let last = &total - others;
    let drift = (&last - &demand[cols.len() - 1]).abs();
    if last.is_negative()
        || drift > &total * BigRational::new(BigInt::one(), BigInt::from(10u64.pow(10)))
    {
        return Err(Error::Infeasible {
            mass0: mu0.total_mass(),
            mass1: mu1.total_mass(),
        });
    }
    *demand.last_mut().unwrap() = last;
    let (m, n) = (rows.len(), cols.len());
    let mut cost = Vec::with_capacity(m * n);
    for &i in &rows {
        for &j in &cols {
            let d = space.d(i, j);
            cost.push(if p == 1.0 {
                rational(d)?
            } else if p == 2.0 {
                let r = rational(d)?;
                &r * &r
            } else {
                rational(d.powf(p))?
            });
        }
    }
    let mut a = Vec::with_capacity(m + n);
    for i in 0..m {
        a.push(
            (0..m * n)
                .map(|v| {
                    if v / n == i {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect(),
        );
    }
    for j in 0..n {
        a.push(
            (0..m * n)
                .map(|v| {
                    if v % n == j {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect(),
        );
    }
    let b: Vec<BigRational> = supply.into_iter().chain(demand).collect();
    let opt = exact_lp_min(&cost, &a, &b)?;
    let c = to_f64(&opt).max(0.0);
    Ok(OracleOt {
        cost_exact: opt.to_string(),
        cost: c,
        value: c.powf(1.0 / p),
    })
}
