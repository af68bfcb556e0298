//! Transportation simplex with Bland's pivoting rule.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BasicCell {
    pub row: usize,
    pub col: usize,
    pub flow: f64,
}

#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub basis: Vec<BasicCell>,
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Minimizes `Σ c[i][j]·π[i][j]` over couplings of `supply` and `demand`.
///
/// Both vectors must have positive entries and equal totals.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<SimplexSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::Solver("empty marginal".into()));
    }
    let scale = cost
        .iter()
        .flatten()
        .fold(0.0f64, |a, &c| a.max(c.abs()))
        .max(1.0);
    let eps = 1e-12 * scale;

    let mut basis = northwest_corner(supply, demand);
    let max_pivots = 50 * m * n + 1000;
    let mut pivots = 0;
    loop {
        let (ru, rv) = duals(m, n, &basis, cost)?;
        let entering = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| {
                cost[i][j] - ru[i] - rv[j] < -eps && !basis.iter().any(|c| c.row == i && c.col == j)
            });
        let Some((ei, ej)) = entering else {
            let objective = basis.iter().map(|c| c.flow * cost[c.row][c.col]).sum();
            return Ok(SimplexSolution {
                basis,
                row_duals: ru,
                col_duals: rv,
                objective,
                pivots,
            });
        };
        if pivots >= max_pivots {
            return Err(Error::Solver(format!(
                "no convergence after {pivots} pivots"
            )));
        }
        pivot(m, n, &mut basis, ei, ej)?;
        pivots += 1;
    }
}

fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<BasicCell> {
    let (m, n) = (supply.len(), demand.len());
    let mut sa = supply.to_vec();
    let mut sb = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    let mut basis = Vec::with_capacity(m + n - 1);
    loop {
        let f = sa[i].min(sb[j]).max(0.0);
        basis.push(BasicCell {
            row: i,
            col: j,
            flow: f,
        });
        if i == m - 1 && j == n - 1 {
            break;
        }
        let row_done = sa[i] < sb[j];
        sa[i] -= f;
        sb[j] -= f;
        if j == n - 1 || (i < m - 1 && row_done) {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

/// Node ids: rows `0..m`, columns `m..m+n`.
fn adjacency(m: usize, n: usize, basis: &[BasicCell]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + n];
    for (k, c) in basis.iter().enumerate() {
        adj[c.row].push((m + c.col, k));
        adj[m + c.col].push((c.row, k));
    }
    adj
}

fn duals(
    m: usize,
    n: usize,
    basis: &[BasicCell],
    cost: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let adj = adjacency(m, n, basis);
    let mut val = vec![f64::NAN; m + n];
    val[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        for &(b, k) in &adj[a] {
            if val[b].is_nan() {
                let c = cost[basis[k].row][basis[k].col];
                val[b] = c - val[a];
                queue.push_back(b);
            }
        }
    }
    if val.iter().any(|v| v.is_nan()) {
        return Err(Error::Solver("basis is not a spanning tree".into()));
    }
    Ok((val[..m].to_vec(), val[m..].to_vec()))
}

fn pivot(m: usize, n: usize, basis: &mut [BasicCell], ei: usize, ej: usize) -> Result<()> {
    let adj = adjacency(m, n, basis);
    let (src, dst) = (ei, m + ej);
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(a) = queue.pop_front() {
        if a == dst {
            break;
        }
        for &(b, k) in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                prev[b] = Some((a, k));
                queue.push_back(b);
            }
        }
    }
    let mut path = Vec::new();
    let mut at = dst;
    while at != src {
        let (p, k) =
            prev[at].ok_or_else(|| Error::Solver("entering cell closes no cycle".into()))?;
        path.push(k);
        at = p;
    }
    path.reverse();
    // path[0] touches the entering row; odd positions gain flow.
    let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
    let theta = minus
        .iter()
        .map(|&k| basis[k].flow)
        .fold(f64::INFINITY, f64::min);
    let leaving = minus
        .iter()
        .copied()
        .filter(|&k| basis[k].flow == theta)
        .min_by_key(|&k| (basis[k].row, basis[k].col))
        .expect("cycle has a decreasing cell");
    for (pos, &k) in path.iter().enumerate() {
        if pos % 2 == 0 {
            basis[k].flow -= theta;
        } else {
            basis[k].flow += theta;
        }
    }
    basis[leaving] = BasicCell {
        row: ei,
        col: ej,
        flow: theta,
    };
    Ok(())
}
