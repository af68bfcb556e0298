//! Finite metric measure spaces, geodesic chains and needles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DensityOnNeedle, DiscreteMeasure};

/// A sampled constant-speed geodesic: `nodes[i]` is its position at `times[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicChain {
    nodes: Vec<usize>,
    times: Vec<f64>,
}

impl GeodesicChain {
    pub fn new(nodes: Vec<usize>, times: Vec<f64>) -> Result<Self> {
        if nodes.len() != times.len() || nodes.len() < 2 {
            return Err(Error::Input(
                "a chain needs matching nodes and times, at least two of each".into(),
            ));
        }
        if times[0] != 0.0 || times[times.len() - 1] != 1.0 {
            return Err(Error::Input(
                "chain times must start at 0 and end at 1".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Input(
                "chain times must be strictly increasing".into(),
            ));
        }
        Ok(Self { nodes, times })
    }

    /// Two-node chain from `x` to `y`.
    pub fn segment(x: usize, y: usize) -> Self {
        Self {
            nodes: vec![x, y],
            times: vec![0.0, 1.0],
        }
    }

    /// The chain `γ_t ≡ x` registered at the given times.
    pub fn constant(x: usize, times: &[f64]) -> Result<Self> {
        Self::new(vec![x; times.len()], times.to_vec())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }

    /// The node registered at `t`, snapping within `snap`.
    pub fn at(&self, t: f64, snap: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (&s, &x) in self.times.iter().zip(&self.nodes) {
            let d = (s - t).abs();
            if d <= snap && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, x));
            }
        }
        best.map(|(_, x)| x)
    }
}

/// A finite metric measure space with registered geodesic chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMMSpace {
    labels: Vec<String>,
    coords: Vec<Option<Vec<f64>>>,
    dist: Vec<f64>,
    reference: DiscreteMeasure,
    geodesics: Vec<GeodesicChain>,
}

impl FiniteMMSpace {
    pub fn new(
        labels: Vec<String>,
        coords: Vec<Option<Vec<f64>>>,
        dist: Vec<Vec<f64>>,
        reference: DiscreteMeasure,
        geodesics: Vec<GeodesicChain>,
    ) -> Result<Self> {
        let n = labels.len();
        if coords.len() != n {
            return Err(Error::MismatchedSpace {
                expected: n,
                found: coords.len(),
            });
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::Input(format!("distance matrix must be {n}x{n}")));
        }
        if reference.len() != n {
            return Err(Error::MismatchedSpace {
                expected: n,
                found: reference.len(),
            });
        }
        for g in &geodesics {
            if let Some(&bad) = g.nodes().iter().find(|&&x| x >= n) {
                return Err(Error::UnknownPoint(bad.to_string()));
            }
        }
        Ok(Self {
            labels,
            coords,
            dist: dist.into_iter().flatten().collect(),
            reference,
            geodesics,
        })
    }

    /// Points with coordinates, distance given by `metric`.
    pub fn from_coords(
        coords: Vec<Vec<f64>>,
        metric: impl Fn(&[f64], &[f64]) -> f64,
        reference: DiscreteMeasure,
    ) -> Result<Self> {
        let n = coords.len();
        let dist = (0..n)
            .map(|i| (0..n).map(|j| metric(&coords[i], &coords[j])).collect())
            .collect();
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::new(
            labels,
            coords.into_iter().map(Some).collect(),
            dist,
            reference,
            Vec::new(),
        )
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n() + y]
    }

    pub fn reference(&self) -> &DiscreteMeasure {
        &self.reference
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn coords(&self, x: usize) -> Option<&[f64]> {
        self.coords[x].as_deref()
    }

    pub fn geodesics(&self) -> &[GeodesicChain] {
        &self.geodesics
    }

    pub fn distance_rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n()).map(|r| r.to_vec()).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::MismatchedSpace {
                expected: self.n(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_reference(mut self, reference: DiscreteMeasure) -> Result<Self> {
        if reference.len() != self.n() {
            return Err(Error::MismatchedSpace {
                expected: self.n(),
                found: reference.len(),
            });
        }
        self.reference = reference;
        Ok(self)
    }

    pub fn with_geodesics(mut self, geodesics: Vec<GeodesicChain>) -> Result<Self> {
        for g in &geodesics {
            if let Some(&bad) = g.nodes().iter().find(|&&x| x >= self.n()) {
                return Err(Error::UnknownPoint(bad.to_string()));
            }
        }
        self.geodesics = geodesics;
        Ok(self)
    }

    /// Euclidean distance between coordinate vectors.
    pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// ℓ¹ distance between coordinate vectors.
    pub fn manhattan(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }
}

/// A violated axiom found by [`validate_space`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonFinite {
        x: usize,
        y: usize,
    },
    Negative {
        x: usize,
        y: usize,
    },
    Diagonal {
        x: usize,
    },
    Degenerate {
        x: usize,
        y: usize,
    },
    Asymmetric {
        x: usize,
        y: usize,
    },
    Triangle {
        x: usize,
        y: usize,
        z: usize,
        excess: f64,
    },
    Mass {
        total: f64,
    },
    Support {
        x: usize,
    },
}

/// Lists every violated metric measure space axiom; empty means valid.
pub fn validate_space(space: &FiniteMMSpace, tol: f64) -> Vec<Violation> {
    let n = space.n();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let d = space.d(x, y);
            if !d.is_finite() {
                out.push(Violation::NonFinite { x, y });
            } else if d < 0.0 {
                out.push(Violation::Negative { x, y });
            }
        }
    }
    for x in 0..n {
        if space.d(x, x).abs() > tol {
            out.push(Violation::Diagonal { x });
        }
        for y in x + 1..n {
            if (space.d(x, y) - space.d(y, x)).abs() > tol {
                out.push(Violation::Asymmetric { x, y });
            }
            if space.d(x, y) <= 0.0 {
                out.push(Violation::Degenerate { x, y });
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let excess = space.d(x, z) - space.d(x, y) - space.d(y, z);
                if excess > tol {
                    out.push(Violation::Triangle { x, y, z, excess });
                }
            }
        }
    }
    let total = space.reference().total_mass();
    if (total - 1.0).abs() > 1e-12 {
        out.push(Violation::Mass { total });
    }
    for x in 0..n {
        if space.reference().mass(x) <= 0.0 {
            out.push(Violation::Support { x });
        }
    }
    out
}

/// `d(γ_s, γ_t) = |s − t|·d(γ_0, γ_1)` for every registered pair.
pub fn check_constant_speed(
    chain: &GeodesicChain,
    space: &FiniteMMSpace,
    tol: f64,
) -> Result<bool> {
    if let Some(&bad) = chain.nodes().iter().find(|&&x| x >= space.n()) {
        return Err(Error::UnknownPoint(bad.to_string()));
    }
    let len = space.d(chain.start(), chain.end());
    let (nodes, times) = (chain.nodes(), chain.times());
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            if (space.d(nodes[a], nodes[b]) - (times[b] - times[a]) * len).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff no two chains agree on some `[0, t̄]` with `t̄ ∈ (0,1)` and then
/// separate at a later common registered time.
pub fn is_nonbranching_set(chains: &[GeodesicChain], space: &FiniteMMSpace, tol: f64) -> bool {
    for (i, a) in chains.iter().enumerate() {
        for b in &chains[i + 1..] {
            if branches(a, b, space, tol) {
                return false;
            }
        }
    }
    true
}

fn branches(a: &GeodesicChain, b: &GeodesicChain, space: &FiniteMMSpace, tol: f64) -> bool {
    let mut agreed_inside = false;
    for (&t, &x) in a.times().iter().zip(a.nodes()) {
        let Some(y) = b.at(t, 0.0) else { continue };
        if space.d(x, y) <= tol {
            if t > 0.0 && t < 1.0 {
                agreed_inside = true;
            }
        } else {
            return agreed_inside;
        }
    }
    false
}

/// Checks `|u(x) − u(y)| ≤ d(x,y) + tol` and lists violating pairs `x < y`.
pub fn is_one_lipschitz(u: &[f64], space: &FiniteMMSpace, tol: f64) -> (bool, Vec<(usize, usize)>) {
    let mut bad = Vec::new();
    for x in 0..space.n() {
        for y in x + 1..space.n() {
            if (u[x] - u[y]).abs() > space.d(x, y) + tol {
                bad.push((x, y));
            }
        }
    }
    (bad.is_empty(), bad)
}

/// The one-dimensional space `([0,L], |·|, h dx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Needle {
    density: DensityOnNeedle,
}

impl Needle {
    pub fn new(density: DensityOnNeedle) -> Self {
        Self { density }
    }

    pub fn density(&self) -> &DensityOnNeedle {
        &self.density
    }

    pub fn length(&self) -> f64 {
        self.density.length()
    }

    pub fn step(&self) -> f64 {
        self.density.step()
    }

    pub fn h(&self, x: f64) -> f64 {
        self.density.eval(x)
    }

    /// Number of cells giving a step no larger than `step`.
    pub fn cells_for(length: f64, step: f64) -> usize {
        ((length / step) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn constant(length: f64, value: f64, step: f64) -> Result<Self> {
        let cells = Self::cells_for(length, step);
        Ok(Self::new(DensityOnNeedle::new(
            length,
            vec![value; cells + 1],
        )?))
    }

    /// `sin^{N−1}(x√(K/(N−1)))` on `[0, π√((N−1)/K)]`, for `K > 0`, `N > 1`.
    pub fn sine_model(k: f64, n: f64, step: f64) -> Result<Self> {
        if !(k > 0.0) || !(n > 1.0) {
            return Err(Error::Domain(format!(
                "sine model needs K > 0 and N > 1, got K={k}, N={n}"
            )));
        }
        let a = (k / (n - 1.0)).sqrt();
        let length = std::f64::consts::PI / a;
        let cells = Self::cells_for(length, step);
        let mut d =
            DensityOnNeedle::from_fn(length, cells, |x| (x * a).sin().max(0.0).powf(n - 1.0))?;
        let mut v = d.values().to_vec();
        v[0] = 0.0;
        v[cells] = 0.0;
        d = DensityOnNeedle::new(length, v)?;
        Ok(Self::new(d))
    }

    /// `sinh^{N−1}(x√(−K/(N−1)))` on `[0, L]`, for `K < 0`, `N > 1`.
    pub fn sinh_model(k: f64, n: f64, length: f64, step: f64) -> Result<Self> {
        if !(k < 0.0) || !(n > 1.0) {
            return Err(Error::Domain(format!(
                "sinh model needs K < 0 and N > 1, got K={k}, N={n}"
            )));
        }
        let a = (-k / (n - 1.0)).sqrt();
        let cells = Self::cells_for(length, step);
        Ok(Self::new(DensityOnNeedle::from_fn(length, cells, |x| {
            (x * a).sinh().powf(n - 1.0)
        })?))
    }

    pub fn from_fn(length: f64, step: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let cells = Self::cells_for(length, step);
        Ok(Self::new(DensityOnNeedle::from_fn(length, cells, f)?))
    }
}
