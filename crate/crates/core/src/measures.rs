//! Measures on finite spaces and densities on needles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative weights indexed by the points of a host space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Input(format!(
                    "weight {w} at point {i} is not a finite nonnegative number"
                )));
            }
        }
        Ok(Self { weights })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            weights: vec![0.0; n],
        }
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut w = vec![0.0; n];
        w[x] = 1.0;
        Self { weights: w }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Uniform probability on the listed points.
    pub fn uniform_on(n: usize, points: &[usize]) -> Self {
        let mut w = vec![0.0; n];
        for &p in points {
            w[p] = 1.0 / points.len() as f64;
        }
        Self { weights: w }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol
    }

    /// Atoms with positive mass, in point order.
    pub fn atoms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w > 0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        self.atoms().map(|(i, _)| i).collect()
    }

    /// Restriction to the points where `keep` is true.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        let weights = self
            .weights
            .iter()
            .zip(keep)
            .map(|(&w, &k)| if k { w } else { 0.0 })
            .collect();
        Self { weights }
    }

    /// Restriction to a list of points.
    pub fn restrict_to(&self, points: &[usize]) -> Self {
        let mut w = vec![0.0; self.len()];
        for &p in points {
            w[p] = self.weights[p];
        }
        Self { weights: w }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_mass();
        if m <= 0.0 {
            return Err(Error::Input("cannot normalize a zero measure".into()));
        }
        Ok(self.scaled(1.0 / m))
    }

    /// Pads with zero weights up to `n` points.
    pub fn extended(&self, n: usize) -> Self {
        let mut w = self.weights.clone();
        w.resize(n.max(w.len()), 0.0);
        Self { weights: w }
    }

    pub fn add_mass(&mut self, x: usize, w: f64) {
        self.weights[x] += w;
    }

    /// Largest atom-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        kahan_sum(self.weights.iter().zip(f).map(|(w, v)| w * v))
    }
}

/// Compensated summation.
pub fn kahan_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    let mut naive = 0.0;
    for x in it {
        naive += x;
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    if naive.is_finite() {
        sum
    } else {
        naive
    }
}

/// Radon-Nikodym split of `mu` against `m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcDecomposition {
    pub density: Vec<f64>,
    pub singular: DiscreteMeasure,
}

impl AcDecomposition {
    pub fn singular_mass(&self) -> f64 {
        self.singular.total_mass()
    }

    /// Rebuilds `density·m + singular`.
    pub fn reconstruct(&self, m: &DiscreteMeasure) -> DiscreteMeasure {
        let weights = self
            .density
            .iter()
            .zip(m.weights())
            .zip(self.singular.weights())
            .map(|((r, mw), s)| r * mw + s)
            .collect();
        DiscreteMeasure { weights }
    }
}

pub fn ac_decompose(mu: &DiscreteMeasure, m: &DiscreteMeasure) -> Result<AcDecomposition> {
    if mu.len() != m.len() {
        return Err(Error::MismatchedSpace {
            expected: m.len(),
            found: mu.len(),
        });
    }
    let mut density = vec![0.0; mu.len()];
    let mut singular = DiscreteMeasure::zeros(mu.len());
    for i in 0..mu.len() {
        if m.mass(i) > 0.0 {
            density[i] = mu.mass(i) / m.mass(i);
        } else {
            singular.weights[i] = mu.mass(i);
        }
    }
    Ok(AcDecomposition { density, singular })
}

fn check_nprime(n: f64) -> Result<()> {
    if n.is_nan() || n <= 1.0 {
        return Err(Error::Domain(format!(
            "entropy exponent N' = {n} must exceed 1"
        )));
    }
    Ok(())
}

/// S_{N'}(μ|m) = −Σ ρ^{1−1/N'} m over `{m > 0}`.
pub fn renyi_entropy(mu: &DiscreteMeasure, m: &DiscreteMeasure, nprime: f64) -> Result<f64> {
    check_nprime(nprime)?;
    let ac = ac_decompose(mu, m)?;
    let e = 1.0 - 1.0 / nprime;
    Ok(-kahan_sum(
        ac.density
            .iter()
            .zip(m.weights())
            .filter(|(r, _)| **r > 0.0)
            .map(|(r, w)| r.powf(e) * w),
    ))
}

/// Samples on the uniform grid `0, Δ, …, L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOnNeedle {
    length: f64,
    values: Vec<f64>,
}

impl DensityOnNeedle {
    pub fn new(length: f64, values: Vec<f64>) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Input(format!(
                "needle length {length} must be positive"
            )));
        }
        if values.len() < 2 {
            return Err(Error::Input(
                "a needle density needs at least 2 grid nodes".into(),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Input(format!(
                "density sample {v} at node {i} is not finite and nonnegative"
            )));
        }
        Ok(Self { length, values })
    }

    /// Samples `f` at `cells + 1` nodes.
    pub fn from_fn(length: f64, cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let cells = cells.max(1);
        let values = (0..=cells)
            .map(|i| f(length * i as f64 / cells as f64))
            .collect();
        Self::new(length, values)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> f64 {
        self.length / (self.values.len() - 1) as f64
    }

    pub fn position(&self, i: usize) -> f64 {
        self.length * i as f64 / (self.values.len() - 1) as f64
    }

    /// Piecewise-linear interpolant, clamped to `[0, L]`.
    pub fn eval(&self, x: f64) -> f64 {
        let cells = (self.values.len() - 1) as f64;
        let s = (x / self.length * cells).clamp(0.0, cells);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let f = s - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Trapezoidal integral of the samples.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.step())
    }

    /// Trapezoidal integral of `self · other` on a shared grid.
    pub fn weighted_mass(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        let prod: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(trapezoid(&prod, self.step()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            length: self.length,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.values.len() != other.values.len()
            || (self.length - other.length).abs() > 1e-12 * self.length
        {
            return Err(Error::Input("densities live on different grids".into()));
        }
        Ok(())
    }
}

pub fn trapezoid(v: &[f64], step: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner = kahan_sum(v[1..v.len() - 1].iter().copied());
    step * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

/// −∫ρ^{1−1/N'} h dx by the trapezoidal rule, with `ρ` the density of μ
/// against the needle measure `h dx`.
pub fn renyi_entropy_needle(
    rho: &DensityOnNeedle,
    h: &DensityOnNeedle,
    nprime: f64,
) -> Result<f64> {
    check_nprime(nprime)?;
    rho.same_grid(h)?;
    let e = 1.0 - 1.0 / nprime;
    let v: Vec<f64> = rho
        .values
        .iter()
        .zip(&h.values)
        .map(|(r, w)| if *r > 0.0 { r.powf(e) * w } else { 0.0 })
        .collect();
    Ok(-trapezoid(&v, rho.step()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_self() {
        let m = DiscreteMeasure::uniform(4);
        let ac = ac_decompose(&m, &m).unwrap();
        assert!(ac.density.iter().all(|&r| r == 1.0));
        assert_eq!(ac.singular_mass(), 0.0);
    }

    #[test]
    fn decompose_dirac() {
        let mu = DiscreteMeasure::dirac(2, 0);
        let m = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let ac = ac_decompose(&mu, &m).unwrap();
        assert_eq!(ac.density, vec![2.0, 0.0]);
        assert_eq!(ac.singular_mass(), 0.0);
    }

    #[test]
    fn decompose_singular() {
        let mu = DiscreteMeasure::dirac(3, 2);
        let m = DiscreteMeasure::new(vec![0.5, 0.5, 0.0]).unwrap();
        let ac = ac_decompose(&mu, &m).unwrap();
        assert_eq!(ac.density, vec![0.0, 0.0, 0.0]);
        assert_eq!(ac.singular, mu);
    }

    #[test]
    fn decompose_mismatch() {
        let r = ac_decompose(&DiscreteMeasure::uniform(2), &DiscreteMeasure::uniform(3));
        assert!(matches!(r, Err(Error::MismatchedSpace { .. })));
    }

    #[test]
    fn entropy_examples() {
        let m = DiscreteMeasure::uniform(5);
        assert!((renyi_entropy(&m, &m, 3.0).unwrap() + 1.0).abs() < 1e-15);
        let off = DiscreteMeasure::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(
            renyi_entropy(&DiscreteMeasure::dirac(3, 2), &off, 2.0).unwrap(),
            0.0
        );
        let m2 = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let s = renyi_entropy(&DiscreteMeasure::dirac(2, 0), &m2, 2.0).unwrap();
        assert!((s + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(renyi_entropy(&m, &m, 1.0).is_err());
    }

    #[test]
    fn needle_entropy_constant() {
        let h = DensityOnNeedle::new(2.0, vec![0.5; 11]).unwrap();
        let rho = DensityOnNeedle::new(2.0, vec![1.0; 11]).unwrap();
        assert!((renyi_entropy_needle(&rho, &h, 4.0).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_interpolation() {
        let d = DensityOnNeedle::new(2.0, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(d.eval(0.5), 0.5);
        assert_eq!(d.eval(1.5), 2.5);
        assert_eq!(d.eval(2.0), 4.0);
        assert_eq!(d.eval(3.0), 4.0);
        assert!((d.mass() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_weights() {
        assert!(DiscreteMeasure::new(vec![0.5, -0.1]).is_err());
        assert!(DensityOnNeedle::new(1.0, vec![1.0, f64::NAN]).is_err());
    }
}
