//! Distortion coefficients σ, τ and the diameter bound D_{K,N}.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::TAYLOR_CUTOFF;
use crate::error::{Error, Result};

/// A nonnegative extended real: a finite value or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinity => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    /// Product with a nonnegative weight, using `∞·0 = 0`.
    pub fn weighted(self, w: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        self.to_f64() * w
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(ExtReal::Infinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Curvature and dimension parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureDimension {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

impl CurvatureDimension {
    pub fn new(k: f64, n: f64) -> Result<Self> {
        if !k.is_finite() || n.is_nan() || n < 1.0 {
            return Err(Error::Domain(format!(
                "need finite K and N >= 1, got K={k}, N={n}"
            )));
        }
        Ok(Self { k, n })
    }
}

fn check_args(t: f64, theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0,1]")));
    }
    if theta.is_nan() || theta < 0.0 {
        return Err(Error::Domain(format!("theta = {theta} is negative")));
    }
    Ok(())
}

/// σ^{(t)}_{K,N}(θ).
pub fn sigma(t: f64, k: f64, n: f64, theta: f64) -> Result<ExtReal> {
    check_args(t, theta)?;
    if n.is_nan() || n < 0.0 {
        return Err(Error::Domain(format!("N = {n} is negative")));
    }
    if k.is_nan() {
        return Err(Error::Domain("K is NaN".into()));
    }
    let kt2 = k * theta * theta;
    if n == 0.0 {
        if kt2 < 0.0 {
            return Err(Error::InvalidBranch(format!(
                "K*theta^2 = {kt2} < 0 with N = 0"
            )));
        }
        if kt2 == 0.0 {
            return Ok(ExtReal::Finite(t));
        }
        return Ok(ExtReal::Infinity);
    }
    if kt2 >= n * PI * PI {
        return Ok(ExtReal::Infinity);
    }
    if (kt2 / n).abs() < TAYLOR_CUTOFF {
        return Ok(ExtReal::Finite(t));
    }
    if kt2 > 0.0 {
        let x = theta * (k / n).sqrt();
        Ok(ExtReal::Finite((t * x).sin() / x.sin()))
    } else {
        let x = theta * (-k / n).sqrt();
        Ok(ExtReal::Finite(sinh_ratio(t, x)))
    }
}

/// `sinh(t x)/sinh(x)` for `x > 0`, stable for large `x`.
fn sinh_ratio(t: f64, x: f64) -> f64 {
    if t == 1.0 {
        return 1.0;
    }
    (-(1.0 - t) * x).exp() * (-2.0 * t * x).exp_m1() / (-2.0 * x).exp_m1()
}

/// τ^{(t)}_{K,N}(θ) = t^{1/N} σ^{(t)}_{K,N−1}(θ)^{1−1/N}.
pub fn tau(t: f64, k: f64, n: f64, theta: f64) -> Result<ExtReal> {
    check_args(t, theta)?;
    if n.is_nan() || n < 1.0 {
        return Err(Error::Domain(format!("tau needs N >= 1, got N = {n}")));
    }
    if n == 1.0 {
        return Ok(if k <= 0.0 {
            ExtReal::Finite(t)
        } else {
            ExtReal::Infinity
        });
    }
    match sigma(t, k, n - 1.0, theta)? {
        ExtReal::Infinity => Ok(if t == 0.0 {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::Infinity
        }),
        ExtReal::Finite(s) => {
            if t == 0.0 {
                return Ok(ExtReal::Finite(0.0));
            }
            let inv = 1.0 / n;
            Ok(ExtReal::Finite(t.powf(inv) * s.powf(1.0 - inv)))
        }
    }
}

/// D_{K,N} = π/√(K/N) for K > 0 and finite N, else `+∞`.
pub fn d_max(k: f64, n: f64) -> ExtReal {
    if k > 0.0 && n.is_finite() {
        ExtReal::Finite(PI / (k / n).sqrt())
    } else {
        ExtReal::Infinity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::hp;

    fn fin(v: ExtReal) -> f64 {
        v.finite().expect("finite")
    }

    #[test]
    fn k_zero_branch_returns_t() {
        assert_eq!(fin(sigma(0.37, 0.0, 5.0, 2.0).unwrap()), 0.37);
    }

    #[test]
    fn sigma_at_one_is_one() {
        assert_eq!(fin(sigma(1.0, 3.0, 2.0, 0.5).unwrap()), 1.0);
    }

    #[test]
    fn sigma_quarter_period() {
        let v = fin(sigma(0.5, 1.0, 1.0, PI / 2.0).unwrap());
        let o = hp::hp_sigma(0.5, 1.0, 1.0, PI / 2.0, 50).unwrap().to_f64();
        assert!((v - o).abs() <= 1e-15);
        assert!((v - 0.707_106_781_186_547_5).abs() < 1e-12);
    }

    #[test]
    fn tau_n_one_conventions() {
        assert_eq!(fin(tau(0.6, -2.0, 1.0, 1.3).unwrap()), 0.6);
        assert_eq!(tau(0.6, 2.0, 1.0, 0.0).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn tau_k_zero() {
        let v = fin(tau(0.5, 0.0, 4.0, 7.0).unwrap());
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tau_positive_curvature_value() {
        let v = fin(tau(0.5, 2.0, 2.0, PI / 2.0).unwrap());
        let o = hp::hp_tau(0.5, 2.0, 2.0, PI / 2.0, 50).unwrap().to_f64();
        assert!((v - o).abs() <= 1e-14 * o);
        assert!((v - 0.750_361_896_494_481).abs() < 1e-12, "{v}");
    }

    #[test]
    fn d_max_cases() {
        assert!((fin(d_max(1.0, 1.0)) - PI).abs() < 1e-15);
        assert_eq!(d_max(-1.0, 3.0), ExtReal::Infinity);
        assert_eq!(d_max(0.0, 10.0), ExtReal::Infinity);
    }

    #[test]
    fn singular_boundary() {
        assert_eq!(sigma(0.5, 1.0, 1.0, PI).unwrap(), ExtReal::Infinity);
        assert!(sigma(0.5, 1.0, 1.0, PI * (1.0 - 1e-9)).unwrap().is_finite());
        assert_eq!(sigma(0.5, 1.0, 1.0, 4.0).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn n_zero_branches() {
        assert!(matches!(
            sigma(0.5, -1.0, 0.0, 1.0),
            Err(Error::InvalidBranch(_))
        ));
        assert_eq!(fin(sigma(0.5, 0.0, 0.0, 1.0).unwrap()), 0.5);
        assert_eq!(sigma(0.5, 1.0, 0.0, 1.0).unwrap(), ExtReal::Infinity);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(sigma(1.5, 0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(sigma(0.5, 0.0, 1.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(tau(0.5, 0.0, 0.5, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sinh_branch_large_argument() {
        let v = fin(sigma(0.5, -400.0, 1.0, 10.0).unwrap());
        assert!(v > 0.0 && (v / (-100f64).exp() - 1.0).abs() < 1e-12);
        let o = hp::hp_sigma(0.5, -400.0, 1.0, 10.0, 50).unwrap().to_f64();
        assert!(((v - o) / o).abs() < 1e-12);
    }

    #[test]
    fn ext_real_weighted() {
        assert_eq!(ExtReal::Infinity.weighted(0.0), 0.0);
        assert_eq!(ExtReal::Infinity.weighted(1.0), f64::INFINITY);
        assert_eq!(ExtReal::Finite(2.0).weighted(3.0), 6.0);
    }

    #[test]
    fn ext_real_json() {
        assert_eq!(
            serde_json::to_string(&ExtReal::Infinity).unwrap(),
            "\"inf\""
        );
        let back: ExtReal = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(back, ExtReal::Infinity);
        let back: ExtReal = serde_json::from_str("0.25").unwrap();
        assert_eq!(back, ExtReal::Finite(0.25));
    }
}
