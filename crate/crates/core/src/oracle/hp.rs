//! Fixed-point big-integer arithmetic for reference coefficient values.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Fixed-point number `value · 2^-bits`.
#[derive(Clone, Debug)]
struct Fx {
    v: BigInt,
    bits: u32,
}

impl Fx {
    fn zero(bits: u32) -> Self {
        Fx {
            v: BigInt::zero(),
            bits,
        }
    }

    fn one(bits: u32) -> Self {
        Fx {
            v: BigInt::one() << bits,
            bits,
        }
    }

    fn from_int(n: i64, bits: u32) -> Self {
        Fx {
            v: BigInt::from(n) << bits,
            bits,
        }
    }

    fn from_f64(x: f64, bits: u32) -> Self {
        if x == 0.0 {
            return Self::zero(bits);
        }
        let b = x.to_bits();
        let sign = if b >> 63 == 1 { -1 } else { 1 };
        let exp = ((b >> 52) & 0x7ff) as i64;
        let frac = b & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = BigInt::from(mant) * sign;
        let shift = bits as i64 + e;
        let v = if shift >= 0 {
            m << shift as usize
        } else {
            m >> (-shift) as usize
        };
        Fx { v, bits }
    }

    fn to_f64(&self) -> f64 {
        let len = self.v.bits() as i64;
        let excess = (len - 64).max(0);
        let top = (&self.v >> excess as usize).to_f64().unwrap_or(f64::NAN);
        let e = (excess - self.bits as i64) as i32;
        top * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
    }

    fn add(&self, o: &Fx) -> Fx {
        Fx {
            v: &self.v + &o.v,
            bits: self.bits,
        }
    }

    fn sub(&self, o: &Fx) -> Fx {
        Fx {
            v: &self.v - &o.v,
            bits: self.bits,
        }
    }

    fn mul(&self, o: &Fx) -> Fx {
        Fx {
            v: (&self.v * &o.v) >> self.bits as usize,
            bits: self.bits,
        }
    }

    fn div(&self, o: &Fx) -> Fx {
        Fx {
            v: (&self.v << self.bits as usize) / &o.v,
            bits: self.bits,
        }
    }

    fn div_int(&self, n: i64) -> Fx {
        Fx {
            v: &self.v / BigInt::from(n),
            bits: self.bits,
        }
    }

    fn neg(&self) -> Fx {
        Fx {
            v: -&self.v,
            bits: self.bits,
        }
    }

    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    fn is_negative(&self) -> bool {
        self.v.sign() == Sign::Minus
    }

    fn sqrt(&self) -> Fx {
        Fx {
            v: (&self.v << self.bits as usize).sqrt(),
            bits: self.bits,
        }
    }

    fn shl(&self, k: i64) -> Fx {
        let v = if k >= 0 {
            &self.v << k as usize
        } else {
            &self.v >> (-k) as usize
        };
        Fx { v, bits: self.bits }
    }
}

/// Σ z^{2k+1}/(2k+1) for |z| < 1.
fn atanh_series(z: &Fx) -> Fx {
    let z2 = z.mul(z);
    let mut term = z.clone();
    let mut sum = Fx::zero(z.bits);
    let mut k = 1i64;
    while !term.is_zero() {
        sum = sum.add(&term.div_int(k));
        term = term.mul(&z2);
        k += 2;
    }
    sum
}

/// Σ (−1)^k z^{2k+1}/(2k+1) for |z| < 1.
fn atan_series(z: &Fx) -> Fx {
    let z2 = z.mul(z);
    let mut term = z.clone();
    let mut sum = Fx::zero(z.bits);
    let mut k = 1i64;
    let mut neg = false;
    while !term.is_zero() {
        let q = term.div_int(k);
        sum = if neg { sum.sub(&q) } else { sum.add(&q) };
        term = term.mul(&z2);
        k += 2;
        neg = !neg;
    }
    sum
}

fn pi(bits: u32) -> Fx {
    let one = Fx::one(bits);
    let a = atan_series(&one.div_int(5));
    let b = atan_series(&one.div_int(239));
    a.shl(4).sub(&b.shl(2))
}

fn ln2(bits: u32) -> Fx {
    atanh_series(&Fx::one(bits).div_int(3)).shl(1)
}

fn exp(x: &Fx) -> Fx {
    let bits = x.bits;
    let l2 = ln2(bits);
    let k = x.div(&l2).v.clone() >> bits as usize;
    let k = k.to_i64().expect("exponent in range");
    let r = x.sub(&Fx::from_int(k, bits).mul(&l2));
    let mut term = Fx::one(bits);
    let mut sum = Fx::one(bits);
    let mut i = 1i64;
    loop {
        term = term.mul(&r).div_int(i);
        if term.is_zero() {
            break;
        }
        sum = sum.add(&term);
        i += 1;
    }
    sum.shl(k)
}

fn ln(x: &Fx) -> Fx {
    assert!(!x.is_negative() && !x.is_zero());
    let bits = x.bits;
    let k = x.v.bits() as i64 - 1 - bits as i64;
    let m = x.shl(-k);
    let one = Fx::one(bits);
    let z = m.sub(&one).div(&m.add(&one));
    atanh_series(&z)
        .shl(1)
        .add(&Fx::from_int(k, bits).mul(&ln2(bits)))
}

fn sin(x: &Fx) -> Fx {
    let bits = x.bits;
    let two_pi = pi(bits).shl(1);
    let q = x.div(&two_pi).v.clone() >> bits as usize;
    let r = x.sub(&two_pi.mul(&Fx {
        v: q << bits as usize,
        bits,
    }));
    let r2 = r.mul(&r);
    let mut term = r.clone();
    let mut sum = r;
    let mut i = 1i64;
    loop {
        term = term.mul(&r2).div_int((2 * i) * (2 * i + 1)).neg();
        if term.is_zero() {
            break;
        }
        sum = sum.add(&term);
        i += 1;
    }
    sum
}

fn sinh(x: &Fx) -> Fx {
    exp(x).sub(&exp(&x.neg())).shl(-1)
}

/// A reference value: finite or `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub enum HpValue {
    Finite { value: f64, decimal: String },
    Infinity,
}

impl HpValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            HpValue::Finite { value, .. } => *value,
            HpValue::Infinity => f64::INFINITY,
        }
    }

    fn from_fx(x: &Fx, digits: u32) -> Self {
        HpValue::Finite {
            value: x.to_f64(),
            decimal: to_decimal(x, digits),
        }
    }
}

fn to_decimal(x: &Fx, digits: u32) -> String {
    let bits = x.bits as usize;
    let neg = x.is_negative();
    let a = x.v.abs();
    let int = &a >> bits;
    let mut frac = a - (&int << bits);
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int.to_string());
    s.push('.');
    let mask = (BigInt::one() << bits) - 1;
    for _ in 0..digits {
        frac *= 10;
        let d = &frac >> bits;
        s.push_str(&d.to_string());
        frac &= &mask;
    }
    s
}

fn precision_bits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64
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

enum Sigma {
    Inf,
    Val(Fx),
}

fn sigma_fx(t: f64, k: f64, n: f64, theta: f64, bits: u32) -> Result<Sigma> {
    let tf = Fx::from_f64(t, bits);
    let kf = Fx::from_f64(k, bits);
    let th = Fx::from_f64(theta, bits);
    let kt2 = kf.mul(&th).mul(&th);
    if n == 0.0 {
        if kt2.is_negative() {
            return Err(Error::InvalidBranch("K*theta^2 < 0 with N = 0".into()));
        }
        return Ok(if kt2.is_zero() {
            Sigma::Val(tf)
        } else {
            Sigma::Inf
        });
    }
    if kt2.is_zero() {
        return Ok(Sigma::Val(tf));
    }
    if n == f64::INFINITY {
        return Ok(Sigma::Val(tf));
    }
    let nf = Fx::from_f64(n, bits);
    let p = pi(bits);
    let bound = nf.mul(&p).mul(&p);
    if !kt2.sub(&bound).is_negative() {
        return Ok(Sigma::Inf);
    }
    if kt2.is_negative() {
        let x = th.mul(&kf.neg().div(&nf).sqrt());
        Ok(Sigma::Val(sinh(&tf.mul(&x)).div(&sinh(&x))))
    } else {
        let x = th.mul(&kf.div(&nf).sqrt());
        Ok(Sigma::Val(sin(&tf.mul(&x)).div(&sin(&x))))
    }
}

/// σ^{(t)}_{K,N}(θ) evaluated with `digits` decimal digits.
pub fn hp_sigma(t: f64, k: f64, n: f64, theta: f64, digits: u32) -> Result<HpValue> {
    check_args(t, theta)?;
    if n.is_nan() || n < 0.0 {
        return Err(Error::Domain(format!("N = {n} is negative")));
    }
    let bits = precision_bits(digits);
    Ok(match sigma_fx(t, k, n, theta, bits)? {
        Sigma::Inf => HpValue::Infinity,
        Sigma::Val(v) => HpValue::from_fx(&v, digits),
    })
}

/// τ^{(t)}_{K,N}(θ) evaluated with `digits` decimal digits.
pub fn hp_tau(t: f64, k: f64, n: f64, theta: f64, digits: u32) -> Result<HpValue> {
    check_args(t, theta)?;
    if n.is_nan() || n < 1.0 {
        return Err(Error::Domain(format!("tau needs N >= 1, got {n}")));
    }
    let bits = precision_bits(digits);
    if n == 1.0 {
        return Ok(if k > 0.0 {
            HpValue::Infinity
        } else {
            HpValue::from_fx(&Fx::from_f64(t, bits), digits)
        });
    }
    let zero = || HpValue::Finite {
        value: 0.0,
        decimal: to_decimal(&Fx::zero(bits), digits),
    };
    match sigma_fx(t, k, n - 1.0, theta, bits)? {
        Sigma::Inf => Ok(if t == 0.0 { zero() } else { HpValue::Infinity }),
        Sigma::Val(s) => {
            if t == 0.0 || s.is_zero() {
                return Ok(zero());
            }
            if n == f64::INFINITY {
                return Ok(HpValue::from_fx(&s, digits));
            }
            let nf = Fx::from_f64(n, bits);
            let one = Fx::one(bits);
            let inv = one.div(&nf);
            let tf = Fx::from_f64(t, bits);
            let e = ln(&tf).mul(&inv).add(&ln(&s).mul(&one.sub(&inv)));
            Ok(HpValue::from_fx(&exp(&e), digits))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let b = precision_bits(50);
        assert!((pi(b).to_f64() - std::f64::consts::PI).abs() < 1e-16);
        assert!((ln2(b).to_f64() - std::f64::consts::LN_2).abs() < 1e-16);
        assert!(to_decimal(&pi(b), 30).starts_with("3.141592653589793238462643383279"));
    }

    #[test]
    fn elementary_functions() {
        let b = precision_bits(40);
        for &x in &[-7.5, -1.0, -0.1, 0.3, 1.0, 2.5, 10.0] {
            let fx = Fx::from_f64(x, b);
            assert!((exp(&fx).to_f64() / x.exp() - 1.0).abs() < 1e-15, "exp {x}");
            assert!((sin(&fx).to_f64() - x.sin()).abs() < 1e-15, "sin {x}");
            assert!(
                (sinh(&fx).to_f64() / x.sinh() - 1.0).abs() < 1e-15,
                "sinh {x}"
            );
        }
        for &x in &[1e-5, 0.3, 1.0, 2.0, 1e6] {
            let fx = Fx::from_f64(x, b);
            assert!((ln(&fx).to_f64() - x.ln()).abs() < 1e-14, "ln {x}");
            assert!(
                (fx.sqrt().to_f64() / x.sqrt() - 1.0).abs() < 1e-15,
                "sqrt {x}"
            );
        }
    }

    #[test]
    fn round_trip_f64() {
        let b = precision_bits(50);
        for &x in &[1e-300, 0.1, 1.0 / 3.0, 12345.678, -2.5] {
            assert_eq!(Fx::from_f64(x, b + 1000).to_f64(), x);
        }
    }
}
