//! Exact arithmetic in `Q` with a fixed p-adic absolute value, and in the
//! value group `p^Q ∪ {0}` where every norm, radius and threshold lives.
//!
//! Norms are stored by their exponent, so `2^-1/2` and `2^-1` compare exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Elements of the scalar field.
pub type Scalar = BigRational;

/// Builds an integer scalar.
pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// Builds the scalar `num/den`.
pub fn frac(num: i64, den: i64) -> Scalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int_valuation(p: u64, n: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    if p == 2 {
        return n.trailing_zeros().unwrap_or(0) as i64;
    }
    let mut v = 0;
    let mut cur = n.magnitude().clone();
    while (&cur % p).is_zero() {
        cur /= p;
        v += 1;
    }
    v
}

/// The p-adic valuation `v_p(a)`; `None` stands for `+∞` (that is, `a = 0`).
pub fn valuation(p: u64, a: &Scalar) -> Option<i64> {
    if a.is_zero() {
        return None;
    }
    Some(int_valuation(p, a.numer()) - int_valuation(p, a.denom()))
}

/// `|a| = p^{-v_p(a)}`, or `Zero` for `a = 0`.
pub fn norm_of(p: u64, a: &Scalar) -> NormValue {
    match valuation(p, a) {
        None => NormValue::Zero,
        Some(v) => NormValue::pow_int(-v),
    }
}

/// A scalar of small height within `tol` of `a`: the unit part is replaced
/// by a residue mod `p^K`. Returns `a` itself when that is no shorter.
pub fn round_to(p: u64, a: &Scalar, tol: &NormValue) -> Scalar {
    let (Some(v), Some(e)) = (valuation(p, a), tol.exponent()) else {
        return a.clone();
    };
    let k = (-e).ceil().to_integer() - BigInt::from(v);
    let Some(k) = k.to_u32() else {
        // k ≤ 0: the whole of a is within tolerance
        return if k.is_positive() { a.clone() } else { Scalar::zero() };
    };
    if k == 0 {
        return Scalar::zero();
    }
    let pb = BigInt::from(p);
    let m = num_traits::pow(pb.clone(), k as usize);
    let pv = if v >= 0 {
        BigRational::from_integer(num_traits::pow(pb, v as usize))
    } else {
        BigRational::new(BigInt::from(1), num_traits::pow(pb, (-v) as usize))
    };
    let unit = a / &pv;
    let den = unit.denom().mod_floor(&m);
    let Some(inv) = den.modinv(&m) else {
        return a.clone();
    };
    let mut r = (unit.numer().mod_floor(&m) * inv).mod_floor(&m);
    if &r * 2 > m {
        r -= &m;
    }
    let out = BigRational::from_integer(r) * pv;
    let height = |x: &Scalar| x.numer().bits() + x.denom().bits();
    if height(&out) < height(a) {
        out
    } else {
        a.clone()
    }
}

/// Parses `<int>` or `<int>/<int>`.
pub fn parse_scalar(text: &str) -> Result<Scalar> {
    let t = text.trim();
    let bad = || Error::Parse {
        pos: 0,
        msg: format!("bad scalar literal `{t}`"),
    };
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(n, d))
    } else {
        Ok(BigRational::from_integer(
            BigInt::from_str(t).map_err(|_| bad())?,
        ))
    }
}

/// Prints a scalar as `<int>` or `<int>/<int>`.
pub fn format_scalar(a: &Scalar) -> String {
    if a.is_integer() {
        a.numer().to_string()
    } else {
        format!("{}/{}", a.numer(), a.denom())
    }
}

/// An element of `p^Q ∪ {0}`.
///
/// The derived order puts `Zero` below every power and compares powers by
/// exponent, which is the order of the real numbers they denote.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormValue {
    Zero,
    /// `p^exp`
    Pow(BigRational),
}

impl NormValue {
    pub fn one() -> Self {
        NormValue::Pow(BigRational::zero())
    }

    pub fn pow_int(e: i64) -> Self {
        NormValue::Pow(int(e))
    }

    pub fn pow_frac(num: i64, den: i64) -> Self {
        NormValue::Pow(frac(num, den))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NormValue::Zero)
    }

    pub fn exponent(&self) -> Option<&BigRational> {
        match self {
            NormValue::Zero => None,
            NormValue::Pow(e) => Some(e),
        }
    }

    pub fn checked_div(&self, rhs: &NormValue) -> Result<NormValue> {
        match (self, rhs) {
            (_, NormValue::Zero) => Err(Error::DivisionByZeroNorm),
            (NormValue::Zero, _) => Ok(NormValue::Zero),
            (NormValue::Pow(a), NormValue::Pow(b)) => Ok(NormValue::Pow(a - b)),
        }
    }

    pub fn inv(&self) -> Result<NormValue> {
        NormValue::one().checked_div(self)
    }

    /// `self^q` for a rational `q`.
    pub fn pow(&self, q: &BigRational) -> Result<NormValue> {
        match self {
            NormValue::Pow(e) => Ok(NormValue::Pow(e * q)),
            NormValue::Zero => match q.cmp(&BigRational::zero()) {
                Ordering::Greater => Ok(NormValue::Zero),
                Ordering::Equal => Ok(NormValue::one()),
                Ordering::Less => Err(Error::ZeroToNegativePower),
            },
        }
    }

    pub fn powi(&self, n: u32) -> NormValue {
        match self {
            NormValue::Zero if n > 0 => NormValue::Zero,
            NormValue::Zero => NormValue::one(),
            NormValue::Pow(e) => NormValue::Pow(e * int(n as i64)),
        }
    }

    /// Renders as `p^q` (or `0`).
    pub fn display(&self, p: u64) -> NormDisplay<'_> {
        NormDisplay { value: self, p }
    }

    /// Parses `p^<rational>` or `0`; the base must equal the context prime.
    /// `1` is accepted as `p^0`.
    pub fn parse(text: &str, p: u64) -> Result<NormValue> {
        let t = text.trim();
        let bad = |msg: String| Error::Parse { pos: 0, msg };
        if t == "0" {
            return Ok(NormValue::Zero);
        }
        if t == "1" {
            return Ok(NormValue::one());
        }
        let (base, exp) = t
            .split_once('^')
            .ok_or_else(|| bad(format!("bad norm literal `{t}`, expected p^q or 0")))?;
        let base: u64 = base
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad base in `{t}`")))?;
        if base != p {
            return Err(Error::PrimeMismatch(base, p));
        }
        Ok(NormValue::Pow(parse_scalar(exp)?))
    }

    /// Exact test of `p^e > 1/2`, i.e. `self > 2^{-1}` as real numbers.
    pub fn exceeds_half(&self, p: u64) -> bool {
        match self {
            NormValue::Zero => false,
            NormValue::Pow(e) if !e.is_negative() => true,
            NormValue::Pow(e) => {
                // p^{-a/b} > 1/2  <=>  p^a < 2^b
                let a = (-e).numer().to_u32().unwrap_or(u32::MAX);
                let b = e.denom().to_u32().unwrap_or(u32::MAX);
                BigInt::from(p).pow(a) < BigInt::from(2).pow(b)
            }
        }
    }
}

impl Mul for &NormValue {
    type Output = NormValue;

    fn mul(self, rhs: &NormValue) -> NormValue {
        match (self, rhs) {
            (NormValue::Pow(a), NormValue::Pow(b)) => NormValue::Pow(a + b),
            _ => NormValue::Zero,
        }
    }
}

impl Mul for NormValue {
    type Output = NormValue;

    fn mul(self, rhs: NormValue) -> NormValue {
        &self * &rhs
    }
}

pub struct NormDisplay<'a> {
    value: &'a NormValue,
    p: u64,
}

impl fmt::Display for NormDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            NormValue::Zero => write!(f, "0"),
            NormValue::Pow(e) => write!(f, "{}^{}", self.p, format_scalar(e)),
        }
    }
}

/// Checks that `p` is usable as the prime of a computation context.
pub fn check_prime(p: u64) -> Result<()> {
    if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
        return Err(Error::Invalid(format!("{p} is not a prime")));
    }
    Ok(())
}
