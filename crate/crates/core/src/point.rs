//! Rigid points and monomial (Gauss-type) points of a polydisc, and exact
//! seminorm evaluation at them.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::{Series, Space};
use crate::valued::{format_scalar, norm_of, round_to, valuation, NormValue, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Point {
    Rigid(Vec<Scalar>),
    /// `η_{a,ρ}`: the seminorm `f ↦ ‖f(a + T)‖_ρ`.
    Monomial { center: Vec<Scalar>, rho: Vec<NormValue> },
}

impl Point {
    /// The Gauss point of the polydisc.
    pub fn gauss(space: &Space) -> Point {
        Point::Monomial {
            center: vec![Scalar::default(); space.dim()],
            rho: space.radii(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Point::Rigid(c) => c.len(),
            Point::Monomial { center, .. } => center.len(),
        }
    }

    pub fn is_rigid(&self) -> bool {
        matches!(self, Point::Rigid(_))
    }

    /// Checks that the point lies in the polydisc of `space`.
    pub fn validate(&self, space: &Space) -> Result<()> {
        if self.dim() != space.dim() {
            return Err(Error::PointDimension {
                expected: space.dim(),
                got: self.dim(),
            });
        }
        let p = space.prime();
        let center = match self {
            Point::Rigid(c) => c,
            Point::Monomial { center, rho } => {
                for (i, r) in rho.iter().enumerate() {
                    if r.is_zero() || r > space.radius(i) {
                        return Err(Error::OutsidePolydisc(format!(
                            "rho {} for `{}` must lie in (0, {}]",
                            r.display(p),
                            space.name(i),
                            space.radius(i).display(p)
                        )));
                    }
                }
                center
            }
        };
        for (i, a) in center.iter().enumerate() {
            if norm_of(p, a) > *space.radius(i) {
                return Err(Error::OutsidePolydisc(format!(
                    "|{}| exceeds the radius of `{}`",
                    format_scalar(a),
                    space.name(i)
                )));
            }
        }
        Ok(())
    }

    pub fn display(&self, p: u64) -> String {
        match self {
            Point::Rigid(c) => {
                let parts: Vec<String> = c.iter().map(format_scalar).collect();
                format!("({})", parts.join(","))
            }
            Point::Monomial { center, rho } => {
                let a: Vec<String> = center.iter().map(format_scalar).collect();
                let r: Vec<String> = rho.iter().map(|x| x.display(p).to_string()).collect();
                format!("gauss({};{})", a.join(","), r.join(","))
            }
        }
    }
}

/// A norm value known up to a certified uncertainty.
///
/// The true value equals `value` when `uncertainty < value` (or the
/// uncertainty is zero); otherwise only `[0, uncertainty]` is certified,
/// since the unstored part may cancel the stored one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Estimate {
    pub value: NormValue,
    pub uncertainty: NormValue,
}

impl Estimate {
    pub fn exact(value: NormValue) -> Estimate {
        Estimate {
            value,
            uncertainty: NormValue::Zero,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.uncertainty.is_zero() || self.uncertainty < self.value
    }

    pub fn lower(&self) -> NormValue {
        if self.is_exact() {
            self.value.clone()
        } else {
            NormValue::Zero
        }
    }

    pub fn upper(&self) -> NormValue {
        if self.is_exact() {
            self.value.clone()
        } else {
            self.uncertainty.clone()
        }
    }
}

/// `f(a + T)` over the polydisc of radii `rho`.
pub fn recenter(f: &Series, center: &[Scalar], rho: &[NormValue]) -> Result<Series> {
    shift(f, center, rho, None)
}

/// Taylor shift one variable at a time. Terms whose norm in the partly
/// shifted coordinates is at most `floor` are dropped: shifting the
/// remaining variables cannot raise them above it.
fn shift(f: &Series, center: &[Scalar], rho: &[NormValue], floor: Option<&NormValue>) -> Result<Series> {
    let space = f.space();
    let target = space.with_radii(rho)?;
    let p = space.prime();
    let mut radii = space.radii();
    let mut cur: BTreeMap<Vec<u32>, Scalar> = f.terms().clone();
    for (i, a) in center.iter().enumerate() {
        radii[i] = rho[i].clone();
        if !a.is_zero() {
            let top = cur.keys().map(|m| m[i]).max().unwrap_or(0) as usize;
            let mut apow = vec![Scalar::one()];
            for k in 1..=top {
                apow.push(&apow[k - 1] * a);
            }
            let mut next: BTreeMap<Vec<u32>, Scalar> = BTreeMap::new();
            for (m, c) in &cur {
                let k = m[i] as usize;
                let mut binom = BigInt::one();
                for j in (0..=k).rev() {
                    // C(k, j) a^{k-j}, walking j downwards
                    let mut mj = m.clone();
                    mj[i] = j as u32;
                    let add = c * &apow[k - j] * BigRational::from_integer(binom.clone());
                    let slot = next.entry(mj).or_insert_with(Scalar::zero);
                    *slot += add;
                    if j > 0 {
                        binom = binom * BigInt::from(j) / BigInt::from(k - j + 1);
                    }
                }
            }
            next.retain(|_, c| !c.is_zero());
            cur = next;
        }
        if let Some(fl) = floor {
            let norm = |m: &Vec<u32>, c: &Scalar| {
                m.iter().zip(&radii).fold(norm_of(p, c), |acc, (&k, r)| &acc * &r.powi(k))
            };
            cur.retain(|m, c| norm(m, c) > *fl);
        }
    }
    Ok(Series::from_terms(&target, cur).with_tail(f.tail().clone()))
}

/// `|f(x)|` with the uncertainty coming from the tail of `f`.
pub fn eval_seminorm(f: &Series, x: &Point) -> Result<Estimate> {
    x.validate(f.space())?;
    let value = match x {
        Point::Rigid(c) => norm_of(f.prime(), &rounded_eval(f, c)),
        Point::Monomial { center, rho } => {
            // η_{a,ρ} only depends on the disc D(a, ρ)
            let p = f.prime();
            let center: Vec<Scalar> = center.iter().zip(rho).map(|(a, r)| round_to(p, a, r)).collect();
            let floor = (!f.tail().is_zero()).then_some(f.tail());
            shift(&rounded_terms(f), &center, rho, floor)?.main_norm()
        }
    };
    Ok(Estimate {
        value,
        uncertainty: f.tail().clone(),
    })
}

/// `f(c)` up to an error within the tail of `f`, computed in `ℤ/p^K`: only
/// the digits above the tail are carried.
fn rounded_eval(f: &Series, c: &[Scalar]) -> Scalar {
    let main = f.main_norm();
    let tail = f.tail();
    let Some(e) = tail.exponent().filter(|_| *tail < main) else {
        return f.eval_unchecked(c);
    };
    let p = f.prime();
    // terms of valuation at least `top` are within the tail
    let top = (-e).ceil().to_integer().to_i64().expect("tail exponent fits");
    let coords: Vec<Option<(i64, Scalar)>> = c.iter().map(|a| split_unit(p, a)).collect();
    let mut terms = Vec::new();
    'terms: for (m, a) in f.terms() {
        let (mut v, u) = split_unit(p, a).expect("stored coefficients are nonzero");
        for (x, &k) in coords.iter().zip(m) {
            if k > 0 {
                match x {
                    Some((vx, _)) => v += vx * k as i64,
                    None => continue 'terms,
                }
            }
        }
        if v < top {
            terms.push((m, v, u));
        }
    }
    let Some(low) = terms.iter().map(|(_, v, _)| *v).min() else {
        return Scalar::zero();
    };
    let pb = BigInt::from(p);
    let modulus = num_traits::pow(pb.clone(), (top - low) as usize);
    let residue = |u: &Scalar| -> BigInt {
        let inv = u.denom().modinv(&modulus).expect("units are invertible");
        (u.numer() * inv).mod_floor(&modulus)
    };
    let mut powers: Vec<Vec<BigInt>> = coords
        .iter()
        .map(|x| vec![BigInt::one(), x.as_ref().map_or_else(BigInt::zero, |(_, u)| residue(u))])
        .collect();
    let mut sum = BigInt::zero();
    for (m, v, u) in terms {
        let mut t = residue(&u) * num_traits::pow(pb.clone(), (v - low) as usize);
        for (pw, &k) in powers.iter_mut().zip(m) {
            while pw.len() <= k as usize {
                let next = (&pw[pw.len() - 1] * &pw[1]).mod_floor(&modulus);
                pw.push(next);
            }
            if k > 0 {
                t = (t * &pw[k as usize]).mod_floor(&modulus);
            }
        }
        sum += t;
    }
    let sum = Scalar::from_integer(sum.mod_floor(&modulus));
    let scale = Scalar::from_integer(num_traits::pow(pb, low.unsigned_abs() as usize));
    if low >= 0 {
        sum * scale
    } else {
        sum / scale
    }
}

/// `a = p^v·u` with `u` a unit.
fn split_unit(p: u64, a: &Scalar) -> Option<(i64, Scalar)> {
    let v = valuation(p, a)?;
    let pv = Scalar::from_integer(num_traits::pow(BigInt::from(p), v.unsigned_abs() as usize));
    Some((v, if v >= 0 { a / pv } else { a * pv }))
}

/// `f` with every coefficient moved by at most its share of the tail.
fn rounded_terms(f: &Series) -> Series {
    let tail = f.tail();
    if tail.is_zero() {
        return f.clone();
    }
    let (p, space) = (f.prime(), f.space());
    let terms = f.terms().iter().map(|(m, a)| {
        let tol = tail.checked_div(&space.mono_norm(m)).expect("radii are nonzero");
        (m.clone(), round_to(p, a, &tol))
    });
    Series::from_terms(space, terms.collect::<Vec<_>>()).with_tail(tail.clone())
}

/// The seminorm of `h` at the image point `φ(x)`, i.e. `|(h∘φ)(x)|`.
pub fn pushforward_eval(h: &Series, phi: &[Series], x: &Point) -> Result<Estimate> {
    let target: Arc<Space> = match phi.first() {
        Some(s) => s.space().clone(),
        None => return Err(Error::Invalid("empty coordinate map".into())),
    };
    eval_seminorm(&h.compose(&target, phi)?, x)
}
