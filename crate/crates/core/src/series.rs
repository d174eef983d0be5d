//! Restricted power series over a polydisc, stored as a polynomial plus a
//! certified bound on the Gauss norm of everything that was not stored.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::point::Estimate;
use crate::valued::{check_prime, format_scalar, norm_of, NormValue, Scalar};

/// Exponent vector; the derived `Ord` is lexicographic with the first
/// variable most significant.
pub type Mono = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarSpec {
    pub name: String,
    pub radius: NormValue,
}

impl VarSpec {
    pub fn new(name: impl Into<String>, radius: NormValue) -> Self {
        VarSpec {
            name: name.into(),
            radius,
        }
    }
}

/// An ordered list of variables with their radii, plus the prime of the
/// computation context.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    prime: u64,
    vars: Vec<VarSpec>,
    /// radius exponents over a common denominator
    numers: Vec<BigInt>,
    denom: BigInt,
}

impl Space {
    pub fn new(prime: u64, vars: Vec<VarSpec>) -> Result<Arc<Space>> {
        check_prime(prime)?;
        for (i, v) in vars.iter().enumerate() {
            if v.radius.is_zero() {
                return Err(Error::InvalidRadius(v.name.clone()));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let denom = vars
            .iter()
            .filter_map(|v| v.radius.exponent())
            .fold(BigInt::one(), |d, e| d.lcm(e.denom()));
        let numers = vars
            .iter()
            .map(|v| {
                let e = v.radius.exponent().expect("radii are nonzero");
                e.numer() * (&denom / e.denom())
            })
            .collect();
        Ok(Arc::new(Space { prime, vars, numers, denom }))
    }

    /// Shorthand for tests and examples: `Space::of(2, &[("x", r), ...])`.
    pub fn of(prime: u64, vars: &[(&str, NormValue)]) -> Result<Arc<Space>> {
        Space::new(
            prime,
            vars.iter()
                .map(|(n, r)| VarSpec::new(*n, r.clone()))
                .collect(),
        )
    }

    /// Unit polydisc in the given variable names.
    pub fn unit(prime: u64, names: &[&str]) -> Result<Arc<Space>> {
        Space::new(
            prime,
            names
                .iter()
                .map(|n| VarSpec::new(*n, NormValue::one()))
                .collect(),
        )
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.vars[i].name
    }

    pub fn radius(&self, i: usize) -> &NormValue {
        &self.vars[i].radius
    }

    pub fn radii(&self) -> Vec<NormValue> {
        self.vars.iter().map(|v| v.radius.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UndeclaredVariable(name.to_string()))
    }

    /// Same names, new radii.
    pub fn with_radii(&self, radii: &[NormValue]) -> Result<Arc<Space>> {
        if radii.len() != self.dim() {
            return Err(Error::Invalid("radius list has the wrong length".into()));
        }
        Space::new(
            self.prime,
            self.vars
                .iter()
                .zip(radii)
                .map(|(v, r)| VarSpec::new(v.name.clone(), r.clone()))
                .collect(),
        )
    }

    /// The space with variable `i` removed.
    pub fn without(&self, i: usize) -> Arc<Space> {
        let mut vars = self.vars.clone();
        vars.remove(i);
        Space::new(self.prime, vars).expect("a subset of valid variables is valid")
    }

    /// The space with one more variable appended.
    pub fn extended(&self, var: VarSpec) -> Result<Arc<Space>> {
        let mut vars = self.vars.clone();
        vars.push(var);
        Space::new(self.prime, vars)
    }

    /// `r^ν`.
    pub fn mono_norm(&self, mono: &[u32]) -> NormValue {
        let mut e = BigInt::zero();
        for (k, n) in mono.iter().zip(&self.numers) {
            if *k > 0 {
                e += n * *k;
            }
        }
        NormValue::Pow(BigRational::new(e, self.denom.clone()))
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .vars
            .iter()
            .map(|v| format!("{}:{}", v.name, v.radius.display(self.prime)))
            .collect();
        format!("[{}]", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    space: Arc<Space>,
    terms: BTreeMap<Mono, Scalar>,
    tail: NormValue,
}

impl Series {
    pub fn zero(space: &Arc<Space>) -> Series {
        Series {
            space: space.clone(),
            terms: BTreeMap::new(),
            tail: NormValue::Zero,
        }
    }

    pub fn constant(space: &Arc<Space>, c: Scalar) -> Series {
        Series::monomial(space, vec![0; space.dim()], c)
    }

    pub fn one(space: &Arc<Space>) -> Series {
        Series::constant(space, Scalar::one())
    }

    pub fn var(space: &Arc<Space>, i: usize) -> Series {
        let mut mono = vec![0; space.dim()];
        mono[i] = 1;
        Series::monomial(space, mono, Scalar::one())
    }

    pub fn monomial(space: &Arc<Space>, mono: Mono, c: Scalar) -> Series {
        assert_eq!(mono.len(), space.dim(), "exponent vector length");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mono, c);
        }
        Series {
            space: space.clone(),
            terms,
            tail: NormValue::Zero,
        }
    }

    /// Sums the given terms (repeated exponents are added).
    pub fn from_terms(space: &Arc<Space>, terms: impl IntoIterator<Item = (Mono, Scalar)>) -> Series {
        let mut out = Series::zero(space);
        for (m, c) in terms {
            assert_eq!(m.len(), space.dim(), "exponent vector length");
            out.add_term(m, c);
        }
        out
    }

    fn add_term(&mut self, mono: Mono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Replaces the tail bound.
    pub fn with_tail(mut self, tail: NormValue) -> Series {
        self.tail = tail;
        self
    }

    /// Raises the tail bound to at least `t`.
    pub fn widen_tail(mut self, t: &NormValue) -> Series {
        if *t > self.tail {
            self.tail = t.clone();
        }
        self
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn prime(&self) -> u64 {
        self.space.prime
    }

    pub fn tail(&self) -> &NormValue {
        &self.tail
    }

    pub fn terms(&self) -> &BTreeMap<Mono, Scalar> {
        &self.terms
    }

    pub fn coeff(&self, mono: &[u32]) -> Option<&Scalar> {
        self.terms.get(mono)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// No stored terms (the tail may still be nonzero).
    pub fn is_stored_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exactly zero: nothing stored and no tail.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.tail.is_zero()
    }

    pub fn is_exact(&self) -> bool {
        self.tail.is_zero()
    }

    /// The stored part with the tail dropped.
    pub fn stored(&self) -> Series {
        Series {
            space: self.space.clone(),
            terms: self.terms.clone(),
            tail: NormValue::Zero,
        }
    }

    /// The constant term of the stored part.
    pub fn constant_term(&self) -> Scalar {
        self.terms
            .get(&vec![0; self.space.dim()])
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    /// `|c|·r^ν`.
    pub fn term_norm(&self, mono: &[u32], c: &Scalar) -> NormValue {
        &norm_of(self.space.prime, c) * &self.space.mono_norm(mono)
    }

    /// Gauss norm of the stored part.
    pub fn main_norm(&self) -> NormValue {
        self.terms
            .iter()
            .map(|(m, c)| self.term_norm(m, c))
            .max()
            .unwrap_or(NormValue::Zero)
    }

    /// Certified upper bound on the Gauss norm of every represented series.
    pub fn norm_bound(&self) -> NormValue {
        self.main_norm().max(self.tail.clone())
    }

    /// Gauss norm with its uncertainty.
    pub fn gauss_norm(&self) -> Estimate {
        Estimate {
            value: self.main_norm(),
            uncertainty: self.tail.clone(),
        }
    }

    /// Largest stored exponent of variable `i`.
    pub fn degree_in(&self, i: usize) -> Option<u32> {
        self.terms.keys().map(|m| m[i]).max()
    }

    /// Total degree of the stored part.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    /// Whether the stored part involves only constants.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&k| k == 0))
    }

    fn check_same(&self, other: &Series) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.describe(),
                right: other.space.describe(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Series) -> Result<Series> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out.tail = self.tail.clone().max(other.tail.clone());
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Series) -> Result<Series> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Series) -> Result<Series> {
        self.check_same(other)?;
        let mut out = Series::zero(&self.space);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m: Mono = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                out.add_term(m, c1 * c2);
            }
        }
        if !(self.tail.is_zero() && other.tail.is_zero()) {
            out.tail = (&self.tail * &other.main_norm())
                .max(&other.tail * &self.main_norm())
                .max(&self.tail * &other.tail);
        }
        Ok(out)
    }

    fn neg_ref(&self) -> Series {
        Series {
            space: self.space.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
            tail: self.tail.clone(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Series {
        if c.is_zero() {
            return Series::zero(&self.space);
        }
        Series {
            space: self.space.clone(),
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
            tail: &self.tail * &norm_of(self.space.prime, c),
        }
    }

    /// Multiplies by the monomial `T^mono`.
    pub fn shift(&self, mono: &[u32]) -> Series {
        Series {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.iter().zip(mono).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
            tail: &self.tail * &self.space.mono_norm(mono),
        }
    }

    pub fn pow(&self, n: u32) -> Series {
        let mut acc = Series::one(&self.space);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Keeps the stored terms selected by `keep`; the tail is unchanged.
    pub fn filter_terms(&self, mut keep: impl FnMut(&Mono, &Scalar) -> bool) -> Series {
        Series {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, c)| keep(m, c))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
            tail: self.tail.clone(),
        }
    }

    /// Composition `f(images)`: variable `i` of `self` is replaced by
    /// `images[i]`, all of which live over `target`.
    ///
    /// Each image must have norm bound at most the radius it replaces, so the
    /// unstored part of `self` still contributes at most its tail.
    pub fn compose(&self, target: &Arc<Space>, images: &[Series]) -> Result<Series> {
        if images.len() != self.space.dim() {
            return Err(Error::Invalid(format!(
                "composition needs {} images, got {}",
                self.space.dim(),
                images.len()
            )));
        }
        if target.prime != self.space.prime {
            return Err(Error::PrimeMismatch(target.prime, self.space.prime));
        }
        for (i, img) in images.iter().enumerate() {
            if img.space != *target {
                return Err(Error::SpaceMismatch {
                    left: img.space.describe(),
                    right: target.describe(),
                });
            }
            let bound = img.norm_bound();
            if bound > *self.space.radius(i) {
                return Err(Error::NormBudget {
                    var: self.space.name(i).to_string(),
                    norm: bound.display(target.prime).to_string(),
                    radius: self.space.radius(i).display(target.prime).to_string(),
                });
            }
        }
        let mut powers: Vec<Vec<Series>> = images
            .iter()
            .map(|img| vec![Series::one(target), img.clone()])
            .collect();
        for (i, pw) in powers.iter_mut().enumerate() {
            let top = self.degree_in(i).unwrap_or(0) as usize;
            while pw.len() <= top {
                let next = &pw[pw.len() - 1] * &images[i];
                pw.push(next);
            }
        }
        let mut out = Series::zero(target);
        for (m, c) in &self.terms {
            let mut term: Option<Series> = None;
            for (i, &k) in m.iter().enumerate() {
                if k > 0 {
                    let pw = &powers[i][k as usize];
                    term = Some(match term {
                        None => pw.clone(),
                        Some(t) => &t * pw,
                    });
                }
            }
            let term = term.unwrap_or_else(|| Series::one(target));
            for (tm, tc) in &term.terms {
                out.add_term(tm.clone(), tc * c);
            }
            let t = &term.tail * &norm_of(self.space.prime, c);
            out = out.widen_tail(&t);
        }
        Ok(out.widen_tail(&self.tail))
    }

    /// Substitutes the named variables; the others map to the variable of the
    /// same name in the images' common space.
    pub fn substitute(&self, assignment: &[(&str, Series)]) -> Result<Series> {
        let Some((_, first)) = assignment.first() else {
            return Ok(self.clone());
        };
        let target = first.space.clone();
        for (name, _) in assignment {
            self.space.require(name)?;
        }
        let mut images = Vec::with_capacity(self.space.dim());
        for v in &self.space.vars {
            match assignment.iter().find(|(n, _)| *n == v.name) {
                Some((_, img)) => images.push(img.clone()),
                None => images.push(Series::var(&target, target.require(&v.name)?)),
            }
        }
        self.compose(&target, &images)
    }

    /// Re-reads the series over `target`, sending variable `i` to variable
    /// `positions[i]`. Extra target variables are unused.
    pub fn embed(&self, target: &Arc<Space>, positions: &[usize]) -> Result<Series> {
        if positions.len() != self.space.dim() || target.prime != self.space.prime {
            return Err(Error::SpaceMismatch {
                left: self.space.describe(),
                right: target.describe(),
            });
        }
        for (i, &j) in positions.iter().enumerate() {
            if !self.tail.is_zero() && target.radius(j) > self.space.radius(i) {
                return Err(Error::NormBudget {
                    var: self.space.name(i).to_string(),
                    norm: target.radius(j).display(target.prime).to_string(),
                    radius: self.space.radius(i).display(target.prime).to_string(),
                });
            }
        }
        let mut out = Series::zero(target);
        for (m, c) in &self.terms {
            let mut mono = vec![0; target.dim()];
            for (i, &k) in m.iter().enumerate() {
                mono[positions[i]] += k;
            }
            out.add_term(mono, c.clone());
        }
        out.tail = self.tail.clone();
        Ok(out)
    }

    /// Same variables, possibly different radii (by position).
    pub fn with_space(&self, target: &Arc<Space>) -> Result<Series> {
        let ids: Vec<usize> = (0..self.space.dim()).collect();
        self.embed(target, &ids)
    }

    /// Embeds into `target` by matching variable names.
    pub fn embed_by_name(&self, target: &Arc<Space>) -> Result<Series> {
        let positions = self
            .space
            .vars
            .iter()
            .map(|v| target.require(&v.name))
            .collect::<Result<Vec<_>>>()?;
        self.embed(target, &positions)
    }

    /// Plugs scalars into some variables and returns a series over the rest.
    pub fn specialize(&self, values: &[(usize, Scalar)]) -> Result<Series> {
        let fixed: BTreeMap<usize, &Scalar> = values.iter().map(|(i, a)| (*i, a)).collect();
        let keep: Vec<VarSpec> = self
            .space
            .vars
            .iter()
            .enumerate()
            .filter(|(i, _)| !fixed.contains_key(i))
            .map(|(_, v)| v.clone())
            .collect();
        let target = Space::new(self.space.prime, keep)?;
        let mut images = Vec::with_capacity(self.space.dim());
        let mut j = 0;
        for i in 0..self.space.dim() {
            match fixed.get(&i) {
                Some(a) => images.push(Series::constant(&target, (*a).clone())),
                None => {
                    images.push(Series::var(&target, j));
                    j += 1;
                }
            }
        }
        self.compose(&target, &images).map_err(|e| match e {
            Error::NormBudget { var, norm, .. } => {
                Error::OutsidePolydisc(format!("{var} has norm {norm}"))
            }
            other => other,
        })
    }

    /// Evaluates the stored part at a scalar point of the polydisc.
    pub fn eval_stored(&self, coords: &[Scalar]) -> Result<Scalar> {
        if coords.len() != self.space.dim() {
            return Err(Error::PointDimension {
                expected: self.space.dim(),
                got: coords.len(),
            });
        }
        for (i, a) in coords.iter().enumerate() {
            if norm_of(self.space.prime, a) > *self.space.radius(i) {
                return Err(Error::OutsidePolydisc(format!(
                    "|{}| exceeds the radius of `{}`",
                    format_scalar(a),
                    self.space.name(i)
                )));
            }
        }
        Ok(self.eval_unchecked(coords))
    }

    /// Evaluates the stored polynomial without the polydisc check.
    pub fn eval_unchecked(&self, coords: &[Scalar]) -> Scalar {
        let mut powers: Vec<Vec<Scalar>> = coords.iter().map(|a| vec![Scalar::one(), a.clone()]).collect();
        for m in self.terms.keys() {
            for (i, &k) in m.iter().enumerate() {
                let pw = &mut powers[i];
                while pw.len() <= k as usize {
                    let next = &pw[pw.len() - 1] * &coords[i];
                    pw.push(next);
                }
            }
        }
        let mut total = Scalar::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (pw, &k) in powers.iter().zip(m) {
                if k > 0 {
                    v *= &pw[k as usize];
                }
            }
            total += v;
        }
        total
    }

    /// The relative presentation `f = Σ c_n T_pivot^n`, with each `c_n` over
    /// the remaining variables. Coefficient `n` carries the tail
    /// `tail·r_pivot^{-n}`, which bounds the `n`-th coefficient of the
    /// unstored part.
    pub fn coeff_view(&self, pivot: usize) -> Vec<(u32, Series)> {
        let sub = self.space.without(pivot);
        let mut groups: BTreeMap<u32, Series> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let n = rest.remove(pivot);
            groups
                .entry(n)
                .or_insert_with(|| Series::zero(&sub))
                .add_term(rest, c.clone());
        }
        let rp = self.space.radius(pivot).clone();
        groups
            .into_iter()
            .map(|(n, mut c)| {
                c.tail = self
                    .tail
                    .checked_div(&rp.powi(n))
                    .expect("radius is nonzero");
                (n, c)
            })
            .collect()
    }

    /// Inverse of `coeff_view`: builds `Σ c_n T_pivot^n` over `space`.
    pub fn from_pivot_coeffs(space: &Arc<Space>, pivot: usize, coeffs: &[(u32, Series)]) -> Series {
        let mut out = Series::zero(space);
        let mut tail = NormValue::Zero;
        for (n, c) in coeffs {
            for (m, a) in &c.terms {
                let mut mono = m.clone();
                mono.insert(pivot, *n);
                out.add_term(mono, a.clone());
            }
            tail = tail.max(&c.tail * &space.radius(pivot).powi(*n));
        }
        out.tail = tail;
        out
    }

    /// Prints the stored part with the given variable names (descending
    /// lexicographic order), followed by `+ O(p^q)` when the tail is nonzero.
    pub fn format_with(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let factors: Vec<String> = m
                .iter()
                .zip(names)
                .filter(|(k, _)| **k > 0)
                .map(|(k, n)| if *k == 1 { n.clone() } else { format!("{n}^{k}") })
                .collect();
            if factors.is_empty() {
                out.push_str(&format_scalar(&abs));
            } else if abs.is_one() {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&format_scalar(&abs));
                out.push('*');
                out.push_str(&factors.join("*"));
            }
        }
        if !self.tail.is_zero() {
            let t = format!("O({})", self.tail.display(self.space.prime));
            if out.is_empty() {
                out = t;
            } else {
                out.push_str(" + ");
                out.push_str(&t);
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.space.vars.iter().map(|v| v.name.clone()).collect();
        f.write_str(&self.format_with(&names))
    }
}

// Operator forms panic on mismatched spaces; the `checked_*` methods report
// the mismatch instead.
impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.checked_add(rhs).expect("series over different spaces")
    }
}

impl AddAssign<&Series> for Series {
    fn add_assign(&mut self, rhs: &Series) {
        self.check_same(rhs).expect("series over different spaces");
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
        if rhs.tail > self.tail {
            self.tail = rhs.tail.clone();
        }
    }
}

impl SubAssign<&Series> for Series {
    fn sub_assign(&mut self, rhs: &Series) {
        self.check_same(rhs).expect("series over different spaces");
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
        if rhs.tail > self.tail {
            self.tail = rhs.tail.clone();
        }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.checked_sub(rhs).expect("series over different spaces")
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.checked_mul(rhs).expect("series over different spaces")
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.neg_ref()
    }
}
