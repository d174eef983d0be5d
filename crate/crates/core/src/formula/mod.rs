//! Boolean combinations of norm inequalities `α|f| ⋄ β|g|`, their normal
//! forms, and three-valued evaluation at points.

mod parser;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logic::Tri;
use crate::point::{eval_seminorm, Point};
use crate::series::{Series, Space};
use crate::valued::{norm_of, NormValue};

pub use parser::{parse_formula, parse_series};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Le,
    Lt,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Lt => "<",
        }
    }
}

/// `alpha·|f(x)| cmp beta·|g(x)|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub alpha: NormValue,
    pub f: Series,
    pub cmp: Cmp,
    pub beta: NormValue,
    pub g: Series,
}

impl Atom {
    pub fn new(alpha: NormValue, f: Series, cmp: Cmp, beta: NormValue, g: Series) -> Result<Atom> {
        if alpha.is_zero() && beta.is_zero() {
            return Err(Error::Invalid("an atom needs a nonzero scale on some side".into()));
        }
        f.checked_add(&g)?;
        Ok(Atom {
            alpha,
            f,
            cmp,
            beta,
            g,
        })
    }

    /// `|f| <= |g|`
    pub fn le(f: Series, g: Series) -> Atom {
        Atom::new(NormValue::one(), f, Cmp::Le, NormValue::one(), g).expect("unit scales")
    }

    /// `|f| < |g|`
    pub fn lt(f: Series, g: Series) -> Atom {
        Atom::new(NormValue::one(), f, Cmp::Lt, NormValue::one(), g).expect("unit scales")
    }

    /// `|f| <= c·|1|`
    pub fn le_const(f: Series, c: NormValue) -> Atom {
        let one = Series::one(f.space());
        Atom::new(NormValue::one(), f, Cmp::Le, c, one).expect("unit scale")
    }

    /// `f = 0`, encoded as `|f| <= 0·|1|`.
    pub fn eq_zero(f: Series) -> Atom {
        Atom::le_const(f, NormValue::Zero)
    }

    /// `f != 0`, encoded as `0·|1| < |f|`.
    pub fn nonzero(f: Series) -> Atom {
        let one = Series::one(f.space());
        Atom::new(NormValue::Zero, one, Cmp::Lt, NormValue::one(), f).expect("unit scale")
    }

    pub fn space(&self) -> &Arc<Space> {
        self.f.space()
    }

    pub fn negate(&self) -> Atom {
        let cmp = match self.cmp {
            Cmp::Le => Cmp::Lt,
            Cmp::Lt => Cmp::Le,
        };
        Atom {
            alpha: self.beta.clone(),
            f: self.g.clone(),
            cmp,
            beta: self.alpha.clone(),
            g: self.f.clone(),
        }
    }

    pub fn eval(&self, x: &Point) -> Result<Tri> {
        let ef = eval_seminorm(&self.f, x)?;
        let eg = eval_seminorm(&self.g, x)?;
        let (lo_l, hi_l) = (&self.alpha * &ef.lower(), &self.alpha * &ef.upper());
        let (lo_r, hi_r) = (&self.beta * &eg.lower(), &self.beta * &eg.upper());
        Ok(match self.cmp {
            Cmp::Le if hi_l <= lo_r => Tri::True,
            Cmp::Le if lo_l > hi_r => Tri::False,
            Cmp::Lt if hi_l < lo_r => Tri::True,
            Cmp::Lt if lo_l >= hi_r => Tri::False,
            _ => Tri::Unknown,
        })
    }

    /// The truth value when both sides are exact constants.
    pub fn constant_truth(&self) -> Option<bool> {
        if !(self.f.is_exact() && self.g.is_exact() && self.f.is_constant() && self.g.is_constant()) {
            return None;
        }
        let p = self.f.prime();
        let l = &self.alpha * &norm_of(p, &self.f.constant_term());
        let r = &self.beta * &norm_of(p, &self.g.constant_term());
        Some(match self.cmp {
            Cmp::Le => l <= r,
            Cmp::Lt => l < r,
        })
    }

    pub fn map_series(&self, mut m: impl FnMut(&Series) -> Result<Series>) -> Result<Atom> {
        Ok(Atom {
            alpha: self.alpha.clone(),
            f: m(&self.f)?,
            cmp: self.cmp,
            beta: self.beta.clone(),
            g: m(&self.g)?,
        })
    }
}

fn write_side(out: &mut fmt::Formatter<'_>, scale: &NormValue, s: &Series) -> fmt::Result {
    if *scale != NormValue::one() {
        write!(out, "{}*", scale.display(s.prime()))?;
    }
    write!(out, "|{}|", s)
}

impl fmt::Display for Atom {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_side(out, &self.alpha, &self.f)?;
        write!(out, " {} ", self.cmp.symbol())?;
        write_side(out, &self.beta, &self.g)
    }
}

/// A finite boolean combination of atoms. `And([])` is true and `Or([])`
/// is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

/// A negation-free conjunction of atoms.
pub type BasicConjunct = Vec<Atom>;

impl Formula {
    pub fn top() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn bottom() -> Formula {
        Formula::Or(Vec::new())
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    /// Conjunction that skips `true` operands and avoids singleton nodes.
    pub fn conj(parts: Vec<Formula>) -> Formula {
        let mut keep: Vec<Formula> = parts.into_iter().filter(|p| !p.is_top()).collect();
        if keep.len() == 1 {
            keep.pop().expect("one element")
        } else {
            Formula::And(keep)
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Formula::And(v) if v.is_empty())
    }

    pub fn is_bottom(&self) -> bool {
        matches!(self, Formula::Or(v) if v.is_empty())
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) {
            match f {
                Formula::Atom(a) => out.push(a),
                Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| walk(g, out)),
                Formula::Not(g) => walk(g, out),
            }
        }
        walk(self, &mut out);
        out
    }

    /// The common space of the atoms, if there is any atom.
    pub fn space(&self) -> Option<Arc<Space>> {
        self.atoms().first().map(|a| a.space().clone())
    }

    pub fn map_series(&self, m: &mut impl FnMut(&Series) -> Result<Series>) -> Result<Formula> {
        Ok(match self {
            Formula::Atom(a) => Formula::Atom(a.map_series(&mut *m)?),
            Formula::And(v) => Formula::And(v.iter().map(|g| g.map_series(m)).collect::<Result<_>>()?),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.map_series(m)).collect::<Result<_>>()?),
            Formula::Not(g) => Formula::Not(Box::new(g.map_series(m)?)),
        })
    }

    /// Embeds every series into `target` by variable name.
    pub fn embed_by_name(&self, target: &Arc<Space>) -> Result<Formula> {
        self.map_series(&mut |s| s.embed_by_name(target))
    }

    pub fn eval(&self, x: &Point) -> Result<Tri> {
        Ok(match self {
            Formula::Atom(a) => a.eval(x)?,
            Formula::And(v) => {
                let mut acc = Tri::True;
                for g in v {
                    acc = acc.and(g.eval(x)?);
                    if acc == Tri::False {
                        break;
                    }
                }
                acc
            }
            Formula::Or(v) => {
                let mut acc = Tri::False;
                for g in v {
                    acc = acc.or(g.eval(x)?);
                    if acc == Tri::True {
                        break;
                    }
                }
                acc
            }
            Formula::Not(g) => !g.eval(x)?,
        })
    }

    /// Negation pushed down to the atoms; the result contains no `Not`.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.negate()),
            Formula::And(v) => Formula::Or(v.iter().map(Formula::negate).collect()),
            Formula::Or(v) => Formula::And(v.iter().map(Formula::negate).collect()),
            Formula::Not(g) => g.nnf(),
        }
    }

    /// Negation normal form.
    pub fn nnf(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.clone()),
            Formula::And(v) => Formula::And(v.iter().map(Formula::nnf).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(Formula::nnf).collect()),
            Formula::Not(g) => g.negate(),
        }
    }

    /// Disjunctive normal form by distribution; no conjunct is dropped, so
    /// the output can be exponentially large.
    pub fn to_dnf(&self) -> Vec<BasicConjunct> {
        match self {
            Formula::Atom(a) => vec![vec![a.clone()]],
            Formula::Or(v) => v.iter().flat_map(Formula::to_dnf).collect(),
            Formula::And(v) => {
                let mut acc: Vec<BasicConjunct> = vec![Vec::new()];
                for g in v {
                    let rhs = g.to_dnf();
                    let mut next = Vec::with_capacity(acc.len() * rhs.len());
                    for l in &acc {
                        for r in &rhs {
                            let mut c = l.clone();
                            c.extend(r.iter().cloned());
                            next.push(c);
                        }
                    }
                    acc = next;
                }
                acc
            }
            Formula::Not(g) => g.negate().to_dnf(),
        }
    }

    pub fn from_dnf(dnf: &[BasicConjunct]) -> Formula {
        Formula::Or(
            dnf.iter()
                .map(|c| Formula::And(c.iter().cloned().map(Formula::Atom).collect()))
                .collect(),
        )
    }
}

impl From<Atom> for Formula {
    fn from(a: Atom) -> Formula {
        Formula::Atom(a)
    }
}

fn is_connective(f: &Formula) -> bool {
    matches!(f, Formula::And(v) | Formula::Or(v) if !v.is_empty())
}

fn write_joined(out: &mut fmt::Formatter<'_>, parts: &[Formula], sep: &str) -> fmt::Result {
    for (i, g) in parts.iter().enumerate() {
        if i > 0 {
            out.write_str(sep)?;
        }
        if is_connective(g) {
            write!(out, "({g})")?;
        } else {
            write!(out, "{g}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(out, "{a}"),
            Formula::And(v) if v.is_empty() => out.write_str("true"),
            Formula::Or(v) if v.is_empty() => out.write_str("false"),
            Formula::And(v) => write_joined(out, v, " & "),
            Formula::Or(v) => write_joined(out, v, " | "),
            Formula::Not(g) => write!(out, "!({g})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valued::{frac, int};

    fn line() -> Arc<Space> {
        Space::unit(2, &["T"]).unwrap()
    }

    #[test]
    fn negation_examples() {
        let s = Space::unit(2, &["f", "g"]).unwrap();
        let (f, g) = (Series::var(&s, 0), Series::var(&s, 1));
        let a = Atom::le(f.clone(), g.clone());
        assert_eq!(a.negate(), Atom::lt(g.clone(), f.clone()));
        let z = Atom::eq_zero(f.clone());
        assert_eq!(z.negate(), Atom::nonzero(f.clone()));
        let phi = Formula::Not(Box::new(Formula::Not(Box::new(Formula::Atom(a.clone())))));
        assert_eq!(phi.nnf(), Formula::Atom(a));
    }

    #[test]
    fn dnf_distributes() {
        let s = line();
        let t = Series::var(&s, 0);
        let a = Formula::Atom(Atom::le_const(t.clone(), NormValue::pow_int(-1)));
        let b = Formula::Atom(Atom::le_const(t.clone(), NormValue::pow_int(-2)));
        let c = Formula::Atom(Atom::le_const(t.clone(), NormValue::pow_int(-3)));
        let phi = Formula::And(vec![Formula::Or(vec![a.clone(), b.clone()]), c.clone()]);
        let dnf = phi.to_dnf();
        assert_eq!(dnf.len(), 2);
        assert_eq!(dnf[0].len(), 2);
        assert_eq!(Formula::Atom(dnf[0][0].clone()), a);
        assert_eq!(Formula::Atom(dnf[1][1].clone()), c);
        assert_eq!(a.to_dnf().len(), 1);
    }

    #[test]
    fn contradiction_is_false_everywhere() {
        let s = line();
        let t = Series::var(&s, 0);
        let a = Formula::Atom(Atom::le_const(t, NormValue::pow_int(-1)));
        let phi = Formula::And(vec![a.clone(), Formula::Not(Box::new(a))]);
        let dnf = Formula::from_dnf(&phi.to_dnf());
        for k in 0..6 {
            let x = Point::Rigid(vec![int(1 << k)]);
            assert_eq!(dnf.eval(&x).unwrap(), Tri::False);
            assert_eq!(phi.eval(&x).unwrap(), Tri::False);
        }
    }

    #[test]
    fn evaluation_examples() {
        let s = line();
        let t = Series::var(&s, 0);
        let half = Atom::le_const(t.clone(), NormValue::pow_int(-1));
        assert_eq!(half.eval(&Point::Rigid(vec![int(2)])).unwrap(), Tri::True);
        let eta = Point::Monomial {
            center: vec![int(0)],
            rho: vec![NormValue::pow_frac(-1, 2)],
        };
        assert_eq!(half.eval(&eta).unwrap(), Tri::False);
        let r = NormValue::pow_frac(-1, 2);
        let on_circle = Formula::And(vec![
            Formula::Atom(Atom::le_const(t.clone(), r.clone())),
            Formula::Not(Box::new(Formula::Atom(Atom::new(NormValue::one(), t.clone(), Cmp::Lt, r, Series::one(&s)).unwrap()))),
        ]);
        assert_eq!(on_circle.eval(&eta).unwrap(), Tri::True);
        for (n, d) in [(0, 1), (1, 1), (2, 1), (3, 1), (4, 3), (6, 5)] {
            assert_eq!(on_circle.eval(&Point::Rigid(vec![frac(n, d)])).unwrap(), Tri::False);
        }
    }

    #[test]
    fn tails_give_unknown() {
        let s = line();
        let f = Series::var(&s, 0).with_tail(NormValue::pow_int(-2));
        let a = Atom::le_const(f, NormValue::pow_int(-3));
        // |T(4)| = 2^-2 equals the tail, so nothing is certified
        assert_eq!(a.eval(&Point::Rigid(vec![int(4)])).unwrap(), Tri::Unknown);
        // |T(1)| = 1 dominates the tail
        assert_eq!(a.eval(&Point::Rigid(vec![int(1)])).unwrap(), Tri::False);
    }

    #[test]
    fn printing() {
        let s = Space::unit(2, &["x", "y"]).unwrap();
        let (x, y) = (Series::var(&s, 0), Series::var(&s, 1));
        let f = &(&x * &x) - &y.scale(&int(2));
        let a = Atom::new(NormValue::one(), f, Cmp::Le, NormValue::pow_int(-1), y.clone()).unwrap();
        assert_eq!(a.to_string(), "|x^2 - 2*y| <= 2^-1*|y|");
        let phi = Formula::And(vec![
            Formula::Not(Box::new(Formula::Atom(Atom::lt(x.clone(), y.clone())))),
            Formula::Or(vec![Formula::Atom(Atom::eq_zero(x)), Formula::top()]),
        ]);
        assert_eq!(phi.to_string(), "!(|x| < |y|) & (|x| <= 0*|1| | true)");
    }
}
