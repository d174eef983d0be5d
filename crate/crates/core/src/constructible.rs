//! Chains of chart extensions `t = f/g` with norm constraints, finite unions
//! of them, their boolean operations, and membership at rigid points.
//!
//! A function on a chart is stored as a lift to the ambient polydisc plus
//! the chart variable. Membership only ever substitutes the chart value
//! `t = f(x)/g(x)`, which kills the relation `f − t·g`, so the choice of lift
//! never matters.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formula::{Atom, Cmp, Formula};
use crate::logic::Tri;
use crate::point::{Estimate, Point};
use crate::series::{Series, Space, VarSpec};
use crate::valued::{norm_of, NormValue, Scalar};

/// One chart extension over an ambient space `A`: the new variable `t` of
/// radius `r` satisfies `f = t·g`, and the datum keeps the points with
/// `g ≠ 0`, `|f| ≤ s|g|` and `region(x, t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryDatum {
    pub f: Series,
    pub g: Series,
    pub r: NormValue,
    pub s: NormValue,
    /// Formula over `A ⊕ {t}`.
    pub region: Formula,
    pub chart: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatumChain {
    base: Arc<Space>,
    base_region: Formula,
    links: Vec<ElementaryDatum>,
}

/// `t1, t2, ...` avoiding the names already in `space`.
pub fn fresh_chart_name(space: &Space, stem: &str) -> String {
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|n| space.index_of(n).is_none())
        .expect("unbounded")
}

fn check_region(region: &Formula, space: &Arc<Space>) -> Result<()> {
    for a in region.atoms() {
        if a.space() != space {
            return Err(Error::SpaceMismatch {
                left: a.space().describe(),
                right: space.describe(),
            });
        }
    }
    Ok(())
}

fn constant_false(f: &Formula) -> bool {
    fn truth(f: &Formula) -> Option<bool> {
        match f {
            Formula::Atom(a) => a.constant_truth(),
            Formula::And(v) => {
                let mut all = true;
                for g in v {
                    match truth(g) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all = false,
                    }
                }
                all.then_some(true)
            }
            Formula::Or(v) => {
                let mut none = true;
                for g in v {
                    match truth(g) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => none = false,
                    }
                }
                none.then_some(false)
            }
            Formula::Not(g) => truth(g).map(|b| !b),
        }
    }
    truth(f) == Some(false)
}

fn estimate_at(f: &Series, coords: &[Scalar]) -> Estimate {
    Estimate {
        value: norm_of(f.prime(), &f.eval_unchecked(coords)),
        uncertainty: f.tail().clone(),
    }
}

impl DatumChain {
    /// The chain of complexity zero: the semianalytic set `region` itself.
    pub fn identity(base: &Arc<Space>, region: Formula) -> Result<DatumChain> {
        check_region(&region, base)?;
        Ok(DatumChain {
            base: base.clone(),
            base_region: region,
            links: Vec::new(),
        })
    }

    pub fn base(&self) -> &Arc<Space> {
        &self.base
    }

    pub fn base_region(&self) -> &Formula {
        &self.base_region
    }

    pub fn links(&self) -> &[ElementaryDatum] {
        &self.links
    }

    pub fn complexity(&self) -> usize {
        self.links.len()
    }

    /// Base plus the first `i` chart variables.
    pub fn ambient(&self, i: usize) -> Arc<Space> {
        let mut vars = self.base.vars().to_vec();
        for l in &self.links[..i] {
            vars.push(VarSpec::new(l.chart.clone(), l.r.clone()));
        }
        Space::new(self.base.prime(), vars).expect("chart names are distinct")
    }

    pub fn full_ambient(&self) -> Arc<Space> {
        self.ambient(self.links.len())
    }

    /// Appends a link whose `f` and `g` live over the current full ambient
    /// space and whose region lives over that space plus `chart`.
    pub fn push_link(&mut self, link: ElementaryDatum) -> Result<()> {
        let amb = self.full_ambient();
        let p = amb.prime();
        if !(NormValue::Zero < link.s && link.s < link.r) {
            return Err(Error::DatumRadii(format!(
                "s = {}, r = {}",
                link.s.display(p),
                link.r.display(p)
            )));
        }
        if *link.f.space() != amb || *link.g.space() != amb {
            return Err(Error::SpaceMismatch {
                left: link.f.space().describe(),
                right: amb.describe(),
            });
        }
        let ext = amb.extended(VarSpec::new(link.chart.clone(), link.r.clone()))?;
        check_region(&link.region, &ext)?;
        self.links.push(link);
        Ok(())
    }

    /// Builds a link over the current ambient space with a fresh chart name.
    pub fn push(&mut self, f: Series, g: Series, r: NormValue, s: NormValue, region: Formula) -> Result<()> {
        let chart = fresh_chart_name(&self.full_ambient(), "t");
        self.push_link(ElementaryDatum {
            f,
            g,
            r,
            s,
            region,
            chart,
        })
    }

    /// Obviously empty because some region is constantly false.
    pub fn is_trivially_empty(&self) -> bool {
        constant_false(&self.base_region) || self.links.iter().any(|l| constant_false(&l.region))
    }

    /// Membership of a rigid point of the base.
    pub fn membership(&self, x: &Point) -> Result<Tri> {
        let Point::Rigid(coords) = x else {
            return Err(Error::NonRigidPoint);
        };
        x.validate(&self.base)?;
        let mut acc = self.base_region.eval(x)?;
        if acc == Tri::False {
            return Ok(Tri::False);
        }
        let mut coords = coords.clone();
        for link in &self.links {
            let ef = estimate_at(&link.f, &coords);
            let eg = estimate_at(&link.g, &coords);
            let one = NormValue::one();
            let nonzero = Atom::new(NormValue::Zero, Series::one(link.f.space()), Cmp::Lt, one.clone(), link.g.clone())?;
            let bound = Atom::new(one, link.f.clone(), Cmp::Le, link.s.clone(), link.g.clone())?;
            let gate = compare(&nonzero, &Estimate::exact(NormValue::one()), &eg)
                .and(compare(&bound, &ef, &eg));
            if gate == Tri::False {
                return Ok(Tri::False);
            }
            if !(link.f.is_exact() && link.g.is_exact()) {
                // the chart value is not known exactly past this point
                return Ok(acc.and(Tri::Unknown));
            }
            acc = acc.and(gate);
            let t = link.f.eval_unchecked(&coords) / link.g.eval_unchecked(&coords);
            coords.push(t);
            let here = Point::Rigid(coords.clone());
            acc = acc.and(link.region.eval(&here)?);
            if acc == Tri::False {
                return Ok(Tri::False);
            }
        }
        Ok(acc)
    }

    /// The chain obtained by following `self` and then `other`, whose chart
    /// variables are renamed when they clash.
    pub fn concat(&self, other: &DatumChain) -> Result<DatumChain> {
        if self.base != other.base {
            return Err(Error::SpaceMismatch {
                left: self.base.describe(),
                right: other.base.describe(),
            });
        }
        let mut out = self.clone();
        out.base_region = Formula::conj(vec![self.base_region.clone(), other.base_region.clone()]);
        let n = self.base.dim();
        let k = self.links.len();
        for (j, link) in other.links.iter().enumerate() {
            let amb = out.full_ambient();
            let chart = if amb.index_of(&link.chart).is_some() {
                fresh_chart_name(&amb, "t")
            } else {
                link.chart.clone()
            };
            // variables of other's ambient_j: base, then its charts 1..j
            let positions: Vec<usize> = (0..n).chain((0..j).map(|i| n + k + i)).collect();
            let ext = amb.extended(VarSpec::new(chart.clone(), link.r.clone()))?;
            let mut ext_pos = positions.clone();
            ext_pos.push(n + k + j);
            let region = link.region.map_series(&mut |s| s.embed(&ext, &ext_pos))?;
            out.push_link(ElementaryDatum {
                f: link.f.embed(&amb, &positions)?,
                g: link.g.embed(&amb, &positions)?,
                r: link.r.clone(),
                s: link.s.clone(),
                region,
                chart,
            })?;
        }
        Ok(out)
    }

    /// The complement of the image of this chain, as a union of chains.
    pub fn complement(&self) -> Result<Vec<DatumChain>> {
        let base = &self.base;
        if self.links.is_empty() {
            let neg = self.base_region.negate();
            let c = DatumChain::identity(base, neg)?;
            return Ok(if c.is_trivially_empty() { Vec::new() } else { vec![c] });
        }
        let first = &self.links[0];
        let x1 = self.ambient(1);
        let r0 = self.base_region.embed_by_name(&x1)?;
        let r1 = Formula::conj(vec![r0, first.region.clone()]);

        // the rest of the chain as a chain over X ⊕ t1
        let rest = DatumChain {
            base: x1.clone(),
            base_region: Formula::top(),
            links: self.links[1..].to_vec(),
        };
        let mut out = Vec::new();
        for d in rest.complement()? {
            let mut c = DatumChain::identity(base, Formula::top())?;
            c.push_link(ElementaryDatum {
                region: Formula::conj(vec![r1.clone(), d.base_region.clone()]),
                ..first.clone()
            })?;
            for l in d.links {
                c.push_link(l)?;
            }
            out.push(c);
        }
        let mut outside_region = DatumChain::identity(base, Formula::top())?;
        outside_region.push_link(ElementaryDatum {
            region: r1.negate(),
            ..first.clone()
        })?;
        out.push(outside_region);
        let one = Series::one(base);
        out.push(DatumChain::identity(
            base,
            Formula::Atom(Atom::new(first.s.clone(), first.g.clone(), Cmp::Lt, NormValue::one(), first.f.clone())?),
        )?);
        out.push(DatumChain::identity(
            base,
            Formula::Atom(Atom::new(NormValue::one(), first.g.clone(), Cmp::Le, NormValue::Zero, one)?),
        )?);
        out.retain(|c| !c.is_trivially_empty());
        Ok(out)
    }
}

fn compare(atom: &Atom, ef: &Estimate, eg: &Estimate) -> Tri {
    let (lo_l, hi_l) = (&atom.alpha * &ef.lower(), &atom.alpha * &ef.upper());
    let (lo_r, hi_r) = (&atom.beta * &eg.lower(), &atom.beta * &eg.upper());
    match atom.cmp {
        Cmp::Le if hi_l <= lo_r => Tri::True,
        Cmp::Le if lo_l > hi_r => Tri::False,
        Cmp::Lt if hi_l < lo_r => Tri::True,
        Cmp::Lt if lo_l >= hi_r => Tri::False,
        _ => Tri::Unknown,
    }
}

/// A finite union of chains over one base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructibleSet {
    base: Arc<Space>,
    chains: Vec<DatumChain>,
}

impl ConstructibleSet {
    pub fn new(base: &Arc<Space>, chains: Vec<DatumChain>) -> Result<ConstructibleSet> {
        for c in &chains {
            if c.base != *base {
                return Err(Error::SpaceMismatch {
                    left: c.base.describe(),
                    right: base.describe(),
                });
            }
        }
        Ok(ConstructibleSet {
            base: base.clone(),
            chains,
        })
    }

    pub fn empty(base: &Arc<Space>) -> ConstructibleSet {
        ConstructibleSet {
            base: base.clone(),
            chains: Vec::new(),
        }
    }

    pub fn full(base: &Arc<Space>) -> ConstructibleSet {
        ConstructibleSet {
            base: base.clone(),
            chains: vec![DatumChain::identity(base, Formula::top()).expect("no atoms")],
        }
    }

    pub fn from_chain(chain: DatumChain) -> ConstructibleSet {
        ConstructibleSet {
            base: chain.base.clone(),
            chains: vec![chain],
        }
    }

    pub fn base(&self) -> &Arc<Space> {
        &self.base
    }

    pub fn chains(&self) -> &[DatumChain] {
        &self.chains
    }

    pub fn membership(&self, x: &Point) -> Result<Tri> {
        let mut acc = Tri::False;
        for c in &self.chains {
            acc = acc.or(c.membership(x)?);
            if acc == Tri::True {
                break;
            }
        }
        if self.chains.is_empty() {
            x.validate(&self.base)?;
            if !x.is_rigid() {
                return Err(Error::NonRigidPoint);
            }
        }
        Ok(acc)
    }

    fn check_base(&self, other: &ConstructibleSet) -> Result<()> {
        if self.base != other.base {
            return Err(Error::SpaceMismatch {
                left: self.base.describe(),
                right: other.base.describe(),
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &ConstructibleSet) -> Result<ConstructibleSet> {
        self.check_base(other)?;
        let mut chains = self.chains.clone();
        chains.extend(other.chains.iter().cloned());
        Ok(ConstructibleSet {
            base: self.base.clone(),
            chains,
        }
        .normalized())
    }

    pub fn intersect(&self, other: &ConstructibleSet) -> Result<ConstructibleSet> {
        self.check_base(other)?;
        let mut chains = Vec::new();
        for a in &self.chains {
            for b in &other.chains {
                let c = a.concat(b)?;
                if !c.is_trivially_empty() {
                    chains.push(c);
                }
            }
        }
        Ok(ConstructibleSet {
            base: self.base.clone(),
            chains,
        }
        .normalized())
    }

    pub fn complement(&self) -> Result<ConstructibleSet> {
        let mut acc = ConstructibleSet::full(&self.base);
        for c in &self.chains {
            let comp = ConstructibleSet {
                base: self.base.clone(),
                chains: c.complement()?,
            };
            acc = acc.intersect(&comp)?;
        }
        Ok(acc)
    }

    /// Merges the chains of complexity zero into one and drops chains that
    /// are obviously empty.
    pub fn normalized(self) -> ConstructibleSet {
        let mut regions = Vec::new();
        let mut chains = Vec::new();
        for c in self.chains {
            if c.is_trivially_empty() {
                continue;
            }
            if c.links.is_empty() {
                regions.push(c.base_region);
            } else {
                chains.push(c);
            }
        }
        if !regions.is_empty() {
            let region = if regions.len() == 1 {
                regions.pop().expect("one")
            } else {
                Formula::Or(regions)
            };
            chains.insert(
                0,
                DatumChain {
                    base: self.base.clone(),
                    base_region: region,
                    links: Vec::new(),
                },
            );
        }
        ConstructibleSet {
            base: self.base,
            chains,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divisibility {
    /// `f = g·h`
    GDividesF,
    /// `g = f·h`
    FDividesG,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    /// `{|h| ≤ r}`
    Weierstrass,
    /// `{|h| ≥ 1/r}`
    Laurent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplifiedDatum {
    pub kind: DomainKind,
    /// The rational domain containing the rewritten chart.
    pub domain: Formula,
    pub datum: ElementaryDatum,
}

/// Rewrites a datum whose `f`, `g` satisfy a divisibility relation through
/// the cofactor `h`, so that its chart becomes a Weierstrass or Laurent
/// domain with the same image.
pub fn simplify_divisible(d: &ElementaryDatum, h: &Series, case: Divisibility) -> Result<SimplifiedDatum> {
    let amb = d.f.space().clone();
    if !(d.f.is_exact() && d.g.is_exact() && h.is_exact()) {
        return Err(Error::IdentityFails("tails must be zero".into()));
    }
    let (lhs, rhs) = match case {
        Divisibility::GDividesF => (&d.f, d.g.checked_mul(h)?),
        Divisibility::FDividesG => (&d.g, d.f.checked_mul(h)?),
    };
    if *lhs != rhs {
        return Err(Error::IdentityFails(format!("{lhs} != {rhs}")));
    }
    let ext = amb.extended(VarSpec::new(d.chart.clone(), d.r.clone()))?;
    let g_ext = d.g.embed_by_name(&ext)?;
    let region = Formula::conj(vec![d.region.clone(), Formula::Atom(Atom::nonzero(g_ext))]);
    let one = Series::one(&amb);
    let (kind, domain, f, g) = match case {
        Divisibility::GDividesF => (
            DomainKind::Weierstrass,
            Atom::le_const(h.clone(), d.r.clone()),
            h.clone(),
            one.clone(),
        ),
        Divisibility::FDividesG => (
            DomainKind::Laurent,
            Atom::new(NormValue::one(), one.clone(), Cmp::Le, d.r.clone(), h.clone())?,
            one,
            h.clone(),
        ),
    };
    Ok(SimplifiedDatum {
        kind,
        domain: Formula::Atom(domain),
        datum: ElementaryDatum {
            f,
            g,
            r: d.r.clone(),
            s: d.s.clone(),
            region,
            chart: d.chart.clone(),
        },
    })
}

/// The chain realizing `{|f_i| ≤ s_i|g|, g ≠ 0 for all i}` inside
/// `{|f_i| ≤ r_i|g|}`, one link per `f_i`, with `r_i/2 < s_i < r_i`.
pub fn neighborhood_datum(
    base: &Arc<Space>,
    fs: &[Series],
    g: &Series,
    r: &[NormValue],
    s: &[NormValue],
) -> Result<DatumChain> {
    let p = base.prime();
    if fs.len() != r.len() || fs.len() != s.len() {
        return Err(Error::Invalid("one radius pair per function".into()));
    }
    let mut chain = DatumChain::identity(base, Formula::top())?;
    for ((f, ri), si) in fs.iter().zip(r).zip(s) {
        let ratio = si.checked_div(ri)?;
        if !(si < ri && ratio.exceeds_half(p)) {
            return Err(Error::DatumRadii(format!(
                "need r/2 < s < r, got s = {}, r = {}",
                si.display(p),
                ri.display(p)
            )));
        }
        let amb = chain.full_ambient();
        chain.push(
            f.embed_by_name(&amb)?,
            g.embed_by_name(&amb)?,
            ri.clone(),
            si.clone(),
            Formula::top(),
        )?;
    }
    Ok(chain)
}
