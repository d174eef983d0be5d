//! Regions of the line cut out by norm inequalities between split
//! polynomials.

use num_rational::BigRational;
use num_traits::Zero;

use super::discs::{Disc, DiscRegion};
use crate::formula::Cmp;
use crate::point::Point;
use crate::roots::SplitPoly;
use crate::valued::{norm_of, NormValue, Scalar};

/// `|P|` at a point of the line, from the roots: at `η_{a,ρ}` each factor
/// contributes `max(ρ, |a − α|)`.
pub fn split_norm(poly: &SplitPoly, x: &Point, p: u64) -> NormValue {
    let mut v = norm_of(p, &poly.lead);
    for (a, m) in &poly.roots {
        let d = match x {
            Point::Rigid(c) => norm_of(p, &(&c[0] - a)),
            Point::Monomial { center, rho } => norm_of(p, &(&center[0] - a)).max(rho[0].clone()),
        };
        v = &v * &d.powi(*m);
    }
    v
}

/// `α|P| ⋄ β|Q|` with both sides split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitAtom {
    pub alpha: NormValue,
    pub lhs: SplitPoly,
    pub cmp: Cmp,
    pub beta: NormValue,
    pub rhs: SplitPoly,
}

impl SplitAtom {
    /// `|P| ⋄ c`.
    pub fn against_constant(lhs: SplitPoly, cmp: Cmp, c: NormValue) -> SplitAtom {
        SplitAtom {
            alpha: NormValue::one(),
            lhs,
            cmp,
            beta: c,
            rhs: SplitPoly::constant(Scalar::from_integer(1.into())),
        }
    }

    pub fn holds(&self, x: &Point, p: u64) -> bool {
        let l = &self.alpha * &split_norm(&self.lhs, x, p);
        let r = &self.beta * &split_norm(&self.rhs, x, p);
        compare(&l, self.cmp, &r)
    }
}

fn compare(l: &NormValue, cmp: Cmp, r: &NormValue) -> bool {
    match cmp {
        Cmp::Le => l <= r,
        Cmp::Lt => l < r,
    }
}

fn flip(cmp: Cmp) -> Cmp {
    match cmp {
        Cmp::Le => Cmp::Lt,
        Cmp::Lt => Cmp::Le,
    }
}

/// `|lead|·Π_j max(ρ, d_j)^{m_j}` written as `C·ρ^M` on the stretch of radii
/// just above `lo`.
fn monomial_above(lead: &NormValue, dists: &[(NormValue, u32)], lo: &NormValue) -> (NormValue, u32) {
    let mut c = lead.clone();
    let mut m = 0;
    for (d, k) in dists {
        if d <= lo {
            m += k;
        } else {
            c = &c * &d.powi(*k);
        }
    }
    (c, m)
}

fn root_distances(p: u64, poly: &SplitPoly, center: &Scalar) -> Vec<(NormValue, u32)> {
    poly.roots.iter().map(|(a, m)| (norm_of(p, &(center - a)), *m)).collect()
}

/// The largest `ρ` with `|lead|·Π max(ρ, |α − α_j|)^{m_j} = c`, for a root `α`
/// of `poly` and `c > 0`.
fn critical_radius(poly: &SplitPoly, alpha: &Scalar, c: &NormValue, p: u64) -> NormValue {
    let dists = root_distances(p, poly, alpha);
    let lead = norm_of(p, &poly.lead);
    let mut breaks: Vec<NormValue> = dists.iter().map(|(d, _)| d.clone()).filter(|d| !d.is_zero()).collect();
    breaks.sort();
    breaks.dedup();
    let mut lo = NormValue::Zero;
    for b in breaks.iter().chain(std::iter::once(&NormValue::Zero)) {
        let last = b.is_zero();
        let (coef, m) = monomial_above(&lead, &dists, &lo);
        if last || &coef * &b.powi(m) >= *c {
            let ratio = c.checked_div(&coef).expect("nonzero lead");
            return ratio.pow(&BigRational::new(1.into(), m.into())).expect("positive ratio");
        }
        lo = b.clone();
    }
    unreachable!("the last stretch is unbounded")
}

/// `{t : |P(t)| ⋄ c}` as a union of discs around the roots of `P`.
pub fn lemniscate_region(poly: &SplitPoly, cmp: Cmp, c: &NormValue, p: u64) -> DiscRegion {
    if poly.roots.is_empty() || poly.lead.is_zero() {
        let v = norm_of(p, &poly.lead);
        return if compare(&v, cmp, c) { DiscRegion::Full } else { DiscRegion::Empty };
    }
    let mut discs: Vec<Disc> = Vec::new();
    for (alpha, _) in &poly.roots {
        let disc = match (cmp, c.is_zero()) {
            (Cmp::Le, true) => Disc::closed(alpha.clone(), NormValue::Zero),
            (Cmp::Lt, true) => continue,
            (Cmp::Le, false) => Disc::closed(alpha.clone(), critical_radius(poly, alpha, c, p)),
            (Cmp::Lt, false) => Disc::open(alpha.clone(), critical_radius(poly, alpha, c, p)),
        };
        if !discs.iter().any(|d| d.same_set(&disc, p)) {
            discs.push(disc);
        }
    }
    DiscRegion::or(discs.into_iter().map(DiscRegion::Disc).collect())
}

/// Radii `δ` in the open stretch `(lo, hi)` where `C_L δ^a ⋄ C_R δ^b`, as
/// `(start, start_closed, end, end_closed)`.
type Stretch = (NormValue, bool, Option<NormValue>, bool);

fn solve_stretch(
    (cl, a): &(NormValue, u32),
    cmp: Cmp,
    (cr, b): &(NormValue, u32),
    lo: &NormValue,
    hi: Option<&NormValue>,
) -> Option<Stretch> {
    let all = Some((lo.clone(), false, hi.cloned(), false));
    if cl.is_zero() {
        return match cmp {
            Cmp::Le => all,
            Cmp::Lt => (!cr.is_zero()).then_some(all).flatten(),
        };
    }
    if cr.is_zero() {
        return None;
    }
    let e = *a as i64 - *b as i64;
    if e == 0 {
        return compare(cl, cmp, cr).then_some(all).flatten();
    }
    let ratio = cr.checked_div(cl).expect("nonzero");
    let star = ratio.pow(&BigRational::new(1.into(), e.into())).expect("nonzero");
    let closed = cmp == Cmp::Le;
    if e > 0 {
        // holds below star
        if star <= *lo {
            return None;
        }
        if hi.is_some_and(|h| star >= *h) {
            return all;
        }
        Some((lo.clone(), false, Some(star), closed))
    } else {
        if hi.is_some_and(|h| star >= *h) {
            return None;
        }
        if star <= *lo {
            return all;
        }
        Some((star, closed, hi.cloned(), false))
    }
}

/// `{t : α|P(t)| ⋄ β|Q(t)|}` for split `P`, `Q`.
pub fn atom_region(atom: &SplitAtom, p: u64) -> DiscRegion {
    let lhs_const = atom.lhs.roots.is_empty() || atom.lhs.lead.is_zero();
    let rhs_const = atom.rhs.roots.is_empty() || atom.rhs.lead.is_zero();
    let l0 = &atom.alpha * &norm_of(p, &atom.lhs.lead);
    let r0 = &atom.beta * &norm_of(p, &atom.rhs.lead);
    match (lhs_const, rhs_const) {
        (true, true) => {
            return if compare(&l0, atom.cmp, &r0) { DiscRegion::Full } else { DiscRegion::Empty };
        }
        (false, true) if !l0.is_zero() => {
            let c = r0.checked_div(&l0).expect("nonzero");
            let unit_lead = SplitPoly {
                lead: Scalar::from_integer(1.into()),
                roots: atom.lhs.roots.clone(),
            };
            return lemniscate_region(&unit_lead, atom.cmp, &c, p);
        }
        (true, false) if !r0.is_zero() => {
            // α|a| ⋄ β|Q|  <=>  not (|Q| ⋄' α|a|/β)
            let c = l0.checked_div(&r0).expect("nonzero");
            let unit_lead = SplitPoly {
                lead: Scalar::from_integer(1.into()),
                roots: atom.rhs.roots.clone(),
            };
            return DiscRegion::not(lemniscate_region(&unit_lead, flip(atom.cmp), &c, p));
        }
        _ => {}
    }
    tree_region(atom, p)
}

/// Walks the rays `δ ↦ η_{c,δ}` from every root. Each stretch between
/// consecutive center distances is a monomial comparison whose solution is
/// an annulus; each branch point is a disc minus the open discs below it.
fn tree_region(atom: &SplitAtom, p: u64) -> DiscRegion {
    let mut centers: Vec<Scalar> = Vec::new();
    for (a, _) in atom.lhs.roots.iter().chain(&atom.rhs.roots) {
        if !centers.contains(a) {
            centers.push(a.clone());
        }
    }
    let l_lead = &atom.alpha * &norm_of(p, &atom.lhs.lead);
    let r_lead = &atom.beta * &norm_of(p, &atom.rhs.lead);
    let mut pieces = Vec::new();
    for c in &centers {
        if atom.holds(&Point::Rigid(vec![c.clone()]), p) {
            pieces.push(DiscRegion::closed(c.clone(), NormValue::Zero));
        }
        let ld = root_distances(p, &atom.lhs, c);
        let rd = root_distances(p, &atom.rhs, c);
        let mut breaks: Vec<NormValue> = centers
            .iter()
            .map(|o| norm_of(p, &(c - o)))
            .filter(|d| !d.is_zero())
            .collect();
        breaks.sort();
        breaks.dedup();
        let mut lo = NormValue::Zero;
        for k in 0..=breaks.len() {
            let hi = breaks.get(k);
            let l = monomial_above(&l_lead, &ld, &lo);
            let r = monomial_above(&r_lead, &rd, &lo);
            if let Some((s, sc, e, ec)) = solve_stretch(&l, atom.cmp, &r, &lo, hi) {
                pieces.push(DiscRegion::annulus(c, &s, sc, e.as_ref(), ec));
            }
            if let Some(h) = hi {
                let vertex = Point::Monomial {
                    center: vec![c.clone()],
                    rho: vec![h.clone()],
                };
                if atom.holds(&vertex, p) {
                    let holes: Vec<DiscRegion> = centers
                        .iter()
                        .filter(|o| norm_of(p, &(c - *o)) <= *h)
                        .map(|o| DiscRegion::not(DiscRegion::open(o.clone(), h.clone())))
                        .collect();
                    let mut parts = vec![DiscRegion::closed(c.clone(), h.clone())];
                    parts.extend(holes);
                    pieces.push(DiscRegion::and(parts));
                }
                lo = h.clone();
            }
        }
    }
    DiscRegion::or(pieces)
}
