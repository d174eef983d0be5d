//! Elimination of one variable: Weierstrass reduction of atoms to
//! polynomials in the pivot, and an exact decision of `∃t ∈ B` for atoms
//! whose polynomials split over the rationals.

pub mod discs;
pub mod lemniscate;

use std::sync::Arc;

use num_traits::Zero;

use crate::automorphism::{make_distinguished, SigmaSpec};
use crate::error::{Error, Result};
use crate::formula::{Atom, BasicConjunct, Cmp, Formula};
use crate::logic::Tri;
use crate::point::Point;
use crate::roots::{split_rational, SplitPoly};
use crate::series::{Series, Space};
use crate::valued::{int, norm_of, NormValue, Scalar};
use crate::weierstrass::weierstrass_prepare_on;

pub use discs::{Disc, DiscRegion};
pub use lemniscate::{atom_region, lemniscate_region, split_norm, SplitAtom};

/// Relative precision `p^{-PREP_PRECISION}` of the preparations.
pub const PREP_PRECISION: i64 = 30;

/// `scale_l·|P| ⋄ scale_r·|Q|` with `P`, `Q` polynomials in the pivot; tails
/// carry the preparation residual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedAtom {
    pub scale_l: NormValue,
    pub p: Series,
    pub cmp: Cmp,
    pub scale_r: NormValue,
    pub q: Series,
}

impl PreparedAtom {
    pub fn as_atom(&self) -> Atom {
        Atom {
            alpha: self.scale_l.clone(),
            f: self.p.clone(),
            cmp: self.cmp,
            beta: self.scale_r.clone(),
            g: self.q.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedConjunct {
    pub sigma: SigmaSpec,
    /// The polydisc the preparations live on.
    pub space: Arc<Space>,
    pub atoms: Vec<PreparedAtom>,
}

impl PreparedConjunct {
    /// The prepared atoms in the original coordinates over `target`, i.e.
    /// composed with `σ^{-1}`.
    pub fn pulled_back(&self, target: &Arc<Space>) -> Result<Vec<Atom>> {
        if (0..target.dim()).any(|i| target.radius(i) > self.space.radius(i)) {
            return Err(Error::Invalid("the prepared atoms only hold on the closed unit polydisc".into()));
        }
        let back = self.sigma.inverted();
        let pivot = Series::var(target, back.pivot);
        let images: Vec<Series> = (0..target.dim())
            .map(|i| {
                let xi = Series::var(target, i);
                if i == back.pivot {
                    xi
                } else {
                    &xi - &pivot.pow(back.exponents[i])
                }
            })
            .collect();
        // on the smaller polydisc most stored terms sink below the tail
        let radii = target.radii();
        let restrict = |s: &Series| -> Result<Series> {
            let small = s.space().with_radii(&radii)?;
            let tail = s.tail().clone();
            let kept = s
                .terms()
                .iter()
                .filter(|(m, c)| tail.is_zero() || &small.mono_norm(m) * &norm_of(small.prime(), c) > tail)
                .map(|(m, c)| (m.clone(), c.clone()));
            Ok(Series::from_terms(&small, kept.collect::<Vec<_>>()).with_tail(tail))
        };
        self.atoms
            .iter()
            .map(|a| a.as_atom().map_series(|s| restrict(s)?.compose(target, &images)))
            .collect()
    }

    pub fn display(&self) -> String {
        let atoms: Vec<String> = self.atoms.iter().map(|a| a.as_atom().to_string()).collect();
        atoms.join(" & ")
    }
}

/// Rewrites every atom of a conjunct over a polydisc of radii above 1 as a
/// comparison of norms of Weierstrass polynomials in `pivot`, after one
/// shared automorphism.
pub fn qe_prepare(conjunct: &[Atom], pivot: usize) -> Result<PreparedConjunct> {
    let Some(first) = conjunct.first() else {
        return Err(Error::Invalid("empty conjunct".into()));
    };
    let space = first.space().clone();
    if space.radii().iter().any(|r| *r <= NormValue::one()) {
        return Err(Error::Invalid("preparation needs every radius above 1".into()));
    }
    let mut series = Vec::new();
    for a in conjunct {
        if *a.space() != space {
            return Err(Error::SpaceMismatch {
                left: a.space().describe(),
                right: space.describe(),
            });
        }
        for s in [&a.f, &a.g] {
            if s.is_stored_zero() {
                return Err(Error::ZeroSeries);
            }
            series.push(s.clone());
        }
    }
    let dist = make_distinguished(&series, pivot)?;
    // σ maps the closed unit polydisc onto itself, and only there must the
    // prepared atoms agree with the original ones
    let unit = dist.space.with_radii(&vec![NormValue::one(); dist.space.dim()])?;
    let mut prepared = Vec::new();
    for (img, cert) in dist.images.iter().zip(&dist.certs) {
        let eps = &img.with_space(&unit)?.norm_bound() * &NormValue::pow_int(-PREP_PRECISION);
        let prep = weierstrass_prepare_on(img, cert, &unit, &eps)?;
        let e_norm = prep.unit_cert.norm();
        let w = prep.w.with_space(&unit)?.widen_tail(&prep.residual.checked_div(&e_norm)?);
        prepared.push((e_norm, w));
    }
    let mut atoms = Vec::new();
    for (i, a) in conjunct.iter().enumerate() {
        let (el, pl) = &prepared[2 * i];
        let (er, pr) = &prepared[2 * i + 1];
        atoms.push(PreparedAtom {
            scale_l: &a.alpha * el,
            p: pl.clone(),
            cmp: a.cmp,
            scale_r: &a.beta * er,
            q: pr.clone(),
        });
    }
    Ok(PreparedConjunct {
        sigma: dist.sigma,
        space: unit,
        atoms,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Sat(Point),
    Unsat,
    Unknown,
}

impl Decision {
    pub fn tri(&self) -> Tri {
        match self {
            Decision::Sat(_) => Tri::True,
            Decision::Unsat => Tri::False,
            Decision::Unknown => Tri::Unknown,
        }
    }
}

/// Whether some point of the closed unit disc inside `extra` satisfies every
/// atom. A witness is rigid when the solution set has a rational point of
/// the form `c + u·p^v`, and otherwise a monomial point.
pub fn decide_exists(atoms: &[SplitAtom], extra: &DiscRegion, p: u64) -> Decision {
    let mut parts = vec![DiscRegion::unit(), extra.clone()];
    parts.extend(atoms.iter().map(|a| atom_region(a, p)));
    let region = DiscRegion::and(parts);
    match region.find_point(p) {
        None => Decision::Unsat,
        Some(x) => {
            let ok = DiscRegion::unit().contains(&x, p)
                && extra.contains(&x, p)
                && atoms.iter().all(|a| a.holds(&x, p));
            if ok {
                Decision::Sat(x)
            } else {
                Decision::Unknown
            }
        }
    }
}

fn univariate_coeffs(f: &Series) -> Vec<Scalar> {
    let deg = f.degree_in(0).unwrap_or(0) as usize;
    let mut c = vec![Scalar::zero(); deg + 1];
    for (m, a) in f.terms() {
        c[m[0] as usize] = a.clone();
    }
    c
}

fn split_series(f: &Series, hints: &[Scalar]) -> Option<SplitPoly> {
    if !f.is_exact() {
        return None;
    }
    if f.is_stored_zero() {
        return Some(SplitPoly::constant(Scalar::zero()));
    }
    split_rational(&univariate_coeffs(f), hints)
}

/// Fixes every variable but `pivot` at `base` (listed in variable order).
fn specialize_at(space: &Arc<Space>, pivot: usize, base: &[Scalar], f: &Series) -> Result<Series> {
    let values: Vec<(usize, Scalar)> = (0..space.dim())
        .filter(|&i| i != pivot)
        .zip(base.iter().cloned())
        .collect();
    f.specialize(&values)
}

/// Membership of a base point in the projection of a conjunct along
/// `pivot` over the closed unit disc. Returns the pivot witness on success.
pub fn project_pointwise(
    space: &Arc<Space>,
    conjunct: &[Atom],
    pivot: usize,
    base: &[Scalar],
    hints: &[Scalar],
) -> Result<(Tri, Option<Point>)> {
    if pivot >= space.dim() || base.len() + 1 != space.dim() {
        return Err(Error::PointDimension {
            expected: space.dim().saturating_sub(1),
            got: base.len(),
        });
    }
    let p = space.prime();
    let base_space = space.without(pivot);
    if Point::Rigid(base.to_vec()).validate(&base_space).is_err() {
        return Ok((Tri::False, None));
    }
    let mut atoms = Vec::new();
    for a in conjunct {
        let f = specialize_at(space, pivot, base, &a.f)?;
        let g = specialize_at(space, pivot, base, &a.g)?;
        match (split_series(&f, hints), split_series(&g, hints)) {
            (Some(lhs), Some(rhs)) => atoms.push(SplitAtom {
                alpha: a.alpha.clone(),
                lhs,
                cmp: a.cmp,
                beta: a.beta.clone(),
                rhs,
            }),
            _ => return Ok((Tri::Unknown, None)),
        }
    }
    Ok(match decide_exists(&atoms, &DiscRegion::Full, p) {
        Decision::Sat(x) => (Tri::True, Some(x)),
        Decision::Unsat => (Tri::False, None),
        Decision::Unknown => (Tri::Unknown, None),
    })
}

/// Rational points `c + u·p^v` and monomial points around a few centers,
/// for atoms that do not split.
fn sample_candidates(p: u64, centers: &[Scalar]) -> Vec<Point> {
    let mut out = Vec::new();
    for c in centers {
        out.push(Point::Rigid(vec![c.clone()]));
        for v in 0..=10u32 {
            let step = num_traits::pow(int(p as i64), v as usize);
            for u in 1..p.min(8) {
                out.push(Point::Rigid(vec![c + &step * int(u as i64)]));
            }
        }
        for k in 0..=20i64 {
            out.push(Point::Monomial {
                center: vec![c.clone()],
                rho: vec![NormValue::pow_frac(-k, 2)],
            });
        }
    }
    out
}

/// Decides `∃ pivot ∈ B: φ` at a base point, for an arbitrary formula: each
/// disjunct of the normal form goes through the split decision, and
/// disjuncts that do not split fall back to sampling, which can only
/// confirm.
pub fn decide_formula(
    formula: &Formula,
    space: &Arc<Space>,
    pivot: usize,
    base: &[Scalar],
    hints: &[Scalar],
) -> Result<Decision> {
    let line = Space::new(space.prime(), vec![space.vars()[pivot].clone()])?;
    let unit_line = line.with_radii(&[NormValue::one()])?;
    let mut unknown = false;
    for conjunct in formula.to_dnf() {
        let (t, w) = project_pointwise(space, &conjunct, pivot, base, hints)?;
        match t {
            Tri::True => return Ok(Decision::Sat(w.expect("witness"))),
            Tri::False => continue,
            Tri::Unknown => {}
        }
        let specialized: BasicConjunct = conjunct
            .iter()
            .map(|a| {
                a.map_series(|s| specialize_at(space, pivot, base, s)?.with_space(&line)?.embed_by_name(&unit_line))
            })
            .collect::<Result<_>>()?;
        let mut centers = vec![Scalar::zero(), int(1), int(-1)];
        centers.extend(hints.iter().cloned());
        let found = sample_candidates(space.prime(), &centers).into_iter().find(|x| {
            x.validate(&unit_line).is_ok()
                && specialized.iter().all(|a| a.eval(x).map(|t| t == Tri::True).unwrap_or(false))
        });
        match found {
            Some(x) => return Ok(Decision::Sat(x)),
            None => unknown = true,
        }
    }
    Ok(if unknown { Decision::Unknown } else { Decision::Unsat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, parse_series};
    use crate::valued::frac;

    fn line2() -> Arc<Space> {
        Space::of(2, &[("T", NormValue::pow_int(1))]).unwrap()
    }

    #[test]
    fn preparation_examples() {
        let s = line2();
        let phi = parse_formula("|T + 2*T^2| <= 2^-1*|1|", &s).unwrap();
        let conj = &phi.to_dnf()[0];
        let prep = qe_prepare(conj, 0).unwrap();
        let a = &prep.atoms[0];
        assert_eq!(a.scale_l, NormValue::one());
        assert_eq!(a.p.to_string(), "T");
        assert_eq!(a.scale_r, NormValue::pow_int(-1));

        let phi = parse_formula("|T^3| <= |1|", &s).unwrap();
        let prep = qe_prepare(&phi.to_dnf()[0], 0).unwrap();
        assert_eq!(prep.atoms[0].p.to_string(), "T^3");
        assert_eq!(prep.atoms[0].scale_l, NormValue::one());
    }

    #[test]
    fn preparation_preserves_truth() {
        let s = line2();
        let unit = Space::unit(2, &["T"]).unwrap();
        let phi = parse_formula("|T^2 + 2*T + 4/3| <= 2^-2*|T - 1/2| & |3*T^3 - T| < |1|", &s).unwrap();
        let conj = &phi.to_dnf()[0];
        let prep = qe_prepare(conj, 0).unwrap();
        let back = prep.pulled_back(&unit).unwrap();
        let orig: Vec<Atom> = conj
            .iter()
            .map(|a| a.map_series(|f| f.with_space(&unit)).unwrap())
            .collect();
        let mut pts: Vec<Point> = (-8..9).map(|n| Point::Rigid(vec![int(n) * int(2)])).collect();
        pts.push(Point::Rigid(vec![frac(1, 3)]));
        pts.push(Point::gauss(&unit));
        pts.push(Point::Monomial {
            center: vec![int(1)],
            rho: vec![NormValue::pow_frac(-3, 2)],
        });
        for x in pts {
            for (a, b) in orig.iter().zip(&back) {
                assert_eq!(a.eval(&x).unwrap(), b.eval(&x).unwrap(), "at {}", x.display(2));
            }
        }
    }

    fn tt2() -> SplitAtom {
        SplitAtom::against_constant(
            SplitPoly {
                lead: int(1),
                roots: vec![(int(0), 1), (int(2), 1)],
            },
            Cmp::Le,
            NormValue::pow_int(-3),
        )
    }

    #[test]
    fn decision_examples() {
        match decide_exists(&[tt2()], &DiscRegion::Full, 2) {
            Decision::Sat(x) => assert!(tt2().holds(&x, 2)),
            other => panic!("{other:?}"),
        }
        let far = DiscRegion::closed(int(1), NormValue::pow_int(-10));
        assert_eq!(decide_exists(&[tt2()], &far, 2), Decision::Unsat);
        let t = SplitAtom::against_constant(
            SplitPoly {
                lead: int(1),
                roots: vec![(int(0), 1)],
            },
            Cmp::Le,
            NormValue::one(),
        );
        assert_eq!(decide_exists(&[t], &DiscRegion::Full, 2), Decision::Sat(Point::Rigid(vec![int(0)])));
    }

    #[test]
    fn projection_examples() {
        let s = Space::unit(2, &["x", "t"]).unwrap();
        let phi = parse_formula("|t*x - x^2| <= 0*|1|", &s).unwrap();
        let conj = &phi.to_dnf()[0];
        let (t, w) = project_pointwise(&s, conj, 1, &[int(2)], &[]).unwrap();
        assert_eq!(t, Tri::True);
        assert_eq!(w, Some(Point::Rigid(vec![int(2)])));
        let (t, _) = project_pointwise(&s, conj, 1, &[frac(1, 2)], &[]).unwrap();
        assert_eq!(t, Tri::False);
        let (t, w) = project_pointwise(&s, &[], 1, &[int(4)], &[]).unwrap();
        assert_eq!(t, Tri::True);
        assert_eq!(w, Some(Point::Rigid(vec![int(0)])));
    }

    #[test]
    fn formulas_with_irrational_roots() {
        let s = Space::unit(2, &["T"]).unwrap();
        // |T^2 - 2| = 2^-1 is attained at T = 2 but T^2 - 2 does not split
        let phi = parse_formula("|T^2 - 2| <= 2^-1*|1| & 2^-1*|1| <= |T^2 - 2|", &s).unwrap();
        match decide_formula(&phi, &s, 0, &[], &[]).unwrap() {
            Decision::Sat(x) => assert_eq!(phi.eval(&x).unwrap(), Tri::True),
            other => panic!("{other:?}"),
        }
        let never = parse_formula("|T^2 - 2| <= 2^-5*|1|", &s).unwrap();
        assert_eq!(decide_formula(&never, &s, 0, &[], &[]).unwrap(), Decision::Unknown);
        let f = parse_series("T^2 - 2", &s).unwrap();
        assert!(split_series(&f, &[]).is_none());
    }
}
