//! Boolean combinations of closed and open discs of the line, with an exact
//! non-emptiness test.
//!
//! Truth of such a combination at a point only depends on the distances from
//! the point to the finitely many centers. Every point has the same distances
//! as some `η_{c,δ}` with `c` a center, and along the ray `δ ↦ η_{c,δ}` the
//! truth only changes at disc radii and center distances. Scanning those
//! breakpoints and one value inside each gap is therefore exhaustive.

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::point::Point;
use crate::valued::{format_scalar, int, norm_of, NormValue, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disc {
    pub center: Scalar,
    pub radius: NormValue,
    pub closed: bool,
}

impl Disc {
    pub fn closed(center: Scalar, radius: NormValue) -> Disc {
        Disc {
            center,
            radius,
            closed: true,
        }
    }

    pub fn open(center: Scalar, radius: NormValue) -> Disc {
        Disc {
            center,
            radius,
            closed: false,
        }
    }

    /// Whether a point at distance `d` from the center lies in the disc.
    fn holds_at(&self, d: &NormValue) -> bool {
        if self.closed {
            *d <= self.radius
        } else {
            *d < self.radius
        }
    }

    /// Same set as `other`.
    pub fn same_set(&self, other: &Disc, p: u64) -> bool {
        self.closed == other.closed
            && self.radius == other.radius
            && self.holds_at(&norm_of(p, &(&self.center - &other.center)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiscRegion {
    Empty,
    Full,
    Disc(Disc),
    Not(Box<DiscRegion>),
    And(Vec<DiscRegion>),
    Or(Vec<DiscRegion>),
}

/// `|T − c|` at a point of the line.
fn distance(p: u64, x: &Point, c: &Scalar) -> NormValue {
    match x {
        Point::Rigid(a) => norm_of(p, &(&a[0] - c)),
        Point::Monomial { center, rho } => norm_of(p, &(&center[0] - c)).max(rho[0].clone()),
    }
}

impl DiscRegion {
    /// The closed unit disc.
    pub fn unit() -> DiscRegion {
        DiscRegion::Disc(Disc::closed(Scalar::zero(), NormValue::one()))
    }

    pub fn closed(center: Scalar, radius: NormValue) -> DiscRegion {
        DiscRegion::Disc(Disc::closed(center, radius))
    }

    pub fn open(center: Scalar, radius: NormValue) -> DiscRegion {
        DiscRegion::Disc(Disc::open(center, radius))
    }

    /// `{x : a ⋄ |x − c| ⋄ b}`; `hi = None` means no upper bound.
    pub fn annulus(center: &Scalar, lo: &NormValue, lo_closed: bool, hi: Option<&NormValue>, hi_closed: bool) -> DiscRegion {
        let outer = match hi {
            Some(h) => DiscRegion::Disc(Disc {
                center: center.clone(),
                radius: h.clone(),
                closed: hi_closed,
            }),
            None => DiscRegion::Full,
        };
        let inner = if lo.is_zero() && lo_closed {
            DiscRegion::Empty
        } else {
            DiscRegion::Disc(Disc {
                center: center.clone(),
                radius: lo.clone(),
                closed: !lo_closed,
            })
        };
        DiscRegion::and(vec![outer, DiscRegion::not(inner)])
    }

    pub fn not(r: DiscRegion) -> DiscRegion {
        match r {
            DiscRegion::Empty => DiscRegion::Full,
            DiscRegion::Full => DiscRegion::Empty,
            DiscRegion::Not(inner) => *inner,
            other => DiscRegion::Not(Box::new(other)),
        }
    }

    pub fn and(parts: Vec<DiscRegion>) -> DiscRegion {
        let mut out = Vec::new();
        for r in parts {
            match r {
                DiscRegion::Full => {}
                DiscRegion::Empty => return DiscRegion::Empty,
                DiscRegion::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => DiscRegion::Full,
            1 => out.pop().expect("one"),
            _ => DiscRegion::And(out),
        }
    }

    pub fn or(parts: Vec<DiscRegion>) -> DiscRegion {
        let mut out = Vec::new();
        for r in parts {
            match r {
                DiscRegion::Empty => {}
                DiscRegion::Full => return DiscRegion::Full,
                DiscRegion::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => DiscRegion::Empty,
            1 => out.pop().expect("one"),
            _ => DiscRegion::Or(out),
        }
    }

    /// Membership of a rigid or monomial point of the line.
    pub fn contains(&self, x: &Point, p: u64) -> bool {
        self.eval(&mut |c| distance(p, x, c))
    }

    fn eval(&self, dist: &mut impl FnMut(&Scalar) -> NormValue) -> bool {
        match self {
            DiscRegion::Empty => false,
            DiscRegion::Full => true,
            DiscRegion::Disc(d) => d.holds_at(&dist(&d.center)),
            DiscRegion::Not(r) => !r.eval(dist),
            DiscRegion::And(v) => v.iter().all(|r| r.eval(dist)),
            DiscRegion::Or(v) => v.iter().any(|r| r.eval(dist)),
        }
    }

    fn collect(&self, centers: &mut Vec<Scalar>, radii: &mut Vec<NormValue>) {
        match self {
            DiscRegion::Empty | DiscRegion::Full => {}
            DiscRegion::Disc(d) => {
                if !centers.contains(&d.center) {
                    centers.push(d.center.clone());
                }
                if !d.radius.is_zero() && !radii.contains(&d.radius) {
                    radii.push(d.radius.clone());
                }
            }
            DiscRegion::Not(r) => r.collect(centers, radii),
            DiscRegion::And(v) | DiscRegion::Or(v) => v.iter().for_each(|r| r.collect(centers, radii)),
        }
    }

    /// A point of the region, preferring rigid rational points; `None`
    /// exactly when the region is empty.
    pub fn find_point(&self, p: u64) -> Option<Point> {
        let mut centers = vec![Scalar::zero()];
        let mut radii = Vec::new();
        self.collect(&mut centers, &mut radii);
        let n = centers.len();
        let dist: Vec<Vec<NormValue>> = centers
            .iter()
            .map(|a| centers.iter().map(|b| norm_of(p, &(a - b))).collect())
            .collect();
        let index = |c: &Scalar| centers.iter().position(|x| x == c).expect("collected");
        let mut monomial = None;
        for k in 0..n {
            let mut breaks: Vec<NormValue> = radii.clone();
            breaks.extend(dist[k].iter().filter(|d| !d.is_zero()).cloned());
            breaks.sort();
            breaks.dedup();
            // the point on the ray from c_k at distance δ
            let at = |delta: &NormValue| {
                let mut f = |c: &Scalar| dist[k][index(c)].clone().max(delta.clone());
                self.eval(&mut f)
            };
            if at(&NormValue::Zero) {
                return Some(Point::Rigid(vec![centers[k].clone()]));
            }
            for delta in ray_samples(&breaks) {
                if !at(&delta) {
                    continue;
                }
                for r in integral_neighbours(&delta) {
                    if let Some(x) = rigid_on_sphere(&centers[k], &r, p, &mut |x| self.contains(x, p)) {
                        return Some(x);
                    }
                }
                if monomial.is_none() {
                    monomial = Some(Point::Monomial {
                        center: vec![centers[k].clone()],
                        rho: vec![delta],
                    });
                }
            }
        }
        monomial
    }

    pub fn is_empty(&self, p: u64) -> bool {
        self.find_point(p).is_none()
    }

    pub fn display(&self, p: u64) -> String {
        match self {
            DiscRegion::Empty => "empty".into(),
            DiscRegion::Full => "all".into(),
            DiscRegion::Disc(d) => {
                let (l, r) = if d.closed { ('[', ']') } else { ('(', ')') };
                format!("D{l}{}, {}{r}", format_scalar(&d.center), d.radius.display(p))
            }
            DiscRegion::Not(r) => format!("!{}", r.display_nested(p)),
            DiscRegion::And(v) => v.iter().map(|r| r.display_nested(p)).collect::<Vec<_>>().join(" & "),
            DiscRegion::Or(v) => v.iter().map(|r| r.display_nested(p)).collect::<Vec<_>>().join(" | "),
        }
    }

    fn display_nested(&self, p: u64) -> String {
        match self {
            DiscRegion::And(_) | DiscRegion::Or(_) => format!("({})", self.display(p)),
            _ => self.display(p),
        }
    }
}

/// Breakpoints, the geometric midpoints between them, and one radius beyond
/// each end.
fn ray_samples(breaks: &[NormValue]) -> Vec<NormValue> {
    let pv = NormValue::pow_int(1);
    let mut out = Vec::new();
    match (breaks.first(), breaks.last()) {
        (Some(lo), Some(hi)) => {
            out.push(lo.checked_div(&pv).expect("nonzero"));
            for w in breaks.windows(2) {
                out.push(w[0].clone());
                let (a, b) = (w[0].exponent().expect("nonzero"), w[1].exponent().expect("nonzero"));
                out.push(NormValue::Pow((a + b) / int(2)));
            }
            out.push(hi.clone());
            out.push(hi * &pv);
        }
        _ => out.push(NormValue::one()),
    }
    out
}

/// `delta` itself when it is an integral power of `p`, else the two integral
/// powers around it.
fn integral_neighbours(delta: &NormValue) -> Vec<NormValue> {
    let Some(e) = delta.exponent() else {
        return Vec::new();
    };
    if e.is_integer() {
        return vec![delta.clone()];
    }
    vec![NormValue::Pow(e.floor()), NormValue::Pow(e.ceil())]
}

/// A rational point `c + u·p^v` at distance `delta` from `c` lying in the
/// region, when `delta` is an integral power of `p`.
fn rigid_on_sphere(c: &Scalar, delta: &NormValue, p: u64, inside: &mut impl FnMut(&Point) -> bool) -> Option<Point> {
    let e = delta.exponent()?;
    if !e.is_integer() {
        return None;
    }
    let v = -e.to_integer();
    let v: i32 = v.try_into().ok()?;
    let step = num_traits::pow(BigRational::from_integer(p.into()), v.unsigned_abs() as usize);
    let step = if v >= 0 { step } else { step.recip() };
    // one representative per nonzero residue class
    (1..p.min(64))
        .map(|u| Point::Rigid(vec![c + &step * BigRational::from_integer(u.into())]))
        .find(|x| inside(x))
}

impl fmt::Display for Disc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", DiscRegion::Disc(self.clone()).display(0))
    }
}
