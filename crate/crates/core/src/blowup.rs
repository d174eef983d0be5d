//! The two charts of the blow-up of a point of a two-dimensional polydisc,
//! and the bookkeeping that moves series between them.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::series::{Series, Space, VarSpec};
use crate::valued::{norm_of, NormValue, Scalar};
use crate::weierstrass::{certify_unit, UnitCertificate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartIndex {
    /// `(x, t1) ↦ (x, t1·x)`
    One,
    /// `(y, t2) ↦ (t2·y, y)`
    Two,
}

impl ChartIndex {
    pub fn from_number(n: u32) -> Result<ChartIndex> {
        match n {
            1 => Ok(ChartIndex::One),
            2 => Ok(ChartIndex::Two),
            _ => Err(Error::Invalid(format!("chart index must be 1 or 2, got {n}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub index: ChartIndex,
    /// The blown-up point, in source coordinates.
    pub center: Vec<Scalar>,
    pub source: Arc<Space>,
    pub target: Arc<Space>,
}

impl Chart {
    /// Chart 1 has variables `(x, t1)`, chart 2 has `(y, t2)`, where `x`, `y`
    /// are the source variables; the new variable has radius 1.
    pub fn new(source: &Arc<Space>, index: ChartIndex, center: Vec<Scalar>) -> Result<Chart> {
        if source.dim() != 2 {
            return Err(Error::Invalid(format!(
                "blow-up needs two variables, got {}",
                source.describe()
            )));
        }
        if center.len() != 2 {
            return Err(Error::PointDimension {
                expected: 2,
                got: center.len(),
            });
        }
        for (i, a) in center.iter().enumerate() {
            if norm_of(source.prime(), a) > *source.radius(i) {
                return Err(Error::OutsidePolydisc(format!("blow-up center in `{}`", source.name(i))));
            }
        }
        let (kept, stem) = match index {
            ChartIndex::One => (0, "t1"),
            ChartIndex::Two => (1, "t2"),
        };
        let name = if source.index_of(stem).is_some() {
            crate::constructible::fresh_chart_name(source, stem)
        } else {
            stem.to_string()
        };
        let target = Space::new(
            source.prime(),
            vec![source.vars()[kept].clone(), VarSpec::new(name, NormValue::one())],
        )?;
        Ok(Chart {
            index,
            center,
            source: source.clone(),
            target,
        })
    }

    /// The chart map on rigid points: chart coordinates to source coordinates.
    pub fn map_point(&self, q: &[Scalar]) -> Result<Vec<Scalar>> {
        if q.len() != 2 {
            return Err(Error::PointDimension {
                expected: 2,
                got: q.len(),
            });
        }
        let (u, t) = (&q[0], &q[1]);
        let (a, b) = (&self.center[0], &self.center[1]);
        Ok(match self.index {
            ChartIndex::One => vec![a + u, b + t * u],
            ChartIndex::Two => vec![a + t * u, b + u],
        })
    }

    /// The chart map as series over the target.
    pub fn images(&self) -> Vec<Series> {
        let u = Series::var(&self.target, 0);
        let t = Series::var(&self.target, 1);
        let a = Series::constant(&self.target, self.center[0].clone());
        let b = Series::constant(&self.target, self.center[1].clone());
        let tu = &t * &u;
        match self.index {
            ChartIndex::One => vec![&a + &u, &b + &tu],
            ChartIndex::Two => vec![&a + &tu, &b + &u],
        }
    }
}

/// `h ∘ π` for the chart map `π`.
pub fn pullback_chart(h: &Series, chart: &Chart) -> Result<Series> {
    if *h.space() != chart.source {
        return Err(Error::SpaceMismatch {
            left: h.space().describe(),
            right: chart.source.describe(),
        });
    }
    h.compose(&chart.target, &chart.images())
}

/// `h = x^b·h̃` with `b` maximal, `x` being the first variable.
pub fn factor_x_power(h: &Series) -> Result<(u32, Series)> {
    if !h.is_exact() {
        return Err(Error::Invalid("x-power factoring needs an exact series".into()));
    }
    let Some(b) = h.terms().keys().map(|m| m[0]).min() else {
        return Err(Error::ZeroSeries);
    };
    let rest = Series::from_terms(
        h.space(),
        h.terms().iter().map(|(m, c)| {
            let mut m = m.clone();
            m[0] -= b;
            (m, c.clone())
        }),
    );
    Ok((b, rest))
}

/// For `P` polynomial in the second variable `t` over `(x, t)`, returns
/// `M = deg_t P` and `P̃` over `(x, y)` with `x^M·P = P̃(x, t·x)`.
pub fn pushdown_poly(p: &Series, y_name: &str) -> Result<(u32, Series)> {
    let space = p.space();
    if space.dim() != 2 {
        return Err(Error::Invalid(format!(
            "push-down needs two variables, got {}",
            space.describe()
        )));
    }
    if !p.is_exact() {
        return Err(Error::NotPolynomial(space.name(1).to_string()));
    }
    let m = p.degree_in(1).unwrap_or(0);
    let y_radius = space.radius(0) * space.radius(1);
    let base = Space::new(
        space.prime(),
        vec![space.vars()[0].clone(), VarSpec::new(y_name, y_radius)],
    )?;
    let out = Series::from_terms(
        &base,
        p.terms().iter().map(|(mono, c)| (vec![mono[0] + m - mono[1], mono[1]], c.clone())),
    );
    Ok((m, out))
}

/// `(x, t1) ↦ (y, t2) = (x·t1, 1/t1)` on the overlap `|t1| = 1`.
pub fn chart_transition(pt: &[Scalar], p: u64) -> Result<Vec<Scalar>> {
    if pt.len() != 2 {
        return Err(Error::PointDimension {
            expected: 2,
            got: pt.len(),
        });
    }
    let t = &pt[1];
    if t.is_zero() || norm_of(p, t) != NormValue::one() {
        return Err(Error::TransitionDomain);
    }
    Ok(vec![&pt[0] * t, t.recip()])
}

/// `u·ξ1^a·ξ2^b` with `u` a certified unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialUnitForm {
    pub unit: UnitCertificate,
    pub exponents: (u32, u32),
}

impl MonomialUnitForm {
    /// Splits off the largest monomial dividing an exact two-variable series;
    /// `None` when the cofactor is not a unit on the polydisc.
    pub fn of(h: &Series) -> Option<MonomialUnitForm> {
        if h.space().dim() != 2 || !h.is_exact() {
            return None;
        }
        let a = h.terms().keys().map(|m| m[0]).min()?;
        let b = h.terms().keys().map(|m| m[1]).min()?;
        let u = Series::from_terms(
            h.space(),
            h.terms().iter().map(|(m, c)| (vec![m[0] - a, m[1] - b], c.clone())),
        );
        certify_unit(&u).map(|unit| MonomialUnitForm { unit, exponents: (a, b) })
    }

    pub fn series(&self) -> Series {
        let (a, b) = self.exponents;
        self.unit.unit().shift(&[a, b])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divisibility {
    FDividesG,
    GDividesF,
    Both,
    Neither,
}

impl std::fmt::Display for Divisibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Divisibility::FDividesG => "F_divides_G",
            Divisibility::GDividesF => "G_divides_F",
            Divisibility::Both => "both",
            Divisibility::Neither => "neither",
        })
    }
}

pub fn local_divisibility(f: &MonomialUnitForm, g: &MonomialUnitForm) -> Divisibility {
    let (fa, fb) = f.exponents;
    let (ga, gb) = g.exponents;
    match (fa <= ga && fb <= gb, ga <= fa && gb <= fb) {
        (true, true) => Divisibility::Both,
        (true, false) => Divisibility::FDividesG,
        (false, true) => Divisibility::GDividesF,
        (false, false) => Divisibility::Neither,
    }
}
