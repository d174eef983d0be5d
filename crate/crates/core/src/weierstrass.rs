//! Multiplicative units, distinguished series, and Weierstrass division and
//! preparation with certified residuals.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::roots::rational_factor;
use crate::series::{Series, Space};
use crate::valued::{norm_of, round_to, NormValue, Scalar};

/// Certifies `u = c·(1 + w)` with `‖w‖ < 1` (tail included), which makes `u`
/// a multiplicative unit of norm `|c|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitCertificate {
    pub c: Scalar,
    pub w: Series,
}

impl UnitCertificate {
    pub fn norm(&self) -> NormValue {
        norm_of(self.w.prime(), &self.c)
    }

    /// The certified unit `c·(1 + w)`.
    pub fn unit(&self) -> Series {
        (&Series::one(self.w.space()) + &self.w).scale(&self.c)
    }
}

pub fn certify_unit(u: &Series) -> Option<UnitCertificate> {
    let c = u.constant_term();
    if c.is_zero() {
        return None;
    }
    let w = &u.scale(&c.recip()) - &Series::one(u.space());
    (w.norm_bound() < NormValue::one()).then_some(UnitCertificate { c, w })
}

/// Smallest `n ≥ 1` with `W^n ≤ eps`, for `0 < W < 1`.
fn steps_below(w: &NormValue, eps: &NormValue) -> u32 {
    let (a, b) = match (w.exponent(), eps.exponent()) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return 1,
    };
    // n·a ≤ b with a < 0  <=>  n ≥ b / a
    let n = (b / a).ceil().to_integer();
    let n: i64 = n.try_into().unwrap_or(i64::MAX);
    n.clamp(1, u32::MAX as i64) as u32
}

/// Truncated geometric series `c^{-1} Σ_{n≤N} (-w0)^n` over the stored part
/// `w0` of `w`, with `‖c(1+w0)·v − 1‖ ≤ eps`. Returns `v` exact and the
/// certified bound on that defect.
fn geometric_inverse(cert: &UnitCertificate, eps: &NormValue) -> (Series, NormValue) {
    let space = cert.w.space();
    let w0 = cert.w.stored();
    let big_w = w0.main_norm();
    let cinv = cert.c.recip();
    if big_w.is_zero() {
        return (Series::constant(space, cinv), NormValue::Zero);
    }
    let n_max = steps_below(&big_w, eps) - 1;
    let neg_w = -&w0;
    let mut term = Series::one(space);
    let mut acc = Series::one(space);
    let mut dropped = NormValue::Zero;
    for _ in 0..n_max {
        term = &term * &neg_w;
        let small = term.filter_terms(|m, c| w0.term_norm(m, c) <= *eps);
        dropped = dropped.max(small.main_norm());
        term = term.filter_terms(|m, c| w0.term_norm(m, c) > *eps);
        if term.is_stored_zero() {
            break;
        }
        acc = &acc + &term;
    }
    let defect = big_w.powi(n_max + 1).max(dropped);
    (acc.scale(&cinv), defect)
}

/// An approximate inverse `v` with `‖u·v − 1‖ ≤ eps`. The tail of `v` bounds
/// `‖v − u^{-1}‖`.
pub fn invert_unit(cert: &UnitCertificate, eps: &NormValue) -> Result<Series> {
    if cert.w.is_zero() {
        return Ok(Series::constant(cert.w.space(), cert.c.recip()));
    }
    if eps.is_zero() {
        return Err(Error::ZeroTolerance);
    }
    if cert.w.tail() > eps {
        return Err(Error::ToleranceBelowTail {
            eps: eps.display(cert.w.prime()).to_string(),
            floor: cert.w.tail().display(cert.w.prime()).to_string(),
        });
    }
    let (v, defect) = geometric_inverse(cert, eps);
    let rel = defect.max(cert.w.tail().clone());
    let tail = rel.checked_div(&cert.norm())?;
    Ok(v.with_tail(tail))
}

/// Witness that a series is distinguished in `pivot` of order `order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinguishedCertificate {
    pub pivot: usize,
    pub order: u32,
    pub unit_cert: UnitCertificate,
    /// `‖g_s‖·r^s`, which equals `‖g‖`.
    pub norm_witness: NormValue,
}

pub fn distinguished_order(f: &Series, pivot: usize) -> Option<DistinguishedCertificate> {
    if pivot >= f.space().dim() {
        return None;
    }
    let rp = f.space().radius(pivot).clone();
    let view = f.coeff_view(pivot);
    let weights: Vec<(u32, NormValue)> = view
        .iter()
        .map(|(n, c)| (*n, &c.main_norm() * &rp.powi(*n)))
        .collect();
    let top = weights.iter().map(|(_, w)| w.clone()).max()?;
    let (s, _) = weights.iter().rev().find(|(_, w)| *w == top)?;
    let gs = &view.iter().find(|(n, _)| n == s)?.1;
    let unit_cert = certify_unit(gs)?;
    if *f.tail() >= top {
        return None;
    }
    Some(DistinguishedCertificate {
        pivot,
        order: *s,
        unit_cert,
        norm_witness: top,
    })
}

fn check_certificate(g: &Series, cert: &DistinguishedCertificate) -> Result<()> {
    match distinguished_order(g, cert.pivot) {
        Some(c) if c.order == cert.order && c.norm_witness == cert.norm_witness => Ok(()),
        Some(c) => Err(Error::InvalidCertificate(format!(
            "claimed order {}, detected {}",
            cert.order, c.order
        ))),
        None => Err(Error::InvalidCertificate("divisor is not distinguished".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionOutcome {
    pub quotient: Series,
    pub remainder: Series,
    /// Certified bound on `‖f − (g·q + R)‖`.
    pub residual: NormValue,
    /// Contraction factor of the iteration.
    pub kappa: NormValue,
    /// Residual before the first pass and after each pass.
    pub history: Vec<NormValue>,
}

const MAX_PASSES: usize = 4096;

/// One Euclidean pass of `h` by the polynomial `Σ_{m≤s} g_m T^m`, using the
/// exact approximate inverse `v` of `g_s`. The top coefficient is removed at
/// each step; what that leaves behind is picked up by the caller's honest
/// recomputation of the defect. Quotient terms of weight at most `prune`
/// are dropped.
fn euclid_pass(
    h: &Series,
    gprime: &[(u32, Series)],
    s: u32,
    pivot: usize,
    v: &Series,
    prune: Option<&NormValue>,
) -> (Series, Series) {
    let space = h.space();
    let rp = space.radius(pivot).clone();
    let mut coeffs: BTreeMap<u32, Series> = h.stored().coeff_view(pivot).into_iter().collect();
    let mut qc: Vec<(u32, Series)> = Vec::new();
    while let Some((&n, _)) = coeffs.iter().next_back() {
        if n < s {
            break;
        }
        let a = coeffs.remove(&n).expect("present");
        let mut t = &a * v;
        if let Some(th) = prune {
            // every quotient term moves by at most th in weight
            t = round_coeff(&t, th, &rp.powi(n - s));
        }
        if t.is_stored_zero() {
            continue;
        }
        for (m, gm) in gprime {
            if *m == s {
                continue;
            }
            let k = n - s + m;
            let prod = &t * gm;
            *coeffs.entry(k).or_insert_with(|| Series::zero(a.space())) -= &prod;
        }
        qc.push((n - s, t));
    }
    qc.reverse();
    let rem: Vec<(u32, Series)> = coeffs.into_iter().collect();
    (
        Series::from_pivot_coeffs(space, pivot, &qc),
        Series::from_pivot_coeffs(space, pivot, &rem),
    )
}

/// Weierstrass division `f = g·q + R + h` with `deg_pivot R < s` and
/// `‖h‖ ≤ residual ≤ eps`.
pub fn weierstrass_divide(
    f: &Series,
    g: &Series,
    cert: &DistinguishedCertificate,
    eps: &NormValue,
) -> Result<DivisionOutcome> {
    divide(f, g, cert, eps, None)
}

/// With `small`, `eps` only bounds the defect on that smaller polydisc, and
/// defect terms within `eps` there are never divided again.
fn divide(
    f: &Series,
    g: &Series,
    cert: &DistinguishedCertificate,
    eps: &NormValue,
    small: Option<&Arc<Space>>,
) -> Result<DivisionOutcome> {
    f.checked_add(g)?;
    check_certificate(g, cert)?;
    let p = f.prime();
    let pivot = cert.pivot;
    let s = cert.order;
    let space = f.space();
    let zero = Series::zero(space);
    if f.is_zero() {
        return Ok(DivisionOutcome {
            quotient: zero.clone(),
            remainder: zero,
            residual: NormValue::Zero,
            kappa: NormValue::Zero,
            history: vec![NormValue::Zero],
        });
    }
    let g_norm = cert.norm_witness.clone();
    let rp = space.radius(pivot).clone();
    let view = g.coeff_view(pivot);
    let gprime: Vec<(u32, Series)> = view
        .iter()
        .filter(|(m, _)| *m <= s)
        .map(|(m, c)| (*m, c.stored()))
        .collect();
    let above = view
        .iter()
        .filter(|(m, _)| *m > s)
        .map(|(m, c)| &c.main_norm() * &rp.powi(*m))
        .max()
        .unwrap_or(NormValue::Zero)
        .max(g.tail().clone());
    let gs = &gprime.iter().find(|(m, _)| *m == s).expect("order present").1;

    let exact_divisor = above.is_zero() && gs.is_constant();
    if exact_divisor {
        let v = Series::constant(gs.space(), gs.constant_term().recip());
        let (q, r) = euclid_pass(f, &gprime, s, pivot, &v, None);
        let h = &(f - &(g * &q)) - &r;
        let residual = h.norm_bound();
        if residual > *eps {
            return Err(Error::ToleranceBelowTail {
                eps: eps.display(p).to_string(),
                floor: residual.display(p).to_string(),
            });
        }
        return Ok(DivisionOutcome {
            quotient: q,
            remainder: r,
            residual: residual.clone(),
            kappa: NormValue::Zero,
            history: vec![f.norm_bound(), residual],
        });
    }

    if eps.is_zero() {
        return Err(Error::ZeroTolerance);
    }
    let f_norm = f.norm_bound();
    let floor = f
        .tail()
        .clone()
        .max((g.tail() * &f_norm).checked_div(&g_norm)?);
    if *eps < floor {
        return Err(Error::ToleranceBelowTail {
            eps: eps.display(p).to_string(),
            floor: floor.display(p).to_string(),
        });
    }
    let kappa = if above.is_zero() {
        NormValue::pow_int(-1)
    } else {
        above.checked_div(&g_norm)?
    };
    let (v, _) = geometric_inverse(&cert.unit_cert, &kappa);

    let mut q = zero.clone();
    let mut r = zero;
    let mut h = Residual::new(f, small);
    // terms at most κ·eps never need another pass; they stay below κ^i‖f‖
    // for every pass the loop can still make
    let settle = &kappa * eps;
    let mut settled = NormValue::Zero;
    let mut residual = h.norm_bound();
    let mut history = vec![residual.clone()];
    while residual > *eps {
        if history.len() > MAX_PASSES {
            return Err(Error::Invalid("division did not reach the tolerance".into()));
        }
        let theta = &kappa * &h.main_norm();
        let head = h.above(&theta);
        let q_prune = theta.checked_div(&g_norm)?;
        let (dq, dr) = euclid_pass(&head, &gprime, s, pivot, &v, Some(&q_prune));
        // ‖g·δq‖ and ‖δr‖ stay within θ, so the contraction survives
        let dr = rounded(&dr, &theta);
        h.subtract(&(g * &dq));
        h.subtract(&dr);
        settled = settled.max(h.settle(&settle, small.map(|_| eps)));
        q += &dq;
        r += &dr;
        residual = h.norm_bound().max(settled.clone());
        history.push(residual.clone());
    }
    Ok(DivisionOutcome {
        quotient: q,
        remainder: r,
        residual,
        kappa,
        history,
    })
}

/// `g ≈ e·w` with `e` a certified unit and `w` monic of degree `s` in the
/// pivot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preparation {
    pub unit: Series,
    pub unit_cert: UnitCertificate,
    pub w: Series,
    /// Certified bound on `‖g − e·w‖`.
    pub residual: NormValue,
}

/// The running defect of a division, with term norms cached so that each
/// pass only revalues the monomials it touches.
struct Residual {
    space: Arc<Space>,
    small: Option<Arc<Space>>,
    /// coefficient, norm, and norm on `small`
    terms: BTreeMap<Vec<u32>, (Scalar, NormValue, NormValue)>,
    tail: NormValue,
}

impl Residual {
    fn new(f: &Series, small: Option<&Arc<Space>>) -> Residual {
        let mut h = Residual {
            space: f.space().clone(),
            small: small.cloned(),
            terms: BTreeMap::new(),
            tail: f.tail().clone(),
        };
        for (m, c) in f.terms() {
            let entry = h.entry(m, c.clone());
            h.terms.insert(m.clone(), entry);
        }
        h
    }

    fn entry(&self, m: &[u32], c: Scalar) -> (Scalar, NormValue, NormValue) {
        let a = norm_of(self.space.prime(), &c);
        let n = &a * &self.space.mono_norm(m);
        let ns = match &self.small {
            Some(sm) => &a * &sm.mono_norm(m),
            None => n.clone(),
        };
        (c, n, ns)
    }

    fn main_norm(&self) -> NormValue {
        self.terms.values().map(|(_, n, _)| n).max().cloned().unwrap_or(NormValue::Zero)
    }

    fn norm_bound(&self) -> NormValue {
        self.main_norm().max(self.tail.clone())
    }

    fn above(&self, theta: &NormValue) -> Series {
        let head = self.terms.iter().filter(|(_, (_, n, _))| n > theta).map(|(m, (c, _, _))| (m.clone(), c.clone()));
        Series::from_terms(&self.space, head.collect::<Vec<_>>())
    }

    fn subtract(&mut self, x: &Series) {
        for (m, c) in x.terms() {
            let c = match self.terms.remove(m) {
                Some((old, _, _)) => &old - c,
                None => -c,
            };
            if !c.is_zero() {
                let entry = self.entry(m, c);
                self.terms.insert(m.clone(), entry);
            }
        }
        if *x.tail() > self.tail {
            self.tail = x.tail().clone();
        }
    }

    /// Drops the terms of norm at most `floor`, and with a smaller polydisc
    /// those of norm at most `coarse` there; returns the largest dropped
    /// norm, measured on the smaller polydisc when there is one.
    fn settle(&mut self, floor: &NormValue, coarse: Option<&NormValue>) -> NormValue {
        let mut top = NormValue::Zero;
        self.terms.retain(|_, (_, n, ns)| {
            if *n <= *floor || coarse.is_some_and(|c| *ns <= *c) {
                if *ns > top {
                    top = ns.clone();
                }
                false
            } else {
                true
            }
        });
        top
    }
}

/// Rounds each coefficient so every term moves by at most `tol` in norm.
fn rounded(h: &Series, tol: &NormValue) -> Series {
    let p = h.prime();
    let space = h.space();
    let terms = h.terms().iter().filter_map(|(m, c)| {
        let r = match tol.checked_div(&space.mono_norm(m)) {
            Ok(t) => round_to(p, c, &t),
            Err(_) => c.clone(),
        };
        (!r.is_zero()).then(|| (m.clone(), r))
    });
    Series::from_terms(space, terms.collect::<Vec<_>>()).with_tail(h.tail().clone())
}

/// Rounds a pivot coefficient, living at weight `scale`, so that every term
/// moves by at most `th`.
fn round_coeff(a: &Series, th: &NormValue, scale: &NormValue) -> Series {
    let sub = a.space();
    let kept = a.terms().iter().filter_map(|(m, c)| {
        let w = &sub.mono_norm(m) * scale;
        let c = round_to(sub.prime(), c, &th.checked_div(&w).ok()?);
        (!c.is_zero()).then(|| (m.clone(), c))
    });
    Series::from_terms(sub, kept.collect::<Vec<_>>())
}

/// Euclidean division `f = q·w + r` of the stored part of `f` by a
/// polynomial monic in the pivot. With `round`, quotient terms are rounded
/// so that each moves `q·w` by at most that much. `r` is always the exact
/// difference; rounding leaves some of it at pivot degree `deg w` or above.
fn divide_by_monic(f: &Series, w: &Series, pivot: usize, round: Option<&NormValue>) -> (Series, Series) {
    let space = f.space();
    let s = w.degree_in(pivot).unwrap_or(0);
    let rp = space.radius(pivot).clone();
    let wv: Vec<(u32, Series)> = w.coeff_view(pivot).into_iter().map(|(m, c)| (m, c.stored())).collect();
    let mut coeffs: BTreeMap<u32, Series> = f.stored().coeff_view(pivot).into_iter().map(|(n, c)| (n, c.stored())).collect();
    let mut qc: Vec<(u32, Series)> = Vec::new();
    let mut rem: Vec<(u32, Series)> = Vec::new();
    while let Some((&n, _)) = coeffs.iter().next_back() {
        if n < s {
            break;
        }
        let a = coeffs.remove(&n).expect("present");
        let t = match round {
            Some(th) => round_coeff(&a, th, &rp.powi(n)),
            None => a.clone(),
        };
        let left = &a - &t;
        if !left.is_stored_zero() {
            rem.push((n, left));
        }
        if t.is_stored_zero() {
            continue;
        }
        for (m, wm) in &wv {
            if *m != s {
                *coeffs.entry(n - s + m).or_insert_with(|| Series::zero(a.space())) -= &(&t * wm);
            }
        }
        qc.push((n - s, t));
    }
    rem.extend(coeffs);
    (
        Series::from_pivot_coeffs(space, pivot, &qc),
        Series::from_pivot_coeffs(space, pivot, &rem),
    )
}

fn finish(g: &Series, unit: Series, w: Series, eps: &NormValue, small: Option<&Arc<Space>>) -> Option<Preparation> {
    let defect = g - &(&unit * &w);
    finish_with(unit, w, &defect, eps, small)
}

/// As `finish`, with `g − unit·w` already known.
fn finish_with(unit: Series, w: Series, defect: &Series, eps: &NormValue, small: Option<&Arc<Space>>) -> Option<Preparation> {
    let unit_cert = certify_unit(&unit)?;
    let residual = match small {
        Some(sm) => defect.with_space(sm).ok()?.norm_bound(),
        None => defect.norm_bound(),
    };
    (residual <= *eps).then_some(Preparation {
        unit,
        unit_cert,
        w,
        residual,
    })
}

pub fn weierstrass_prepare(
    g: &Series,
    cert: &DistinguishedCertificate,
    eps: &NormValue,
) -> Result<Preparation> {
    prepare(g, cert, eps, None)
}

/// A preparation whose residual is only bounded on `small`, a polydisc in
/// the same variables with radii at most those of `g`. Far cheaper when the
/// distinguishing margin is thin but `small` is much smaller.
pub fn weierstrass_prepare_on(
    g: &Series,
    cert: &DistinguishedCertificate,
    small: &Arc<Space>,
    eps: &NormValue,
) -> Result<Preparation> {
    let space = g.space();
    let fits = small.prime() == space.prime()
        && small.dim() == space.dim()
        && (0..space.dim()).all(|i| small.name(i) == space.name(i) && small.radius(i) <= space.radius(i));
    if !fits {
        return Err(Error::SpaceMismatch {
            left: space.describe(),
            right: small.describe(),
        });
    }
    prepare(g, cert, eps, Some(small))
}

fn prepare(
    g: &Series,
    cert: &DistinguishedCertificate,
    eps: &NormValue,
    small: Option<&Arc<Space>>,
) -> Result<Preparation> {
    check_certificate(g, cert)?;
    let p = g.prime();
    let pivot = cert.pivot;
    let s = cert.order;
    let space = g.space();
    let t_s = Series::var(space, pivot).pow(s);

    // order 0: g is itself the unit
    if s == 0 {
        if let Some(prep) = finish(g, g.clone(), Series::one(space), eps, small) {
            return Ok(prep);
        }
    }

    // g is already a polynomial of degree s with scalar leading coefficient
    let view = g.coeff_view(pivot);
    let (top, gs) = view.last().expect("g is nonzero");
    if g.is_exact() && *top == s && gs.is_constant() {
        let c = gs.constant_term();
        if let Some(prep) = finish(g, Series::constant(space, c.clone()), g.scale(&c.recip()), eps, small) {
            return Ok(prep);
        }
    }

    // one variable: collect the rational roots inside the disc
    if space.dim() == 1 && g.is_exact() {
        let deg = g.degree_in(0).unwrap_or(0) as usize;
        let mut coeffs = vec![Scalar::zero(); deg + 1];
        for (m, c) in g.terms() {
            coeffs[m[0] as usize] = c.clone();
        }
        let (roots, _) = rational_factor(&coeffs, &[]);
        let inside: Vec<(Scalar, u32)> = roots
            .into_iter()
            .filter(|(a, _)| norm_of(p, a) <= *space.radius(0))
            .collect();
        if inside.iter().map(|(_, m)| m).sum::<u32>() == s {
            let t = Series::var(space, 0);
            let mut w = Series::one(space);
            for (a, m) in &inside {
                w = &w * &(&t - &Series::constant(space, a.clone())).pow(*m);
            }
            let (e, rem) = divide_by_monic(g, &w, 0, None);
            if rem.is_zero() {
                if let Some(prep) = finish(g, e, w, eps, small) {
                    return Ok(prep);
                }
            }
        }
    }

    if eps.is_zero() {
        return Err(Error::ZeroTolerance);
    }
    let gs_norm = cert.unit_cert.norm();
    let mut tol = eps.checked_div(&gs_norm)?;
    let mut last = None;
    for _ in 0..6 {
        let div = divide(&t_s, g, cert, &tol, small)?;
        let w = &t_s - &div.remainder;
        let (e_a, defect) = divide_by_monic(g, &w, pivot, Some(eps));
        if let Some(prep) = finish_with(e_a, w.clone(), &defect.widen_tail(g.tail()), eps, small) {
            return Ok(prep);
        }
        if let Some(qc) = certify_unit(&div.quotient) {
            let inv_tol = eps.checked_div(&g.norm_bound())?.min(NormValue::pow_int(-1));
            let e_b = invert_unit(&qc, &inv_tol)?.stored();
            let residual = (g - &(&e_b * &w)).norm_bound();
            if let Some(prep) = finish(g, e_b, w, eps, small) {
                return Ok(prep);
            }
            last = Some(residual);
        }
        tol = &tol * &NormValue::pow_int(-4);
    }
    Err(Error::InexactPreparation(
        last.map(|r| r.display(p).to_string())
            .unwrap_or_else(|| "no unit factor found".into()),
    ))
}
