//! Weierstrass automorphisms `T_i ↦ T_i ± T_pivot^{d_i}`, the transform that
//! makes scalar-coefficient series distinguished in one variable, and the
//! coefficient decompositions behind unit-ideal coverings.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::constructible::{fresh_chart_name, DatumChain};
use crate::error::{Error, Result};
use crate::formula::{Atom, Formula};
use crate::series::{Mono, Series, Space, VarSpec};
use crate::valued::{norm_of, NormValue, Scalar};
use crate::weierstrass::{distinguished_order, DistinguishedCertificate};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaSpec {
    pub pivot: usize,
    /// `d_i` for every variable; the entry at the pivot is ignored.
    pub exponents: Vec<u32>,
    pub inverse: bool,
}

impl SigmaSpec {
    pub fn inverted(&self) -> SigmaSpec {
        SigmaSpec {
            inverse: !self.inverse,
            ..self.clone()
        }
    }
}

/// `f(T_1 ± T_n^{d_1}, …, T_n)`. Requires `r_pivot^{d_i} ≤ r_i`.
pub fn apply_sigma(f: &Series, sig: &SigmaSpec) -> Result<Series> {
    let space = f.space();
    if sig.pivot >= space.dim() || sig.exponents.len() != space.dim() {
        return Err(Error::Invalid("automorphism does not match the variables".into()));
    }
    let rp = space.radius(sig.pivot);
    let tp = Series::var(space, sig.pivot);
    let mut images = Vec::with_capacity(space.dim());
    for i in 0..space.dim() {
        let ti = Series::var(space, i);
        if i == sig.pivot {
            images.push(ti);
            continue;
        }
        let d = sig.exponents[i];
        if rp.powi(d) > *space.radius(i) {
            return Err(Error::RadiusCondition(space.name(i).to_string()));
        }
        let shift = tp.pow(d);
        images.push(if sig.inverse { &ti - &shift } else { &ti + &shift });
    }
    f.compose(space, &images)
}

/// `Σ_k ν_{π_k} d^{n−k}` where `π` lists the non-pivot variables in order
/// and then the pivot.
pub fn encode(nu: &[u32], pivot: usize, d: u64) -> Option<u64> {
    let mut acc: u64 = 0;
    for k in order_with_pivot_last(nu.len(), pivot) {
        acc = acc.checked_mul(d)?.checked_add(nu[k] as u64)?;
    }
    Some(acc)
}

fn order_with_pivot_last(n: usize, pivot: usize) -> Vec<usize> {
    (0..n).filter(|&i| i != pivot).chain(std::iter::once(pivot)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinguishingResult {
    pub sigma: SigmaSpec,
    /// Polyradius, indexed like the input variables.
    pub rho: Vec<NormValue>,
    pub s: NormValue,
    pub d: u32,
    /// Per input series: the lexicographically greatest index among the
    /// coefficients of maximal norm.
    pub mus: Vec<Mono>,
    pub orders: Vec<u32>,
    pub certs: Vec<DistinguishedCertificate>,
    /// `σ(f_j)` over `space`.
    pub images: Vec<Series>,
    pub space: Arc<Space>,
}

/// Number of halvings tried in the schedule `s = p^{1/2^j}`.
pub const SCHEDULE_DEPTH: u32 = 16;

/// One automorphism and one polyradius below the input radii making every
/// `f_j` distinguished in `pivot`.
pub fn make_distinguished(fs: &[Series], pivot: usize) -> Result<DistinguishingResult> {
    let Some(first) = fs.first() else {
        return Err(Error::Invalid("no series given".into()));
    };
    let space = first.space().clone();
    let n = space.dim();
    if pivot >= n {
        return Err(Error::Invalid(format!("pivot {pivot} out of range")));
    }
    let p = space.prime();
    let order = order_with_pivot_last(n, pivot);
    let mut mus = Vec::new();
    let mut max_digit = 1;
    for f in fs {
        if *f.space() != space {
            return Err(Error::SpaceMismatch {
                left: f.space().describe(),
                right: space.describe(),
            });
        }
        if f.is_stored_zero() {
            return Err(Error::ZeroSeries);
        }
        let top = f.terms().values().map(|c| norm_of(p, c)).max().expect("nonzero");
        let mu = f
            .terms()
            .iter()
            .filter(|(_, c)| norm_of(p, c) == top)
            .map(|(m, _)| m.clone())
            .max_by(|a, b| {
                let ka: Vec<u32> = order.iter().map(|&i| a[i]).collect();
                let kb: Vec<u32> = order.iter().map(|&i| b[i]).collect();
                ka.cmp(&kb)
            })
            .expect("nonzero");
        for m in f.terms().keys() {
            max_digit = max_digit.max(*m.iter().max().unwrap_or(&0));
        }
        mus.push(mu);
    }
    let d = max_digit + 1;
    let mut orders = Vec::new();
    for mu in &mus {
        let e = encode(mu, pivot, d as u64)
            .and_then(|e| u32::try_from(e).ok())
            .ok_or_else(|| Error::Invalid("encoded order overflows".into()))?;
        orders.push(e);
    }
    // d_i = d^{n-k} for the variable in position k of the order
    let mut exponents = vec![0u32; n];
    for (k, &i) in order.iter().enumerate() {
        if i != pivot {
            exponents[i] = (d as u64)
                .checked_pow((n - 1 - k) as u32)
                .and_then(|e| u32::try_from(e).ok())
                .ok_or_else(|| Error::Invalid("automorphism exponent overflows".into()))?;
        }
    }
    let sigma = SigmaSpec {
        pivot,
        exponents: exponents.clone(),
        inverse: false,
    };

    let try_s = |s: &NormValue| -> Result<Option<DistinguishingResult>> {
        let rho: Vec<NormValue> = (0..n)
            .map(|i| if i == pivot { s.clone() } else { s.powi(exponents[i]) })
            .collect();
        if rho.iter().zip(space.radii()).any(|(a, b)| *a > b) {
            return Ok(None);
        }
        let target = space.with_radii(&rho)?;
        let mut images = Vec::new();
        let mut certs = Vec::new();
        for (f, &ord) in fs.iter().zip(&orders) {
            let img = apply_sigma(&f.with_space(&target)?, &sigma)?;
            match distinguished_order(&img, pivot) {
                Some(c) if c.order == ord => certs.push(c),
                _ => return Ok(None),
            }
            images.push(img);
        }
        Ok(Some(DistinguishingResult {
            sigma: sigma.clone(),
            rho,
            s: s.clone(),
            d,
            mus: mus.clone(),
            orders: orders.clone(),
            certs,
            images,
            space: target,
        }))
    };

    for j in 0..=SCHEDULE_DEPTH {
        let s = NormValue::Pow(BigRational::new(1.into(), (1u64 << j).into()));
        if let Some(r) = try_s(&s)? {
            return Ok(r);
        }
    }
    // unit radii leave no room above 1; the automorphism is then isometric
    if let Some(r) = try_s(&NormValue::one())? {
        return Ok(r);
    }
    Err(Error::NoAdmissibleRadius(format!(
        "radii {} admit no s of the form p^(1/2^j), j <= {SCHEDULE_DEPTH}, or s = 1",
        space.describe()
    )))
}

/// `f = Σ_{ν∈J} f_ν (T^ν + φ_ν)` with scalar `f_ν`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarDecomposition {
    pub parts: Vec<(Mono, Scalar, Series)>,
}

impl ScalarDecomposition {
    pub fn indices(&self) -> Vec<&Mono> {
        self.parts.iter().map(|(m, _, _)| m).collect()
    }

    pub fn phi(&self, nu: &[u32]) -> Option<&Series> {
        self.parts.iter().find(|(m, _, _)| m == nu).map(|(_, _, phi)| phi)
    }

    /// `Σ f_ν (T^ν + φ_ν)` over `space`.
    pub fn recombine(&self, space: &Arc<Space>) -> Series {
        let mut out = Series::zero(space);
        for (nu, c, phi) in &self.parts {
            let piece = &Series::monomial(space, nu.clone(), Scalar::one()) + phi;
            out = &out + &piece.scale(c);
        }
        out
    }
}

/// Splits the support of `f` into a set `J` of kept indices and terms small
/// enough, relative to the carrier coefficient of maximal norm, to be folded
/// into the carrier's `φ` with `‖φ‖ < eps`. `forced` always ends up in `J`.
pub fn decompose_coefficients(f: &Series, eps: &NormValue, forced: Option<&[u32]>) -> Result<ScalarDecomposition> {
    if eps.is_zero() {
        return Err(Error::ZeroTolerance);
    }
    let space = f.space();
    let p = space.prime();
    if let Some(mu) = forced {
        if mu.len() != space.dim() {
            return Err(Error::Invalid("forced index has the wrong length".into()));
        }
    }
    if f.is_stored_zero() {
        return match forced {
            Some(_) => Err(Error::ZeroSeries),
            None => Ok(ScalarDecomposition { parts: Vec::new() }),
        };
    }
    let top = f.terms().values().map(|c| norm_of(p, c)).max().expect("nonzero");
    let (carrier, fc) = f
        .terms()
        .iter()
        .filter(|(_, c)| norm_of(p, c) == top)
        .map(|(m, c)| (m.clone(), c.clone()))
        .next_back()
        .expect("nonzero");
    let mut phi = Series::zero(space);
    let mut parts: Vec<(Mono, Scalar, Series)> = Vec::new();
    for (m, c) in f.terms() {
        if *m == carrier {
            continue;
        }
        let ratio = c / &fc;
        let size = space.mono_norm(m) * norm_of(p, &ratio);
        if size < *eps && forced != Some(m.as_slice()) {
            phi = &phi + &Series::monomial(space, m.clone(), ratio);
        } else {
            parts.push((m.clone(), c.clone(), Series::zero(space)));
        }
    }
    let tail_share = f.tail().checked_div(&top)?;
    if !tail_share.is_zero() && phi.main_norm().max(tail_share.clone()) < *eps {
        phi = phi.with_tail(tail_share);
    }
    parts.push((carrier, fc, phi));
    if let Some(mu) = forced {
        if !parts.iter().any(|(m, _, _)| m == mu) {
            parts.push((mu.to_vec(), Scalar::zero(), Series::zero(space)));
        }
    }
    parts.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ScalarDecomposition { parts })
}

/// One term of a decomposition over an affinoid base: `coeff` lives over the
/// base, `phi` over base ⊕ fiber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringTerm {
    pub nu: Mono,
    pub coeff: Series,
    pub phi: Series,
}

/// One piece of the covering: on the image of `chain`, the pullback of `f`
/// equals `a·g`. The residual piece has `nu = None` and `f` vanishes on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringPiece {
    pub nu: Option<Mono>,
    pub chain: DatumChain,
    /// Over the chain's full ambient space.
    pub a: Series,
    /// Over the full ambient space plus the fiber; coefficient 1 at `nu`.
    pub g: Series,
}

/// The chart radius of the `t_μ`; any radius above 1 works.
fn chart_radius() -> NormValue {
    NormValue::pow_int(1)
}

/// Splits `base ⊕ fiber` after `base_dim` variables.
fn split_space(space: &Arc<Space>, base_dim: usize) -> Result<(Arc<Space>, Vec<VarSpec>)> {
    if base_dim > space.dim() {
        return Err(Error::Invalid("base dimension exceeds the space".into()));
    }
    let base = Space::new(space.prime(), space.vars()[..base_dim].to_vec())?;
    Ok((base, space.vars()[base_dim..].to_vec()))
}

/// For each `ν ∈ J` a chain adjoining `t_μ = f_μ/f_ν` for `μ ∈ J∖{ν}` on
/// `{|f_μ| ≤ |f_ν|, f_ν ≠ 0}`, where `f` factors as `f_ν·g_ν`, plus the
/// residual piece where every `f_ν` vanishes.
pub fn build_unit_ideal_covering(f: &Series, base_dim: usize, terms: &[CoveringTerm]) -> Result<Vec<CoveringPiece>> {
    let space = f.space();
    let (base, fiber) = split_space(space, base_dim)?;
    let fiber_dim = fiber.len();
    let mut seen = BTreeSet::new();
    let mut total = Series::zero(space);
    for t in terms {
        if t.nu.len() != fiber_dim || !seen.insert(t.nu.clone()) {
            return Err(Error::InconsistentDecomposition("indices must be distinct fiber exponents".into()));
        }
        if *t.coeff.space() != base || t.phi.space() != space {
            return Err(Error::InconsistentDecomposition("term lives over the wrong space".into()));
        }
        let mono = t.nu.iter().fold(vec![0; base_dim], |mut m, k| {
            m.push(*k);
            m
        });
        for m in t.phi.terms().keys() {
            if seen_fiber(m, base_dim, terms) {
                return Err(Error::InconsistentDecomposition(format!(
                    "phi for {:?} contains an index of the decomposition",
                    t.nu
                )));
            }
        }
        let lifted = t.coeff.embed(space, &(0..base_dim).collect::<Vec<_>>())?;
        total = &total + &(&lifted * &(&Series::monomial(space, mono, Scalar::one()) + &t.phi));
    }
    if total.stored() != f.stored() {
        return Err(Error::InconsistentDecomposition(format!("{total} != {f}")));
    }

    let mut pieces = Vec::new();
    for (idx, t) in terms.iter().enumerate() {
        let nonzero = Atom::nonzero(t.coeff.clone());
        let region = match nonzero.constant_truth() {
            Some(true) => Formula::top(),
            _ => Formula::Atom(nonzero),
        };
        let mut chain = DatumChain::identity(&base, region)?;
        let mut charts = Vec::new();
        for (jdx, u) in terms.iter().enumerate() {
            if jdx == idx {
                continue;
            }
            let amb = chain.full_ambient();
            let name = fresh_chart_name(&amb, "t");
            chain.push_link(crate::constructible::ElementaryDatum {
                f: u.coeff.embed_by_name(&amb)?,
                g: t.coeff.embed_by_name(&amb)?,
                r: chart_radius(),
                s: NormValue::one(),
                region: Formula::top(),
                chart: name.clone(),
            })?;
            charts.push((jdx, name));
        }
        let amb = chain.full_ambient();
        let mut vars = amb.vars().to_vec();
        vars.extend(fiber.iter().cloned());
        let total_space = Space::new(space.prime(), vars).map_err(|_| {
            Error::InconsistentDecomposition("fiber names clash with chart names".into())
        })?;
        let n_amb = amb.dim();
        let positions: Vec<usize> = (0..base_dim).chain((0..fiber_dim).map(|k| n_amb + k)).collect();
        let lift = |s: &Series| s.embed(&total_space, &positions);
        let fiber_mono = |nu: &Mono| {
            let mut m = vec![0; n_amb];
            m.extend(nu.iter().copied());
            m
        };
        let mut g = &Series::monomial(&total_space, fiber_mono(&t.nu), Scalar::one()) + &lift(&t.phi)?;
        for (jdx, name) in &charts {
            let u = &terms[*jdx];
            let tu = Series::var(&total_space, total_space.require(name)?);
            let piece = &Series::monomial(&total_space, fiber_mono(&u.nu), Scalar::one()) + &lift(&u.phi)?;
            g = &g + &(&tu * &piece);
        }
        let a = t.coeff.embed_by_name(&amb)?;
        // f_ν g_ν − f = Σ (t_μ f_ν − f_μ)(T^μ + φ_μ), which vanishes on the chart
        let a_total = a.embed_by_name(&total_space)?;
        let mut relation = &(&a_total * &g) - &lift(&f.stored())?;
        for (jdx, name) in &charts {
            let u = &terms[*jdx];
            let tu = Series::var(&total_space, total_space.require(name)?);
            let rel = &(&tu * &a_total) - &u.coeff.embed_by_name(&total_space)?;
            let piece = &Series::monomial(&total_space, fiber_mono(&u.nu), Scalar::one()) + &lift(&u.phi)?;
            relation = &relation - &(&rel * &piece);
        }
        if !relation.is_stored_zero() {
            return Err(Error::IdentityFails(format!("pullback factorization leaves {relation}")));
        }
        pieces.push(CoveringPiece {
            nu: Some(t.nu.clone()),
            chain,
            a,
            g,
        });
    }
    let vanish: Vec<Formula> = terms.iter().map(|t| Formula::Atom(Atom::eq_zero(t.coeff.clone()))).collect();
    let residual = DatumChain::identity(&base, Formula::conj(vanish))?;
    if !residual.is_trivially_empty() {
        let mut vars = base.vars().to_vec();
        vars.extend(fiber.iter().cloned());
        let total_space = Space::new(space.prime(), vars)?;
        pieces.push(CoveringPiece {
            nu: None,
            chain: residual,
            a: Series::zero(&base),
            g: Series::zero(&total_space),
        });
    }
    Ok(pieces)
}

fn seen_fiber(m: &[u32], base_dim: usize, terms: &[CoveringTerm]) -> bool {
    terms.iter().any(|t| t.nu.as_slice() == &m[base_dim..])
}
