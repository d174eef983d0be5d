//! Univariate polynomials over `Q` that split into rational linear factors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::valued::{format_scalar, Scalar};

/// `lead · Π (T - root)^mult`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPoly {
    pub lead: Scalar,
    pub roots: Vec<(Scalar, u32)>,
}

impl SplitPoly {
    pub fn constant(c: Scalar) -> SplitPoly {
        SplitPoly {
            lead: c,
            roots: Vec::new(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.roots.iter().map(|(_, m)| m).sum()
    }

    pub fn eval(&self, t: &Scalar) -> Scalar {
        let mut v = self.lead.clone();
        for (a, m) in &self.roots {
            v *= num_traits::pow(t - a, *m as usize);
        }
        v
    }

    /// Coefficients, lowest degree first.
    pub fn coefficients(&self) -> Vec<Scalar> {
        let mut c = vec![self.lead.clone()];
        for (a, m) in &self.roots {
            for _ in 0..*m {
                // multiply by (T - a)
                let mut next = vec![Scalar::zero(); c.len() + 1];
                for (i, ci) in c.iter().enumerate() {
                    next[i + 1] += ci;
                    next[i] -= ci * a;
                }
                c = next;
            }
        }
        c
    }

    pub fn describe(&self) -> String {
        let mut s = format_scalar(&self.lead);
        for (a, m) in &self.roots {
            s.push_str(&format!("*(T - {})^{}", format_scalar(a), m));
        }
        s
    }
}

pub fn poly_eval(coeffs: &[Scalar], t: &Scalar) -> Scalar {
    let mut v = Scalar::zero();
    for c in coeffs.iter().rev() {
        v = v * t + c;
    }
    v
}

/// Synthetic division by `T - a`: returns the quotient and the remainder.
pub fn deflate(coeffs: &[Scalar], a: &Scalar) -> (Vec<Scalar>, Scalar) {
    let n = coeffs.len();
    if n == 0 {
        return (Vec::new(), Scalar::zero());
    }
    let mut q = vec![Scalar::zero(); n - 1];
    let mut carry = Scalar::zero();
    for i in (0..n).rev() {
        let v = &coeffs[i] + &carry * a;
        if i == 0 {
            return (q, v);
        }
        q[i - 1] = v.clone();
        carry = v;
    }
    unreachable!()
}

fn trim(mut c: Vec<Scalar>) -> Vec<Scalar> {
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    c
}

/// Integers above this bound are not factored for the rational root search.
const FACTOR_LIMIT: u64 = 1 << 40;

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let mut m = n.abs().to_u64()?;
    if m == 0 || m > FACTOR_LIMIT {
        return None;
    }
    let mut primes: Vec<(u64, u32)> = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        let mut e = 0;
        while m % d == 0 {
            m /= d;
            e += 1;
        }
        if e > 0 {
            primes.push((d, e));
        }
        d += 1;
    }
    if m > 1 {
        primes.push((m, 1));
    }
    let mut out = vec![1u64];
    for (q, e) in primes {
        let mut next = Vec::new();
        for x in &out {
            let mut pw = 1u64;
            for _ in 0..=e {
                next.push(x * pw);
                pw *= q;
            }
        }
        out = next;
    }
    Some(out.into_iter().map(BigInt::from).collect())
}

/// Clears denominators: returns a primitive integer polynomial proportional
/// to `coeffs`.
fn integer_primitive(coeffs: &[Scalar]) -> Vec<BigInt> {
    let l = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = coeffs
        .iter()
        .map(|c| (c * Scalar::from_integer(l.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|c| c / &g).collect()
}

fn find_root(coeffs: &[Scalar]) -> Option<Scalar> {
    let deg = coeffs.len() - 1;
    if deg == 1 {
        return Some(-&coeffs[0] / &coeffs[1]);
    }
    let ints = integer_primitive(coeffs);
    if deg == 2 {
        let (c, b, a) = (&ints[0], &ints[1], &ints[2]);
        let disc = b * b - BigInt::from(4) * a * c;
        if disc.is_negative() {
            return None;
        }
        let r = disc.sqrt();
        if &r * &r != disc {
            return None;
        }
        return Some(Scalar::new(-b + r, BigInt::from(2) * a));
    }
    let a0 = divisors(&ints[0])?;
    let an = divisors(&ints[deg])?;
    for num in &a0 {
        for den in &an {
            for sign in [1, -1] {
                let cand = Scalar::new(num * sign, den.clone());
                if poly_eval(coeffs, &cand).is_zero() {
                    return Some(cand);
                }
            }
        }
    }
    None
}

/// Pulls out every rational root it can find from a nonzero polynomial
/// (lowest degree first). Returns the roots with multiplicity and the
/// remaining cofactor. `hints` are tried before the search.
pub fn rational_factor(coeffs: &[Scalar], hints: &[Scalar]) -> (Vec<(Scalar, u32)>, Vec<Scalar>) {
    let mut c = trim(coeffs.to_vec());
    let mut roots: Vec<(Scalar, u32)> = Vec::new();
    if c.is_empty() {
        return (roots, c);
    }
    let push = |roots: &mut Vec<(Scalar, u32)>, a: Scalar| match roots.iter_mut().find(|(b, _)| *b == a) {
        Some((_, m)) => *m += 1,
        None => roots.push((a, 1)),
    };
    for h in hints.iter().chain(std::iter::once(&Scalar::zero())) {
        while c.len() > 1 {
            let (q, r) = deflate(&c, h);
            if !r.is_zero() {
                break;
            }
            c = q;
            push(&mut roots, h.clone());
        }
    }
    while c.len() > 1 {
        let Some(a) = find_root(&c) else { break };
        let (q, r) = deflate(&c, &a);
        debug_assert!(r.is_zero());
        c = q;
        push(&mut roots, a);
    }
    roots.sort();
    (roots, c)
}

/// Factors a nonzero polynomial (lowest degree first) into rational linear
/// factors.
///
/// Returns `None` when some factor has no rational root or the search would
/// need to factor integers that are too large.
pub fn split_rational(coeffs: &[Scalar], hints: &[Scalar]) -> Option<SplitPoly> {
    let (roots, rest) = rational_factor(coeffs, hints);
    if rest.len() != 1 {
        return None;
    }
    Some(SplitPoly {
        lead: rest[0].clone(),
        roots,
    })
}
