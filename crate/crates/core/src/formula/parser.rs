//! Recursive-descent parser for formulas and polynomials.
//!
//! A `|` at the start of a literal opens a norm bar; a `|` after a complete
//! literal is disjunction. Polynomials never contain `|`, so the closing bar
//! is the first one after the polynomial.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{Atom, Cmp, Formula};
use crate::error::{Error, Result};
use crate::series::{Series, Space};
use crate::valued::{NormValue, Scalar};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    space: Arc<Space>,
}

pub fn parse_formula(text: &str, space: &Arc<Space>) -> Result<Formula> {
    let mut p = Parser::new(text, space);
    let f = p.disjunction()?;
    p.finish()?;
    Ok(f)
}

/// Parses a polynomial over the variables of `space`. A term `O(p^q)` adds a
/// tail bound.
pub fn parse_series(text: &str, space: &Arc<Space>) -> Result<Series> {
    let mut p = Parser::new(text, space);
    let s = p.poly()?;
    p.finish()?;
    Ok(s)
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, space: &Arc<Space>) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            space: space.clone(),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn finish(&mut self) -> Result<()> {
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => self.pos += 1,
            _ => return None,
        }
        while let Some(c) = self.src.get(self.pos) {
            if c.is_ascii_alphanumeric() || *c == b'_' || *c == b'\'' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn keyword_ahead(&mut self, word: &str) -> bool {
        self.skip_ws();
        let w = word.as_bytes();
        self.src[self.pos..].starts_with(w)
            && !self
                .src
                .get(self.pos + w.len())
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_' || *c == b'\'')
    }

    fn digits(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        Ok(s.parse().expect("digits"))
    }

    /// `[-] digits [/ digits]` with no spaces inside.
    fn rational(&mut self) -> Result<Scalar> {
        self.skip_ws();
        let neg = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let n = self.digits()?;
        let mut v = Scalar::from_integer(n);
        if self.src.get(self.pos) == Some(&b'/') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            let d = self.digits()?;
            if d.is_zero() {
                return self.err("zero denominator");
            }
            v /= Scalar::from_integer(d);
        }
        Ok(if neg { -v } else { v })
    }

    /// `0`, `1`, or `p^q`.
    fn norm_value(&mut self) -> Result<NormValue> {
        let at = self.pos;
        let base = self.digits()?;
        if self.src.get(self.pos) != Some(&b'^') {
            return if base.is_zero() {
                Ok(NormValue::Zero)
            } else if base.is_one() {
                Ok(NormValue::one())
            } else {
                self.pos = at;
                self.err("expected a norm value `p^q`, `0` or `1`")
            };
        }
        self.pos += 1;
        let prime = self.space.prime();
        if base != BigInt::from(prime) {
            self.pos = at;
            return self.err(format!("norm base {base} differs from the prime {prime}"));
        }
        Ok(NormValue::Pow(self.rational()?))
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(b'|') {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one")
        } else {
            Formula::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut parts = vec![self.literal()?];
        while self.eat(b'&') {
            parts.push(self.literal()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one")
        } else {
            Formula::And(parts)
        })
    }

    fn literal(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.literal()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.disjunction()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(_) if self.keyword_ahead("true") => {
                self.pos += 4;
                Ok(Formula::top())
            }
            Some(_) if self.keyword_ahead("false") => {
                self.pos += 5;
                Ok(Formula::bottom())
            }
            Some(_) => Ok(Formula::Atom(self.atom()?)),
            None => self.err("unexpected end of input"),
        }
    }

    fn side(&mut self) -> Result<(NormValue, Series)> {
        let scale = if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let v = self.norm_value()?;
            self.expect(b'*')?;
            v
        } else {
            NormValue::one()
        };
        self.expect(b'|')?;
        let s = self.poly()?;
        self.expect(b'|')?;
        Ok((scale, s))
    }

    fn atom(&mut self) -> Result<Atom> {
        let start = self.pos;
        let (alpha, f) = self.side()?;
        let cmp = if self.eat(b'<') {
            if self.src.get(self.pos) == Some(&b'=') {
                self.pos += 1;
                Cmp::Le
            } else {
                Cmp::Lt
            }
        } else {
            return self.err("expected `<=` or `<`");
        };
        let (beta, g) = self.side()?;
        Atom::new(alpha, f, cmp, beta, g).map_err(|e| Error::Parse {
            pos: start,
            msg: e.to_string(),
        })
    }

    fn poly(&mut self) -> Result<Series> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -&self.term()?
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&mut self) -> bool {
        self.peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'(')
    }

    fn term(&mut self) -> Result<Series> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.factor()?;
            } else if self.peek() == Some(b'/') {
                self.pos += 1;
                let at = self.pos;
                let d = self.factor()?;
                if !(d.is_exact() && d.is_constant()) || d.is_stored_zero() {
                    self.pos = at;
                    return self.err("division only by nonzero constants");
                }
                acc = acc.scale(&d.constant_term().recip());
            } else if self.starts_factor() {
                acc = &acc * &self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Series> {
        if self.eat(b'-') {
            return Ok(-&self.factor()?);
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let at = self.pos;
            let e = self.digits()?;
            let e: u32 = match e.try_into() {
                Ok(v) => v,
                Err(_) => {
                    self.pos = at;
                    return self.err("exponent too large");
                }
            };
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Series> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let s = self.poly()?;
                self.expect(b')')?;
                Ok(s)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.digits()?;
                Ok(Series::constant(&self.space, Scalar::from_integer(n)))
            }
            Some(_) => {
                let at = self.pos;
                let Some(name) = self.ident() else {
                    return self.err("expected a polynomial term");
                };
                if name == "O" && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let t = self.norm_value()?;
                    self.expect(b')')?;
                    return Ok(Series::zero(&self.space).with_tail(t));
                }
                match self.space.index_of(&name) {
                    Some(i) => Ok(Series::var(&self.space, i)),
                    None => {
                        self.pos = at;
                        Err(Error::UndeclaredVariable(name))
                    }
                }
            }
            None => self.err("unexpected end of input"),
        }
    }
}
