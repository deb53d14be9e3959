//! Parser for the human-readable expression syntax.
//!
//! Grammar: sums and differences of products and quotients of factors; a
//! factor is a number (decimals are read exactly), `i`, a variable, a
//! parameter, a base name, `exp` for the exponential atom, or a
//! parenthesised expression, optionally raised to a power. Bases accept
//! rational exponents such as `a^(-1/2)`; anything else takes integer
//! exponents, negative ones only when the operand is invertible.

use num_traits::{One, Zero};

use super::expr::{Part, PartKey, RawExpr};
use super::poly::{coeff_i, coeff_rat, parse_rat, Poly, Rat};
use super::registry::Registry;
use crate::error::{Error, Result};
use crate::prelude::*;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let r = parse_rat(&s).ok_or_else(|| perr(format!("bad number `{s}`")))?;
            out.push(Tok::Num(r));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(perr(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

fn perr(msg: String) -> Error {
    Error::Parse { line: 1, msg }
}

struct Parser<'a> {
    reg: &'a Registry,
    toks: Vec<Tok>,
    pos: usize,
}

enum Factor {
    Expr(RawExpr),
    Base(usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(perr(format!("expected `{c}` at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<RawExpr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let t = self.term()?;
                acc = acc.add(self.reg, &t);
            } else if self.eat('-') {
                let t = self.term()?;
                acc = acc.add(self.reg, &t.neg());
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RawExpr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                let f = self.unary()?;
                acc = acc.mul(self.reg, &f)?;
            } else if self.eat('/') {
                let f = self.unary()?;
                let inv = f
                    .try_inverse(self.reg)
                    .map_err(|_| perr("division by a non-invertible expression".into()))?;
                acc = acc.mul(self.reg, &inv)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<RawExpr> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn exponent(&mut self) -> Result<Rat> {
        let paren = self.eat('(');
        let neg = self.eat('-');
        let mut r = match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                n
            }
            _ => return Err(perr("expected an exponent".into())),
        };
        if paren && self.eat('/') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(d)) if !d.is_zero() => {
                    self.pos += 1;
                    r /= d;
                }
                _ => return Err(perr("expected a non-zero exponent denominator".into())),
            }
        }
        if paren {
            self.expect(')')?;
        }
        Ok(if neg { -r } else { r })
    }

    fn power(&mut self) -> Result<RawExpr> {
        let f = self.atom()?;
        if !self.eat('^') {
            return Ok(match f {
                Factor::Expr(e) => e,
                Factor::Base(i) => self.base_pow(i, Rat::one())?,
            });
        }
        let r = self.exponent()?;
        match f {
            Factor::Base(i) => self.base_pow(i, r),
            Factor::Expr(e) => {
                if !r.is_integer() {
                    return Err(perr("only bases take fractional exponents".into()));
                }
                let n: i64 = i64::try_from(r.to_integer()).map_err(|_| perr("exponent too large".into()))?;
                let (base, n) = if n < 0 {
                    (
                        e.try_inverse(self.reg)
                            .map_err(|_| perr("negative power of a non-invertible expression".into()))?,
                        -n,
                    )
                } else {
                    (e, n)
                };
                let mut acc = RawExpr::from_poly(self.reg, Poly::one(self.reg.nvars()));
                for _ in 0..n {
                    acc = acc.mul(self.reg, &base)?;
                }
                Ok(acc)
            }
        }
    }

    fn base_pow(&self, i: usize, r: Rat) -> Result<RawExpr> {
        let mut exps = vec![Rat::zero(); self.reg.bases().len()];
        exps[i] = r;
        RawExpr::base_powers(self.reg, &exps)
    }

    fn atom(&mut self) -> Result<Factor> {
        let nv = self.reg.nvars();
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(Factor::Expr(RawExpr::from_poly(
                    self.reg,
                    Poly::constant(nv, coeff_rat(r)),
                )))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(Factor::Expr(e))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "i" {
                    return Ok(Factor::Expr(RawExpr::from_poly(
                        self.reg,
                        Poly::constant(nv, coeff_i()),
                    )));
                }
                if name == "exp" {
                    if self.reg.exp_atom().is_none() {
                        return Err(perr("`exp` used but no exponential atom is declared".into()));
                    }
                    let nb = self.reg.bases().len();
                    let key = PartKey {
                        frac: vec![Rat::zero(); nb],
                        exp: true,
                    };
                    let part = Part {
                        num: Poly::one(nv),
                        den: vec![0; nb],
                    };
                    return Ok(Factor::Expr(RawExpr::from_part(self.reg, key, part)));
                }
                if let Some(v) = self.reg.lookup_var(&name) {
                    return Ok(Factor::Expr(RawExpr::from_poly(self.reg, Poly::var(nv, v.0))));
                }
                if let Some(b) = self.reg.base_index(&name) {
                    return Ok(Factor::Base(b));
                }
                Err(perr(format!("unknown identifier `{name}`")))
            }
            other => Err(perr(format!("unexpected token {other:?}"))),
        }
    }
}

pub(crate) fn parse_raw(reg: &Registry, text: &str) -> Result<RawExpr> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(perr("empty expression".into()));
    }
    let mut p = Parser { reg, toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(perr(format!("trailing input at token {}", p.pos)));
    }
    Ok(e)
}

pub(crate) fn parse_poly(reg: &Registry, text: &str) -> Result<Poly> {
    let raw = parse_raw(reg, text)?;
    let nb = reg.bases().len();
    match raw.parts.len() {
        0 => Ok(Poly::zero(reg.nvars())),
        1 => {
            let (k, p) = raw.parts.iter().next().unwrap();
            if !k.exp && k.frac.iter().all(Zero::is_zero) && p.den.iter().all(|&d| d == 0) && p.den.len() == nb {
                Ok(p.num.clone())
            } else {
                Err(perr(format!("`{text}` is not a polynomial")))
            }
        }
        _ => Err(perr(format!("`{text}` is not a polynomial"))),
    }
}
