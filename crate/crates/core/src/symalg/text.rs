//! Deterministic line format and human-readable printing.
//!
//! Line format, one canonical term per line:
//!
//! ```text
//! RE IM ; E_1 .. E_n ; P_1 .. P_b ; F
//! ```
//!
//! `RE IM` are exact rationals, `E_k` the monomial exponents in registry
//! variable order, `P_k` the rational base exponents in registry base order
//! and `F` is `1` when the exponential atom is present.

use num_traits::{One, Zero};

use super::expr::{ExpandedTerm, SymExpr};
use super::poly::{parse_rat, rat_to_string, Coeff, Monomial, Rat};
use super::registry::{Registry, Var};
use crate::error::{Error, Result};
use crate::prelude::*;

pub fn to_lines(e: &SymExpr) -> String {
    let mut out = String::new();
    for t in e.expanded_terms() {
        let mono: Vec<String> = t.monomial.0.iter().map(|v| v.to_string()).collect();
        let pows: Vec<String> = t.base_exps.iter().map(rat_to_string).collect();
        out.push_str(&format!(
            "{} {} ; {} ; {} ; {}\n",
            rat_to_string(&t.coeff.re),
            rat_to_string(&t.coeff.im),
            mono.join(" "),
            pows.join(" "),
            u8::from(t.exp)
        ));
    }
    out
}

/// Parses lines written by [`to_lines`]. `first_line` offsets error line numbers.
pub fn from_lines(reg: &Arc<Registry>, text: &str, first_line: usize) -> Result<SymExpr> {
    let mut terms = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = first_line + k;
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        let fields: Vec<&str> = line.split(';').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(perr(format!("expected 4 `;`-separated fields, found {}", fields.len())));
        }
        let c: Vec<&str> = fields[0].split_whitespace().collect();
        if c.len() != 2 {
            return Err(perr("coefficient must be `RE IM`".into()));
        }
        let rat = |s: &str| parse_rat(s).ok_or_else(|| perr(format!("bad rational `{s}`")));
        let coeff = Coeff::new(rat(c[0])?, rat(c[1])?);
        let mono: Vec<u32> = fields[1]
            .split_whitespace()
            .map(|s| s.parse::<u32>().map_err(|_| perr(format!("bad exponent `{s}`"))))
            .collect::<Result<_>>()?;
        if mono.len() != reg.nvars() {
            return Err(perr(format!(
                "expected {} monomial exponents, found {}",
                reg.nvars(),
                mono.len()
            )));
        }
        let pows: Vec<Rat> = fields[2].split_whitespace().map(rat).collect::<Result<_>>()?;
        if pows.len() != reg.bases().len() {
            return Err(perr(format!(
                "expected {} base exponents, found {}",
                reg.bases().len(),
                pows.len()
            )));
        }
        let exp = match fields[3] {
            "0" => false,
            "1" => true,
            f => return Err(perr(format!("bad atom flag `{f}`"))),
        };
        terms.push(ExpandedTerm {
            coeff,
            monomial: Monomial(mono),
            base_exps: pows,
            exp,
        });
    }
    SymExpr::from_expanded(reg, &terms)
}

fn coeff_str(c: &Coeff) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => rat_to_string(&c.re),
        (true, false) => format!("{}*i", rat_to_string(&c.im)),
        (false, false) => format!("({} + {}*i)", rat_to_string(&c.re), rat_to_string(&c.im)),
    }
}

/// Human-readable form accepted by the expression parser.
pub fn pretty(e: &SymExpr) -> String {
    let reg = e.registry();
    let terms = e.expanded_terms();
    if terms.is_empty() {
        return "0".into();
    }
    let mut pieces = Vec::new();
    for t in terms {
        let mut factors = Vec::new();
        for (v, &p) in t.monomial.0.iter().enumerate() {
            match p {
                0 => {}
                1 => factors.push(reg.var_name(Var(v))),
                _ => factors.push(format!("{}^{}", reg.var_name(Var(v)), p)),
            }
        }
        for (b, r) in reg.bases().iter().zip(&t.base_exps) {
            if r.is_zero() {
                continue;
            }
            if r.is_one() {
                factors.push(b.name.clone());
            } else {
                factors.push(format!("{}^({})", b.name, rat_to_string(r)));
            }
        }
        if t.exp {
            factors.push("exp".into());
        }
        let c = coeff_str(&t.coeff);
        let s = if factors.is_empty() {
            c
        } else if c == "1" {
            factors.join("*")
        } else if c == "-1" {
            format!("-{}", factors.join("*"))
        } else {
            format!("{c}*{}", factors.join("*"))
        };
        pieces.push(s);
    }
    pieces.join(" + ")
}
