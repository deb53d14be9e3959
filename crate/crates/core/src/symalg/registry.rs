//! Variables, named parameters, positive bases and the exponential atom.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::RawExpr;
use super::parse;
use super::poly::Poly;
use crate::error::{bail, Error, Result};
use crate::prelude::*;

/// Index of a variable in the registry layout
/// `x_1..x_d, xi_1..xi_d, params...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Base {
    pub name: String,
    pub poly: Poly,
    pub(crate) text: String,
}

impl Base {
    /// The polynomial as it was written when registered.
    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpAtom {
    /// Parameter multiplying the exponent, conventionally `t`.
    pub param: Var,
    /// Exponent argument `X` in `e^{-t X}`; never carries the atom itself.
    pub arg: RawExpr,
    pub(crate) text: String,
}

/// Shared context of a family of expressions.
///
/// Bases must be pairwise coprime and must not be perfect powers; under
/// that assumption the canonical form of [`SymExpr`](super::SymExpr) is
/// unique, so structural equality is mathematical equality.
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    dim: usize,
    params: Vec<String>,
    bases: Vec<Base>,
    exp: Option<ExpAtom>,
}

const RESERVED: &[&str] = &["i", "exp", "pi"];
const SPOT_CHECK_SEED: u64 = 0x5eed_ba5e;
const SPOT_CHECK_SAMPLES: usize = 256;

impl Registry {
    pub fn builder(dim: usize) -> RegistryBuilder {
        RegistryBuilder {
            reg: Registry {
                dim,
                params: Vec::new(),
                bases: Vec::new(),
                exp: None,
            },
        }
    }

    /// Registry with no parameters or bases.
    pub fn plain(dim: usize) -> Arc<Registry> {
        Arc::new(Registry {
            dim,
            params: Vec::new(),
            bases: Vec::new(),
            exp: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nvars(&self) -> usize {
        2 * self.dim + self.params.len()
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn bases(&self) -> &[Base] {
        &self.bases
    }

    pub fn exp_atom(&self) -> Option<&ExpAtom> {
        self.exp.as_ref()
    }

    pub fn x(&self, i: usize) -> Var {
        assert!(i < self.dim, "x index out of range");
        Var(i)
    }

    pub fn xi(&self, i: usize) -> Var {
        assert!(i < self.dim, "xi index out of range");
        Var(self.dim + i)
    }

    pub fn param(&self, name: &str) -> Option<Var> {
        self.params
            .iter()
            .position(|p| p == name)
            .map(|k| Var(2 * self.dim + k))
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.bases.iter().position(|b| b.name == name)
    }

    pub fn var_name(&self, v: Var) -> String {
        let d = self.dim;
        let suffix = |i: usize| if d == 1 { String::new() } else { format!("{}", i + 1) };
        if v.0 < d {
            format!("x{}", suffix(v.0))
        } else if v.0 < 2 * d {
            format!("xi{}", suffix(v.0 - d))
        } else {
            self.params[v.0 - 2 * d].clone()
        }
    }

    /// Resolves a variable name (`x`, `xi` for d = 1; `x1`, `xi2`, … otherwise).
    pub fn lookup_var(&self, name: &str) -> Option<Var> {
        (0..self.nvars()).map(Var).find(|&v| self.var_name(v) == name)
    }

    /// Whether `base` depends on variable `v`.
    pub fn base_depends_on(&self, base: usize, v: Var) -> bool {
        self.bases[base].poly.degree_in(v.0) > 0
    }

    /// Deterministic text header describing this registry.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dim);
        for p in &self.params {
            out.push_str(&format!("param {p}\n"));
        }
        for b in &self.bases {
            out.push_str(&format!("base {} = {}\n", b.name, b.text));
        }
        if let Some(e) = &self.exp {
            out.push_str(&format!("exp {} : {}\n", self.var_name(e.param), e.text));
        }
        out
    }

    /// Parses the header written by [`Registry::to_text`]. Lines that are
    /// empty or start with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Arc<Registry>> {
        let mut builder: Option<RegistryBuilder> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: lineno + 1, msg };
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match kw {
                "dim" => {
                    if builder.is_some() {
                        return Err(perr("duplicate dim line".into()));
                    }
                    let d: usize = rest.parse().map_err(|_| perr(format!("bad dimension `{rest}`")))?;
                    builder = Some(Registry::builder(d));
                }
                "param" | "base" | "exp" => {
                    let b = builder.take().ok_or_else(|| perr("`dim` must come first".into()))?;
                    let b = match kw {
                        "param" => b.param(rest),
                        "base" => {
                            let (name, poly) = rest
                                .split_once('=')
                                .ok_or_else(|| perr("expected `base NAME = POLY`".into()))?;
                            b.base(name.trim(), poly.trim())
                        }
                        _ => {
                            let (p, arg) = rest
                                .split_once(':')
                                .ok_or_else(|| perr("expected `exp PARAM : EXPR`".into()))?;
                            b.exp_atom(p.trim(), arg.trim())
                        }
                    };
                    builder = Some(b.map_err(|e| perr(e.to_string()))?);
                }
                _ => return Err(perr(format!("unknown registry keyword `{kw}`"))),
            }
        }
        builder
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: "missing `dim` line".into(),
            })?
            .build()
    }
}

pub struct RegistryBuilder {
    reg: Registry,
}

impl RegistryBuilder {
    fn check_name(&self, name: &str) -> Result<()> {
        let ok_start = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        if !ok_start || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            bail!(InvalidParameter, "invalid identifier `{name}`");
        }
        let clashes = RESERVED.contains(&name)
            || self.reg.lookup_var(name).is_some()
            || self.reg.base_index(name).is_some()
            || (0..self.reg.dim).any(|i| {
                // Reserve both naming schemes so adding parameters never shadows phase variables.
                let s = format!("{}", i + 1);
                name == format!("x{s}") || name == format!("xi{s}")
            })
            || name == "x"
            || name == "xi";
        if clashes {
            bail!(InvalidParameter, "name `{name}` is reserved or already in use");
        }
        Ok(())
    }

    pub fn param(mut self, name: &str) -> Result<Self> {
        if !self.reg.bases.is_empty() || self.reg.exp.is_some() {
            bail!(InvalidParameter, "parameters must be declared before bases");
        }
        self.check_name(name)?;
        self.reg.params.push(name.to_string());
        Ok(self)
    }

    /// Registers a positive base given as polynomial text.
    pub fn base(self, name: &str, poly_text: &str) -> Result<Self> {
        let poly = parse::parse_poly(&self.reg, poly_text)?;
        self.base_poly(name, poly, poly_text)
    }

    pub fn base_poly(mut self, name: &str, poly: Poly, text: &str) -> Result<Self> {
        if self.reg.exp.is_some() {
            bail!(InvalidParameter, "bases must be declared before the exponential atom");
        }
        self.check_name(name)?;
        if poly.nvars() != self.reg.nvars() {
            bail!(InvalidInput, "base `{name}` has the wrong number of variables");
        }
        if poly.as_constant().is_some() {
            bail!(InvalidInput, "base `{name}` is constant; use a coefficient instead");
        }
        if poly.terms().any(|(_, c)| !c.im.is_zero()) {
            bail!(InvalidInput, "base `{name}` must have real coefficients");
        }
        spot_check_positive(&self.reg, name, &poly)?;
        self.reg.bases.push(Base {
            name: name.to_string(),
            poly,
            text: text.trim().to_string(),
        });
        Ok(self)
    }

    /// Declares the atom `e^{-param * X}` with `X` given as expression text.
    pub fn exp_atom(mut self, param: &str, arg_text: &str) -> Result<Self> {
        if self.reg.exp.is_some() {
            bail!(InvalidParameter, "only one exponential atom is supported");
        }
        let p = self
            .reg
            .param(param)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown parameter `{param}`")))?;
        let arg = parse::parse_raw(&self.reg, arg_text)?;
        if arg.has_exp() {
            bail!(InvalidInput, "the exponent argument cannot contain the atom itself");
        }
        self.reg.exp = Some(ExpAtom {
            param: p,
            arg,
            text: arg_text.trim().to_string(),
        });
        Ok(self)
    }

    pub fn build(self) -> Result<Arc<Registry>> {
        Ok(Arc::new(self.reg))
    }
}

fn spot_check_positive(reg: &Registry, name: &str, poly: &Poly) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SPOT_CHECK_SEED);
    let phase = 2 * reg.dim;
    let mut point = vec![0.0; reg.nvars()];
    for sample in 0..=SPOT_CHECK_SAMPLES {
        if sample > 0 {
            for (k, v) in point.iter_mut().enumerate() {
                *v = if k < phase {
                    rng.gen_range(-10.0..10.0)
                } else {
                    rng.gen_range(0.0..100.0)
                };
            }
        }
        let val = poly.eval(&point);
        if !(val.re > 0.0) {
            bail!(
                DomainViolation,
                "base `{name}` is not positive at {point:?} (value {})",
                val.re
            );
        }
    }
    Ok(())
}
