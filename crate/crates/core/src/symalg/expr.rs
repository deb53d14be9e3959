//! Canonical symbolic expressions.
//!
//! An expression is a finite sum of *parts*. A part is
//!
//! ```text
//! num / prod_i B_i^den_i * prod_i B_i^frac_i * [e^{-t X}]
//! ```
//!
//! with `num` a polynomial, `den_i` a non-negative integer, `frac_i` a
//! rational in `[0, 1)` and the exponential factor optional. Parts are keyed
//! by `(frac, exp)`; within a part no `B_i` with `den_i > 0` divides `num`.

use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::poly::{coeff_int, coeff_is_zero, coeff_rat, Coeff, Monomial, Poly, Rat};
use super::registry::{Registry, Var};
use crate::error::{bail, Error, Result};
use crate::prelude::*;

/// Largest denominator allowed in a base exponent.
pub const MAX_EXPONENT_DENOM: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct PartKey {
    pub frac: Vec<Rat>,
    pub exp: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Part {
    pub num: Poly,
    pub den: Vec<u32>,
}

/// Registry-free body of an expression; operations take the registry
/// explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RawExpr {
    pub(crate) parts: BTreeMap<PartKey, Part>,
}

fn zero_key(reg: &Registry) -> PartKey {
    PartKey {
        frac: vec![Rat::zero(); reg.bases().len()],
        exp: false,
    }
}

fn base_pow_poly(reg: &Registry, exps: &[u32]) -> Poly {
    let mut out = Poly::one(reg.nvars());
    for (b, &e) in reg.bases().iter().zip(exps) {
        if e > 0 {
            out = out.mul(&b.poly.pow(e));
        }
    }
    out
}

fn reduce(reg: &Registry, mut part: Part) -> Part {
    if part.num.is_zero() {
        part.den.iter_mut().for_each(|d| *d = 0);
        return part;
    }
    for (i, b) in reg.bases().iter().enumerate() {
        while part.den[i] > 0 {
            match part.num.div_exact(&b.poly) {
                Some(q) => {
                    part.num = q;
                    part.den[i] -= 1;
                }
                None => break,
            }
        }
    }
    part
}

impl RawExpr {
    pub fn zero() -> Self {
        RawExpr::default()
    }

    pub(crate) fn from_part(reg: &Registry, key: PartKey, part: Part) -> Self {
        let part = reduce(reg, part);
        let mut parts = BTreeMap::new();
        if !part.num.is_zero() {
            parts.insert(key, part);
        }
        RawExpr { parts }
    }

    pub fn from_poly(reg: &Registry, poly: Poly) -> Self {
        let den = vec![0; reg.bases().len()];
        Self::from_part(reg, zero_key(reg), Part { num: poly, den })
    }

    /// `prod_i B_i^{e_i}` for rational exponents.
    pub fn base_powers(reg: &Registry, exps: &[Rat]) -> Result<Self> {
        let nb = reg.bases().len();
        if exps.len() != nb {
            bail!(InvalidInput, "expected {nb} base exponents, got {}", exps.len());
        }
        let mut frac = Vec::with_capacity(nb);
        let mut den = Vec::with_capacity(nb);
        let mut pos = Vec::with_capacity(nb);
        for e in exps {
            if e.denom() > &MAX_EXPONENT_DENOM.into() {
                bail!(
                    InvalidParameter,
                    "exponent {e} has a denominator above {MAX_EXPONENT_DENOM}"
                );
            }
            let fl = e.floor();
            let n = fl
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::InvalidParameter("exponent too large".into()))?;
            if n.abs() > u32::MAX as i64 {
                bail!(InvalidParameter, "exponent too large");
            }
            frac.push(e - &fl);
            if n >= 0 {
                pos.push(n as u32);
                den.push(0);
            } else {
                pos.push(0);
                den.push((-n) as u32);
            }
        }
        let num = base_pow_poly(reg, &pos);
        Ok(Self::from_part(reg, PartKey { frac, exp: false }, Part { num, den }))
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn has_exp(&self) -> bool {
        self.parts.keys().any(|k| k.exp)
    }

    pub fn add(&self, reg: &Registry, other: &RawExpr) -> RawExpr {
        let mut out = self.clone();
        for (k, p) in &other.parts {
            out.add_part(reg, k.clone(), p.clone());
        }
        out
    }

    pub(crate) fn add_part(&mut self, reg: &Registry, key: PartKey, part: Part) {
        if part.num.is_zero() {
            return;
        }
        let merged = match self.parts.remove(&key) {
            None => reduce(reg, part),
            Some(old) => {
                let den: Vec<u32> = old.den.iter().zip(&part.den).map(|(a, b)| *a.max(b)).collect();
                let lift = |p: &Part| {
                    let extra: Vec<u32> = den.iter().zip(&p.den).map(|(d, e)| d - e).collect();
                    p.num.mul(&base_pow_poly(reg, &extra))
                };
                reduce(
                    reg,
                    Part {
                        num: lift(&old).add(&lift(&part)),
                        den,
                    },
                )
            }
        };
        if !merged.num.is_zero() {
            self.parts.insert(key, merged);
        }
    }

    pub fn neg(&self) -> RawExpr {
        self.scale(&coeff_int(-1))
    }

    pub fn scale(&self, c: &Coeff) -> RawExpr {
        if coeff_is_zero(c) {
            return RawExpr::zero();
        }
        RawExpr {
            parts: self
                .parts
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        Part {
                            num: p.num.scale(c),
                            den: p.den.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn mul_poly(&self, reg: &Registry, q: &Poly) -> RawExpr {
        let mut out = RawExpr::zero();
        for (k, p) in &self.parts {
            out.add_part(
                reg,
                k.clone(),
                Part {
                    num: p.num.mul(q),
                    den: p.den.clone(),
                },
            );
        }
        out
    }

    fn mul_part(reg: &Registry, k1: &PartKey, p1: &Part, k2: &PartKey, p2: &Part) -> Result<(PartKey, Part)> {
        if k1.exp && k2.exp {
            bail!(UnsupportedOperation, "product of two exponential atoms");
        }
        let nb = reg.bases().len();
        let mut frac = Vec::with_capacity(nb);
        let mut carry = vec![0u32; nb];
        for i in 0..nb {
            let s = &k1.frac[i] + &k2.frac[i];
            if s >= Rat::one() {
                frac.push(s - Rat::one());
                carry[i] = 1;
            } else {
                frac.push(s);
            }
        }
        let mut num = p1.num.mul(&p2.num);
        if carry.iter().any(|&c| c > 0) {
            num = num.mul(&base_pow_poly(reg, &carry));
        }
        let den = p1.den.iter().zip(&p2.den).map(|(a, b)| a + b).collect();
        Ok((
            PartKey {
                frac,
                exp: k1.exp || k2.exp,
            },
            Part { num, den },
        ))
    }

    pub fn mul(&self, reg: &Registry, other: &RawExpr) -> Result<RawExpr> {
        let mut out = RawExpr::zero();
        for (k1, p1) in &self.parts {
            for (k2, p2) in &other.parts {
                let (k, p) = Self::mul_part(reg, k1, p1, k2, p2)?;
                out.add_part(reg, k, p);
            }
        }
        Ok(out)
    }

    pub fn derivative(&self, reg: &Registry, v: Var) -> RawExpr {
        let mut out = RawExpr::zero();
        let exp_factor = reg.exp_atom().filter(|_| self.has_exp()).and_then(|atom| {
            // d/dv (-t X) = -[v = t] X - t dX/dv
            let t_poly = Poly::var(reg.nvars(), atom.param.0);
            let mut inner = atom.arg.derivative(reg, v).mul_poly(reg, &t_poly);
            if v == atom.param {
                inner = inner.add(reg, &atom.arg);
            }
            (!inner.is_zero()).then(|| inner.neg())
        });
        for (key, part) in &self.parts {
            out.add_part(
                reg,
                key.clone(),
                Part {
                    num: part.num.derivative(v.0),
                    den: part.den.clone(),
                },
            );
            for (i, b) in reg.bases().iter().enumerate() {
                let e = &key.frac[i] - Rat::from_integer(part.den[i].into());
                if e.is_zero() {
                    continue;
                }
                let db = b.poly.derivative(v.0);
                if db.is_zero() {
                    continue;
                }
                let mut den = part.den.clone();
                den[i] += 1;
                let num = part.num.mul(&db).scale(&coeff_rat(e));
                out.add_part(reg, key.clone(), Part { num, den });
            }
            if key.exp {
                if let Some(f) = &exp_factor {
                    let single = RawExpr {
                        parts: [(key.clone(), part.clone())].into_iter().collect(),
                    };
                    let prod = single.mul(reg, f).expect("exponent argument never carries the atom");
                    out = out.add(reg, &prod);
                }
            }
        }
        out
    }

    pub(crate) fn map_polys(&self, reg: &Registry, f: impl Fn(&Poly) -> Poly) -> RawExpr {
        let mut out = RawExpr::zero();
        for (k, p) in &self.parts {
            out.add_part(
                reg,
                k.clone(),
                Part {
                    num: f(&p.num),
                    den: p.den.clone(),
                },
            );
        }
        out
    }

    pub fn as_base_monomial(&self, reg: &Registry) -> Option<(Vec<Rat>, Coeff)> {
        if self.parts.len() != 1 {
            return None;
        }
        let (k, p) = self.parts.iter().next().unwrap();
        if k.exp {
            return None;
        }
        let mut num = p.num.clone();
        let mut exps: Vec<Rat> = k
            .frac
            .iter()
            .zip(&p.den)
            .map(|(f, &d)| f - Rat::from_integer(d.into()))
            .collect();
        for (i, b) in reg.bases().iter().enumerate() {
            while let Some(q) = num.div_exact(&b.poly) {
                num = q;
                exps[i] += Rat::one();
            }
        }
        let c = num.as_constant()?;
        (!coeff_is_zero(&c)).then_some((exps, c))
    }

    pub fn try_inverse(&self, reg: &Registry) -> Result<RawExpr> {
        let Some((exps, c)) = self.as_base_monomial(reg) else {
            bail!(InvalidInput, "expression is not a constant times base powers");
        };
        let neg: Vec<Rat> = exps.iter().map(|e| -e).collect();
        Ok(RawExpr::base_powers(reg, &neg)?.scale(&(Coeff::one() / c)))
    }

    pub fn eval(&self, reg: &Registry, vars: &[f64]) -> Result<Complex64> {
        let mut base_vals = Vec::with_capacity(reg.bases().len());
        for b in reg.bases() {
            let v = b.poly.eval(vars).re;
            base_vals.push(v);
        }
        let exp_val = match reg.exp_atom() {
            Some(atom) if self.has_exp() => {
                let t = vars[atom.param.0];
                let x = atom.arg.eval(reg, vars)?;
                (-x * t).exp()
            }
            _ => Complex64::new(0.0, 0.0),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, part) in &self.parts {
            let mut v = part.num.eval(vars);
            for (i, &bv) in base_vals.iter().enumerate() {
                let e = key.frac[i].to_f64().unwrap_or(0.0) - part.den[i] as f64;
                if e == 0.0 {
                    continue;
                }
                if !(bv > 0.0) {
                    bail!(
                        DomainViolation,
                        "base `{}` is {bv} (not positive) at {vars:?}",
                        reg.bases()[i].name
                    );
                }
                v *= if e.fract() == 0.0 {
                    bv.powi(e as i32)
                } else {
                    bv.powf(e)
                };
            }
            if key.exp {
                v *= exp_val;
            }
            acc += v;
        }
        Ok(acc)
    }
}

/// A canonical symbolic expression tied to its [`Registry`].
#[derive(Clone)]
pub struct SymExpr {
    reg: Arc<Registry>,
    raw: RawExpr,
}

impl PartialEq for SymExpr {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.reg, &other.reg) || self.reg == other.reg) && self.raw == other.raw
    }
}

impl fmt::Debug for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymExpr({})", self)
    }
}

/// One fully expanded term: `coeff * x^mono * prod B_i^{exps_i} * [e^{-tX}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedTerm {
    pub coeff: Coeff,
    pub monomial: Monomial,
    pub base_exps: Vec<Rat>,
    pub exp: bool,
}

impl SymExpr {
    pub(crate) fn from_raw(reg: &Arc<Registry>, raw: RawExpr) -> Self {
        SymExpr { reg: reg.clone(), raw }
    }

    pub fn zero(reg: &Arc<Registry>) -> Self {
        Self::from_raw(reg, RawExpr::zero())
    }

    pub fn one(reg: &Arc<Registry>) -> Self {
        Self::constant(reg, coeff_int(1))
    }

    pub fn constant(reg: &Arc<Registry>, c: Coeff) -> Self {
        Self::from_raw(reg, RawExpr::from_poly(reg, Poly::constant(reg.nvars(), c)))
    }

    pub fn rational(reg: &Arc<Registry>, n: i64, d: i64) -> Self {
        Self::constant(reg, coeff_rat(super::poly::rat(n, d)))
    }

    pub fn var(reg: &Arc<Registry>, v: Var) -> Self {
        Self::from_raw(reg, RawExpr::from_poly(reg, Poly::var(reg.nvars(), v.0)))
    }

    pub fn poly(reg: &Arc<Registry>, p: Poly) -> Self {
        assert_eq!(p.nvars(), reg.nvars(), "polynomial does not match the registry layout");
        Self::from_raw(reg, RawExpr::from_poly(reg, p))
    }

    /// `B^r` for the base called `name`.
    pub fn base_pow(reg: &Arc<Registry>, name: &str, r: Rat) -> Result<Self> {
        let idx = reg
            .base_index(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown base `{name}`")))?;
        let mut exps = vec![Rat::zero(); reg.bases().len()];
        exps[idx] = r;
        Ok(Self::from_raw(reg, RawExpr::base_powers(reg, &exps)?))
    }

    /// The exponential atom `e^{-t X}` itself.
    pub fn exp_atom(reg: &Arc<Registry>) -> Result<Self> {
        if reg.exp_atom().is_none() {
            bail!(InvalidInput, "registry has no exponential atom");
        }
        let den = vec![0; reg.bases().len()];
        let key = PartKey {
            frac: vec![Rat::zero(); reg.bases().len()],
            exp: true,
        };
        Ok(Self::from_raw(
            reg,
            RawExpr::from_part(
                reg,
                key,
                Part {
                    num: Poly::one(reg.nvars()),
                    den,
                },
            ),
        ))
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.reg
    }

    pub fn raw(&self) -> &RawExpr {
        &self.raw
    }

    fn same_registry(&self, other: &SymExpr) -> bool {
        Arc::ptr_eq(&self.reg, &other.reg) || self.reg == other.reg
    }

    fn assert_same(&self, other: &SymExpr) {
        assert!(self.same_registry(other), "expressions belong to different registries");
    }

    pub fn is_zero(&self) -> bool {
        self.raw.is_zero()
    }

    pub fn has_exp(&self) -> bool {
        self.raw.has_exp()
    }

    /// Number of canonical parts (distinct fractional-power/atom keys).
    pub fn part_count(&self) -> usize {
        self.raw.parts.len()
    }

    pub fn scale(&self, c: &Coeff) -> SymExpr {
        Self::from_raw(&self.reg, self.raw.scale(c))
    }

    /// Exact product. Fails if both factors carry the exponential atom.
    pub fn mul(&self, other: &SymExpr) -> Result<SymExpr> {
        if !self.same_registry(other) {
            bail!(InvalidInput, "expressions belong to different registries");
        }
        Ok(Self::from_raw(&self.reg, self.raw.mul(&self.reg, &other.raw)?))
    }

    pub fn pow(&self, n: u32) -> Result<SymExpr> {
        let mut out = SymExpr::one(&self.reg);
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn derivative(&self, v: Var) -> SymExpr {
        assert!(v.0 < self.reg.nvars(), "variable out of range");
        Self::from_raw(&self.reg, self.raw.derivative(&self.reg, v))
    }

    /// `D_v = -i d/dv`.
    pub fn d_op(&self, v: Var) -> SymExpr {
        self.derivative(v).scale(&super::poly::minus_i_pow(1))
    }

    pub fn evaluate(&self, p: &PhasePoint) -> Result<Complex64> {
        let vars = p.layout(&self.reg, self)?;
        let v = self.raw.eval(&self.reg, &vars)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            bail!(NumericalFailure, "non-finite value {v} at {vars:?}");
        }
        Ok(v)
    }

    /// Evaluates at a raw variable vector in registry layout.
    pub fn eval_vars(&self, vars: &[f64]) -> Result<Complex64> {
        if vars.len() != self.reg.nvars() {
            bail!(
                InvalidInput,
                "expected {} variables, got {}",
                self.reg.nvars(),
                vars.len()
            );
        }
        self.raw.eval(&self.reg, vars)
    }

    /// Variables the expression actually depends on, including those reached
    /// through bases and the exponential atom.
    pub fn used_vars(&self) -> Vec<Var> {
        let n = self.reg.nvars();
        let mut used = vec![false; n];
        let mark_raw = |raw: &RawExpr, used: &mut Vec<bool>| {
            for (k, p) in &raw.parts {
                for v in 0..n {
                    if p.num.degree_in(v) > 0 {
                        used[v] = true;
                    }
                }
                for (i, b) in self.reg.bases().iter().enumerate() {
                    if p.den[i] > 0 || !k.frac[i].is_zero() {
                        for v in 0..n {
                            if b.poly.degree_in(v) > 0 {
                                used[v] = true;
                            }
                        }
                    }
                }
            }
        };
        mark_raw(&self.raw, &mut used);
        if self.has_exp() {
            let atom = self.reg.exp_atom().expect("atom flagged without registry atom");
            used[atom.param.0] = true;
            mark_raw(&atom.arg, &mut used);
        }
        (0..n).filter(|&v| used[v]).map(Var).collect()
    }

    /// The polynomial this expression equals, if it has no base powers or atom.
    pub fn as_poly(&self) -> Option<Poly> {
        match self.raw.parts.len() {
            0 => Some(Poly::zero(self.reg.nvars())),
            1 => {
                let (k, p) = self.raw.parts.iter().next().unwrap();
                let plain = !k.exp && k.frac.iter().all(Zero::is_zero) && p.den.iter().all(|&d| d == 0);
                plain.then(|| p.num.clone())
            }
            _ => None,
        }
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        self.as_poly().and_then(|p| p.as_constant())
    }

    pub fn is_real(&self) -> bool {
        self.raw
            .parts
            .values()
            .all(|p| p.num.terms().all(|(_, c)| c.im.is_zero()))
    }

    pub fn conj(&self) -> SymExpr {
        Self::from_raw(&self.reg, self.raw.map_polys(&self.reg, Poly::conj))
    }

    /// Real and imaginary coefficient parts as separate real expressions.
    pub fn re_im(&self) -> (SymExpr, SymExpr) {
        let re = self
            .raw
            .map_polys(&self.reg, |p| p.map_coeffs(|c| Complex::new(c.re.clone(), Rat::zero())));
        let im = self
            .raw
            .map_polys(&self.reg, |p| p.map_coeffs(|c| Complex::new(c.im.clone(), Rat::zero())));
        (Self::from_raw(&self.reg, re), Self::from_raw(&self.reg, im))
    }

    /// Inverse of a single product `c * prod_i B_i^{e_i}`.
    pub fn try_inverse(&self) -> Result<SymExpr> {
        Ok(Self::from_raw(
            &self.reg,
            self.raw
                .try_inverse(&self.reg)
                .map_err(|_| Error::InvalidInput(format!("`{self}` is not a constant times base powers")))?,
        ))
    }

    /// Writes the expression as `c * prod_i B_i^{e_i}` when possible.
    pub fn as_base_monomial(&self) -> Option<(Vec<Rat>, Coeff)> {
        self.raw.as_base_monomial(&self.reg)
    }

    /// Drops the exponential atom from every part. Every non-zero part must
    /// carry it.
    pub fn strip_exp(&self) -> Result<SymExpr> {
        let mut out = RawExpr::zero();
        for (k, p) in &self.raw.parts {
            if !k.exp {
                bail!(InvalidInput, "expression has parts without the exponential atom");
            }
            out.add_part(
                &self.reg,
                PartKey {
                    frac: k.frac.clone(),
                    exp: false,
                },
                p.clone(),
            );
        }
        Ok(Self::from_raw(&self.reg, out))
    }

    /// Multiplies by the exponential atom.
    pub fn with_exp(&self) -> Result<SymExpr> {
        self.mul(&SymExpr::exp_atom(&self.reg)?)
    }

    fn check_param_free_bases(&self, v: Var) -> Result<()> {
        for (k, p) in &self.raw.parts {
            if k.exp {
                bail!(
                    UnsupportedOperation,
                    "operation requires an expression without the exponential atom"
                );
            }
            for (i, b) in self.reg.bases().iter().enumerate() {
                let involved = p.den[i] > 0 || !k.frac[i].is_zero();
                if involved && b.poly.degree_in(v.0) > 0 {
                    bail!(
                        UnsupportedOperation,
                        "base `{}` depends on `{}`",
                        b.name,
                        self.reg.var_name(v)
                    );
                }
            }
        }
        Ok(())
    }

    /// Antiderivative in `v` vanishing at `v = 0`. Bases may not depend on `v`.
    pub fn integrate_from_zero(&self, v: Var) -> Result<SymExpr> {
        self.check_param_free_bases(v)?;
        Ok(Self::from_raw(
            &self.reg,
            self.raw.map_polys(&self.reg, |p| p.integrate(v.0)),
        ))
    }

    /// Substitutes `v = 0`. Bases may not depend on `v`.
    pub fn at_zero(&self, v: Var) -> Result<SymExpr> {
        self.check_param_free_bases(v)?;
        Ok(Self::from_raw(
            &self.reg,
            self.raw.map_polys(&self.reg, |p| p.at_zero(v.0)),
        ))
    }

    /// Highest power of `v` appearing in a numerator.
    pub fn degree_in(&self, v: Var) -> u32 {
        self.raw.parts.values().map(|p| p.num.degree_in(v.0)).max().unwrap_or(0)
    }

    /// Canonical monomial expansion, sorted by (monomial, base exponents, atom).
    pub fn expanded_terms(&self) -> Vec<ExpandedTerm> {
        let mut map: BTreeMap<(Monomial, Vec<Rat>, bool), Coeff> = BTreeMap::new();
        for (k, p) in &self.raw.parts {
            let exps: Vec<Rat> = k
                .frac
                .iter()
                .zip(&p.den)
                .map(|(f, &d)| f - Rat::from_integer(d.into()))
                .collect();
            for (m, c) in p.num.terms() {
                let slot = map
                    .entry((m.clone(), exps.clone(), k.exp))
                    .or_insert_with(|| coeff_int(0));
                *slot = &*slot + c;
            }
        }
        map.into_iter()
            .filter(|(_, c)| !coeff_is_zero(c))
            .map(|((monomial, base_exps, exp), coeff)| ExpandedTerm {
                coeff,
                monomial,
                base_exps,
                exp,
            })
            .collect()
    }

    /// Rebuilds an expression from expanded terms.
    pub fn from_expanded(reg: &Arc<Registry>, terms: &[ExpandedTerm]) -> Result<SymExpr> {
        let mut out = RawExpr::zero();
        for t in terms {
            if t.monomial.0.len() != reg.nvars() {
                bail!(
                    InvalidInput,
                    "monomial has {} exponents, expected {}",
                    t.monomial.0.len(),
                    reg.nvars()
                );
            }
            let mut piece = RawExpr::base_powers(reg, &t.base_exps)?;
            piece = piece.mul_poly(reg, &Poly::monomial(t.monomial.clone(), t.coeff.clone()));
            if t.exp {
                piece = piece.mul(reg, &SymExpr::exp_atom(reg)?.raw)?;
            }
            out = out.add(reg, &piece);
        }
        Ok(Self::from_raw(reg, out))
    }

    /// Least common multiple of exponent denominators over all bases.
    pub fn exponent_lcm(&self) -> i64 {
        let mut l = 1i64;
        for k in self.raw.parts.keys() {
            for f in &k.frac {
                l = l.lcm(&f.denom().to_i64().unwrap_or(1));
            }
        }
        l
    }
}

impl Add for &SymExpr {
    type Output = SymExpr;
    fn add(self, rhs: &SymExpr) -> SymExpr {
        self.assert_same(rhs);
        SymExpr::from_raw(&self.reg, self.raw.add(&self.reg, &rhs.raw))
    }
}

impl Sub for &SymExpr {
    type Output = SymExpr;
    fn sub(self, rhs: &SymExpr) -> SymExpr {
        self.assert_same(rhs);
        SymExpr::from_raw(&self.reg, self.raw.add(&self.reg, &rhs.raw.neg()))
    }
}

impl Neg for &SymExpr {
    type Output = SymExpr;
    fn neg(self) -> SymExpr {
        SymExpr::from_raw(&self.reg, self.raw.neg())
    }
}

impl Add for SymExpr {
    type Output = SymExpr;
    fn add(self, rhs: SymExpr) -> SymExpr {
        &self + &rhs
    }
}

impl Sub for SymExpr {
    type Output = SymExpr;
    fn sub(self, rhs: SymExpr) -> SymExpr {
        &self - &rhs
    }
}

impl Neg for SymExpr {
    type Output = SymExpr;
    fn neg(self) -> SymExpr {
        -&self
    }
}

/// Multiplication by a scalar coefficient.
impl Mul<&Coeff> for &SymExpr {
    type Output = SymExpr;
    fn mul(self, rhs: &Coeff) -> SymExpr {
        self.scale(rhs)
    }
}

/// A point of phase space with named parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub params: BTreeMap<String, f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        assert_eq!(x.len(), xi.len(), "x and xi must have equal length");
        PhasePoint {
            x,
            xi,
            params: BTreeMap::new(),
        }
    }

    /// One-dimensional point `(x, xi)`.
    pub fn d1(x: f64, xi: f64) -> Self {
        Self::new(vec![x], vec![xi])
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `<w> = (1 + |x|^2 + |xi|^2)^{1/2}`
    pub fn japanese(&self) -> f64 {
        let s: f64 = self.x.iter().chain(&self.xi).map(|v| v * v).sum();
        (1.0 + s).sqrt()
    }

    /// Variable vector in registry layout; parameters the expression needs
    /// must be present.
    pub fn layout(&self, reg: &Registry, e: &SymExpr) -> Result<Vec<f64>> {
        if self.dim() != reg.dim() {
            bail!(
                InvalidInput,
                "point has dimension {}, registry {}",
                self.dim(),
                reg.dim()
            );
        }
        let mut vars = Vec::with_capacity(reg.nvars());
        vars.extend_from_slice(&self.x);
        vars.extend_from_slice(&self.xi);
        for name in reg.params() {
            vars.push(self.params.get(name).copied().unwrap_or(f64::NAN));
        }
        for v in e.used_vars() {
            if vars[v.0].is_nan() {
                bail!(InvalidInput, "parameter `{}` is required but not set", reg.var_name(v));
            }
        }
        // Unused parameters are irrelevant; zero them so NaN cannot leak.
        for v in vars.iter_mut() {
            if v.is_nan() {
                *v = 0.0;
            }
        }
        Ok(vars)
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::pretty(self))
    }
}
