//! Truncated formal series of symbols and the Weyl sharp product.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{bail, Error, Result};
use crate::prelude::*;
use crate::special::gauss_legendre_on;
use crate::symalg::poly::{coeff_rat, minus_i_pow, Coeff, Rat};
use crate::symalg::{PhasePoint, Registry, SymExpr};
use crate::weights::WeightSequence;

/// Default truncation length.
pub const DEFAULT_ORDER: usize = 6;

/// `a_0 + a_1 + … + a_{N-1}`, term `j` carrying weight `<w>^{-2jρ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalSeries {
    reg: Arc<Registry>,
    terms: Vec<SymExpr>,
}

impl FormalSeries {
    pub fn new(terms: Vec<SymExpr>) -> Result<Self> {
        let Some(first) = terms.first() else {
            bail!(InvalidInput, "a formal series needs at least one term");
        };
        let reg = first.registry().clone();
        if terms.iter().any(|t| **t.registry() != *reg) {
            bail!(InvalidInput, "series terms belong to different registries");
        }
        Ok(FormalSeries { reg, terms })
    }

    /// The series `a + 0 + 0 + …` of length `order`.
    pub fn single(a: SymExpr, order: usize) -> Self {
        let order = order.max(1);
        let reg = a.registry().clone();
        let mut terms = vec![a];
        terms.resize(order, SymExpr::zero(&reg));
        FormalSeries { reg, terms }
    }

    /// The unit `1 + 0 + …`.
    pub fn unit(reg: &Arc<Registry>, order: usize) -> Self {
        Self::single(SymExpr::one(reg), order)
    }

    pub fn zero(reg: &Arc<Registry>, order: usize) -> Self {
        Self::single(SymExpr::zero(reg), order)
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.reg
    }

    pub fn dim(&self) -> usize {
        self.reg.dim()
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[SymExpr] {
        &self.terms
    }

    pub fn term(&self, j: usize) -> &SymExpr {
        &self.terms[j]
    }

    pub fn into_terms(self) -> Vec<SymExpr> {
        self.terms
    }

    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.order() {
            bail!(
                InvalidParameter,
                "cannot truncate a series of order {} to {n}",
                self.order()
            );
        }
        Ok(FormalSeries {
            reg: self.reg.clone(),
            terms: self.terms[..n].to_vec(),
        })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&SymExpr, &SymExpr) -> SymExpr) -> Result<Self> {
        if self.order() != other.order() {
            bail!(
                InvalidInput,
                "series orders differ: {} vs {}",
                self.order(),
                other.order()
            );
        }
        if *self.reg != *other.reg {
            bail!(InvalidInput, "series belong to different registries");
        }
        let terms = self.terms.iter().zip(&other.terms).map(|(a, b)| f(a, b)).collect();
        Ok(FormalSeries {
            reg: self.reg.clone(),
            terms,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        FormalSeries {
            reg: self.reg.clone(),
            terms: self.terms.iter().map(|t| t.scale(c)).collect(),
        }
    }

    /// Multiplies every term by the same expression.
    pub fn mul_expr(&self, e: &SymExpr) -> Result<Self> {
        let terms = self.terms.iter().map(|t| t.mul(e)).collect::<Result<_>>()?;
        Ok(FormalSeries {
            reg: self.reg.clone(),
            terms,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(SymExpr::is_zero)
    }

    /// Registry header, `order N`, then `term j` blocks in line format.
    pub fn to_text(&self) -> String {
        let mut out = self.reg.to_text();
        out.push_str(&format!("order {}\n", self.order()));
        for (j, t) in self.terms.iter().enumerate() {
            out.push_str(&format!("term {j}\n"));
            out.push_str(&t.to_lines());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let order_at = lines
            .iter()
            .position(|l| l.trim_start().starts_with("order"))
            .ok_or_else(|| Error::Parse {
                line: lines.len(),
                msg: "missing `order` line".into(),
            })?;
        let reg = Registry::from_text(&lines[..order_at].join("\n"))?;
        Self::from_text_with(&reg, &lines[order_at..].join("\n"), order_at + 1)
    }

    /// Parses the part after the registry header against an existing registry.
    pub fn from_text_with(reg: &Arc<Registry>, body: &str, first_line: usize) -> Result<Self> {
        let lines: Vec<&str> = body.lines().collect();
        let perr = |k: usize, msg: String| Error::Parse {
            line: first_line + k,
            msg,
        };
        let mut k = 0;
        while k < lines.len() && lines[k].trim().is_empty() {
            k += 1;
        }
        let order: usize = lines
            .get(k)
            .and_then(|l| l.trim().strip_prefix("order"))
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| perr(k, "expected `order N`".into()))?;
        if order == 0 {
            return Err(perr(k, "order must be positive".into()));
        }
        let mut terms = Vec::with_capacity(order);
        k += 1;
        while k < lines.len() {
            let line = lines[k].trim();
            if line.is_empty() || line.starts_with('#') {
                k += 1;
                continue;
            }
            let j: usize = line
                .strip_prefix("term")
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| perr(k, format!("expected `term {}`", terms.len())))?;
            if j != terms.len() {
                return Err(perr(k, format!("expected `term {}`, found `term {j}`", terms.len())));
            }
            let start = k + 1;
            let mut end = start;
            while end < lines.len() && !lines[end].trim_start().starts_with("term") {
                end += 1;
            }
            let body = lines[start..end].join("\n");
            terms.push(SymExpr::from_lines(reg, &body).map_err(|e| match e {
                Error::Parse { line, msg } => Error::Parse {
                    line: line + first_line + start - 1,
                    msg,
                },
                other => other,
            })?);
            k = end;
        }
        if terms.len() != order {
            return Err(perr(
                k,
                format!("declared order {order} but found {} terms", terms.len()),
            ));
        }
        FormalSeries::new(terms)
    }
}

/// Memoised partial derivatives `∂_ξ^α ∂_x^β e`, indexed by `[α.., β..]`.
pub(crate) struct DerivCache {
    cache: BTreeMap<Vec<u32>, SymExpr>,
    dim: usize,
}

impl DerivCache {
    pub(crate) fn new(e: &SymExpr) -> Self {
        let dim = e.registry().dim();
        let mut cache = BTreeMap::new();
        cache.insert(vec![0; 2 * dim], e.clone());
        DerivCache { cache, dim }
    }

    pub(crate) fn get(&mut self, idx: &[u32]) -> SymExpr {
        if let Some(e) = self.cache.get(idx) {
            return e.clone();
        }
        let k = idx.iter().position(|&v| v > 0).expect("base entry is always cached");
        let mut lower = idx.to_vec();
        lower[k] -= 1;
        let prev = self.get(&lower);
        let reg = prev.registry().clone();
        let var = if k < self.dim { reg.xi(k) } else { reg.x(k - self.dim) };
        let d = prev.derivative(var);
        self.cache.insert(idx.to_vec(), d.clone());
        d
    }
}

/// All `(α, β) ∈ N^d × N^d` with `|α| + |β| = l`, as concatenated vectors.
pub fn multi_indices(dim: usize, l: u32) -> Vec<Vec<u32>> {
    fn rec(slots: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=rem {
            cur.push(v);
            rec(slots - 1, rem - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(2 * dim, l, &mut Vec::new(), &mut out);
    out
}

fn factorial_big(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn multi_factorial(v: &[u32]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, &k| acc * factorial_big(k))
}

/// Coefficient `(-1)^{|β|} (-i)^l / (α! β! 2^l)` of `∂_ξ^α ∂_x^β a · ∂_ξ^β ∂_x^α b`
/// in the sharp product (the `(-i)^l` collects the two `D = -i∂` factors).
pub(crate) fn sharp_coefficient(alpha: &[u32], beta: &[u32]) -> Coeff {
    let l: u32 = alpha.iter().sum::<u32>() + beta.iter().sum::<u32>();
    let nb: u32 = beta.iter().sum();
    let den = multi_factorial(alpha) * multi_factorial(beta) * (BigInt::one() << l as usize);
    let sign = if nb % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    coeff_rat(Rat::new(sign, den)) * minus_i_pow(l)
}

/// Swaps the `ξ` and `x` halves of a concatenated multi-index.
pub(crate) fn swap_halves(idx: &[u32]) -> Vec<u32> {
    let d = idx.len() / 2;
    idx[d..].iter().chain(&idx[..d]).copied().collect()
}

/// The bilinear pairing `Σ_{|α+β|=l} coef · ∂_ξ^α D_x^β a · ∂_ξ^β D_x^α b`.
pub(crate) fn moyal_pairing(da: &mut DerivCache, db: &mut DerivCache, l: u32) -> Result<SymExpr> {
    let reg = da.cache.values().next().unwrap().registry().clone();
    let d = reg.dim();
    let mut acc = SymExpr::zero(&reg);
    for idx in multi_indices(d, l) {
        let (alpha, beta) = idx.split_at(d);
        let fa = da.get(&idx);
        if fa.is_zero() {
            continue;
        }
        let fb = db.get(&swap_halves(&idx));
        if fb.is_zero() {
            continue;
        }
        acc = &acc + &fa.mul(&fb)?.scale(&sharp_coefficient(alpha, beta));
    }
    Ok(acc)
}

fn check_compatible(a: &FormalSeries, b: &FormalSeries, n: usize) -> Result<()> {
    if a.dim() != b.dim() {
        bail!(InvalidInput, "dimension mismatch: {} vs {}", a.dim(), b.dim());
    }
    if *a.reg != *b.reg {
        bail!(InvalidInput, "series belong to different registries");
    }
    if n == 0 || n > a.order() || n > b.order() {
        bail!(
            InvalidInput,
            "order {n} needs inputs of at least that order (have {} and {})",
            a.order(),
            b.order()
        );
    }
    Ok(())
}

/// `c_j = Σ_{s+k+l=j} Σ_{|α+β|=l} (-1)^{|β|}/(α!β!2^l) ∂_ξ^α D_x^β a_s · ∂_ξ^β D_x^α b_k`
/// for `j < n`.
pub fn sharp(a: &FormalSeries, b: &FormalSeries, n: usize) -> Result<FormalSeries> {
    check_compatible(a, b, n)?;
    let mut da: Vec<DerivCache> = a.terms[..n].iter().map(DerivCache::new).collect();
    let mut db: Vec<DerivCache> = b.terms[..n].iter().map(DerivCache::new).collect();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut cj = SymExpr::zero(&a.reg);
        for s in 0..=j {
            if a.terms[s].is_zero() {
                continue;
            }
            for k in 0..=(j - s) {
                if b.terms[k].is_zero() {
                    continue;
                }
                let l = (j - s - k) as u32;
                let (da_s, db_k) = (&mut da[s], &mut db[k]);
                cj = &cj + &moyal_pairing(da_s, db_k, l)?;
            }
        }
        out.push(cj);
    }
    FormalSeries::new(out)
}

/// `A^{#k}` folded from the left; `k = 0` gives the unit.
pub fn sharp_power(a: &FormalSeries, k: u32, n: usize) -> Result<FormalSeries> {
    if n == 0 || n > a.order() {
        bail!(InvalidInput, "order {n} exceeds the input order {}", a.order());
    }
    let mut acc = FormalSeries::unit(&a.reg, n);
    if k == 0 {
        return Ok(acc);
    }
    acc = a.truncate(n)?;
    for _ in 1..k {
        acc = sharp(&acc, a, n)?;
    }
    Ok(acc)
}

/// Exact conversion of a double to a rational.
pub fn rat_from_f64(v: f64) -> Result<Rat> {
    Rat::from_float(v).ok_or_else(|| Error::InvalidParameter(format!("{v} is not finite")))
}

/// Coefficients of the `τ → τ_1` change of quantization:
/// `p_j = Σ_{k+|β|=j} (τ_1-τ)^{|β|}/β! ∂_ξ^β D_x^β a_k`.
pub fn change_quantization(a: &FormalSeries, tau: &Rat, tau1: &Rat, n: usize) -> Result<FormalSeries> {
    if n == 0 || n > a.order() {
        bail!(InvalidInput, "order {n} exceeds the input order {}", a.order());
    }
    let d = a.dim();
    let delta = tau1 - tau;
    let mut caches: Vec<DerivCache> = a.terms[..n].iter().map(DerivCache::new).collect();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut pj = SymExpr::zero(&a.reg);
        for (k, cache) in caches.iter_mut().enumerate().take(j + 1) {
            if a.terms[k].is_zero() {
                continue;
            }
            let order = (j - k) as u32;
            if order > 0 && delta.is_zero() {
                continue;
            }
            // β ranges over N^d with |β| = order; the index is [β, β].
            for half in multi_indices(d, order)
                .into_iter()
                .filter(|v| v[d..].iter().all(|&x| x == 0))
            {
                let beta = &half[..d];
                let mut idx = beta.to_vec();
                idx.extend_from_slice(beta);
                let deriv = cache.get(&idx);
                if deriv.is_zero() {
                    continue;
                }
                let mut c = Rat::new(BigInt::one(), multi_factorial(beta));
                for _ in 0..order {
                    c *= &delta;
                }
                let coef = coeff_rat(c) * minus_i_pow(order);
                pj = &pj + &deriv.scale(&coef);
            }
        }
        out.push(pj);
    }
    FormalSeries::new(out)
}

/// Inner and outer shell radii of the cutoff, measured in `<·>`.
pub const BUMP_INNER: f64 = 2.0;
pub const BUMP_OUTER: f64 = 3.0;

/// Smooth step `ψ`: 1 for `s <= 2`, 0 for `s >= 3`, the normalised integral of
/// `exp(-1/((3-u)(u-2)))` in between.
#[derive(Clone, Debug)]
pub struct Bump {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

fn bump_density(u: f64) -> f64 {
    let p = (BUMP_OUTER - u) * (u - BUMP_INNER);
    if p <= 0.0 {
        0.0
    } else {
        (-1.0 / p).exp()
    }
}

impl Bump {
    const NODES: usize = 64;

    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre_on(Self::NODES, -1.0, 1.0);
        let mut b = Bump {
            nodes,
            weights,
            total: 1.0,
        };
        b.total = b.integral(BUMP_OUTER);
        b
    }

    fn integral(&self, s: f64) -> f64 {
        let (c, h) = (0.5 * (BUMP_INNER + s), 0.5 * (s - BUMP_INNER));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * bump_density(c + h * t))
            .sum::<f64>()
    }

    /// `ψ(s)` as a function of the bracket value `s = <v>`.
    pub fn psi(&self, s: f64) -> f64 {
        if s <= BUMP_INNER {
            1.0
        } else if s >= BUMP_OUTER {
            0.0
        } else {
            (1.0 - self.integral(s) / self.total).clamp(0.0, 1.0)
        }
    }
}

impl Default for Bump {
    fn default() -> Self {
        Self::new()
    }
}

fn bracket(v: &[f64], scale: f64) -> f64 {
    (1.0 + v.iter().map(|t| (t / scale) * (t / scale)).sum::<f64>()).sqrt()
}

/// Cutoff data for resummation: `χ_{n,R}(w) = χ(w / (R m_n))`.
#[derive(Clone, Debug)]
pub struct CutoffConfig {
    pub r: f64,
    /// `m_p = M_p / M_{p-1}` with `m_0 = 0`.
    pub m_values: Vec<f64>,
    bump: Bump,
}

impl CutoffConfig {
    pub fn new(r: f64, m_values: Vec<f64>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            bail!(InvalidParameter, "cutoff radius R must be positive, got {r}");
        }
        if m_values.windows(2).skip(1).any(|w| w[1] < w[0]) {
            bail!(InvalidParameter, "m_p must be non-decreasing");
        }
        if m_values.iter().skip(1).any(|m| !(*m > 0.0)) {
            bail!(InvalidParameter, "m_p must be positive for p >= 1");
        }
        Ok(CutoffConfig {
            r,
            m_values,
            bump: Bump::new(),
        })
    }

    pub fn from_weights(r: f64, ws: &WeightSequence) -> Result<Self> {
        Self::new(r, ws.ratios())
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    /// `χ_{n,R}(w)`; zero for `n = 0`.
    pub fn chi(&self, n: usize, w: &PhasePoint) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let m = *self.m_values.get(n).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "cutoff index {n} beyond the tabulated m_p (len {})",
                self.m_values.len()
            ))
        })?;
        let scale = self.r * m;
        Ok(self.bump.psi(bracket(&w.x, scale)) * self.bump.psi(bracket(&w.xi, scale)))
    }
}

/// How a truncated series is turned into a number at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// `Σ_j (1 - χ_{j,R}(w)) a_j(w)`
    Cutoff,
    /// `Σ_{j < N*} a_j(w)` with `N*` the first index of the smallest `|a_j(w)|`;
    /// `a_0` is always kept.
    SmallestTerm,
}

/// Combines per-term values with the chosen strategy.
pub fn resum_values(values: &[Complex64], cfg: &CutoffConfig, w: &PhasePoint, strategy: Strategy) -> Result<Complex64> {
    match strategy {
        Strategy::Cutoff => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let c = cfg.chi(j, w)?;
                if c < 1.0 {
                    acc += v * (1.0 - c);
                }
            }
            Ok(acc)
        }
        Strategy::SmallestTerm => {
            if values.len() <= 1 {
                return Ok(values.first().copied().unwrap_or_default());
            }
            let mut best = 0;
            for (j, v) in values.iter().enumerate() {
                if v.norm() < values[best].norm() {
                    best = j;
                }
            }
            let stop = best.max(1);
            Ok(values[..stop].iter().sum())
        }
    }
}

/// Resummed value of a series at `w`.
pub fn resum_evaluate(a: &FormalSeries, cfg: &CutoffConfig, w: &PhasePoint, strategy: Strategy) -> Result<Complex64> {
    let values = a.terms.iter().map(|t| t.evaluate(w)).collect::<Result<Vec<_>>>()?;
    resum_values(&values, cfg, w, strategy)
}
