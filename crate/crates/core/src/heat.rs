//! Heat parametrix `u_j = Q_j e^{-tb}` for `∂_t + b^w`.

use crate::error::{bail, Result};
use crate::fsring::{moyal_pairing, multi_indices, resum_values, CutoffConfig, DerivCache, Strategy};
use crate::parametrix::fit_constants;
use crate::prelude::*;
use crate::symalg::poly::{coeff_int, coeff_rat};
use crate::symalg::{PhasePoint, Rat, Registry, SymExpr, Var};
use crate::weights::WeightSequence;

/// Name of the time parameter.
pub const TIME: &str = "t";

/// Registry for heat symbols: the parameter `t`, the given bases and the
/// atom `e^{-t b}`.
pub fn heat_registry(dim: usize, bases: &[(&str, &str)], b_text: &str) -> Result<Arc<Registry>> {
    let mut builder = Registry::builder(dim).param(TIME)?;
    for (name, text) in bases {
        builder = builder.base(name, text)?;
    }
    builder.exp_atom(TIME, b_text)?.build()
}

/// The exponent `b` of the registry's atom `e^{-t b}`.
pub fn heat_symbol(reg: &Arc<Registry>) -> Result<SymExpr> {
    let Some(atom) = reg.exp_atom() else {
        bail!(UnsupportedSymbol, "registry has no exponential atom");
    };
    if reg.var_name(atom.param) != TIME {
        bail!(UnsupportedSymbol, "the exponential atom must be e^{{-t b}}");
    }
    Ok(SymExpr::from_raw(reg, atom.arg.clone()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatTerm {
    pub j: usize,
    /// `e^{tb} u_j`, polynomial in `t`.
    pub q: SymExpr,
    /// Set when the `t`-degree of `q` exceeds `3j`.
    pub degree_guard_exceeded: bool,
}

impl HeatTerm {
    pub fn u(&self) -> Result<SymExpr> {
        self.q.with_exp()
    }

    pub fn t_degree(&self) -> u32 {
        let t = self.q.registry().param(TIME).expect("heat registry");
        self.q.degree_in(t)
    }
}

fn time_var(reg: &Registry) -> Result<Var> {
    reg.param(TIME)
        .ok_or_else(|| crate::Error::UnsupportedSymbol("registry has no parameter `t`".into()))
}

/// `u_j = -Σ_{l=1}^{j} e^{-tb} ∫_0^t e^{sb} P_l(b, u_{j-l})(s) ds` for `j < n`,
/// where `P_l` is the order-`l` sharp pairing.
pub fn heat_terms(b: &SymExpr, n: usize) -> Result<Vec<HeatTerm>> {
    if n == 0 {
        bail!(InvalidParameter, "heat order must be at least 1");
    }
    let reg = b.registry().clone();
    let atom_b = heat_symbol(&reg)?;
    if &atom_b != b {
        bail!(
            UnsupportedSymbol,
            "`{b}` is not the exponent `{atom_b}` of the registry's atom"
        );
    }
    let t = time_var(&reg)?;
    if b.has_exp() || b.used_vars().contains(&t) {
        bail!(UnsupportedSymbol, "b may not depend on t");
    }
    let mut db = DerivCache::new(b);
    let mut caches: Vec<DerivCache> = Vec::new();
    let mut out: Vec<HeatTerm> = Vec::with_capacity(n);
    for j in 0..n {
        let q = if j == 0 {
            SymExpr::one(&reg)
        } else {
            let mut rhs = SymExpr::zero(&reg);
            for l in 1..=j {
                if out[j - l].q.is_zero() {
                    continue;
                }
                rhs = &rhs + &moyal_pairing(&mut db, &mut caches[j - l], l as u32)?;
            }
            if rhs.is_zero() {
                SymExpr::zero(&reg)
            } else {
                rhs.strip_exp()?.integrate_from_zero(t)?.scale(&coeff_int(-1))
            }
        };
        let u = q.with_exp()?;
        caches.push(DerivCache::new(&u));
        let term = HeatTerm {
            j,
            degree_guard_exceeded: false,
            q,
        };
        let exceeded = term.t_degree() as usize > 3 * j;
        out.push(HeatTerm {
            degree_guard_exceeded: exceeded,
            ..term
        });
    }
    Ok(out)
}

/// `∂_t u_j + Σ_{k+l=j} P_l(b, u_k)`; zero for an exact solution.
pub fn pde_residual(terms: &[HeatTerm], j: usize) -> Result<SymExpr> {
    if j >= terms.len() {
        bail!(
            InvalidParameter,
            "residual {j} needs terms up to order {j}, have {}",
            terms.len()
        );
    }
    let reg = terms[0].q.registry().clone();
    let b = heat_symbol(&reg)?;
    let t = time_var(&reg)?;
    let mut db = DerivCache::new(&b);
    let mut acc = terms[j].u()?.derivative(t);
    for k in 0..=j {
        let mut du = DerivCache::new(&terms[k].u()?);
        acc = &acc + &moyal_pairing(&mut db, &mut du, (j - k) as u32)?;
    }
    Ok(acc)
}

/// `Σ_j (1 - χ_{j,R}(w)) u_j(t, w)`.
pub fn heat_evaluate(terms: &[HeatTerm], t: f64, w: &PhasePoint, cfg: &CutoffConfig) -> Result<Complex64> {
    let vals = term_values(terms, t, w)?;
    resum_values(&vals, cfg, w, Strategy::Cutoff)
}

/// `u_j(t, w)` for every term.
pub fn term_values(terms: &[HeatTerm], t: f64, w: &PhasePoint) -> Result<Vec<Complex64>> {
    if !(t >= 0.0) {
        bail!(InvalidParameter, "t must be non-negative, got {t}");
    }
    let wt = w.clone().with(TIME, t);
    terms.iter().map(|term| term.u()?.evaluate(&wt)).collect()
}

/// One sampled ratio of a derivative to its claimed bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundEntry {
    /// Term index (for `u_j`) or power (for `b^n`).
    pub j: usize,
    /// Order of the `t`-derivative.
    pub n: u32,
    pub alpha: Vec<u32>,
    pub point: usize,
    pub t: f64,
    /// Index into the weight sequence the bound uses.
    pub m: u32,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundFit {
    pub entries: Vec<BoundEntry>,
    pub fitted_h: f64,
    pub fitted_c: f64,
    /// Samples where the bound degenerates (`Re b = 0` with `n > 0`).
    pub skipped: usize,
}

impl BoundFit {
    fn from_entries(entries: Vec<BoundEntry>, skipped: usize) -> Self {
        let fit: Vec<(u32, f64)> = entries.iter().map(|e| (e.m, e.ratio)).collect();
        let (fitted_h, fitted_c) = fit_constants(&fit);
        BoundFit {
            entries,
            fitted_h,
            fitted_c,
            skipped,
        }
    }

    pub fn max_ratio(&self) -> f64 {
        self.entries.iter().map(|e| e.ratio).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.fitted_h.is_finite() && self.fitted_c.is_finite() && self.entries.iter().all(|e| e.ratio.is_finite())
    }
}

/// Sampled derivative bounds of the heat parametrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatBoundProfile {
    /// `|D_t^n D^α u_j| <w>^{ρ(|α|+2j)} e^{t Re b/4} / (n! A_{|α|+2j} (Re b)^n)`.
    pub terms: BoundFit,
    /// `|D_t^n D^α e^{-tb}| <w>^{ρ|α|} / (2^n A_α |b|^n e^{-t Re b} Σ_{r<=|α|} (t|b|)^r/r!)`.
    pub exponential: BoundFit,
    /// `|D^α b^n| <w>^{ρ|α|} / (2^n A_α |b|^n)`.
    pub powers: BoundFit,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Derivative `∂_t^n ∂_w^α` with `α` over the phase variables.
fn derive(e: &SymExpr, t: Var, n: u32, alpha: &[u32]) -> SymExpr {
    let mut out = e.clone();
    for _ in 0..n {
        out = out.derivative(t);
    }
    for (v, &k) in alpha.iter().enumerate() {
        for _ in 0..k {
            out = out.derivative(Var(v));
        }
    }
    out
}

pub fn bound_profile(
    terms: &[HeatTerm],
    grid: &[PhasePoint],
    t_grid: &[f64],
    n_max: u32,
    alpha_max: u32,
    ws: &WeightSequence,
    rho: f64,
) -> Result<HeatBoundProfile> {
    if n_max > 4 || alpha_max > 4 {
        bail!(InvalidParameter, "n_max and alpha_max are limited to 4");
    }
    if terms.is_empty() || grid.is_empty() || t_grid.is_empty() {
        bail!(InvalidInput, "bound_profile needs terms, points and times");
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0)) {
        bail!(InvalidParameter, "times must be non-negative, got {t}");
    }
    let need = alpha_max as usize + 2 * (terms.len() - 1);
    if need > ws.p_max() {
        bail!(InvalidParameter, "weight table too short: need index {need}");
    }
    let reg = terms[0].q.registry().clone();
    let t = time_var(&reg)?;
    let b = heat_symbol(&reg)?;
    let d = reg.dim();
    let ln_a = |m: u32| ws.ln_m(m as usize);

    let bvals = grid.iter().map(|w| b.evaluate(w)).collect::<Result<Vec<_>>>()?;
    let mut term_entries = Vec::new();
    let mut exp_entries = Vec::new();
    let mut pow_entries = Vec::new();
    let mut skipped = [0usize; 3];

    for term in terms {
        let u = term.u()?;
        for n in 0..=n_max {
            for k in 0..=alpha_max {
                for alpha in multi_indices(d, k) {
                    let du = derive(&u, t, n, &alpha);
                    let m = k + 2 * term.j as u32;
                    for (pi, w) in grid.iter().enumerate() {
                        let re_b = bvals[pi].re;
                        if n > 0 && re_b <= 0.0 {
                            skipped[0] += t_grid.len();
                            continue;
                        }
                        for &tv in t_grid {
                            let v = if du.is_zero() {
                                0.0
                            } else {
                                du.evaluate(&w.clone().with(TIME, tv))?.norm()
                            };
                            let ln_den = ln_a(m) + factorial(n).ln() + f64::from(n) * re_b.ln().max(f64::MIN);
                            let ratio = if v == 0.0 {
                                0.0
                            } else {
                                (v.ln() + rho * f64::from(m) * w.japanese().ln() + tv * re_b / 4.0 - ln_den).exp()
                            };
                            term_entries.push(BoundEntry {
                                j: term.j,
                                n,
                                alpha: alpha.clone(),
                                point: pi,
                                t: tv,
                                m,
                                ratio,
                            });
                        }
                    }
                }
            }
        }
    }

    let u0 = SymExpr::exp_atom(&reg)?;
    for n in 0..=n_max {
        for k in 0..=alpha_max {
            for alpha in multi_indices(d, k) {
                let du = derive(&u0, t, n, &alpha);
                for (pi, w) in grid.iter().enumerate() {
                    let bn = bvals[pi].norm();
                    if n > 0 && bn == 0.0 {
                        skipped[1] += t_grid.len();
                        continue;
                    }
                    for &tv in t_grid {
                        let v = if du.is_zero() {
                            0.0
                        } else {
                            du.evaluate(&w.clone().with(TIME, tv))?.norm()
                        };
                        let series: f64 = (0..=k).map(|r| (tv * bn).powi(r as i32) / factorial(r)).sum();
                        let ln_den = ln_a(k) + f64::from(n) * (2.0 * bn).ln() - tv * bvals[pi].re + series.ln();
                        let ratio = if v == 0.0 {
                            0.0
                        } else {
                            (v.ln() + rho * f64::from(k) * w.japanese().ln() - ln_den).exp()
                        };
                        exp_entries.push(BoundEntry {
                            j: 0,
                            n,
                            alpha: alpha.clone(),
                            point: pi,
                            t: tv,
                            m: k,
                            ratio,
                        });
                    }
                }
            }
        }
    }

    let mut bn_expr = SymExpr::one(&reg);
    for n in 0..=n_max {
        if n > 0 {
            bn_expr = bn_expr.mul(&b)?;
        }
        for k in 0..=alpha_max {
            for alpha in multi_indices(d, k) {
                let dv = derive(&bn_expr, t, 0, &alpha);
                for (pi, w) in grid.iter().enumerate() {
                    let bn = bvals[pi].norm();
                    if n > 0 && bn == 0.0 {
                        skipped[2] += 1;
                        continue;
                    }
                    let v = if dv.is_zero() { 0.0 } else { dv.evaluate(w)?.norm() };
                    let ln_den = ln_a(k) + f64::from(n) * (2.0 * bn).ln();
                    let ratio = if v == 0.0 {
                        0.0
                    } else {
                        (v.ln() + rho * f64::from(k) * w.japanese().ln() - ln_den).exp()
                    };
                    pow_entries.push(BoundEntry {
                        j: n as usize,
                        n: 0,
                        alpha: alpha.clone(),
                        point: pi,
                        t: 0.0,
                        m: k,
                        ratio,
                    });
                }
            }
        }
    }

    Ok(HeatBoundProfile {
        terms: BoundFit::from_entries(term_entries, skipped[0]),
        exponential: BoundFit::from_entries(exp_entries, skipped[1]),
        powers: BoundFit::from_entries(pow_entries, skipped[2]),
    })
}

/// Total order on multi-indices: by `|β|`, then lexicographically.
fn precedes(a: &[u32], b: &[u32]) -> bool {
    let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
    sa < sb || (sa == sb && a < b)
}

/// The index set `p(α, r)`: multisets `{(α^{(j)}, k_j)}` of distinct non-zero
/// multi-indices, increasing in the order above, with `Σ k_j = r` and
/// `Σ k_j α^{(j)} = α`.
pub fn faa_di_bruno_sets(alpha: &[u32], r: u32) -> Vec<Vec<(Vec<u32>, u32)>> {
    let mut candidates: Vec<Vec<u32>> = Vec::new();
    let mut cur = vec![0u32; alpha.len()];
    fn below(alpha: &[u32], pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == alpha.len() {
            if cur.iter().any(|&c| c > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=alpha[pos] {
            cur[pos] = v;
            below(alpha, pos + 1, cur, out);
        }
        cur[pos] = 0;
    }
    below(alpha, 0, &mut cur, &mut candidates);
    candidates.sort_by(|a, b| {
        if precedes(a, b) {
            core::cmp::Ordering::Less
        } else if precedes(b, a) {
            core::cmp::Ordering::Greater
        } else {
            core::cmp::Ordering::Equal
        }
    });

    fn rec(
        cands: &[Vec<u32>],
        start: usize,
        rem: &mut Vec<u32>,
        r_left: u32,
        cur: &mut Vec<(Vec<u32>, u32)>,
        out: &mut Vec<Vec<(Vec<u32>, u32)>>,
    ) {
        if rem.iter().all(|&v| v == 0) {
            if r_left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if r_left == 0 {
            return;
        }
        for i in start..cands.len() {
            let beta = &cands[i];
            let mut k = 1;
            while k <= r_left && beta.iter().zip(rem.iter()).all(|(&b, &m)| k * b <= m) {
                for (m, &b) in rem.iter_mut().zip(beta) {
                    *m -= k * b;
                }
                cur.push((beta.clone(), k));
                rec(cands, i + 1, rem, r_left - k, cur, out);
                cur.pop();
                for (m, &b) in rem.iter_mut().zip(beta) {
                    *m += k * b;
                }
                k += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(&candidates, 0, &mut alpha.to_vec(), r, &mut Vec::new(), &mut out);
    out
}

fn factorial_u128(n: u32) -> u128 {
    (1..=u128::from(n)).product()
}

fn binomial_u128(n: u32, k: u32) -> u128 {
    factorial_u128(n) / (factorial_u128(k) * factorial_u128(n - k))
}

/// `Σ_{r=1}^{|β|} C(|β|, r) Σ_{p(β,r)} r! / Π k_j!`.
pub fn faa_di_bruno_weight_sum(beta: &[u32]) -> u128 {
    let n: u32 = beta.iter().sum();
    let mut total = 0u128;
    for r in 1..=n {
        let inner: u128 = faa_di_bruno_sets(beta, r)
            .iter()
            .map(|set| factorial_u128(r) / set.iter().map(|(_, k)| factorial_u128(*k)).product::<u128>())
            .sum();
        total += binomial_u128(n, r) * inner;
    }
    total
}

/// `∂^α (f ∘ g)` assembled from `f^{(r)}(g)` through the index sets `p(α, r)`;
/// `alpha` runs over all variables of the registry.
pub fn faa_di_bruno(f_derivs: &dyn Fn(u32) -> Result<SymExpr>, g: &SymExpr, alpha: &[u32]) -> Result<SymExpr> {
    let reg = g.registry().clone();
    if alpha.len() != reg.nvars() {
        bail!(
            InvalidInput,
            "multi-index has {} entries, registry has {} variables",
            alpha.len(),
            reg.nvars()
        );
    }
    let n: u32 = alpha.iter().sum();
    if n == 0 {
        return f_derivs(0);
    }
    let fact = |v: &[u32]| v.iter().map(|&k| factorial_u128(k)).product::<u128>();
    let alpha_fact = fact(alpha);
    let mut acc = SymExpr::zero(&reg);
    for r in 1..=n {
        let mut inner = SymExpr::zero(&reg);
        for set in faa_di_bruno_sets(alpha, r) {
            let mut prod = SymExpr::one(&reg);
            let mut den = 1u128;
            for (beta, k) in &set {
                let mut db = g.clone();
                for (v, &p) in beta.iter().enumerate() {
                    for _ in 0..p {
                        db = db.derivative(Var(v));
                    }
                }
                prod = prod.mul(&db.pow(*k)?)?;
                den *= factorial_u128(*k) * fact(beta).pow(*k);
            }
            let c = coeff_rat(Rat::new(alpha_fact.into(), den.into()));
            inner = &inner + &prod.scale(&c);
        }
        if !inner.is_zero() {
            acc = &acc + &f_derivs(r)?.mul(&inner)?;
        }
    }
    Ok(acc)
}

/// `true` when every `u_j` has a purely real canonical form.
pub fn terms_are_real(terms: &[HeatTerm]) -> bool {
    terms.iter().all(|t| t.q.is_real())
}
