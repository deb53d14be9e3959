//! Left parametrices of hypoelliptic symbols, the resolvent family and
//! derivative-growth profiles.

use crate::error::{bail, Result};
use crate::fsring::{moyal_pairing, multi_indices, sharp, DerivCache, FormalSeries};
use crate::prelude::*;
use crate::symalg::poly::coeff_int;
use crate::symalg::{PhasePoint, SymExpr, Var};
use crate::weights::{associated_function, WeightSequence};

/// `q_0 = a^{-1}`, `q_j = -q_0 Σ_{s=1}^{j} Σ_{|α+β|=s} (-1)^{|β|}/(α!β!2^s)
/// ∂_ξ^α D_x^β q_{j-s} · ∂_ξ^β D_x^α a`.
///
/// `a` must be a constant times powers of registered bases so that its
/// inverse stays inside the algebra.
pub fn parametrix(a: &SymExpr, n: usize) -> Result<FormalSeries> {
    if n == 0 {
        bail!(InvalidParameter, "parametrix order must be at least 1");
    }
    if a.has_exp() {
        bail!(
            InvalidInput,
            "the parametrix recursion does not accept the exponential atom"
        );
    }
    let q0 = a.try_inverse()?;
    let mut da = DerivCache::new(a);
    let mut caches = vec![DerivCache::new(&q0)];
    let mut terms = vec![q0.clone()];
    for j in 1..n {
        let mut acc = SymExpr::zero(a.registry());
        for s in 1..=j {
            if terms[j - s].is_zero() {
                continue;
            }
            acc = &acc + &moyal_pairing(&mut caches[j - s], &mut da, s as u32)?;
        }
        let qj = -&q0.mul(&acc)?;
        caches.push(DerivCache::new(&qj));
        terms.push(qj);
    }
    FormalSeries::new(terms)
}

/// Parametrix of `a_λ = a_0 + λ`. The registry must contain a base equal to
/// `a_0 + λ`.
pub fn resolvent_parametrix(a0: &SymExpr, lambda: Var, n: usize) -> Result<FormalSeries> {
    let reg = a0.registry();
    if lambda.0 < 2 * reg.dim() {
        bail!(InvalidInput, "`{}` is not a parameter", reg.var_name(lambda));
    }
    let a_lambda = a0 + &SymExpr::var(reg, lambda);
    if a_lambda.as_base_monomial().is_none() {
        bail!(
            InvalidInput,
            "`{a_lambda}` must be registered as a base before building the resolvent parametrix"
        );
    }
    parametrix(&a_lambda, n)
}

/// `(Σ q_j) # a - 1`, truncated to order `n`.
pub fn verify_left_identity(q: &FormalSeries, a: &SymExpr, n: usize) -> Result<FormalSeries> {
    let prod = sharp(q, &FormalSeries::single(a.clone(), q.order()), n)?;
    prod.sub(&FormalSeries::unit(q.registry(), n))
}

/// `a # (Σ q_j) - 1`, truncated to order `n`.
pub fn verify_right_identity(q: &FormalSeries, a: &SymExpr, n: usize) -> Result<FormalSeries> {
    let prod = sharp(&FormalSeries::single(a.clone(), q.order()), q, n)?;
    prod.sub(&FormalSeries::unit(q.registry(), n))
}

/// One row of the derivative-growth table.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioEntry {
    /// Derivative orders `[α (ξ), β (x)]`.
    pub alpha: Vec<u32>,
    pub point: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypoProfile {
    pub rho: f64,
    pub grid: Vec<PhasePoint>,
    pub max_order: u32,
    pub ratio_table: Vec<RatioEntry>,
    pub fitted_h: f64,
    pub fitted_c: f64,
    /// `(m, c(m))` with `c(m) = min_w |a(w)| e^{M(m|x|) + M(m|ξ|)}`.
    pub lower_bound: Vec<(f64, f64)>,
    pub lower_bound_ok: bool,
}

impl HypoProfile {
    /// Largest ratio at total order `k`.
    pub fn max_ratio_at(&self, k: u32) -> f64 {
        self.ratio_table
            .iter()
            .filter(|e| e.alpha.iter().sum::<u32>() == k)
            .map(|e| e.ratio)
            .fold(0.0, f64::max)
    }
}

/// Fits `ratio <= C h^{|α|}`: `h` is the largest per-order root
/// `max_w ratio^{1/|α|}`, `C` the largest remaining factor.
pub fn fit_constants(entries: &[(u32, f64)]) -> (f64, f64) {
    let mut h = 0.0f64;
    for &(k, r) in entries {
        if k >= 1 && r > 0.0 {
            h = h.max(r.powf(1.0 / f64::from(k)));
        }
    }
    let mut c = 0.0f64;
    for &(k, r) in entries {
        if k == 0 {
            c = c.max(r);
        } else if r > 0.0 {
            c = c.max(r / h.powi(k as i32));
        }
    }
    (h, c)
}

const LOWER_BOUND_M: [f64; 3] = [0.25, 1.0, 4.0];

fn assoc(ws: &WeightSequence, rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        Ok(0.0)
    } else {
        Ok(associated_function(ws, rho)?.value)
    }
}

/// Evaluates `|D^α a| <w>^{ρ|α|} / (A_α |a|)` on `grid` for all
/// `|α| <= max_order` and tests the lower bound
/// `|a| >= c e^{-M(m|x|) - M(m|ξ|)}` at `m ∈ {1/4, 1, 4}`.
pub fn hypoellipticity_profile(
    a: &SymExpr,
    ws: &WeightSequence,
    rho: f64,
    grid: &[PhasePoint],
    max_order: u32,
) -> Result<HypoProfile> {
    if !(rho > 0.0 && rho <= 1.0) {
        bail!(InvalidParameter, "rho must lie in (0, 1], got {rho}");
    }
    if max_order > 8 {
        bail!(InvalidParameter, "max_order must be at most 8, got {max_order}");
    }
    if max_order as usize > ws.p_max() {
        bail!(InvalidParameter, "weight table too short for order {max_order}");
    }
    let d = a.registry().dim();
    let values = grid.iter().map(|w| a.evaluate(w)).collect::<Result<Vec<_>>>()?;
    if let Some(k) = values.iter().position(|v| v.norm() == 0.0) {
        bail!(DomainViolation, "symbol vanishes at grid point {k}: {:?}", grid[k]);
    }
    let mut cache = DerivCache::new(a);
    let mut table = Vec::new();
    let mut fit_in = Vec::new();
    for k in 0..=max_order {
        for idx in multi_indices(d, k) {
            let deriv = cache.get(&idx);
            let a_alpha: f64 = idx.iter().map(|&p| ws.ln_m(p as usize)).sum::<f64>().exp();
            for (pi, w) in grid.iter().enumerate() {
                let dv = if deriv.is_zero() {
                    0.0
                } else {
                    deriv.evaluate(w)?.norm()
                };
                let ratio = dv * w.japanese().powf(rho * f64::from(k)) / (a_alpha * values[pi].norm());
                if !ratio.is_finite() {
                    bail!(NumericalFailure, "non-finite ratio at grid point {pi}");
                }
                fit_in.push((k, ratio));
                table.push(RatioEntry {
                    alpha: idx.clone(),
                    point: pi,
                    ratio,
                });
            }
        }
    }
    let (fitted_h, fitted_c) = fit_constants(&fit_in);
    let mut lower_bound = Vec::new();
    for m in LOWER_BOUND_M {
        let mut c = f64::INFINITY;
        for (w, v) in grid.iter().zip(&values) {
            let nx = w.x.iter().map(|t| t * t).sum::<f64>().sqrt();
            let nxi = w.xi.iter().map(|t| t * t).sum::<f64>().sqrt();
            let ln_c = v.norm().ln() + assoc(ws, m * nx)? + assoc(ws, m * nxi)?;
            c = c.min(ln_c.exp());
        }
        lower_bound.push((m, c));
    }
    let lower_bound_ok = lower_bound.iter().all(|&(_, c)| c > 0.0 && c.is_finite());
    Ok(HypoProfile {
        rho,
        grid: grid.to_vec(),
        max_order,
        ratio_table: table,
        fitted_h,
        fitted_c,
        lower_bound,
        lower_bound_ok,
    })
}

/// `d = 1` polar grid: `radii × angles` points, plus the origin.
pub fn polar_grid(radii: &[f64], angles: usize) -> Vec<PhasePoint> {
    let mut out = vec![PhasePoint::d1(0.0, 0.0)];
    for &r in radii {
        for k in 0..angles {
            let th = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / angles as f64;
            out.push(PhasePoint::d1(r * th.cos(), r * th.sin()));
        }
    }
    out
}

/// Unit series minus `λ` times the series: `1 - λ Σ q_j`.
pub fn one_minus_lambda_q(q: &FormalSeries, lambda: Var) -> Result<FormalSeries> {
    let reg = q.registry();
    let lq = q.mul_expr(&SymExpr::var(reg, lambda))?;
    FormalSeries::unit(reg, q.order()).sub(&lq)
}

/// `-(λ - λ_0)` as an expression.
pub fn minus_difference(lambda: Var, lambda0: Var, reg: &Arc<crate::symalg::Registry>) -> SymExpr {
    (&SymExpr::var(reg, lambda) - &SymExpr::var(reg, lambda0)).scale(&coeff_int(-1))
}
