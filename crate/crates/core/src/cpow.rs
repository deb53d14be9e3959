//! Complex powers through the Balakrishnan integral.

use core::f64::consts::FRAC_PI_2;

use crate::error::{bail, Error, Result};
use crate::fsring::{resum_values, sharp, sharp_power, CutoffConfig, FormalSeries, Strategy};
use crate::parametrix::resolvent_parametrix;
use crate::prelude::*;
use crate::special::gamma_k;
use crate::symalg::poly::Poly;
use crate::symalg::{Compiled, PhasePoint, Registry, SymExpr, Univariate, Var};

pub use crate::special::gamma_k as gamma_coefficient;

/// Change of variables for `∫_0^∞ … dλ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// `λ = e^u`.
    Log,
    /// `λ = exp(π/2 · sinh u)`: double-exponential decay at both ends.
    SinhLog,
}

/// Trapezoid rule on a transformed half-line with nested step halvings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureScheme {
    pub transform: Transform,
    pub u_min: f64,
    pub u_max: f64,
    /// Initial step.
    pub step: f64,
    /// Maximum number of step halvings.
    pub refine: u32,
    /// Relative tolerance for stopping the halvings early.
    pub tol: f64,
}

/// Largest `|ln λ|` reached by the default double-exponential scheme.
pub const DEFAULT_LOG_RANGE: f64 = 4000.0;

impl Default for QuadratureScheme {
    fn default() -> Self {
        let u = (DEFAULT_LOG_RANGE / FRAC_PI_2).asinh();
        QuadratureScheme {
            transform: Transform::SinhLog,
            u_min: -u,
            u_max: u,
            step: 0.125,
            refine: 7,
            tol: 1e-14,
        }
    }
}

impl QuadratureScheme {
    /// Plain logarithmic substitution on `[-40, 40]` with step 0.05.
    pub fn log_default() -> Self {
        QuadratureScheme {
            transform: Transform::Log,
            u_min: -40.0,
            u_max: 40.0,
            step: 0.05,
            refine: 2,
            tol: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_min < 0.0 && 0.0 < self.u_max) {
            bail!(
                InvalidParameter,
                "need u_min < 0 < u_max, got [{}, {}]",
                self.u_min,
                self.u_max
            );
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            bail!(InvalidParameter, "quadrature step must be positive");
        }
        Ok(())
    }

    /// `(ln λ, d ln λ / du)` at `u`.
    pub(crate) fn map(&self, u: f64) -> (f64, f64) {
        match self.transform {
            Transform::Log => (u, 1.0),
            Transform::SinhLog => (FRAC_PI_2 * u.sinh(), FRAC_PI_2 * u.cosh()),
        }
    }

    /// Nodes `u = k h` for integer `k` inside the range; `odd` keeps only odd `k`.
    fn nodes(&self, h: f64, odd: bool) -> impl Iterator<Item = f64> + '_ {
        let kmin = (self.u_min / h).ceil() as i64;
        let kmax = (self.u_max / h).floor() as i64;
        (kmin..=kmax)
            .filter(move |k| !odd || k.rem_euclid(2) == 1)
            .map(move |k| k as f64 * h)
    }
}

/// Integrand of a half-line quadrature, evaluated in log form.
pub trait HalfLineIntegrand {
    /// `λ^s f(λ)` at `λ = exp(ln_lambda)`.
    fn eval_pow(&self, ln_lambda: f64, s: Complex64) -> Result<Complex64>;
}

/// Closures are evaluated directly; beyond `|ln λ| = 700` they count as zero.
impl<F: Fn(f64) -> Complex64> HalfLineIntegrand for F {
    fn eval_pow(&self, ln_lambda: f64, s: Complex64) -> Result<Complex64> {
        if ln_lambda.abs() > 700.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let lam = ln_lambda.exp();
        let v = (s * ln_lambda).exp() * self(lam);
        Ok(if v.re.is_finite() && v.im.is_finite() {
            v
        } else {
            Complex64::new(0.0, 0.0)
        })
    }
}

/// `(ζ / (ζ + λ))^k`, evaluated without overflow for any `λ`.
#[derive(Clone, Copy, Debug)]
pub struct ResolventPower {
    pub zeta: Complex64,
    pub k: u32,
}

impl HalfLineIntegrand for ResolventPower {
    fn eval_pow(&self, ln_lambda: f64, s: Complex64) -> Result<Complex64> {
        if ln_lambda <= 0.0 {
            let lam = ln_lambda.exp();
            Ok((s * ln_lambda).exp() * (self.zeta / (self.zeta + lam)).powi(self.k as i32))
        } else {
            let mu = (-ln_lambda).exp();
            let base = self.zeta / (self.zeta * mu + 1.0);
            Ok(((s - f64::from(self.k)) * ln_lambda).exp() * base.powi(self.k as i32))
        }
    }
}

fn horner_rev_c(c: &[Complex64], mu: f64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * mu + a)
}

fn trim(c: &[Complex64]) -> &[Complex64] {
    let mut n = c.len();
    while n > 1 && c[n - 1] == Complex64::new(0.0, 0.0) {
        n -= 1;
    }
    &c[..n]
}

impl HalfLineIntegrand for Univariate {
    fn eval_pow(&self, ln_lambda: f64, s: Complex64) -> Result<Complex64> {
        if ln_lambda <= 0.0 {
            return Ok((s * ln_lambda).exp() * self.eval(ln_lambda.exp())?);
        }
        // Factor the leading power of λ out of every polynomial.
        let mu = (-ln_lambda).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for (num, exps) in self.parts() {
            let num = trim(num);
            let mut expo = s + (num.len() - 1) as f64;
            let mut v = horner_rev_c(num, mu);
            for &(i, e) in exps {
                let b = self.base_coeffs(i);
                let mut deg = b.len();
                while deg > 1 && b[deg - 1] == 0.0 {
                    deg -= 1;
                }
                let bt = &b[..deg];
                let scaled = bt.iter().fold(0.0, |acc, &a| acc * mu + a);
                if !(scaled > 0.0) {
                    bail!(DomainViolation, "base is not positive at ln λ = {ln_lambda}");
                }
                expo += e * (bt.len() - 1) as f64;
                v *= if e.fract() == 0.0 {
                    scaled.powi(e as i32)
                } else {
                    scaled.powf(e)
                };
            }
            acc += (expo * ln_lambda).exp() * v;
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    /// Size of the last refinement increment.
    pub error: f64,
    /// Set when the integrand does not decay towards the ends of the range
    /// or the refinements did not settle.
    pub warning: bool,
    pub evaluations: usize,
}

/// Values a trapezoid sum can accumulate.
pub(crate) trait QuadValue: Clone {
    fn add_assign(&mut self, other: &Self);
    fn scaled(&self, h: f64) -> Self;
    fn size(&self) -> f64;
}

impl QuadValue for Complex64 {
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn scaled(&self, h: f64) -> Self {
        self * h
    }

    fn size(&self) -> f64 {
        self.norm()
    }
}

/// Trapezoid sums of `g` over `quad`'s range with nested halvings.
pub(crate) fn nested_trapezoid<V: QuadValue>(
    quad: &QuadratureScheme,
    mut g: impl FnMut(f64) -> Result<V>,
) -> Result<(V, QuadResult)> {
    quad.validate()?;
    let mut h = quad.step;
    let mut sum: Option<V> = None;
    let mut evals = 0;
    let mut edge = 0.0f64;
    let mut peak = 0.0f64;
    let mut visit = |u: f64, sum: &mut Option<V>, at_edge: bool| -> Result<()> {
        let v = g(u)?;
        let size = v.size();
        if !size.is_finite() {
            bail!(NumericalFailure, "integrand is not finite at u = {u}");
        }
        peak = peak.max(size);
        if at_edge {
            edge = edge.max(size);
        }
        match sum {
            Some(s) => s.add_assign(&v),
            None => *sum = Some(v),
        }
        evals += 1;
        Ok(())
    };
    for u in quad.nodes(h, false) {
        let at_edge = (u - quad.u_min).abs() < h || (quad.u_max - u).abs() < h;
        visit(u, &mut sum, at_edge)?;
    }
    let Some(mut sum) = sum else {
        bail!(InvalidParameter, "quadrature range contains no nodes");
    };
    let mut value = sum.scaled(h);
    let mut error = f64::INFINITY;
    for _ in 0..quad.refine {
        h *= 0.5;
        let mut part = None;
        for u in quad.nodes(h, true) {
            visit(u, &mut part, false)?;
        }
        if let Some(p) = part {
            sum.add_assign(&p);
        }
        let next = sum.scaled(h);
        let mut diff = next.clone();
        diff.add_assign(&value.scaled(-1.0));
        error = diff.size();
        value = next;
        if error <= quad.tol * value.size() {
            break;
        }
    }
    let not_decaying = edge > 1e-12 * peak.max(f64::MIN_POSITIVE);
    let unsettled = quad.tol > 0.0 && error > 1e3 * quad.tol * value.size().max(1e-300);
    let info = QuadResult {
        value: Complex64::new(0.0, 0.0),
        error,
        warning: not_decaying || unsettled,
        evaluations: evals,
    };
    Ok((value, info))
}

/// `∫_0^∞ λ^{z-1} f(λ) dλ`.
pub fn quad_halfline<F: HalfLineIntegrand + ?Sized>(
    f: &F,
    z: Complex64,
    quad: &QuadratureScheme,
) -> Result<QuadResult> {
    // λ^{z-1} dλ = λ^z d(ln λ) = λ^z (d ln λ/du) du
    let (value, info) = nested_trapezoid(quad, |u| {
        let (ll, jac) = quad.map(u);
        Ok(f.eval_pow(ll, z)? * jac)
    })?;
    Ok(QuadResult { value, ..info })
}

/// `(lhs, rhs)` of
/// `γ_1(z)γ_1(ζ) ∬ λ^{z-1} μ^{ζ-1} f̃(λ, μ) = γ_2(z+ζ) ∫ λ^{z+ζ-1} f'(λ)`
/// with `f̃` the divided difference of `f`.
pub fn two_var_identity_check(
    f: &dyn Fn(f64) -> Complex64,
    df: &dyn Fn(f64) -> Complex64,
    z: Complex64,
    zeta: Complex64,
    quad: &QuadratureScheme,
) -> Result<(QuadResult, QuadResult)> {
    quad.validate()?;
    if !(z.re > 0.0 && z.re < 1.0 && zeta.re > 0.0 && zeta.re < 1.0) {
        bail!(InvalidParameter, "need 0 < Re z, Re ζ < 1");
    }
    let g1 = gamma_k(z, 1)? * gamma_k(zeta, 1)?;
    let g2 = gamma_k(z + zeta, 2)?;

    // Product trapezoid; nodes of both axes coincide, so the diagonal uses f'.
    let range = 700.0;
    let level_sum = |h: f64, odd_only: bool| -> (Complex64, usize) {
        let pts: Vec<(f64, f64, f64)> = quad
            .nodes(h, false)
            .map(|u| {
                let (ll, jac) = quad.map(u);
                (u, ll, jac)
            })
            .filter(|(_, ll, _)| ll.abs() <= range)
            .collect();
        let vals: Vec<Complex64> = pts.iter().map(|p| f(p.1.exp())).collect();
        let mut s = Complex64::new(0.0, 0.0);
        let mut n = 0;
        let is_odd = |u: f64| ((u / h).round() as i64).rem_euclid(2) == 1;
        for (i, &(ui, li, ji)) in pts.iter().enumerate() {
            let wl = (z * li).exp() * ji;
            for (k, &(uk, lk, jk)) in pts.iter().enumerate() {
                if odd_only && !is_odd(ui) && !is_odd(uk) {
                    continue;
                }
                let (lam, mu) = (li.exp(), lk.exp());
                let dd = if i == k {
                    df(lam)
                } else {
                    (vals[i] - vals[k]) / (lam - mu)
                };
                s += wl * (zeta * lk).exp() * jk * dd;
                n += 1;
            }
        }
        (s, n)
    };
    let mut h = quad.step;
    let (mut sum, mut evals) = level_sum(h, false);
    let mut value = sum * h * h;
    let mut error = f64::INFINITY;
    for _ in 0..quad.refine.min(4) {
        h *= 0.5;
        let (s, n) = level_sum(h, true);
        sum += s;
        evals += n;
        let next = sum * h * h;
        error = (next - value).norm();
        value = next;
        if error <= 1e-12 * value.norm() {
            break;
        }
    }
    let lhs = QuadResult {
        value: value * g1,
        error: error * g1.norm(),
        warning: error > 1e-8 * value.norm(),
        evaluations: evals,
    };
    let r = quad_halfline(&|l: f64| df(l), z + zeta, quad)?;
    let rhs = QuadResult {
        value: r.value * g2,
        error: r.error * g2.norm(),
        ..r
    };
    Ok((lhs, rhs))
}

/// Result of [`positivize`].
#[derive(Clone, Debug, PartialEq)]
pub struct Positivized {
    pub a0: SymExpr,
    pub shift: f64,
    /// Smallest `B̃ >= 0` with `Re a0 > -B̃ |Im a0|` on the grid.
    pub sector_b: f64,
}

/// Adds the smallest constant `c ∈ {1, 2, 4, …}` making `Re a + c > 0` on the
/// grid, or nothing if `a` is already positive there.
///
/// The outer quarter of the grid (by `<w>`) must already satisfy
/// `Re a > 0`; otherwise no constant shift can be justified.
pub fn positivize(a: &SymExpr, grid: &[PhasePoint]) -> Result<Positivized> {
    if grid.is_empty() {
        bail!(InvalidInput, "positivize needs a non-empty grid");
    }
    let vals = grid.iter().map(|w| a.evaluate(w)).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[i].japanese().total_cmp(&grid[j].japanese()));
    let far = &order[order.len() - order.len().div_ceil(4)..];
    if let Some(&i) = far.iter().find(|&&i| !(vals[i].re > 0.0)) {
        bail!(
            UnsupportedSymbol,
            "sector condition fails far out: Re a = {} at {:?}",
            vals[i].re,
            grid[i]
        );
    }
    let min_re = vals.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let mut shift = 0.0;
    if min_re <= 0.0 {
        shift = 1.0;
        while min_re + shift <= 0.0 {
            shift *= 2.0;
        }
    }
    let reg = a.registry();
    let a0 = if shift > 0.0 {
        a + &SymExpr::constant(reg, crate::symalg::poly::coeff_int(shift as i64))
    } else {
        a.clone()
    };
    let mut sector_b = 0.0f64;
    for v in &vals {
        let re = v.re + shift;
        if v.im != 0.0 {
            sector_b = sector_b.max(-re / v.im.abs());
        }
    }
    Ok(Positivized { a0, shift, sector_b })
}

/// Precomputed `g^{(k)}_n(λ, w) = (a_0^{#k} # (Σ q^{(λ)})^{#k})_n` and the
/// Balakrishnan integral over `λ`.
#[derive(Clone, Debug)]
pub struct PowerEvaluator {
    z: Complex64,
    k: u32,
    gamma: Complex64,
    reg: Arc<Registry>,
    a0: SymExpr,
    lambda: Var,
    series: FormalSeries,
    compiled: Vec<Compiled>,
    quad: QuadratureScheme,
}

pub const LAMBDA: &str = "lambda";

/// Registry with the parameter `lambda`, base `a0` and base `al = a0 + lambda`.
pub fn resolvent_registry(dim: usize, a0: &Poly, a0_text: &str) -> Result<Arc<Registry>> {
    let mut b = Registry::builder(dim).param(LAMBDA)?;
    let nv = 2 * dim + 1;
    if a0.nvars() != 2 * dim && a0.nvars() != nv {
        bail!(InvalidInput, "a0 has {} variables; expected {}", a0.nvars(), 2 * dim);
    }
    let mut lifted = Poly::zero(nv);
    for (m, c) in a0.terms() {
        let mut e = m.0.clone();
        e.resize(nv, 0);
        lifted = lifted.add(&Poly::monomial(crate::symalg::Monomial(e), c.clone()));
    }
    if lifted.degree_in(2 * dim) > 0 {
        bail!(InvalidInput, "a0 may not depend on lambda");
    }
    let al = lifted.add(&Poly::var(nv, 2 * dim));
    b = b.base_poly("a0", lifted, a0_text)?;
    b = b.base_poly("al", al, &format!("{a0_text} + {LAMBDA}"))?;
    b.build()
}

impl PowerEvaluator {
    /// `a0` must be a polynomial, positive on phase space.
    pub fn new(a0: &SymExpr, z: Complex64, k: u32, order: usize, quad: QuadratureScheme) -> Result<Self> {
        quad.validate()?;
        let poly = a0
            .as_poly()
            .ok_or_else(|| Error::InvalidInput(format!("a0 = `{a0}` must be a polynomial")))?;
        let reg = resolvent_registry(a0.registry().dim(), &poly, &a0.to_string())?;
        let gamma = gamma_k(z, k)?;
        let a0r = SymExpr::parse(&reg, "a0")?;
        let lambda = reg.param(LAMBDA).expect("registered above");
        let ql = resolvent_parametrix(&a0r, lambda, order)?;
        let left = sharp_power(&FormalSeries::single(a0r.clone(), order), k, order)?;
        let right = sharp_power(&ql, k, order)?;
        let series = sharp(&left, &right, order)?;
        let expect0 = SymExpr::parse(&reg, &format!("a0^{k}*al^(-{k})"))?;
        if series.term(0) != &expect0 {
            bail!(NumericalFailure, "order-0 Balakrishnan term is not (a0/(a0+λ))^k");
        }
        let compiled = series.terms().iter().map(Compiled::new).collect();
        Ok(PowerEvaluator {
            z,
            k,
            gamma,
            reg,
            a0: a0r,
            lambda,
            series,
            compiled,
            quad,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.reg
    }

    /// `a0` inside the evaluator's registry.
    pub fn a0(&self) -> &SymExpr {
        &self.a0
    }

    pub fn series(&self) -> &FormalSeries {
        &self.series
    }

    /// Same integral with the integrand series replaced by `g # b`.
    pub fn right_composed(&self, b: &FormalSeries, z: Complex64, k: u32) -> Result<PowerEvaluator> {
        let series = sharp(&self.series, b, self.order().min(b.order()))?;
        let compiled = series.terms().iter().map(Compiled::new).collect();
        Ok(PowerEvaluator {
            z,
            k,
            gamma: gamma_k(z, k)?,
            series,
            compiled,
            ..self.clone()
        })
    }

    fn vars_at(&self, w: &PhasePoint) -> Result<Vec<f64>> {
        if w.dim() != self.reg.dim() {
            bail!(
                InvalidInput,
                "point has dimension {}, expected {}",
                w.dim(),
                self.reg.dim()
            );
        }
        let mut v = w.x.clone();
        v.extend_from_slice(&w.xi);
        v.push(0.0);
        Ok(v)
    }

    /// `p_{z,j}(w) = γ_k(z) ∫_0^∞ λ^{z-1} g^{(k)}_j(λ, w) dλ`.
    pub fn power_coefficient(&self, j: usize, w: &PhasePoint) -> Result<QuadResult> {
        if j >= self.order() {
            bail!(
                InvalidParameter,
                "term {j} beyond the precomputed order {}",
                self.order()
            );
        }
        if self.series.term(j).is_zero() {
            return Ok(QuadResult {
                value: Complex64::new(0.0, 0.0),
                error: 0.0,
                warning: false,
                evaluations: 0,
            });
        }
        let vars = self.vars_at(w)?;
        let uni = self.compiled[j].specialize(&vars, self.lambda)?;
        let r = quad_halfline(&uni, self.z, &self.quad)?;
        Ok(QuadResult {
            value: r.value * self.gamma,
            error: r.error * self.gamma.norm(),
            ..r
        })
    }

    /// All `p_{z,j}(w)` for `j < n`.
    pub fn coefficients(&self, n: usize, w: &PhasePoint) -> Result<Vec<QuadResult>> {
        (0..n).map(|j| self.power_coefficient(j, w)).collect()
    }

    /// `Σ_{j<n} (1 - χ_{j,R}(w)) p_{z,j}(w)`.
    pub fn power_series_eval(&self, n: usize, w: &PhasePoint, cfg: &CutoffConfig) -> Result<Complex64> {
        let vals: Vec<Complex64> = self.coefficients(n, w)?.iter().map(|r| r.value).collect();
        resum_values(&vals, cfg, w, Strategy::Cutoff)
    }

    /// `a0(w)^z` on the principal branch.
    pub fn principal_power(&self, w: &PhasePoint) -> Result<Complex64> {
        let v = self.a0.evaluate(w)?;
        Ok(v.powc(self.z))
    }
}

/// `[Re z] + 1`, the smallest admissible `k`.
pub fn minimal_k(z: Complex64) -> u32 {
    z.re.floor().max(0.0) as u32 + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn beta_integral() {
        let f = |l: f64| Complex64::new(1.0 / (1.0 + l), 0.0);
        let r = quad_halfline(&f, Complex64::new(0.5, 0.0), &QuadratureScheme::default()).unwrap();
        assert!((r.value.re - PI).abs() < 1e-12, "{:?}", r);
        assert!(!r.warning);
    }
}
