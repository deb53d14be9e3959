//! Weight sequences `M_p`, the conditions (M.1)–(M.4) and associated
//! functions.
//!
//! Everything is stored and compared as `ln M_p`, so tables run well past the
//! point where `p!^σ` overflows a double.

use crate::error::{bail, Error, Result};
use crate::prelude::*;

/// Relative slack applied to every log-domain inequality.
pub const LOG_SLACK: f64 = 1e-12;

/// Default table length.
pub const DEFAULT_P_MAX: usize = 200;

/// `ln p!` for `p = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for p in 1..=n {
        acc += (p as f64).ln();
        out.push(acc);
    }
    out
}

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + LOG_SLACK * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Tabulated `ln M_p`, `p = 0..=p_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    log_values: Vec<f64>,
    sigma: Option<f64>,
}

impl WeightSequence {
    pub fn from_log_values(log_values: Vec<f64>) -> Result<Self> {
        if log_values.len() < 3 {
            bail!(
                InvalidInput,
                "a weight sequence needs at least 3 entries, got {}",
                log_values.len()
            );
        }
        if let Some(p) = log_values.iter().position(|v| !v.is_finite()) {
            bail!(InvalidInput, "ln M_{p} is not finite");
        }
        if log_values[0].abs() > LOG_SLACK || log_values[1].abs() > LOG_SLACK {
            bail!(InvalidInput, "M_0 and M_1 must equal 1");
        }
        Ok(WeightSequence {
            log_values,
            sigma: None,
        })
    }

    /// `M_p = p!^σ`.
    pub fn gevrey(sigma: f64, p_max: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            bail!(InvalidParameter, "Gevrey exponent must be positive, got {sigma}");
        }
        if p_max < 2 {
            bail!(InvalidParameter, "p_max must be at least 2, got {p_max}");
        }
        let log_values = ln_factorials(p_max).into_iter().map(|l| sigma * l).collect();
        Ok(WeightSequence {
            log_values,
            sigma: Some(sigma),
        })
    }

    /// `M_p = 1` for every `p`.
    pub fn constant(p_max: usize) -> Result<Self> {
        Self::from_log_values(vec![0.0; p_max + 1])
    }

    /// Parses a two-column table `p ln(M_p)`; `#` starts a comment. Rows must
    /// list `p = 0, 1, 2, …` in order.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let mut vals = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: k + 1, msg };
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(perr(format!("expected two columns, found {}", cols.len())));
            }
            let p: usize = cols[0].parse().map_err(|_| perr(format!("bad index `{}`", cols[0])))?;
            if p != vals.len() {
                return Err(perr(format!("expected index {}, found {p}", vals.len())));
            }
            let v: f64 = cols[1].parse().map_err(|_| perr(format!("bad value `{}`", cols[1])))?;
            vals.push(v);
        }
        Self::from_log_values(vals)
    }

    pub fn to_table_text(&self) -> String {
        let mut out = String::from("# p ln(M_p)\n");
        for (p, v) in self.log_values.iter().enumerate() {
            out.push_str(&format!("{p} {v:e}\n"));
        }
        out
    }

    pub fn p_max(&self) -> usize {
        self.log_values.len() - 1
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn ln_m(&self, p: usize) -> f64 {
        self.log_values[p]
    }

    pub fn m(&self, p: usize) -> f64 {
        self.log_values[p].exp()
    }

    /// `m_p = M_p / M_{p-1}`, with `m_0 = 0`.
    pub fn ratio(&self, p: usize) -> f64 {
        if p == 0 {
            0.0
        } else {
            (self.log_values[p] - self.log_values[p - 1]).exp()
        }
    }

    /// All ratios `m_0 .. m_{p_max}`.
    pub fn ratios(&self) -> Vec<f64> {
        (0..=self.p_max()).map(|p| self.ratio(p)).collect()
    }

    /// The sequence `M_p / p!`.
    pub fn divided_by_factorial(&self) -> WeightSequence {
        let lf = ln_factorials(self.p_max());
        WeightSequence {
            log_values: self.log_values.iter().zip(&lf).map(|(a, b)| a - b).collect(),
            sigma: self.sigma.map(|s| s - 1.0),
        }
    }

    /// `M_p * prod_{j <= p} r_j`.
    pub fn shifted(&self, r: &SubordinateSequence) -> Result<WeightSequence> {
        if r.r_values.len() < self.p_max() {
            bail!(
                InvalidInput,
                "subordinate sequence has {} values, need {}",
                r.r_values.len(),
                self.p_max()
            );
        }
        let mut acc = 0.0;
        let mut log_values = Vec::with_capacity(self.log_values.len());
        for (p, l) in self.log_values.iter().enumerate() {
            if p > 0 {
                acc += r.r_values[p - 1].ln();
            }
            log_values.push(l + acc);
        }
        Ok(WeightSequence {
            log_values,
            sigma: None,
        })
    }
}

/// Index pair witnessing a failed condition.
pub type Witness = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub holds_m1: bool,
    pub holds_m2: bool,
    pub holds_m3: bool,
    pub holds_m3prime: bool,
    pub holds_m4: bool,
    pub witness_m1: Option<Witness>,
    pub witness_m2: Option<Witness>,
    pub witness_m3: Option<Witness>,
    pub witness_m3prime: Option<Witness>,
    pub witness_m4: Option<Witness>,
    /// Constant of (M.2); fixed to 1, with the growth absorbed into `H`.
    pub fitted_c0: f64,
    pub fitted_h: f64,
    /// Smallest constant for (M.3) on the lower half of the table.
    pub fitted_m3_constant: f64,
    /// Log-growth exponent `log2(m_P / m_{P/2})` used for (M.3)'.
    pub m3prime_exponent: f64,
    /// Tail sums are truncated at this index.
    pub truncation_index: usize,
}

fn first_log_convexity_violation(l: &[f64]) -> Option<Witness> {
    (1..l.len() - 1)
        .find(|&p| !le(2.0 * l[p], l[p - 1] + l[p + 1]))
        .map(|p| (p - 1, p + 1))
}

/// Tests (M.1)–(M.4) over the tabulated range.
///
/// (M.1) and (M.4) are checked exactly on the table. (M.2) fits
/// `H = max_p exp(D_p / p)` with `D_p = ln M_p - min_q ln(M_{p-q} M_q)` and
/// declares it to hold when `D_p / p` on the upper half of the table stays
/// within 1.5 times its lower-half maximum, i.e. `D_p` grows at most
/// linearly. (M.3)' holds when `m_p` grows faster than `p` (exponent
/// above 1), and (M.3) when additionally the fitted constant is finite.
pub fn check_conditions(ws: &WeightSequence) -> ConditionReport {
    let l = &ws.log_values;
    let pmax = ws.p_max();

    let witness_m1 = first_log_convexity_violation(l);
    let witness_m4 = first_log_convexity_violation(&ws.divided_by_factorial().log_values);

    // (M.2)
    let mut per_p = vec![0.0f64; pmax + 1];
    let mut arg_q = vec![0usize; pmax + 1];
    for p in 1..=pmax {
        let (q, m) = (0..=p)
            .map(|q| (q, l[p - q] + l[q]))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        per_p[p] = (l[p] - m) / p as f64;
        arg_q[p] = q;
    }
    let half = pmax / 2;
    let lower = per_p[1..=half.max(1)].iter().cloned().fold(0.0, f64::max);
    let (upper_p, upper) = (half + 1..=pmax)
        .map(|p| (p, per_p[p]))
        .fold((pmax, f64::NEG_INFINITY), |a, x| if x.1 > a.1 { x } else { a });
    let fitted_h = per_p.iter().cloned().fold(0.0, f64::max).exp();
    let witness_m2 = (upper > 1.5 * lower + LOG_SLACK).then_some((upper_p, arg_q[upper_p]));

    // (M.3)': growth exponent of m_p.
    let mp = ws.ratios();
    let lo = (pmax / 2).max(1);
    let kappa = (mp[pmax] / mp[lo]).ln() / ((pmax as f64) / (lo as f64)).ln();
    let witness_m3prime = (!(kappa > 1.0 + 1e-9)).then_some((lo, pmax));

    // (M.3): sup_q q^{-1} m_q sum_{p>q} 1/m_p over the lower half.
    let mut tail = vec![0.0f64; pmax + 2];
    for p in (1..=pmax).rev() {
        tail[p] = tail[p + 1] + 1.0 / mp[p];
    }
    let mut fitted_m3 = 0.0f64;
    let mut worst_q = 1;
    for q in 1..=lo {
        let v = tail[q + 1] * mp[q] / q as f64;
        if v > fitted_m3 {
            fitted_m3 = v;
            worst_q = q;
        }
    }
    let witness_m3 = (witness_m3prime.is_some() || !fitted_m3.is_finite()).then_some((worst_q, pmax));

    ConditionReport {
        holds_m1: witness_m1.is_none(),
        holds_m2: witness_m2.is_none(),
        holds_m3: witness_m3.is_none(),
        holds_m3prime: witness_m3prime.is_none(),
        holds_m4: witness_m4.is_none(),
        witness_m1,
        witness_m2,
        witness_m3,
        witness_m3prime,
        witness_m4,
        fitted_c0: 1.0,
        fitted_h,
        fitted_m3_constant: fitted_m3,
        m3prime_exponent: kappa,
        truncation_index: pmax,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociatedValue {
    pub value: f64,
    pub argmax: usize,
    /// The supremum was attained at the last tabulated index, so the true
    /// value may be larger.
    pub boundary_hit: bool,
}

fn sup_ln_plus(l: &[f64], rho: f64) -> Result<AssociatedValue> {
    if !(rho > 0.0 && rho.is_finite()) {
        bail!(InvalidParameter, "rho must be positive, got {rho}");
    }
    let lr = rho.ln();
    let mut best = 0.0;
    let mut argmax = 0;
    for (p, lp) in l.iter().enumerate() {
        let v = p as f64 * lr - lp;
        if v > best {
            best = v;
            argmax = p;
        }
    }
    Ok(AssociatedValue {
        value: best,
        argmax,
        boundary_hit: best > 0.0 && argmax == l.len() - 1,
    })
}

/// `M(ρ) = sup_p ln_+(ρ^p / M_p)` over the table.
pub fn associated_function(ws: &WeightSequence, rho: f64) -> Result<AssociatedValue> {
    sup_ln_plus(&ws.log_values, rho)
}

/// Increasing positive sequence `r_1, r_2, …` (`r_values[j-1] = r_j`).
#[derive(Clone, Debug, PartialEq)]
pub struct SubordinateSequence {
    r_values: Vec<f64>,
}

impl SubordinateSequence {
    pub fn new(r_values: Vec<f64>) -> Result<Self> {
        if r_values.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            bail!(InvalidInput, "subordinate values must be positive and finite");
        }
        if let Some(j) = r_values.windows(2).position(|w| w[1] < w[0]) {
            bail!(InvalidInput, "subordinate sequence decreases at index {}", j + 2);
        }
        Ok(SubordinateSequence { r_values })
    }

    pub fn r_values(&self) -> &[f64] {
        &self.r_values
    }
}

/// `N_{r_p}(ρ) = sup_p ln_+(ρ^p / (M_p prod_{j<=p} r_j))`.
pub fn associated_function_shifted(ws: &WeightSequence, r: &SubordinateSequence, rho: f64) -> Result<AssociatedValue> {
    sup_ln_plus(&ws.shifted(r)?.log_values, rho)
}

/// Exhaustively checks `C(n,k) N_{n-k} N_k <= n N_{n-1}` for
/// `1 <= k <= n-1`, `n <= n_max`. Returns the first violation `(n, k)`.
pub fn binomial_lemma_violation(ws: &WeightSequence, n_max: usize) -> Result<Option<Witness>> {
    if n_max > ws.p_max() {
        bail!(
            InvalidParameter,
            "n_max {n_max} exceeds the table length {}",
            ws.p_max()
        );
    }
    let lf = ln_factorials(n_max);
    let l = &ws.log_values;
    for n in 2..=n_max {
        for k in 1..n {
            let lhs = lf[n] - lf[k] - lf[n - k] + l[n - k] + l[k];
            let rhs = (n as f64).ln() + l[n - 1];
            if !le(lhs, rhs) {
                return Ok(Some((n, k)));
            }
        }
    }
    Ok(None)
}

/// Calls `f` on every partition of `k` into exactly `j` positive parts
/// (non-increasing order).
pub fn for_each_partition(k: usize, j: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rem: usize, parts_left: usize, max: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if parts_left == 0 {
            if rem == 0 {
                f(cur);
            }
            return;
        }
        let hi = max.min(rem + 1 - parts_left);
        for v in (1..=hi).rev() {
            if v * parts_left < rem {
                break;
            }
            cur.push(v);
            rec(rem - v, parts_left - 1, v, cur, f);
            cur.pop();
        }
    }
    if j == 0 || j > k {
        return;
    }
    rec(k, j, k, &mut Vec::with_capacity(j), f);
}

/// Exhaustively checks `N_j N_{k_1} … N_{k_j} <= N_k` over partitions of
/// every `k <= k_max`. Returns the first violating `(k, j)`.
pub fn product_lemma_violation(ws: &WeightSequence, k_max: usize) -> Result<Option<Witness>> {
    if k_max > ws.p_max() {
        bail!(
            InvalidParameter,
            "k_max {k_max} exceeds the table length {}",
            ws.p_max()
        );
    }
    let l = &ws.log_values;
    for k in 1..=k_max {
        for j in 1..=k {
            let mut bad = false;
            for_each_partition(k, j, &mut |parts| {
                let lhs = l[j] + parts.iter().map(|&p| l[p]).sum::<f64>();
                if !le(lhs, l[k]) {
                    bad = true;
                }
            });
            if bad {
                return Ok(Some((k, j)));
            }
        }
    }
    Ok(None)
}
