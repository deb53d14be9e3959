//! Spectral validation pipelines: resummed symbols quantized in the Hermite
//! basis and compared with the functional calculus of the quantized base
//! symbol.
//!
//! The expensive part is sampling the series terms on the quantization grid,
//! so a [`SampledSeries`] is built once and then resummed for any order and
//! cutoff radius.

use crate::cpow::{minimal_k, PowerEvaluator, QuadratureScheme};
use crate::error::{bail, Result};
use crate::fsring::{resum_values, CutoffConfig, Strategy};
use crate::heat::{heat_registry, heat_symbol, heat_terms, term_values};
use crate::prelude::*;
use crate::quant::{
    balakrishnan_matrix, matrix_function, quantize_poly, spectral_compare, HermiteOperator, QuantConfig, QuantGrid,
    Quantized, SpectralReport,
};
use crate::symalg::{PhasePoint, SymExpr};

/// Series terms sampled on a quantization grid, with the operator they are
/// meant to approximate.
#[derive(Clone, Debug)]
pub struct SampledSeries {
    grid: QuantGrid,
    points: Vec<(f64, f64)>,
    values: Vec<Vec<Complex64>>,
    reference: HermiteOperator,
    /// Number of coefficient quadratures that raised a warning.
    pub quadrature_warnings: usize,
}

impl SampledSeries {
    /// Number of sampled terms.
    pub fn order(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn reference(&self) -> &HermiteOperator {
        &self.reference
    }

    /// Quantizes `Σ_{j<order} (1 - χ_{j,R}) a_j`.
    pub fn quantize(&self, order: usize, cutoff: &CutoffConfig) -> Result<Quantized> {
        if order == 0 || order > self.order() {
            bail!(InvalidParameter, "order {order} not within 1..={}", self.order());
        }
        let resummed = self
            .values
            .iter()
            .zip(&self.points)
            .map(|(v, &(x, xi))| resum_values(&v[..order], cutoff, &PhasePoint::d1(x, xi), Strategy::Cutoff))
            .collect::<Result<Vec<_>>>()?;
        self.grid.quantize(&resummed)
    }

    pub fn compare(&self, order: usize, cutoff: &CutoffConfig, states: (usize, usize)) -> Result<SpectralReport> {
        let q = self.quantize(order, cutoff)?;
        Ok(spectral_compare(&self.reference, &q.op, states)?
            .with_meta("order", order)
            .with_meta("cutoff_r", cutoff.r)
            .with_meta("quantization_tail", q.tail)
            .with_meta("quadrature_warnings", self.quadrature_warnings))
    }
}

fn check_dim(a: &SymExpr) -> Result<()> {
    if a.registry().dim() != 1 {
        bail!(UnsupportedSymbol, "spectral validation is one-dimensional");
    }
    Ok(())
}

/// `p_{z,j}` of a one-dimensional polynomial `a0` for `j < order`, sampled
/// against `Op(a0)^z`.
pub fn sample_power(
    a0: &SymExpr,
    z: Complex64,
    order: usize,
    n_basis: usize,
    quant: QuantConfig,
    quad: &QuadratureScheme,
) -> Result<SampledSeries> {
    check_dim(a0)?;
    let a = quantize_poly(a0, n_basis, None)?;
    let reference = matrix_function(&a, &|l| Complex64::new(l, 0.0).powc(z))?;
    let ev = PowerEvaluator::new(a0, z, minimal_k(z), order, *quad)?;
    let grid = QuantGrid::new(n_basis, quant)?;
    let points = grid.points();
    let mut warnings = 0;
    let mut values = Vec::with_capacity(points.len());
    for &(x, xi) in &points {
        let r = ev.coefficients(order, &PhasePoint::d1(x, xi))?;
        warnings += r.iter().filter(|q| q.warning).count();
        values.push(r.into_iter().map(|q| q.value).collect());
    }
    Ok(SampledSeries {
        grid,
        points,
        values,
        reference,
        quadrature_warnings: warnings,
    })
}

/// Heat terms `u_j(t)` of `b = a^s` for `j < order`, sampled against
/// `exp(-t Op(a)^s)`. `a_text` is a one-dimensional polynomial and `s_text`
/// the exponent as it would be written in a symbol (e.g. `1/2`).
pub fn sample_heat(
    a_text: &str,
    s_text: &str,
    t: f64,
    order: usize,
    n_basis: usize,
    quant: QuantConfig,
) -> Result<SampledSeries> {
    if !(t >= 0.0 && t.is_finite()) {
        bail!(InvalidParameter, "t must be non-negative, got {t}");
    }
    let reg = heat_registry(1, &[("a", a_text)], &format!("a^({s_text})"))?;
    let b = heat_symbol(&reg)?;
    let terms = heat_terms(&b, order)?;
    let a = quantize_poly(&SymExpr::parse(&reg, a_text)?, n_basis, None)?;
    // the reference needs s as a number
    let s = exponent_of(&b, &SymExpr::parse(&reg, "a")?)?;
    let reference = matrix_function(&a, &move |l| Complex64::new((-t * l.powf(s)).exp(), 0.0))?;
    let grid = QuantGrid::new(n_basis, quant)?;
    let points = grid.points();
    let values = points
        .iter()
        .map(|&(x, xi)| term_values(&terms, t, &PhasePoint::d1(x, xi)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledSeries {
        grid,
        points,
        values,
        reference,
        quadrature_warnings: 0,
    })
}

/// `s` with `b = a^s`, read off from two sample points.
fn exponent_of(b: &SymExpr, a: &SymExpr) -> Result<f64> {
    let (w1, w2) = (PhasePoint::d1(0.0, 0.0), PhasePoint::d1(1.5, 0.5));
    let (a1, a2) = (a.evaluate(&w1)?.re, a.evaluate(&w2)?.re);
    let (b1, b2) = (b.evaluate(&w1)?.re, b.evaluate(&w2)?.re);
    if !(a1 > 0.0 && a2 > 0.0 && b1 > 0.0 && b2 > 0.0) || (a2 / a1).ln().abs() < 1e-6 {
        bail!(UnsupportedSymbol, "cannot identify the exponent of the heat symbol");
    }
    Ok((b2 / b1).ln() / (a2 / a1).ln())
}

/// Operator Balakrishnan integral of `Op(a0)` against `Op(a0)^z` from the
/// eigenbasis.
pub fn balakrishnan_check(
    a0: &SymExpr,
    z: Complex64,
    n_basis: usize,
    states: (usize, usize),
    quad: &QuadratureScheme,
) -> Result<SpectralReport> {
    check_dim(a0)?;
    let a = quantize_poly(a0, n_basis, None)?;
    let reference = matrix_function(&a, &|l| Complex64::new(l, 0.0).powc(z))?;
    let (bal, info) = balakrishnan_matrix(&a, z, minimal_k(z), quad)?;
    Ok(spectral_compare(&reference, &bal, states)?
        .with_meta("z", z)
        .with_meta("quadrature_error", info.error)
        .with_meta("quadrature_warning", info.warning))
}
