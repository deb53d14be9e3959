//! Subcommand arguments and their implementations.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use weylcalc::cpow::{minimal_k, positivize, resolvent_registry, PowerEvaluator, QuadratureScheme, Transform, LAMBDA};
use weylcalc::fsring::{change_quantization, resum_values, sharp, CutoffConfig, FormalSeries, Strategy};
use weylcalc::heat::{heat_evaluate, heat_registry, heat_symbol, heat_terms, pde_residual, term_values};
use weylcalc::parametrix::{
    hypoellipticity_profile, parametrix, polar_grid, resolvent_parametrix, verify_left_identity, verify_right_identity,
};
use weylcalc::quant::{quantize_general, quantize_poly, spectral_compare, QuantConfig, SpectralReport};
use weylcalc::validate::{balakrishnan_check, sample_heat, sample_power};
use weylcalc::weights::{
    associated_function, binomial_lemma_violation, check_conditions, product_lemma_violation, WeightSequence,
    DEFAULT_P_MAX,
};
use weylcalc::{PhasePoint, SymExpr};

use crate::formats::{
    matrix_csv, num, parse_complex, parse_range, parse_rational, point_columns, point_fields, read_matrix_file,
    read_points, write_matrix, CsvBuf, SymbolFile,
};
use crate::output::{Kind, Output};
use crate::Invalid;

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn require_file(p: &Path) -> Result<()> {
    if !p.is_file() {
        return Err(invalid(format!("file not found: {}", p.display())));
    }
    Ok(())
}

fn cx_json(c: Complex64) -> Value {
    json!({ "re": c.re, "im": c.im })
}

fn spectral_json(r: &SpectralReport) -> Value {
    json!({
        "states": [r.states.0, r.states.1],
        "errors": r.errors,
        "max_error": r.max_error(),
        "median_error": r.median_error(),
        "block_norm": r.block_norm,
        "relative_block_norm": r.relative_block_norm,
        "metadata": r.metadata,
    })
}

fn series_text(s: &FormalSeries) -> Vec<u8> {
    s.to_text().into_bytes()
}

fn read_series(path: &Path) -> Result<FormalSeries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FormalSeries::from_text(&text).with_context(|| format!("parsing series {}", path.display()))
}

/// `m_p` source for the resummation cutoffs.
#[derive(Args, Serialize, Debug, Clone)]
pub struct CutoffArgs {
    /// Cutoff radius R in χ_{n,R}.
    #[arg(long, default_value_t = 1.5)]
    pub cutoff_r: f64,
    /// Gevrey exponent of the sequence supplying m_p = M_p / M_{p-1}.
    #[arg(long, default_value_t = 1.0)]
    pub cutoff_gevrey: f64,
}

impl CutoffArgs {
    fn validate(&self) -> Result<()> {
        if !(self.cutoff_r > 0.0 && self.cutoff_r.is_finite()) {
            return Err(invalid("--cutoff-r must be positive"));
        }
        if !(self.cutoff_gevrey > 0.0) {
            return Err(invalid("--cutoff-gevrey must be positive"));
        }
        Ok(())
    }

    fn build(&self, order: usize) -> Result<CutoffConfig> {
        let ws = WeightSequence::gevrey(self.cutoff_gevrey, order.max(2) + 1)?;
        Ok(CutoffConfig::from_weights(self.cutoff_r, &ws)?)
    }
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TransformArg {
    Sinhlog,
    Log,
}

/// Overrides for the half-line quadrature.
#[derive(Args, Serialize, Debug, Clone)]
pub struct QuadArgs {
    #[arg(long, value_enum, default_value_t = TransformArg::Sinhlog)]
    pub quad_transform: TransformArg,
    /// Initial trapezoid step in the transformed variable.
    #[arg(long)]
    pub quad_step: Option<f64>,
    /// Maximum number of step halvings.
    #[arg(long)]
    pub quad_refine: Option<u32>,
    /// Relative tolerance for early stopping.
    #[arg(long)]
    pub quad_tol: Option<f64>,
}

impl QuadArgs {
    fn build(&self) -> Result<QuadratureScheme> {
        let mut q = match self.quad_transform {
            TransformArg::Sinhlog => QuadratureScheme::default(),
            TransformArg::Log => QuadratureScheme::log_default(),
        };
        debug_assert!(matches!(q.transform, Transform::SinhLog | Transform::Log));
        if let Some(s) = self.quad_step {
            q.step = s;
        }
        if let Some(r) = self.quad_refine {
            q.refine = r;
        }
        if let Some(t) = self.quad_tol {
            q.tol = t;
        }
        q.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(q)
    }
}

/// Where evaluation points come from.
#[derive(Args, Serialize, Debug, Clone)]
pub struct PointArgs {
    /// CSV of points with columns x1..xd, xi1..xid (x, xi for d = 1).
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Number of random points when no file is given.
    #[arg(long, default_value_t = 20)]
    pub npoints: usize,
    /// Random points are uniform in [-range, range] per coordinate.
    #[arg(long, default_value_t = 4.0)]
    pub range: f64,
}

impl PointArgs {
    fn validate(&self) -> Result<()> {
        if let Some(p) = &self.points {
            require_file(p)?;
        } else if self.npoints == 0 || !(self.range > 0.0) {
            return Err(invalid("--npoints and --range must be positive"));
        }
        Ok(())
    }

    fn load(&self, dim: usize, seed: u64) -> Result<Vec<PhasePoint>> {
        if let Some(p) = &self.points {
            return read_points(p, dim);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..self.npoints)
            .map(|_| {
                let x = (0..dim).map(|_| rng.gen_range(-self.range..=self.range)).collect();
                let xi = (0..dim).map(|_| rng.gen_range(-self.range..=self.range)).collect();
                PhasePoint::new(x, xi)
            })
            .collect())
    }
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct CheckWeightsArgs {
    /// Gevrey exponent σ for M_p = p!^σ.
    #[arg(long, conflicts_with = "table")]
    pub gevrey: Option<f64>,
    /// Two-column table `p ln(M_p)`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Table length for --gevrey.
    #[arg(long, default_value_t = DEFAULT_P_MAX)]
    pub pmax: usize,
    /// Arguments at which to report the associated function.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    /// Run the exhaustive binomial and product lemma checks up to this index.
    #[arg(long, default_value_t = 0)]
    pub lemmas: usize,
}

pub fn check_weights(a: &CheckWeightsArgs) -> Result<Value> {
    let ws = match (&a.gevrey, &a.table) {
        (Some(s), None) => WeightSequence::gevrey(*s, a.pmax).map_err(|e| invalid(e.to_string()))?,
        (None, Some(p)) => {
            require_file(p)?;
            WeightSequence::from_table_text(&std::fs::read_to_string(p)?)?
        }
        _ => return Err(invalid("give exactly one of --gevrey or --table")),
    };
    if a.lemmas > ws.p_max() {
        return Err(invalid(format!(
            "--lemmas {} exceeds the table length {}",
            a.lemmas,
            ws.p_max()
        )));
    }
    let r = check_conditions(&ws);
    let mut assoc = Vec::new();
    for &rho in &a.rho {
        let v = associated_function(&ws, rho).map_err(|e| invalid(e.to_string()))?;
        assoc.push(json!({ "rho": rho, "value": v.value, "argmax": v.argmax, "boundary_hit": v.boundary_hit }));
    }
    let mut out = json!({
        "p_max": ws.p_max(),
        "sigma": ws.sigma(),
        "conditions": {
            "holds_m1": r.holds_m1, "holds_m2": r.holds_m2, "holds_m3": r.holds_m3,
            "holds_m3prime": r.holds_m3prime, "holds_m4": r.holds_m4,
            "witness_m1": r.witness_m1, "witness_m2": r.witness_m2, "witness_m3": r.witness_m3,
            "witness_m3prime": r.witness_m3prime, "witness_m4": r.witness_m4,
            "fitted_c0": r.fitted_c0, "fitted_h": r.fitted_h,
            "fitted_m3_constant": r.fitted_m3_constant, "m3prime_exponent": r.m3prime_exponent,
            "truncation_index": r.truncation_index,
        },
        "associated_function": assoc,
    });
    if a.lemmas > 0 {
        out["lemmas"] = json!({
            "n_max": a.lemmas,
            "binomial_violation": binomial_lemma_violation(&ws, a.lemmas)?,
            "product_violation": product_lemma_violation(&ws, a.lemmas.min(12))?,
            "product_k_max": a.lemmas.min(12),
        });
    }
    Ok(out)
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct SharpArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    #[arg(long)]
    pub order: usize,
}

pub fn sharp_cmd(a: &SharpArgs, out: &mut Output) -> Result<()> {
    require_file(&a.left)?;
    require_file(&a.right)?;
    let (l, r) = (read_series(&a.left)?, read_series(&a.right)?);
    if a.order == 0 || a.order > l.order().min(r.order()) {
        return Err(invalid(format!("--order must lie in 1..={}", l.order().min(r.order()))));
    }
    let p = sharp(&l, &r, a.order)?;
    out.push("product.series", Kind::Text, series_text(&p));
    Ok(())
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct RequantizeArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// Source quantization parameter τ (rational, e.g. 1/2).
    #[arg(long)]
    pub from: String,
    /// Target quantization parameter.
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub order: usize,
}

pub fn requantize(a: &RequantizeArgs, out: &mut Output) -> Result<()> {
    require_file(&a.series)?;
    let (t0, t1) = (
        parse_rational(&a.from).map_err(|e| invalid(e.to_string()))?,
        parse_rational(&a.to).map_err(|e| invalid(e.to_string()))?,
    );
    let s = read_series(&a.series)?;
    if a.order == 0 || a.order > s.order() {
        return Err(invalid(format!("--order must lie in 1..={}", s.order())));
    }
    let p = change_quantization(&s, &t0, &t1, a.order)?;
    out.push("requantized.series", Kind::Text, series_text(&p));
    Ok(())
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ParametrixArgs {
    #[arg(long)]
    pub symbol: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Build the resolvent parametrix of a + λ instead (a must be a polynomial).
    #[arg(long)]
    pub resolvent: bool,
    /// Derivative order of the hypoellipticity profile (0 = skip).
    #[arg(long, default_value_t = 0)]
    pub profile_order: u32,
    /// Gevrey exponent of A_p in the profile.
    #[arg(long, default_value_t = 1.0)]
    pub profile_gevrey: f64,
    /// Decay exponent ρ in the profile.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Radii of the polar profile grid (d = 1).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 10.0, 100.0])]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub angles: usize,
}

pub fn parametrix_cmd(a: &ParametrixArgs, out: &mut Output) -> Result<Value> {
    require_file(&a.symbol)?;
    if a.order == 0 {
        return Err(invalid("--order must be positive"));
    }
    let sf = SymbolFile::read(&a.symbol)?;
    let (q, sym) = if a.resolvent {
        let poly = sf
            .expr()?
            .as_poly()
            .ok_or_else(|| invalid("--resolvent needs a polynomial symbol"))?;
        let reg = resolvent_registry(sf.registry.dim(), &poly, &sf.text)?;
        let a0 = SymExpr::parse(&reg, "a0")?;
        (
            resolvent_parametrix(&a0, reg.param(LAMBDA).expect("registered"), a.order)?,
            SymExpr::parse(&reg, "al")?,
        )
    } else {
        let sym = sf.lifted()?;
        (parametrix(&sym, a.order)?, sym)
    };
    let left = verify_left_identity(&q, &sym, a.order)?.is_zero();
    let right = verify_right_identity(&q, &sym, a.order)?.is_zero();
    out.push("parametrix.series", Kind::Text, series_text(&q));
    let mut result = json!({
        "order": a.order,
        "resolvent": a.resolvent,
        "left_identity_zero": left,
        "right_identity_zero": right,
        "zero_terms": (0..a.order).filter(|&j| q.term(j).is_zero()).collect::<Vec<_>>(),
    });
    if a.profile_order > 0 {
        if sf.registry.dim() != 1 || a.resolvent {
            return Err(invalid("the profile grid is one-dimensional and excludes --resolvent"));
        }
        let ws = WeightSequence::gevrey(a.profile_gevrey, (a.profile_order as usize).max(2))
            .map_err(|e| invalid(e.to_string()))?;
        let grid = polar_grid(&a.radii, a.angles);
        let prof = hypoellipticity_profile(&sym, &ws, a.rho, &grid, a.profile_order).map_err(|e| match e {
            weylcalc::Error::InvalidParameter(m) => invalid(m),
            other => other.into(),
        })?;
        let mut csv = CsvBuf::new(&["alpha".into(), "point".into(), "x".into(), "xi".into(), "ratio".into()])?;
        for e in &prof.ratio_table {
            let w = &grid[e.point];
            let alpha = e.alpha.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            csv.row(&[alpha, e.point.to_string(), num(w.x[0]), num(w.xi[0]), num(e.ratio)])?;
        }
        out.push("profile.csv", Kind::Csv, csv.finish()?);
        result["profile"] = json!({
            "fitted_h": prof.fitted_h,
            "fitted_c": prof.fitted_c,
            "lower_bound": prof.lower_bound,
            "lower_bound_ok": prof.lower_bound_ok,
        });
    }
    Ok(result)
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ComplexPowerArgs {
    #[arg(long)]
    pub symbol: PathBuf,
    /// Exponent z as RE or RE,IM.
    #[arg(long)]
    pub z: String,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Power k in the Balakrishnan integrand; defaults to [Re z] + 1.
    #[arg(long)]
    pub k: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    /// Also write the resummed values with these cutoffs.
    #[arg(long)]
    pub resum: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub cutoff: CutoffArgs,
}

pub fn complex_power(a: &ComplexPowerArgs, seed: u64, out: &mut Output) -> Result<Value> {
    require_file(&a.symbol)?;
    a.points.validate()?;
    a.cutoff.validate()?;
    let z = parse_complex(&a.z).map_err(|e| invalid(e.to_string()))?;
    let k = a.k.unwrap_or_else(|| minimal_k(z));
    if !(z.re > 0.0 && z.re < f64::from(k)) || a.order == 0 {
        return Err(invalid(format!(
            "need 0 < Re z < k and a positive order (z = {z}, k = {k})"
        )));
    }
    let quad = a.quad.build()?;
    let sf = SymbolFile::read(&a.symbol)?;
    let sym = sf.expr()?;
    let dim = sf.registry.dim();
    let pts = a.points.load(dim, seed)?;
    let pos = positivize(&sym, &pts)?;
    let ev = PowerEvaluator::new(&pos.a0, z, k, a.order, quad)?;
    let cutoff = a.cutoff.build(a.order)?;

    let mut head = vec!["point".to_string()];
    head.extend(point_columns(dim));
    head.extend(["j", "re", "im", "error", "warning"].map(String::from));
    let mut csv = CsvBuf::new(&head)?;
    let mut rhead = vec!["point".to_string()];
    rhead.extend(point_columns(dim));
    rhead.extend(["re", "im", "principal_re", "principal_im"].map(String::from));
    let mut rcsv = CsvBuf::new(&rhead)?;
    let mut warnings = 0;
    for (i, w) in pts.iter().enumerate() {
        let coeffs = ev.coefficients(a.order, w)?;
        for (j, r) in coeffs.iter().enumerate() {
            warnings += usize::from(r.warning);
            let mut row = vec![i.to_string()];
            row.extend(point_fields(w));
            row.extend([
                j.to_string(),
                num(r.value.re),
                num(r.value.im),
                num(r.error),
                r.warning.to_string(),
            ]);
            csv.row(&row)?;
        }
        if a.resum {
            let vals: Vec<Complex64> = coeffs.iter().map(|r| r.value).collect();
            let v = resum_values(&vals, &cutoff, w, Strategy::Cutoff)?;
            let p = ev.principal_power(w)?;
            let mut row = vec![i.to_string()];
            row.extend(point_fields(w));
            row.extend([num(v.re), num(v.im), num(p.re), num(p.im)]);
            rcsv.row(&row)?;
        }
    }
    out.push("coefficients.csv", Kind::Csv, csv.finish()?);
    if a.resum {
        out.push("resummed.csv", Kind::Csv, rcsv.finish()?);
    }
    Ok(json!({
        "z": cx_json(z),
        "k": k,
        "gamma_k": cx_json(ev.gamma()),
        "order": a.order,
        "points": pts.len(),
        "shift": pos.shift,
        "sector_b": pos.sector_b,
        "quadrature_warnings": warnings,
    }))
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct HeatArgs {
    /// Symbol file: registry header with the bases b uses, then `symbol b`.
    #[arg(long)]
    pub symbol: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.5, 1.0, 2.0])]
    pub t_grid: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub cutoff: CutoffArgs,
}

pub fn heat_cmd(a: &HeatArgs, seed: u64, out: &mut Output) -> Result<Value> {
    require_file(&a.symbol)?;
    a.points.validate()?;
    a.cutoff.validate()?;
    if a.order == 0 || a.t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("--order must be positive and every t non-negative"));
    }
    let sf = SymbolFile::read(&a.symbol)?;
    let bases: Vec<(String, String)> = sf
        .registry
        .bases()
        .iter()
        .map(|b| (b.name.clone(), b.text().to_string()))
        .collect();
    let refs: Vec<(&str, &str)> = bases.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
    let dim = sf.registry.dim();
    let reg = heat_registry(dim, &refs, &sf.text)?;
    let terms = heat_terms(&heat_symbol(&reg)?, a.order)?;
    let residual_zero = (0..a.order)
        .map(|j| pde_residual(&terms, j).map(|r| r.is_zero()))
        .collect::<Result<Vec<_>, _>>()?;
    let us = terms.iter().map(|t| t.u()).collect::<Result<Vec<_>, _>>()?;
    out.push("terms.series", Kind::Text, series_text(&FormalSeries::new(us)?));

    let pts = a.points.load(dim, seed)?;
    let cutoff = a.cutoff.build(a.order)?;
    let mut head = vec!["point".to_string(), "t".to_string()];
    head.extend(point_columns(dim));
    head.extend((0..a.order).flat_map(|j| [format!("u{j}_re"), format!("u{j}_im")]));
    head.extend(["resummed_re", "resummed_im"].map(String::from));
    let mut csv = CsvBuf::new(&head)?;
    for &t in &a.t_grid {
        for (i, w) in pts.iter().enumerate() {
            let vals = term_values(&terms, t, w)?;
            let r = heat_evaluate(&terms, t, w, &cutoff)?;
            let mut row = vec![i.to_string(), num(t)];
            row.extend(point_fields(w));
            row.extend(vals.iter().flat_map(|v| [num(v.re), num(v.im)]));
            row.extend([num(r.re), num(r.im)]);
            csv.row(&row)?;
        }
    }
    out.push("heat.csv", Kind::Csv, csv.finish()?);
    Ok(json!({
        "order": a.order,
        "residual_zero": residual_zero,
        "t_degrees": terms.iter().map(|t| t.t_degree()).collect::<Vec<_>>(),
        "degree_guard_exceeded": terms.iter().any(|t| t.degree_guard_exceeded),
        "points": pts.len(),
    }))
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct QuantizeArgs {
    /// One-dimensional symbol file.
    #[arg(long)]
    pub symbol: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub basis: usize,
    /// Use the phase-space grid even for polynomial symbols.
    #[arg(long)]
    pub general: bool,
    /// Also write the CSV debug form of the matrix.
    #[arg(long)]
    pub csv: bool,
}

pub fn quantize_cmd(a: &QuantizeArgs, out: &mut Output) -> Result<Value> {
    require_file(&a.symbol)?;
    if a.basis == 0 || a.basis > 4096 {
        return Err(invalid("--basis must lie in 1..=4096"));
    }
    let sf = SymbolFile::read(&a.symbol)?;
    if sf.registry.dim() != 1 {
        return Err(invalid("quantization is one-dimensional"));
    }
    let sym = sf.expr()?;
    let (op, method, tail) = if !a.general && sym.as_poly().is_some() {
        (quantize_poly(&sym, a.basis, None)?, "polynomial", 0.0)
    } else {
        let mut f = |x: f64, xi: f64| sym.evaluate(&PhasePoint::d1(x, xi));
        let q = quantize_general(&mut f, a.basis, QuantConfig::for_basis(a.basis))?;
        (q.op, "grid", q.tail)
    };
    out.push("matrix.bin", Kind::Binary, write_matrix(&op));
    if a.csv {
        out.push("matrix.csv", Kind::Csv, matrix_csv(&op)?);
    }
    Ok(json!({
        "n_basis": op.n_basis(),
        "n_pad": op.n_pad(),
        "method": method,
        "hermitian": op.is_hermitian(),
        "adjoint_defect": op.adjoint_defect(),
        "quantization_tail": tail,
        "tail_warning": tail > weylcalc::quant::TAIL_TOLERANCE,
    }))
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct SpectralCompareArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub candidate: PathBuf,
    /// Compared states LO:HI (half-open); defaults to all.
    #[arg(long)]
    pub states: Option<String>,
}

pub fn spectral_compare_cmd(a: &SpectralCompareArgs) -> Result<Value> {
    require_file(&a.reference)?;
    require_file(&a.candidate)?;
    let (r, c) = (read_matrix_file(&a.reference)?, read_matrix_file(&a.candidate)?);
    let states = match &a.states {
        Some(s) => parse_range(s).map_err(|e| invalid(e.to_string()))?,
        None => (0, r.n_basis()),
    };
    let rep = spectral_compare(&r, &c, states).map_err(|e| invalid(e.to_string()))?;
    Ok(spectral_json(&rep))
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ValidatePowerArgs {
    /// Polynomial a0; defaults to 1 + x^2 + xi^2.
    #[arg(long)]
    pub symbol: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub basis: usize,
    #[arg(long, default_value = "0.5")]
    pub z: String,
    /// Highest order N; every N in 1..=order is compared.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value = "16:41")]
    pub states: String,
    /// Extra cutoff radii reported alongside --cutoff-r.
    #[arg(long, value_delimiter = ',')]
    pub sweep_r: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub cutoff: CutoffArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
}

fn polynomial_or_oscillator(path: &Option<PathBuf>) -> Result<(SymExpr, String)> {
    match path {
        Some(p) => {
            require_file(p)?;
            let sf = SymbolFile::read(p)?;
            if sf.registry.dim() != 1 {
                return Err(invalid("spectral validation is one-dimensional"));
            }
            Ok((sf.expr()?, sf.text))
        }
        None => {
            let text = "1 + x^2 + xi^2".to_string();
            Ok((SymExpr::parse(&weylcalc::Registry::plain(1), &text)?, text))
        }
    }
}

fn check_spectral(basis: usize, order: usize, states: &str) -> Result<(usize, usize)> {
    let st = parse_range(states).map_err(|e| invalid(e.to_string()))?;
    if basis == 0 || order == 0 || !(st.0 < st.1 && st.1 <= basis) {
        return Err(invalid(format!(
            "need a positive basis and order with states inside 0..{basis}"
        )));
    }
    Ok(st)
}

pub fn validate_power(a: &ValidatePowerArgs) -> Result<Value> {
    let states = check_spectral(a.basis, a.order, &a.states)?;
    a.cutoff.validate()?;
    let z = parse_complex(&a.z).map_err(|e| invalid(e.to_string()))?;
    let quad = a.quad.build()?;
    let (a0, _) = polynomial_or_oscillator(&a.symbol)?;
    let bal = balakrishnan_check(&a0, z, a.basis, states, &quad)?;
    let sampled = sample_power(&a0, z, a.order, a.basis, QuantConfig::for_basis(a.basis), &quad)?;
    let mut radii = vec![a.cutoff.cutoff_r];
    radii.extend(a.sweep_r.iter().copied().filter(|r| *r != a.cutoff.cutoff_r));
    let mut runs = Vec::new();
    for r in radii {
        let cutoff = CutoffArgs {
            cutoff_r: r,
            ..a.cutoff.clone()
        };
        cutoff.validate()?;
        let cfg = cutoff.build(a.order)?;
        let reports = (1..=a.order)
            .map(|n| sampled.compare(n, &cfg, states))
            .collect::<Result<Vec<_>, _>>()?;
        runs.push(json!({ "cutoff_r": r, "orders": reports.iter().map(spectral_json).collect::<Vec<_>>() }));
    }
    Ok(json!({
        "z": cx_json(z),
        "n_basis": a.basis,
        "balakrishnan": spectral_json(&bal),
        "runs": runs,
    }))
}

#[derive(Args, Serialize, Debug, Clone)]
pub struct ValidateSqrtArgs {
    /// Polynomial a; defaults to 1 + x^2 + xi^2.
    #[arg(long)]
    pub symbol: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub basis: usize,
    /// Exponent s of b = a^s (rational).
    #[arg(long, default_value = "1/2")]
    pub z: String,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value = "16:41")]
    pub states: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub cutoff: CutoffArgs,
}

pub fn validate_sqrt(a: &ValidateSqrtArgs) -> Result<Value> {
    let states = check_spectral(a.basis, a.order, &a.states)?;
    a.cutoff.validate()?;
    if a.t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("every t must be non-negative"));
    }
    let s = parse_rational(&a.z).map_err(|e| invalid(e.to_string()))?;
    let s_text = format!("{}/{}", s.numer(), s.denom());
    let (_, a_text) = polynomial_or_oscillator(&a.symbol)?;
    let cfg = a.cutoff.build(a.order)?;
    let quant = QuantConfig::for_basis(a.basis);
    let zero = sample_heat(&a_text, &s_text, 0.0, a.order, a.basis, quant)?;
    let defect = zero.quantize(a.order, &cfg)?.op.max_abs_diff(zero.reference())?;
    let mut runs = Vec::new();
    for &t in &a.t_grid {
        let sampled = sample_heat(&a_text, &s_text, t, a.order, a.basis, quant)?;
        let reports = (1..=a.order)
            .map(|n| sampled.compare(n, &cfg, states))
            .collect::<Result<Vec<_>, _>>()?;
        runs.push(json!({ "t": t, "orders": reports.iter().map(spectral_json).collect::<Vec<_>>() }));
    }
    Ok(json!({
        "exponent": s_text,
        "n_basis": a.basis,
        "initial_identity_defect": defect,
        "runs": runs,
    }))
}
